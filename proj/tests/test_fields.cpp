#include "g2lab/fields.hpp"
#include "g2lab/rescale.hpp"
#include "g2lab/solver.hpp"
#include "g2lab/suites.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace g2lab;

namespace {

LieMat zero(int m) { return LieMat::Zero(m, m); }

LieMat random_skew(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> n(0, 1);
  LieMat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = n(rng);
  return a - a.transpose();
}

PolynomialFieldPair constant_pair(const OneFormCoeffs& a, const LieMat& sigma) {
  const int m = static_cast<int>(sigma.rows());
  PolyLieForm pa(1, m), ps(0, m);
  for (int i = 0; i < 7; ++i) pa.add(i, Polynomial::constant(1.0), a[i]);
  ps.add(0, Polynomial::constant(1.0), sigma);
  return PolynomialFieldPair(pa, ps);
}

std::vector<double> log_radii(double lo, double hi, int n) {
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) r[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return r;
}

}  // namespace

TEST_CASE("curvature examples") {
  const Vec7 x = Vec7::Constant(0.1);
  OneFormCoeffs a0;
  a0.fill(zero(2));
  CHECK(curvature(constant_pair(a0, zero(2)), x).norm() == 0.0);

  PolyLieForm pa(1, 2), ps(0, 2);
  pa.add(0, Polynomial::variable(1), so2_generator());
  const PolynomialFieldPair abel(pa, ps);
  LieValuedKForm f = curvature(abel, x);
  CHECK((f.coeff(MultiIndex::from_axes({1, 2})) + so2_generator()).norm() <= 1e-14);
  f.coeff(MultiIndex::from_axes({1, 2})) = zero(2);
  CHECK(f.norm() <= 1e-14);

  std::mt19937_64 rng(61);
  OneFormCoeffs c;
  c.fill(zero(3));
  c[0] = random_skew(rng, 3);
  c[1] = random_skew(rng, 3);
  const LieValuedKForm fc = curvature(constant_pair(c, zero(3)), x);
  CHECK((fc.coeff(MultiIndex::from_axes({1, 2})) - (c[0] * c[1] - c[1] * c[0])).norm() <= 1e-13);
}

TEST_CASE("covariant derivative examples") {
  const Vec7 x = Vec7::Constant(-0.2);
  std::mt19937_64 rng(67);
  const LieMat m = random_skew(rng, 3), a = random_skew(rng, 3);
  OneFormCoeffs zero_a;
  zero_a.fill(zero(3));
  CHECK(covariant_d(constant_pair(zero_a, 2.0 * m), x).norm() == 0.0);

  OneFormCoeffs one = zero_a;
  one[0] = a;
  const LieValuedKForm d = covariant_d(constant_pair(one, 2.0 * m), x);
  CHECK((d[0] - (a * (2.0 * m) - (2.0 * m) * a)).norm() <= 1e-13);
  for (int i = 1; i < 7; ++i) CHECK(d[i].norm() <= 1e-13);

  const StructureField g(PolyFormField::constant(euclidean_phi()));
  CHECK(monopole_residual(constant_pair(zero_a, m), g, x).norm() == 0.0);
}

TEST_CASE("finite-difference gradient of a polynomial field") {
  std::mt19937_64 rng(71);
  const PolyLieForm a = random_poly_lie_form(rng, 1, 3, 3);
  const Vec7 x = Vec7::Constant(0.15);
  auto f = [&](const Vec7& y) {
    OneFormCoeffs c;
    for (int i = 0; i < 7; ++i) c[i] = a.value(i, y);
    return c;
  };
  const auto g = fd_gradient(f, x, 1e-3);
  for (int j = 0; j < 7; ++j)
    for (int i = 0; i < 7; ++i) CHECK((g[j][i] - a.derivative(i, j, x)).norm() <= 1e-9);
}

TEST_CASE("monopole residual is gauge invariant under constant rotations") {
  std::mt19937_64 rng(73);
  const int m = 3;
  const auto pair = std::make_shared<PolynomialFieldPair>(random_poly_lie_form(rng, 1, m, 2),
                                                          random_poly_lie_form(rng, 0, m, 2));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(random_matrix(rng).topLeftCorner(m, m)));
  const LieMat q = qr.householderQ();
  const FunctionFieldPair rotated(
      m, pair->domain(),
      [&](const Vec7& x, Chart c) {
        OneFormCoeffs a = pair->connection(x, c);
        for (auto& ai : a) ai = q.transpose() * ai * q;
        return a;
      },
      [&](const Vec7& x, Chart c) -> LieMat { return q.transpose() * pair->higgs(x, c) * q; });
  const StructureField g(shipped_phi("quadratic-perturb", 0.2));
  for (const Vec7& p : sphere_points(10)) {
    const Vec7 x = 0.2 * p;
    const double a = monopole_residual(*pair, g, x).norm(), b = monopole_residual(rotated, g, x).norm();
    CHECK(b == doctest::Approx(a).epsilon(1e-7));
  }
}

TEST_CASE("grid field binary round trip") {
  std::mt19937_64 rng(79);
  const PolyLieForm a = random_poly_lie_form(rng, 1, 2, 2);
  const GridLieField f = GridLieField::sample(2, 1, 3, -0.5, 0.5, [&](const Vec7& x) {
    std::vector<LieMat> v;
    for (int i = 0; i < 7; ++i) v.push_back(a.value(i, x));
    return v;
  });
  std::stringstream s;
  write_grid_field(s, f);
  const std::string bytes = s.str();
  CHECK(bytes.substr(0, 8) == "G2LFIELD");
  CHECK(bytes.size() == 8 + 16 + 16 + f.data.size() * 8);
  const GridLieField g = read_grid_field(s);
  CHECK(g.rank == 2);
  CHECK(g.degree == 1);
  CHECK(g.n == 3);
  CHECK(g.data == f.data);

  std::stringstream bad("NOTAFILE");
  CHECK_THROWS_AS(read_grid_field(bad), InvalidInput);
  std::stringstream truncated(bytes.substr(0, 30));
  CHECK_THROWS_AS(read_grid_field(truncated), InvalidInput);
  CHECK_THROWS_AS(f.node_of(Vec7::Constant(0.1)), InvalidInput);
}

TEST_CASE("grid residual matches the polynomial residual for quadratic fields") {
  std::mt19937_64 rng(83);
  const int m = 2;
  const PolyLieForm a = random_poly_lie_form(rng, 1, m, 2, 0.5), s = random_poly_lie_form(rng, 0, m, 2, 0.5);
  const PolynomialFieldPair poly(a, s);
  auto sample = [](const PolyLieForm& p, int degree) {
    return GridLieField::sample(2, degree, 5, -0.4, 0.4, [&](const Vec7& x) {
      std::vector<LieMat> v;
      for (int i = 0; i < (degree == 0 ? 1 : 7); ++i) v.push_back(p.value(i, x));
      return v;
    });
  };
  const GridFieldPair grid(sample(a, 1), sample(s, 0));
  const StructureField g(shipped_phi("linear-perturb", 0.3));
  const std::array<std::array<int, 7>, 3> nodes = {{{2, 2, 2, 2, 2, 2, 1}, {1, 2, 3, 2, 2, 2, 2}, {3, 3, 1, 2, 2, 2, 2}}};
  for (const auto& idx : nodes) {
    const Vec7 x = grid.a().node_point(idx);
    const LieValuedKForm rp = monopole_residual(poly, g, x), rg = monopole_residual(grid, g, x);
    CHECK((rp - rg).norm() <= 1e-10 * std::max(1.0, rp.norm()));
  }
  CHECK_THROWS_AS(monopole_residual(grid, g, grid.a().node_point({0, 2, 2, 2, 2, 2, 2})), InvalidInput);
}

TEST_CASE("radial profile CSV round trip and validation") {
  RadialProfilePair p = RadialProfilePair::zeros(log_mesh(0.1, 1.0, 5), 2);
  p.f[1][3] = 0.25;
  p.u[2] = -1.5;
  std::stringstream s;
  write_profiles_csv(s, p);
  const RadialProfilePair q = read_profiles_csv(s);
  CHECK(q.mesh == p.mesh);
  CHECK(q.f == p.f);
  CHECK(q.u == p.u);

  RadialProfilePair bad = p;
  bad.mesh[2] = bad.mesh[1];
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = p;
  bad.u[0] = std::nan("");
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK_THROWS_AS(log_mesh(0.0, 1.0, 5), InvalidInput);
}

TEST_CASE("decay profile of the model connection itself is zero") {
  const auto ansatz = std::make_shared<RadialAnsatz>(canonical_ansatz(1));
  const RadialProfileField field(ansatz, RadialProfilePair::zeros(log_mesh(0.01, 1.0, 16), 1));
  const auto radii = log_radii(0.02, 0.5, 6);
  const DecayTable t = decay_profile(field, ConeConnection(ansatz->model), radii, 4, 2);
  CHECK(t.rows.size() == 18);
  for (const auto& row : t.rows) {
    CHECK(row.coord_sup == 0.0);
    CHECK(row.cov_sup == 0.0);
  }
  const DecayFit fit = fit_decay_rate(t, 0.5);
  CHECK(fit.status == DecayStatus::ZeroField);
  CHECK(std::isnan(fit.slope));
  CHECK_FALSE(fit.meets_contract);
  CHECK(std::string(decay_status_name(fit.status)) != "ok");
}

TEST_CASE("power-law field decays with slope 1 - theta") {
  const RadialAnsatz ansatz = canonical_ansatz(1);
  const auto field = power_law_field(ansatz, 0, 0.5, 0.3, {1e-3, 1.0});
  const auto radii = log_radii(2e-3, 0.5, 12);
  const DecayTable t = decay_profile(*field, ConeConnection(ansatz.model), radii, 8, 1);
  const DecayFit fit = fit_decay_rate(t, 0.5);
  CHECK(fit.status == DecayStatus::Ok);
  CHECK(std::abs(fit.slope - 0.5) <= 0.02);
  CHECK(fit.meets_contract);
  CHECK(t.cov_constant > 0.0);

  std::stringstream s;
  write_decay_csv(s, t);
  const DecayTable back = read_decay_csv(s);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(back.rows[i].coord_sup == t.rows[i].coord_sup);
}

TEST_CASE("decay profile error paths") {
  const auto ansatz = std::make_shared<RadialAnsatz>(canonical_ansatz(1));
  const RadialProfileField field(ansatz, RadialProfilePair::zeros(log_mesh(0.01, 1.0, 16), 1));
  const ConeConnection a0(ansatz->model);
  const std::vector<double> outside = {2.0};
  CHECK_THROWS_AS(decay_profile(field, a0, outside, 4), InvalidInput);
  CHECK_THROWS_AS(decay_profile(field, a0, std::vector<double>{}, 4), InvalidInput);
  CHECK_THROWS_AS(decay_profile(field, ConeConnection(flat_connection(2)), std::vector<double>{0.1}, 4),
                  InvalidInput);
  std::istringstream bad_header("r,l,foo\n");
  CHECK_THROWS_AS(read_decay_csv(bad_header), InvalidInput);

  DecayTable few;
  for (double r : {0.1, 0.2, 0.3}) few.rows.push_back({r, 0, r, r});
  CHECK_THROWS_AS(fit_decay_rate(few, 0.5), InvalidInput);
  DecayTable narrow;
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5}) narrow.rows.push_back({r, 0, r, r});
  CHECK_THROWS_AS(fit_decay_rate(narrow, 0.5), InvalidInput);
}

TEST_CASE("residual of a linear Higgs field is its Hodge dual") {
  PolyLieForm a(1, 2), s(0, 2);
  s.add(0, Polynomial::variable(0), so2_generator());
  const StructureField g(PolyFormField::constant(euclidean_phi()));
  const LieValuedKForm r = monopole_residual(PolynomialFieldPair(a, s), g, Vec7::Constant(0.05));
  const std::size_t top = MultiIndex::from_axes({2, 3, 4, 5, 6, 7}).position();
  CHECK((r[top] - so2_generator()).norm() <= 1e-10);
  for (std::size_t i = 0; i < r.size(); ++i)
    if (i != top) CHECK(r[i].norm() <= 1e-10);
}

namespace {

/// Adds seeded random abelian terms (quadratic coefficients times the so(2) generator).
void add_abelian_terms(PolyLieForm& f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  const int comps = f.degree() == 0 ? 1 : 7;
  for (int c = 0; c < comps; ++c)
    for (int ax = 0; ax < 7; ++ax)
      f.add(c, Polynomial::variable(ax, n(rng)) * Polynomial::variable((ax + c) % 7), so2_generator());
}

}  // namespace

TEST_CASE("abelian residual is affine in the Higgs field") {
  PolyLieForm a(1, 2), s1(0, 2), s2(0, 2), sum(0, 2);
  add_abelian_terms(a, 1);
  add_abelian_terms(s1, 2);
  add_abelian_terms(s2, 3);
  add_abelian_terms(sum, 2);
  add_abelian_terms(sum, 3);
  const StructureField g(shipped_phi("cubic-perturb", 0.3));
  const Vec7 x = Vec7::Constant(0.12);
  auto res = [&](const PolyLieForm& s) { return monopole_residual(PolynomialFieldPair(a, s), g, x); };
  const LieValuedKForm r0 = res(PolyLieForm(0, 2));
  const LieValuedKForm lhs = res(sum) - r0;
  const LieValuedKForm rhs = (res(s1) - r0) + (res(s2) - r0);
  CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, lhs.norm()));
}

TEST_CASE("abelian curvature is closed") {
  PolyLieForm a(1, 2);
  add_abelian_terms(a, 4);
  for (int c = 0; c < 7; ++c)
    a.add(c, Polynomial::variable(c) * Polynomial::variable((c + 1) % 7) * Polynomial::variable(2), so2_generator());
  const PolynomialFieldPair pair(a, PolyLieForm(0, 2));
  const Vec7 x = Vec7::Constant(0.2);
  const double h = 1e-3;
  auto f_at = [&](const Vec7& y) { return curvature(pair, y); };
  double worst = 0, scale = 0;
  for (const auto& idx : basis_indices(3)) {
    const auto ax = idx.axes();
    double d = 0;
    for (int s = 0; s < 3; ++s) {
      const int k = ax[s];
      const MultiIndex rest = MultiIndex::from_mask(idx.mask() & ~(1u << k));
      const Vec7 e = h * Vec7::Unit(k);
      const double deriv = (f_at(x + e).coeff(rest)(1, 0) - f_at(x - e).coeff(rest)(1, 0)) / (2 * h);
      d += (s % 2 == 0 ? 1.0 : -1.0) * deriv;
      scale = std::max(scale, std::abs(deriv));
    }
    worst = std::max(worst, std::abs(d));
  }
  CHECK(scale > 0.1);
  CHECK(worst <= 1e-6 * scale);
}
