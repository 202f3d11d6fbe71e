#include "g2lab/g2core.hpp"
#include "g2lab/model_connection.hpp"
#include "g2lab/rescale.hpp"
#include "g2lab/suites.hpp"

#include <doctest.h>

#include <random>

using namespace g2lab;

namespace {

ChartConnection levi_civita_connection() {
  return ChartConnection(
      "levi-civita", 6,
      [](Chart c, const Vec7& p, const Vec7& x) -> LieMat {
        return chart_frame(c, p).transpose() * chart_frame_derivative(c, p, x);
      },
      [](const Vec7& p) -> LieMat { return chart_frame(Chart::South, p).transpose() * chart_frame(Chart::North, p); });
}

double coeff_diff(const OneFormCoeffs& a, const OneFormCoeffs& b) {
  double m = 0;
  for (int i = 0; i < 7; ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST_CASE("charts invert each other and frames are orthonormal") {
  for (const Vec7& p : sphere_points(20)) {
    for (Chart c : {Chart::North, Chart::South}) {
      if (c != preferred_chart(p)) continue;
      CHECK((from_chart(c, to_chart(c, p)) - p).norm() <= 1e-12);
      const Frame e = chart_frame(c, p);
      CHECK((e.transpose() * e - Eigen::Matrix<double, 6, 6>::Identity()).norm() <= 1e-12);
      CHECK((e.transpose() * p).norm() <= 1e-12);
    }
  }
  CHECK(preferred_chart(Vec7::Unit(6)) == Chart::South);
  CHECK(preferred_chart(-Vec7::Unit(6)) == Chart::North);
}

TEST_CASE("cross product is the phi0 contraction") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0, 1);
  Vec7 u, v;
  for (int i = 0; i < 7; ++i) u[i] = n(rng), v[i] = n(rng);
  const Vec7 w = cross(u, v);
  CHECK(std::abs(w.dot(u)) <= 1e-12);
  CHECK(std::abs(w.dot(v)) <= 1e-12);
  const double expected = u.squaredNorm() * v.squaredNorm() - u.dot(v) * u.dot(v);
  CHECK(w.squaredNorm() == doctest::Approx(expected).epsilon(1e-12));
  CHECK((interior(v, interior(u, euclidean_phi())) - KForm(1, std::span<const double>(w.data(), 7))).norm() <=
        1e-12);
}

TEST_CASE("flat connection pulls back to zero") {
  const ConeConnection a(flat_connection(3));
  for (const auto& m : a.coefficients(Vec7::Constant(0.3))) CHECK(m.norm() == 0.0);
  CHECK(instanton_defect(a, euclidean_phi(), 20).defect == 0.0);
}

TEST_CASE("cone pullback rejects the origin and unsupported ranks") {
  const ConeConnection a(flat_connection(2));
  CHECK_THROWS_AS(a.coefficients(Vec7::Zero(), Chart::North), InvalidInput);
  CHECK_THROWS_AS(canonical_connection(4), InvalidInput);
  CHECK_THROWS_AS(flat_connection(9), InvalidInput);
  CHECK_THROWS_AS(instanton_defect(a, euclidean_phi(), 0), InvalidInput);
}

TEST_CASE("cone connection is homogeneous of degree -1 with no radial part") {
  const ConeConnection a(canonical_connection(6));
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> lam(0.1, 10.0);
  for (const Vec7& p : sphere_points(20)) {
    const Vec7 x = 0.7 * p;
    const double l = lam(rng);
    const Chart c = preferred_chart(x);
    auto ax = a.coefficients(x, c), alx = a.coefficients(l * x, c);
    for (auto& m : alx) m *= l;
    CHECK(coeff_diff(ax, alx) <= 1e-12);
    LieMat radial = LieMat::Zero(6, 6);
    for (int i = 0; i < 7; ++i) radial += x[i] * ax[i];
    CHECK(radial.norm() <= 1e-12);
  }
}

TEST_CASE("canonical connection is a cone instanton for phi0") {
  const ConeConnection a(canonical_connection(6));
  const DefectReport rep = instanton_defect(a, euclidean_phi(), 200);
  CHECK(rep.samples.size() == 200);
  CHECK(rep.defect <= 1e-6);
  for (const auto& s : rep.samples) CHECK(s.curvature_norm > 0.1);
}

TEST_CASE("transition compatibility on overlap samples") {
  const ChartConnection a = canonical_connection(6);
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n(0, 1);
  int tested = 0;
  for (const Vec7& p : sphere_points(80)) {
    if (std::abs(p[6]) > 0.8) continue;
    Vec7 x;
    for (int i = 0; i < 7; ++i) x[i] = n(rng);
    x -= p.dot(x) * p;
    CHECK(a.transition_residual(p, x) <= 1e-8);
    if (++tested == 50) break;
  }
  CHECK(tested == 50);
}

TEST_CASE("Levi-Civita connection of S^6 is not an instanton") {
  const DefectReport rep = instanton_defect(ConeConnection(levi_civita_connection()), euclidean_phi(), 50);
  CHECK(rep.defect > 0.1);
}

TEST_CASE("defect is gauge invariant under constant rotations") {
  std::mt19937_64 rng(53);
  LieMat q = random_rotation(rng).topLeftCorner(6, 6);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(q)};
  q = qr.householderQ();
  const ChartConnection a = canonical_connection(6);
  const ChartConnection b = a.gauge_rotated(q);
  const KForm phi = pullback(random_near_identity(rng, 0.1), euclidean_phi());
  const DefectReport ra = instanton_defect(ConeConnection(a), phi, 30);
  const DefectReport rb = instanton_defect(ConeConnection(b), phi, 30);
  for (std::size_t i = 0; i < ra.samples.size(); ++i)
    CHECK(rb.samples[i].defect == doctest::Approx(ra.samples[i].defect).epsilon(1e-8));
}

TEST_CASE("defect grows linearly under a generic perturbation of phi") {
  const ConeConnection a(canonical_connection(6));
  auto perturbed = [&](double eps) { return euclidean_phi() + eps * KForm::dy({1, 4, 7}); };
  const double d1 = instanton_defect(a, perturbed(0.1), 40).defect;
  const double d2 = instanton_defect(a, perturbed(0.05), 40).defect;
  CHECK(d1 > 1e-3);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("cone suite passes for the canonical connection") {
  CHECK(cone_suite(canonical_connection(6), euclidean_phi(), 7, 20, 40).passed());
}

TEST_CASE("ansatz templates") {
  const RadialAnsatz can = canonical_ansatz(2);
  CHECK(can.templates.size() == 2);
  CHECK_THROWS_AS(canonical_ansatz(3), InvalidInput);
  const RadialAnsatz ab = abelian_ansatz();
  CHECK(ab.model.rank() == 2);
  CHECK((so2_generator() + so2_generator().transpose()).norm() == 0.0);

  Mat7 not_skew = Mat7::Identity();
  CHECK_THROWS_AS(twisted_canonical_ansatz(not_skew), InvalidInput);
  const RadialAnsatz tw = twisted_canonical_ansatz(g2_twist_generator());
  REQUIRE(tw.templates.size() == 3);
  const Vec7 x = 0.3 * sphere_points(5)[2];
  const OneFormCoeffs t = tw.templates[2](x, preferred_chart(x));
  for (int i = 0; i < 7; ++i) {
    LieMat want = (x[i] / x.squaredNorm()) * g2_moment_section(g2_twist_generator())(preferred_chart(x), x / x.norm());
    CHECK((t[i] - want).norm() <= 1e-14);
  }
  CHECK_THROWS_AS(tw.templates[2](Vec7::Zero(), Chart::North), InvalidInput);
}

TEST_CASE("moment section transforms as a section") {
  const AdjointSection mu = g2_moment_section(g2_twist_generator());
  const ChartConnection a = canonical_connection(6);
  for (const Vec7& p : sphere_points(30)) {
    if (std::abs(p[6]) > 0.8) continue;
    const LieMat h = a.transition(p);
    CHECK((mu(Chart::South, p) - h * mu(Chart::North, p) * h.inverse()).norm() <= 1e-10);
  }
}

TEST_CASE("canonical curvature norm is constant on the unit sphere") {
  const DefectReport rep = instanton_defect(ConeConnection(canonical_connection(6)), euclidean_phi(), 50);
  double lo = INFINITY, hi = 0;
  for (const auto& s : rep.samples) {
    lo = std::min(lo, s.curvature_norm);
    hi = std::max(hi, s.curvature_norm);
  }
  CHECK(hi - lo <= 1e-6);
}
