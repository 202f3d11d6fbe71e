#include "g2lab/suites.hpp"

#include "g2lab/g2core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace g2lab {

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string SuiteReport::summary() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& c : checks) {
    if (c.passed) continue;
    out << (first ? "" : "; ") << c.name << " violated (worst " << c.worst << " > " << c.tolerance << " at "
        << c.witness << ")";
    first = false;
  }
  return first ? "all checks passed" : out.str();
}

CheckAccumulator::CheckAccumulator(std::string name, double tolerance) {
  r_.name = std::move(name);
  r_.tolerance = tolerance;
}

void CheckAccumulator::add(double value, const std::string& witness) {
  ++r_.trials;
  const bool bad = !(value <= r_.tolerance);
  if (!any_ || value > r_.worst || std::isnan(value)) {
    r_.worst = value;
    r_.witness = witness;
    any_ = true;
  }
  if (bad) r_.passed = false;
}

void CheckAccumulator::add_flag(bool ok, const std::string& witness) { add(ok ? 0.0 : 1.0, witness); }

// ---------------------------------------------------------------------------

Mat7 random_matrix(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Mat7 m;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) m(i, j) = n(rng);
  return m;
}

Mat7 random_near_identity(std::mt19937_64& rng, double scale) {
  Mat7 m = Mat7::Identity() + random_matrix(rng, scale);
  if (m.determinant() < 0) m.col(0) *= -1.0;
  return m;
}

Mat7 random_rotation(std::mt19937_64& rng) {
  Eigen::HouseholderQR<Mat7> qr(random_matrix(rng));
  Mat7 q = qr.householderQ();
  const Mat7 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 7; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

Mat7 random_with_singular_values(std::mt19937_64& rng, double smin, double smax) {
  std::uniform_real_distribution<double> u(smin, smax);
  Vec7 s;
  for (int i = 0; i < 7; ++i) s[i] = u(rng);
  const Mat7 a = random_rotation(rng), b = random_rotation(rng);
  return a * s.asDiagonal() * b.transpose();
}

MetricTensor random_metric(std::mt19937_64& rng) {
  const Mat7 a = random_matrix(rng, 1.0 / std::sqrt(7.0));
  return MetricTensor(a.transpose() * a + 0.2 * Mat7::Identity());
}

KForm random_form(std::mt19937_64& rng, int degree) {
  std::normal_distribution<double> n(0.0, 1.0);
  KForm a(degree);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = n(rng);
  return a;
}

PolyLieForm random_poly_lie_form(std::mt19937_64& rng, int degree, int rank, int max_degree, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  std::uniform_int_distribution<int> axis(0, 6);
  PolyLieForm f(degree, rank);
  const int comps = degree == 0 ? 1 : 7;
  for (int c = 0; c < comps; ++c)
    for (int t = 0; t < 3; ++t) {
      Polynomial p = Polynomial::constant(n(rng));
      for (int d = 1; d <= max_degree; ++d) {
        Exponent e{};
        for (int q = 0; q < d; ++q) ++e[axis(rng)];
        p += Polynomial::monomial(e, n(rng));
      }
      LieMat m = LieMat::Zero(rank, rank);
      for (int a = 0; a < rank; ++a)
        for (int b = a + 1; b < rank; ++b) {
          m(a, b) = n(rng);
          m(b, a) = -m(a, b);
        }
      f.add(c, p, m);
    }
  return f;
}

namespace {

std::string trial_label(int trial, int degree) {
  return "trial " + std::to_string(trial) + " (degree " + std::to_string(degree) + ")";
}

double rel(double err, double scale) { return err / std::max(scale, 1e-300); }

}  // namespace

SuiteReport algebra_suite(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cdist(0.2, 5.0);
  std::uniform_int_distribution<int> kdist(0, 7);
  CheckAccumulator dbl("double Hodge", 1e-10), scal("metric scaling", 1e-10), anti("graded anticommutativity", 1e-12),
      pw("pullback commutes with wedge", 1e-10), hc("Hodge covariance under pullback", 1e-10);
  for (int t = 0; t < trials; ++t) {
    const int k = t % 8;
    const MetricTensor g = random_metric(rng);
    const KForm a = random_form(rng, k);
    const double c = cdist(rng);
    const KForm sa = hodge(g, a);
    dbl.add(rel((hodge(g, sa) - a).norm(), a.norm()), trial_label(t, k));
    const KForm lhs = hodge(MetricTensor(c * c * g.entries()), a);
    const KForm rhs = std::pow(c, 7 - 2 * k) * sa;
    scal.add(rel((lhs - rhs).norm(), rhs.norm()), trial_label(t, k) + ", c = " + std::to_string(c));

    const int l = kdist(rng) % (8 - k);
    const KForm b = random_form(rng, l);
    const KForm ab = wedge(a, b), ba = wedge(b, a);
    const double sign = ((k * l) % 2 == 0) ? 1.0 : -1.0;
    anti.add(rel((ab - sign * ba).norm(), std::max(1.0, ab.norm())),
             trial_label(t, k) + " with degree " + std::to_string(l));

    const Mat7 m = random_near_identity(rng, 0.3);
    const KForm pab = pullback(m, ab), papb = wedge(pullback(m, a), pullback(m, b));
    pw.add(rel((pab - papb).norm(), std::max(1.0, pab.norm())), trial_label(t, k) + " with degree " + std::to_string(l));
    const KForm h1 = pullback(m, sa), h2 = hodge(pullback(m, g), pullback(m, a));
    hc.add(rel((h1 - h2).norm(), std::max(1e-12, h1.norm())), trial_label(t, k));
  }
  return {"algebra", {dbl.result(), scal.result(), anti.result(), pw.result(), hc.result()}};
}

SuiteReport g2_derivation_suite(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cdist(0.3, 3.0);
  SuiteReport rep{"g2-derive", {}};
  const KForm& phi0 = euclidean_phi();

  CheckAccumulator metric("metric of phi0 is the identity", 1e-12);
  metric.add((metric_from_phi(phi0).entries() - Mat7::Identity()).cwiseAbs().maxCoeff(), "phi0");
  rep.checks.push_back(metric.result());

  const KForm psi0 = KForm::dy({4, 5, 6, 7}) - KForm::dy({2, 3, 6, 7}) - KForm::dy({2, 3, 4, 5}) -
                     KForm::dy({1, 3, 5, 7}) + KForm::dy({1, 3, 4, 6}) - KForm::dy({1, 2, 5, 6}) -
                     KForm::dy({1, 2, 4, 7});
  CheckAccumulator psi("psi of phi0 matches the 7-term expansion", 0.0);
  const KForm got = coassociative(phi0);
  double mismatch = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) mismatch = std::max(mismatch, std::abs(got[i] - psi0[i]));
  psi.add(mismatch, "phi0");
  rep.checks.push_back(psi.result());

  CheckAccumulator cons("psi-consistency", 1e-10), nat("naturality of the metric", 1e-8),
      natpsi("naturality of psi", 1e-8), hom("homogeneity of the metric", 1e-10);
  for (int t = 0; t < trials; ++t) {
    const std::string w = "trial " + std::to_string(t);
    const Mat7 m = random_near_identity(rng, 0.2);
    const KForm phi = pullback(m, phi0) + 0.05 * random_form(rng, 3);
    const G2Structure s = make_structure(phi);
    cons.add((s.psi - hodge(s.g, phi)).norm(), w);

    const Mat7 n = random_near_identity(rng, 0.2);
    const Mat7 lhs = metric_from_phi(pullback(n, phi)).entries();
    const Mat7 rhs = n.transpose() * s.g.entries() * n;
    nat.add(rel((lhs - rhs).norm(), rhs.norm()), w);
    const KForm pl = coassociative(pullback(n, phi)), pr = pullback(n, s.psi);
    natpsi.add(rel((pl - pr).norm(), pr.norm()), w);

    const double c = cdist(rng);
    const Mat7 gc = metric_from_phi(c * phi).entries();
    hom.add(rel((gc - std::pow(c, 2.0 / 3.0) * s.g.entries()).norm(), gc.norm()), w + ", c = " + std::to_string(c));
  }
  rep.checks.push_back(cons.result());
  rep.checks.push_back(nat.result());
  rep.checks.push_back(natpsi.result());
  rep.checks.push_back(hom.result());
  return rep;
}

SuiteReport normalization_suite(std::uint64_t seed, int trials, int restarts) {
  std::mt19937_64 rng(seed);
  CheckAccumulator res("normalization residual", 1e-8), rs("restarts used", static_cast<double>(restarts));
  NormalizeOptions opts;
  opts.restarts = restarts;
  for (int t = 0; t < trials; ++t) {
    const Mat7 m = random_with_singular_values(rng, 0.5, 2.0);
    const KForm phi = pullback(m.inverse(), euclidean_phi());
    opts.seed = seed + 7919u * static_cast<std::uint64_t>(t + 1);
    const NormalizationResult r = normalize(phi, opts);
    const std::string w = "trial " + std::to_string(t);
    res.add(r.residual, w);
    rs.add(r.restarts_used, w);
  }
  return {"normalize", {res.result(), rs.result()}};
}

SuiteReport cone_suite(const ChartConnection& a0, const KForm& phi, std::uint64_t seed, int trials, int samples,
                       double defect_tol) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> ldist(std::log(0.05), std::log(20.0)), rdist(0.05, 2.0);
  const ConeConnection cone(a0);
  SuiteReport rep{"cone", {}};
  CheckAccumulator homog("degree -1 homogeneity", 1e-10), radial("zero radial component", 1e-12),
      trans("chart transition consistency", 1e-6);
  for (int t = 0; t < trials; ++t) {
    Vec7 x;
    for (int i = 0; i < 7; ++i) x[i] = n(rng);
    x *= rdist(rng) / x.norm();
    const double lam = std::exp(ldist(rng));
    const Chart c = preferred_chart(x);
    const OneFormCoeffs a = cone.coefficients(x, c), b = cone.coefficients(lam * x, c);
    double err = 0, scale = 0, rad = 0;
    LieMat radial_part = LieMat::Zero(a0.rank(), a0.rank());
    for (int i = 0; i < 7; ++i) {
      err += (lam * b[i] - a[i]).squaredNorm();
      scale += a[i].squaredNorm();
      radial_part += x[i] * a[i];
    }
    rad = radial_part.norm() / std::max(1.0, std::sqrt(scale) * x.norm());
    const std::string w = "trial " + std::to_string(t) + ", lambda = " + std::to_string(lam);
    homog.add(std::sqrt(err) / std::max(1e-300, std::sqrt(scale)) * (scale > 0 ? 1.0 : 0.0), w);
    radial.add(rad, w);
    Vec7 v;
    for (int i = 0; i < 7; ++i) v[i] = n(rng);
    const Vec7 p = x / x.norm();
    v -= p * p.dot(v);
    if (std::abs(p[6]) < 0.9) trans.add(a0.transition_residual(p, v), w);
  }
  rep.checks.push_back(homog.result());
  rep.checks.push_back(radial.result());
  rep.checks.push_back(trans.result());

  if (defect_tol > 0) {
    CheckAccumulator def("instanton defect", defect_tol);
    const DefectReport d = instanton_defect(cone, phi, samples);
    for (std::size_t i = 0; i < d.samples.size(); ++i) def.add(d.samples[i].defect, "sphere point " + std::to_string(i));
    rep.checks.push_back(def.result());
  }

  // A non-instanton structure gives an O(1) defect, so the comparison is meaningful.
  const KForm tilted = pullback(random_near_identity(rng, 0.3), phi);
  LieMat q = random_rotation(rng).topLeftCorner(a0.rank(), a0.rank());
  if (a0.rank() >= 2) {
    Eigen::HouseholderQR<LieMat> qr(q);
    q = qr.householderQ();
  } else {
    q = LieMat::Identity(1, 1);
  }
  const int gs = std::min(samples, 50);
  const DefectReport d1 = instanton_defect(cone, tilted, gs);
  const DefectReport d2 = instanton_defect(ConeConnection(a0.gauge_rotated(q)), tilted, gs);
  CheckAccumulator gauge("gauge covariance of the defect", 1e-10);
  for (std::size_t i = 0; i < d1.samples.size(); ++i)
    gauge.add(rel(std::abs(d1.samples[i].defect - d2.samples[i].defect), std::max(1e-8, d1.samples[i].defect)),
              "sphere point " + std::to_string(i));
  rep.checks.push_back(gauge.result());
  return rep;
}

SuiteReport rescale_suite(const PolyFormField& phi, const RescaleSuiteOptions& opts, std::uint64_t seed,
                          C5Report* c5_out, CovarianceReport* cov_out) {
  const ScaleMap s(opts.lambda);
  SuiteReport rep{"rescale", {}};
  const C5Report c5 = c5_deviation(phi, s, opts.C, opts.grid_points);
  CheckAccumulator margin("deviation bound margin", 0.0);
  for (int k = 0; k < 6; ++k) margin.add(-c5.margin[k], "order " + std::to_string(k));
  margin.add(-c5.c5_margin, "C5 norm");
  rep.checks.push_back(margin.result());

  std::mt19937_64 rng(seed);
  const int m = opts.field_rank;
  const PolyLieForm a = random_poly_lie_form(rng, 1, m, 2, 1.0);
  const PolyLieForm sigma = random_poly_lie_form(rng, 0, m, 2, 1.0);
  auto big = std::make_shared<PolynomialFieldPair>(a, sigma, Annulus{0.0, 0.25});
  PolyLieForm sig_small = sigma.pullback_scaled(opts.lambda);
  sig_small *= opts.lambda;
  auto small = std::make_shared<PolynomialFieldPair>(a.pullback_scaled(opts.lambda), sig_small,
                                                     Annulus{0.0, 0.25 / opts.lambda});
  const CovarianceReport cov = residual_covariance(big, small, phi, s, opts.points, seed);
  CheckAccumulator cv("residual covariance", 1e-9);
  for (std::size_t i = 0; i < cov.samples.size(); ++i) cv.add(cov.samples[i].rel_error, "point " + std::to_string(i));
  rep.checks.push_back(cv.result());
  if (c5_out) *c5_out = c5;
  if (cov_out) *cov_out = cov;
  return rep;
}

ManufacturedProblem abelian_manufactured(const SolverConfig& cfg) {
  const auto mesh = log_mesh(cfg.r_in, cfg.r_out, cfg.mesh_points);
  ManufacturedProblem p{RadialProfilePair::zeros(mesh, 1), RadialProfilePair::zeros(mesh, 1)};
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double r = mesh[i], d = r - cfg.r_in;
    p.target.f[0][i] = d * std::sin(10.0 * r) + d * d;
    p.target.u[i] = std::sqrt(r) + std::cos(5.0 * r);
    p.init.f[0][i] = i == 0 ? 0.0 : 1.3 * p.target.f[0][i] + 0.01;
    p.init.u[i] = 0.7 * p.target.u[i] + 0.1;
  }
  return p;
}

double profile_error(const RadialProfilePair& got, const RadialProfilePair& want) {
  if (got.mesh.size() != want.mesh.size() || got.templates() != want.templates())
    throw InvalidInput("profile shapes differ");
  double err = 0;
  for (int k = 0; k < got.templates(); ++k)
    for (std::size_t i = 0; i < got.mesh.size(); ++i) err = std::max(err, std::abs(got.f[k][i] - want.f[k][i]));
  for (std::size_t i = 0; i < got.mesh.size(); ++i)
    err = std::max(err, std::abs((got.u[i] - got.u[0]) - (want.u[i] - want.u[0])));
  return err;
}

}  // namespace g2lab
