#include "g2lab/g2core.hpp"
#include "g2lab/rescale.hpp"
#include "g2lab/suites.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace g2lab;

TEST_CASE("rescale_phi examples") {
  const ScaleMap s(2.0);
  const PolyFormField c = rescale_phi(PolyFormField::constant(euclidean_phi()), s);
  const Vec7 x = Vec7::LinSpaced(0.1, 0.7);
  CHECK((c(x) - euclidean_phi()).norm() == 0.0);

  const double lam = 5.0;
  const PolyFormField lin = rescale_phi(shipped_phi("linear-perturb", 1.0), ScaleMap(lam));
  const KForm want = euclidean_phi() + KForm::dy({1, 2, 3}, x[0] / lam);
  CHECK((lin(x) - want).norm() <= 1e-15);
  CHECK(c0_deviation(lin, 0.25) == doctest::Approx(0.25 / lam).epsilon(1e-14));
  CHECK_THROWS_AS(ScaleMap(0.0), InvalidInput);
  CHECK_THROWS_AS(ScaleMap(-2.0), InvalidInput);
}

TEST_CASE("deviation ladder for the constant structure") {
  const C5Report r = c5_deviation(PolyFormField::constant(euclidean_phi()), ScaleMap(4.0));
  CHECK(r.c_phi == 0.0);
  for (int k = 0; k < 6; ++k) {
    CHECK(r.t[k] == 0.0);
    CHECK(r.margin[k] >= 0.0);
  }
  CHECK(r.exact);
}

TEST_CASE("deviation ladder for the linear family") {
  const double eps = 0.3;
  const C5Report r = c5_deviation(shipped_phi("linear-perturb", eps), ScaleMap(10.0));
  CHECK(r.s[0] == doctest::Approx(eps / 40.0).epsilon(1e-14));
  CHECK(r.c_phi > 0.0);
  for (int k = 0; k < 6; ++k) CHECK(r.margin[k] > 0.0);
  CHECK(r.c5_margin > 0.0);

  const C5Report r16 = c5_deviation(shipped_phi("linear-perturb", 1.0), ScaleMap(16.0));
  const C5Report r32 = c5_deviation(shipped_phi("linear-perturb", 1.0), ScaleMap(32.0));
  CHECK(std::abs(r32.t[0] / r16.t[0] - 0.5) <= 1e-10);
}

TEST_CASE("deviation ladder margins on the polynomial families") {
  for (const std::string name : {"linear-perturb", "quadratic-perturb", "cubic-perturb", "g2-perturb", "g2-twist"}) {
    for (double lam : {4.0, 16.0}) {
      const C5Report r = c5_deviation(shipped_phi(name, 0.1), ScaleMap(lam), 1.0, 2000);
      for (int k = 0; k < 6; ++k) CHECK_MESSAGE(r.margin[k] >= 0.0, name << " lambda " << lam << " order " << k);
      CHECK(r.c5_margin > 0.0);
    }
  }
  CHECK_THROWS_AS(c5_deviation(shipped_phi("linear-perturb", 0.1), ScaleMap(4.0), 0.0), InvalidInput);
}

TEST_CASE("exact quadratic suprema bound sampled values") {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> n(0, 1);
  Polynomial p = Polynomial::constant(0.3);
  for (int i = 0; i < 7; ++i) p += Polynomial::variable(i, n(rng));
  for (int i = 0; i < 7; ++i)
    for (int j = i; j < 7; ++j) p += n(rng) * Polynomial::variable(i) * Polynomial::variable(j);
  const double rho = 0.5;
  const auto sups = quadratic_sups(p, rho);
  double sampled = 0;
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20000; ++t) {
    Vec7 y;
    for (int i = 0; i < 7; ++i) y[i] = n(rng);
    y *= rho * std::pow(u(rng), 1.0 / 7.0) / y.norm();
    sampled = std::max(sampled, std::abs(p(y) - p(Vec7::Zero())));
  }
  CHECK(sampled <= sups[0] * (1 + 1e-12));
  CHECK(sampled >= 0.5 * sups[0]);
  CHECK_THROWS_AS(quadratic_sups(p * Polynomial::variable(0), rho), InvalidInput);
}

TEST_CASE("scaled field pair examples") {
  const int m = 2;
  PolyLieForm a(1, m), sigma(0, m);
  sigma.add(0, Polynomial::constant(1.5), so2_generator());
  const double lam = 3.0;
  auto zero_a = std::make_shared<PolynomialFieldPair>(a, sigma);
  const auto scaled = pullback_monopole(zero_a, ScaleMap(lam));
  const Vec7 y = Vec7::Constant(0.01);
  CHECK((scaled->higgs(y, Chart::North) - lam * 1.5 * so2_generator()).norm() <= 1e-14);
  for (const auto& ai : scaled->connection(y, Chart::North)) CHECK(ai.norm() == 0.0);

  PolyLieForm ac(1, m);
  for (int i = 0; i < 7; ++i) ac.add(i, Polynomial::constant(i + 1.0), so2_generator());
  auto const_a = std::make_shared<PolynomialFieldPair>(ac, sigma);
  const auto sc = pullback_monopole(const_a, ScaleMap(lam));
  const auto got = sc->connection(y, Chart::North);
  for (int i = 0; i < 7; ++i) CHECK((got[i] - lam * (i + 1.0) * so2_generator()).norm() <= 1e-14);
  CHECK(sc->domain().r_out == doctest::Approx(1.0 / lam));
}

TEST_CASE("star covariance under dilation") {
  CHECK(check_star_covariance(MetricTensor(), ScaleMap(2.0), KForm::dy({1})) <= 1e-12);
  std::mt19937_64 rng(97);
  const MetricTensor g = random_metric(rng);
  CHECK(check_star_covariance(g, ScaleMap(3.0), random_form(rng, 1)) <= 1e-10);
  CHECK(check_star_covariance(g, ScaleMap(1.0), random_form(rng, 1)) == 0.0);
}

TEST_CASE("residual covariance for polynomial fields") {
  std::mt19937_64 rng(101);
  auto big = std::make_shared<PolynomialFieldPair>(random_poly_lie_form(rng, 1, 3, 2),
                                                   random_poly_lie_form(rng, 0, 3, 2), Annulus{0.0, 0.25});
  const PolyFormField phi = shipped_phi("quadratic-perturb", 0.2);
  for (double lam : {4.0, 10.0}) {
    const CovarianceReport rep = residual_covariance(big, phi, ScaleMap(lam), 50, 5);
    CHECK(rep.samples.size() == 50);
    CHECK(rep.max_rel_error <= 1e-9);
  }
}

TEST_CASE("rescale suite reports witnesses") {
  RescaleSuiteOptions o;
  o.points = 40;
  const SuiteReport r = rescale_suite(shipped_phi("linear-perturb", 0.1), o, 7);
  CHECK(r.passed());
  CHECK(r.summary() == "all checks passed");
}

TEST_CASE("decay transform of a power-law field") {
  const RadialAnsatz ansatz = canonical_ansatz(1);
  const double theta = 0.5, lam = 4.0;
  const auto field = power_law_field(ansatz, 0, theta, 0.2, {1e-3, 1.0});
  const std::vector<double> radii = {0.01, 0.02, 0.05, 0.1};
  const DecayTransformReport rep =
      decay_transform(field, ConeConnection(ansatz.model), ScaleMap(lam), theta, radii, 4, 1);
  CHECK(rep.expected == doctest::Approx(std::pow(lam, 1 - theta)));
  CHECK(rep.max_rel_error <= 1e-8);
  CHECK_THROWS_AS(power_law_field(ansatz, 3, theta, 1.0, {1e-3, 1.0}), InvalidInput);
  CHECK_THROWS_AS(power_law_field(ansatz, 0, 1.5, 1.0, {1e-3, 1.0}), InvalidInput);
}

TEST_CASE("shipped structures") {
  for (const auto& name : shipped_phi_names()) {
    const PolyFormField phi = shipped_phi(name, 0.1);
    CHECK((phi(Vec7::Zero()) - euclidean_phi()).norm() == 0.0);
  }
  CHECK_THROWS_AS(shipped_phi("nope"), InvalidInput);
  CHECK(c0_deviation(g2_perturbation(0.1), 0.25) == doctest::Approx(2 * 0.1 * 0.25).epsilon(1e-12));
  CHECK(c0_deviation(shipped_phi("euclidean"), 0.25) == 0.0);
}

TEST_CASE("g2 twist is the pullback of phi0 by a radial rotation") {
  const Mat7 k = g2_twist_generator();
  const double eps = 0.7;
  const PolyFormField phi = g2_twist(eps, k);
  for (const Vec7& p : sphere_points(5)) {
    const Vec7 x = 0.3 * p;
    const Mat7 e = (0.5 * eps * x.squaredNorm() * k).exp();
    const Mat7 jac = e + eps * e * k * x * x.transpose();
    CHECK((phi(x) - pullback(jac, euclidean_phi())).norm() <= 1e-12);
  }
}
