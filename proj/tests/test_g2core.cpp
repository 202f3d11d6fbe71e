#include "g2lab/g2core.hpp"
#include "g2lab/suites.hpp"
#include "tensor_oracle.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <random>

using namespace g2lab;

namespace {

KForm pinned_psi0() {
  return KForm::dy({4, 5, 6, 7}) - KForm::dy({2, 3, 6, 7}) - KForm::dy({2, 3, 4, 5}) - KForm::dy({1, 3, 5, 7}) +
         KForm::dy({1, 3, 4, 6}) - KForm::dy({1, 2, 5, 6}) - KForm::dy({1, 2, 4, 7});
}

}  // namespace

TEST_CASE("euclidean phi has seven unit coefficients") {
  const KForm& phi = euclidean_phi();
  CHECK(phi.nonzero_count() == 7);
  CHECK(phi.norm() * phi.norm() == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(phi.coeff(MultiIndex::from_axes({1, 2, 3})) == 1.0);
  CHECK(phi.coeff(MultiIndex::from_axes({2, 5, 7})) == 1.0);
  CHECK(phi.coeff(MultiIndex::from_axes({3, 5, 6})) == -1.0);
}

TEST_CASE("metric of phi0 is the identity") {
  CHECK((metric_from_phi(euclidean_phi()).entries() - Mat7::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(nondegeneracy_margin(euclidean_phi()) == doctest::Approx(1.0));
}

TEST_CASE("psi0 equals the oracle's Hodge dual and the pinned expansion") {
  const KForm psi = coassociative(euclidean_phi());
  const KForm oracle_psi = oracle::to_form(oracle::hodge(Mat7::Identity(), oracle::from_form(euclidean_phi())));
  for (std::size_t i = 0; i < psi.size(); ++i) {
    CHECK(psi[i] == oracle_psi[i]);
    CHECK(psi[i] == pinned_psi0()[i]);
  }
  const KForm top = wedge(psi, euclidean_phi());
  CHECK(top[0] == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("metric naturality under pullback") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const Mat7 m = random_near_identity(rng, 0.4);
    const Mat7 got = metric_from_phi(pullback(m, euclidean_phi())).entries();
    CHECK((got - m.transpose() * m).norm() <= 1e-9 * (m.transpose() * m).norm());
  }
}

TEST_CASE("metric homogeneity of degree 2/3") {
  const Mat7 g = metric_from_phi(8.0 * euclidean_phi()).entries();
  CHECK((g - 4.0 * Mat7::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("degenerate 3-forms are rejected") {
  CHECK_THROWS_AS(metric_from_phi(KForm::dy({1, 2, 3})), DegenerateStructure);
  CHECK_THROWS_AS(metric_from_phi(-1.0 * euclidean_phi()), DegenerateStructure);
  CHECK_THROWS_AS(coassociative(KForm(3)), DegenerateStructure);
  CHECK_THROWS_AS(metric_from_phi(KForm::dy({1, 2})), InvalidInput);
  CHECK(nondegeneracy_margin(KForm::dy({1, 2, 3})) <= 0.0);
}

TEST_CASE("structure bundle is consistent") {
  std::mt19937_64 rng(23);
  const KForm phi = pullback(random_near_identity(rng, 0.3), euclidean_phi());
  const G2Structure s = make_structure(phi);
  CHECK((s.psi - hodge(s.g, phi)).norm() <= 1e-12 * s.psi.norm());
  CHECK(s.vol[0] == doctest::Approx(std::sqrt(s.g.determinant())).epsilon(1e-12));
  CHECK(wedge(phi, s.psi)[0] == doctest::Approx(7.0 * s.vol[0]).epsilon(1e-10));
}

TEST_CASE("normalize examples") {
  const NormalizationResult id = normalize(euclidean_phi());
  CHECK(id.converged);
  CHECK(id.residual <= 1e-12);
  CHECK((pullback(id.L, euclidean_phi()) - euclidean_phi()).norm() <= 1e-12);

  const NormalizationResult eight = normalize(8.0 * euclidean_phi());
  CHECK(eight.converged);
  CHECK(eight.residual <= 1e-8);
  const Mat7 q = eight.L * 2.0;
  CHECK((q.transpose() * q - Mat7::Identity()).norm() <= 1e-8);

  std::mt19937_64 rng(29);
  const Mat7 m = random_with_singular_values(rng, 0.5, 2.0);
  const NormalizationResult r = normalize(pullback(Mat7(m.inverse()), euclidean_phi()));
  CHECK(r.converged);
  CHECK(r.residual <= 1e-8);

  CHECK_THROWS_AS(normalize(KForm::dy({1, 2, 3})), DegenerateStructure);
}

TEST_CASE("g2 is the 14-dimensional stabilizer algebra") {
  const auto basis = g2_algebra();
  REQUIRE(basis.size() == 14);
  for (const Mat7& x : basis) {
    CHECK((x + x.transpose()).norm() <= 1e-12);
    CHECK(lie_derivative(x, euclidean_phi()).norm() <= 1e-10);
    CHECK(lie_derivative(x, coassociative(euclidean_phi())).norm() <= 1e-10);
  }
  const Mat7 k = g2_twist_generator();
  CHECK(k.norm() == doctest::Approx(1.0));
  CHECK(lie_derivative(k, euclidean_phi()).norm() <= 1e-10);
  CHECK(k(1, 0) > 0.0);
}

TEST_CASE("lie derivative matches a finite difference of the pullback") {
  std::mt19937_64 rng(31);
  const Mat7 x = random_matrix(rng, 0.5);
  const KForm a = random_form(rng, 3);
  const double h = 1e-5;
  const Mat7 plus = (h * x).exp(), minus = (-h * x).exp();
  const KForm fd = (pullback(plus, a) - pullback(minus, a)) * (0.5 / h);
  CHECK((fd - lie_derivative(x, a)).norm() <= 1e-7 * std::max(1.0, fd.norm()));
}

TEST_CASE("derivation and normalization suites pass") {
  CHECK(g2_derivation_suite(7, 20).passed());
  CHECK(normalization_suite(7, 5, 16).passed());
}
