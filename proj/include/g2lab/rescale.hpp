#pragma once

#include "g2lab/fields.hpp"
#include "g2lab/forms7.hpp"
#include "g2lab/polynomial.hpp"

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace g2lab {

/// Dilation Gamma(y) = lambda y.
class ScaleMap {
 public:
  explicit ScaleMap(double lambda);
  double lambda() const { return lambda_; }
  Vec7 operator()(const Vec7& y) const { return lambda_ * y; }
  Mat7 matrix() const { return lambda_ * Mat7::Identity(); }

 private:
  double lambda_;
};

/// A bound that must hold by the chain rule was violated.
class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// phi~ = sum_I phi_I(x / lambda) dx^I.
PolyFormField rescale_phi(const PolyFormField& phi, const ScaleMap& s);

struct C5Report {
  double lambda = 1.0;
  double C = 1.0;
  double c_phi = 0.0;
  /// sum_I sup_{B(1/(4 lambda))} |grad_y^k (phi_I - phi_I(0))|, k = 0..5.
  std::array<double, 6> s{};
  /// sum_I sup_{B(1/4)} |grad_x^k (phi~_I - phi~_I(0))|, k = 0..5.
  std::array<double, 6> t{};
  /// c_phi / lambda for k = 0, c_phi / lambda^k for k >= 1.
  std::array<double, 6> bound{};
  std::array<double, 6> margin{};
  /// max_k t_k, the C^5_x norm of phi~ - phi~(0) compared against c_phi / lambda.
  double c5_norm_x = 0.0;
  double c5_margin = 0.0;
  /// sum_k t_k, reported for the summed-norm convention.
  double c5_sum_norm_x = 0.0;
  bool exact = true;     // all coefficient polynomials of degree <= 2
  int grid_points = 0;   // sample count when not exact
};

/// Chain-rule bookkeeping for the deviation of phi from phi(0).  Derivative
/// norms are Frobenius norms of the full (symmetric) derivative tensors.
/// Suprema are exact for degree <= 2 and sampled on a radial-angular grid of
/// about `grid_points` points otherwise.  Throws InconsistencyError if a
/// ladder bound fails.
C5Report c5_deviation(const PolyFormField& phi, const ScaleMap& s, double C = 1.0, int grid_points = 10000);

/// Global maximizer of |p(y) - p(0)|, |grad p(y)| and |hess p| over |y| <= rho
/// for a polynomial of degree <= 2 (trust-region subproblem).
std::array<double, 3> quadratic_sups(const Polynomial& p, double rho);

/// (A*, lambda sigma*) = (Gamma^* A, lambda Gamma^* sigma) on B(r / lambda).
class ScaledFieldPair final : public FieldPair {
 public:
  ScaledFieldPair(std::shared_ptr<const FieldPair> inner, const ScaleMap& s);
  int rank() const override { return inner_->rank(); }
  Annulus domain() const override;
  OneFormCoeffs connection(const Vec7& y, Chart c) const override;
  LieMat higgs(const Vec7& y, Chart c) const override;
  using FieldPair::jet;
  FieldJet jet(const Vec7& y, Chart c) const override;

 private:
  std::shared_ptr<const FieldPair> inner_;
  double lambda_;
};

std::shared_ptr<const FieldPair> pullback_monopole(std::shared_ptr<const FieldPair> a, const ScaleMap& s);

/// |Gamma^*(*_{g~} a) - lambda^5 *_g(Gamma^* a)| relative to max(1, |lambda^5 *_g Gamma^* a|),
/// with g~ the metric whose pullback is lambda^2 g.
double check_star_covariance(const MetricTensor& g, const ScaleMap& s, const KForm& a);

struct CovarianceSample {
  Vec7 y;
  double big;      // |lambda^6 R~(lambda y)|, the pulled-back big-ball residual
  double small;    // |lambda^4 R(y)|
  double rel_error;
};

struct CovarianceReport {
  double max_rel_error = 0.0;
  std::vector<CovarianceSample> samples;
};

/// Compares Gamma^* residual(A, sigma; phi~) with lambda^4 residual(A*, lambda sigma*; phi)
/// at `points` seeded random points of B(r_max / lambda) \ {0}, where (A, sigma) live on
/// B(r_max) in x-coordinates and phi on the y side.
CovarianceReport residual_covariance(std::shared_ptr<const FieldPair> big, const PolyFormField& phi,
                                     const ScaleMap& s, int points, std::uint64_t seed, double r_max = 0.25);
/// Same with an independently constructed small-ball pair (A*, lambda sigma*).
CovarianceReport residual_covariance(std::shared_ptr<const FieldPair> big, std::shared_ptr<const FieldPair> small,
                                     const PolyFormField& phi, const ScaleMap& s, int points, std::uint64_t seed,
                                     double r_max = 0.25);

/// A0 + amp r^{1-theta} Theta / sup_{S^6}|Theta|, Higgs zero: satisfies
/// |x|^{l+1} |grad^l (A - A0)| = K_l |x|^{1-theta} with K_0 = amp.
std::shared_ptr<const FieldPair> power_law_field(const RadialAnsatz& ansatz, int template_index, double theta,
                                                 double amp, Annulus domain);

struct DecayTransformReport {
  double expected = 0.0;  // lambda^{1-theta}
  double max_rel_error = 0.0;
  DecayTable original;
  DecayTable pulled_back;
};

/// Decay profiles of p and of its pullback at the same radii.  For a field
/// with |x|^{l+1} |grad^l (A - A0)| = K_l |x|^{1-theta} the pulled-back
/// weighted profile is lambda^{1-theta} times the original one; max_rel_error
/// measures the departure from that factor over all rows.
DecayTransformReport decay_transform(std::shared_ptr<const FieldPair> p, const ConeConnection& a0,
                                     const ScaleMap& s, double theta, std::span<const double> radii,
                                     int samples, int max_order = 3);

/// Shipped polynomial structures: "euclidean", "linear-perturb"
/// (phi0 + eps y1 dy123), "quadratic-perturb", "cubic-perturb",
/// "g2-perturb" (phi0 + eps y -| psi0), "g2-twist" (g2_twist with g2_twist_generator()).
PolyFormField shipped_phi(const std::string& name, double eps = 1.0);
std::vector<std::string> shipped_phi_names();

/// phi0 + eps (y -| psi0): a G2-equivariant perturbation whose C^0 deviation
/// on B(R) is 2 eps R.
PolyFormField g2_perturbation(double eps);

/// phi0 + eps y^b ^ (K y -| phi0) for K in g2: the pullback of phi0 by
/// y -> exp(eps |y|^2 K / 2) y.  Solved exactly by A0 + eps r^2 (dr / r) mu_K.
PolyFormField g2_twist(double eps, const Mat7& k);

/// sup over B(radius) of |phi - phi(0)| in the coefficient Frobenius norm.
double c0_deviation(const PolyFormField& phi, double radius);

}  // namespace g2lab
