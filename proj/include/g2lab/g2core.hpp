#pragma once

#include "g2lab/forms7.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace g2lab {

/// The 3-form is not a (positively oriented) G2-form.
class DegenerateStructure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// dy^{123} - dy^{145} - dy^{167} - dy^{246} + dy^{257} - dy^{347} - dy^{356}
const KForm& euclidean_phi();

/// Symmetric bilinear form B_ij read off the dy^{1..7} coefficient of
/// (e_i -| phi) ^ (e_j -| phi) ^ phi, normalized so that B(euclidean_phi()) = I.
Mat7 contraction_matrix(const KForm& phi);

/// g = B det(B)^{-1/9}.  Homogeneous of degree 2/3 in phi and natural under
/// orientation-preserving pullback.
MetricTensor metric_from_phi(const KForm& phi);

/// psi = *_{g(phi)} phi.
KForm coassociative(const KForm& phi);

struct G2Structure {
  KForm phi{3};
  MetricTensor g;
  KForm psi{4};
  KForm vol{7};
};

G2Structure make_structure(const KForm& phi);

/// lambda_min / lambda_max of the normalized contraction matrix; positive iff
/// phi is a positively oriented G2-form.
double nondegeneracy_margin(const KForm& phi);

struct NormalizeOptions {
  double tol = 1e-8;
  int max_iter = 500;
  int restarts = 16;
  std::uint64_t seed = 0x6732u;
};

struct NormalizationResult {
  Mat7 L = Mat7::Identity();
  double residual = 0.0;
  bool converged = false;
  int restarts_used = 0;
  int iterations = 0;
};

/// Finds L with pullback(L, phi) ~ euclidean_phi(): whitening by g^{-1/2}
/// followed by Gauss-Newton alignment over SO(7) with Cayley retraction and
/// seeded random restarts.  Throws DegenerateStructure for non-G2 input;
/// non-convergence is reported through `converged` with the best residual.
NormalizationResult normalize(const KForm& phi_at_point, const NormalizeOptions& opts = {});

/// Derivation action of X in gl(7) on forms: d/dt pullback(exp(tX), a) at t = 0.
KForm lie_derivative(const Mat7& x, const KForm& a);

/// Orthonormal (Frobenius) basis of g2 = {X in so(7) : X . euclidean_phi() = 0}.
std::vector<Mat7> g2_algebra();

/// Unit-norm projection of e_2 e_1^T - e_1 e_2^T onto g2.
Mat7 g2_twist_generator();

}  // namespace g2lab
