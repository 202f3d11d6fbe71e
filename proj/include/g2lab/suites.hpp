#pragma once

#include "g2lab/forms7.hpp"
#include "g2lab/model_connection.hpp"
#include "g2lab/polynomial.hpp"
#include "g2lab/rescale.hpp"
#include "g2lab/solver.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace g2lab {

/// One invariant of a property suite: the worst value seen and where.
struct CheckResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string witness;  // input that produced `worst`
  int trials = 0;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const;
  /// Names of failed checks with their witnesses, or "all checks passed".
  std::string summary() const;
};

/// Records a relative error against a tolerance, keeping the worst witness.
class CheckAccumulator {
 public:
  CheckAccumulator(std::string name, double tolerance);
  void add(double value, const std::string& witness);
  void add_flag(bool ok, const std::string& witness);
  CheckResult result() const { return r_; }

 private:
  CheckResult r_;
  bool any_ = false;
};

// Random inputs shared by suites, tests and the acceptance driver.
Mat7 random_matrix(std::mt19937_64& rng, double scale = 1.0);
/// I + scale N(0,1) entries, with a column flipped if needed so det > 0.
Mat7 random_near_identity(std::mt19937_64& rng, double scale);
Mat7 random_rotation(std::mt19937_64& rng);
/// U diag(s) V^T with s uniform in [smin, smax] and U, V in SO(7).
Mat7 random_with_singular_values(std::mt19937_64& rng, double smin, double smax);
MetricTensor random_metric(std::mt19937_64& rng);
KForm random_form(std::mt19937_64& rng, int degree);
/// Random so(m)-valued polynomial k-form (k = 0, 1) with coefficients of degree <= max_degree.
PolyLieForm random_poly_lie_form(std::mt19937_64& rng, int degree, int rank, int max_degree, double scale = 1.0);

/// forms7: double Hodge, metric scaling, graded anticommutativity, pullback
/// versus wedge, Hodge covariance under pullback, on `trials` random inputs.
SuiteReport algebra_suite(std::uint64_t seed, int trials = 200);

/// g2core: metric and psi of phi0, psi-consistency, naturality, homogeneity.
SuiteReport g2_derivation_suite(std::uint64_t seed, int trials = 100);

/// normalize(pullback(M^{-1}, phi0)) for random M with singular values in [0.5, 2].
SuiteReport normalization_suite(std::uint64_t seed, int trials = 50, int restarts = 16);

/// Cone model: degree -1 homogeneity at `trials` random (x, lambda), zero
/// radial component, chart transition consistency, instanton defect for phi
/// at `samples` sphere points (if `defect_tol` > 0), gauge covariance of the
/// defect under a constant rotation.
SuiteReport cone_suite(const ChartConnection& a0, const KForm& phi, std::uint64_t seed, int trials = 100,
                       int samples = 200, double defect_tol = 1e-6);

struct RescaleSuiteOptions {
  double lambda = 16.0;
  double C = 1.0;
  int points = 500;
  int grid_points = 10000;
  int field_rank = 3;
};

/// rescale: C^5 ladder margins and the residual covariance for seeded random
/// polynomial fields (compared with an independently built small-ball pair).
SuiteReport rescale_suite(const PolyFormField& phi, const RescaleSuiteOptions& opts, std::uint64_t seed,
                          C5Report* c5_out = nullptr, CovarianceReport* cov_out = nullptr);

/// Manufactured abelian solve: target profiles and a perturbed start.
struct ManufacturedProblem {
  RadialProfilePair target;
  RadialProfilePair init;
};
ManufacturedProblem abelian_manufactured(const SolverConfig& cfg);

/// Maximum profile error of a solve against a target: f exactly, u modulo a constant.
double profile_error(const RadialProfilePair& got, const RadialProfilePair& want);

}  // namespace g2lab
