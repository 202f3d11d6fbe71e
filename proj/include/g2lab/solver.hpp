#pragma once

#include "g2lab/fields.hpp"
#include "g2lab/model_connection.hpp"
#include "g2lab/polynomial.hpp"
#include "g2lab/rescale.hpp"

#include <cmath>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace g2lab {

/// A solver precondition (perturbation size, scale choice) does not hold.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double theta = 0.5;
  double p = -2.25;  // weight exponent, must lie in (-5/2, theta - 5/2)
  double delta0 = 0.05;
  double lambda = 1.0;
  double gauge_penalty = 0.1;
  double tol = 1e-10;
  int max_iter = 200;
  double r_in = 1.0 / 64.0;
  double r_out = 0.25;
  int mesh_points = 128;
  int samples = 200;
  double R0 = 1.0;
  double C = 1.0;
  int decay_radii = 12;
  int decay_samples = 40;
  int decay_order = 3;

  /// Throws InvalidInput on out-of-range values.
  void validate() const;
  /// Sets a field from its config-file key; false for unknown keys.
  bool set(const std::string& key, const std::string& value);
};

struct PreconditionReport {
  double c0_deviation = 0.0;   // sup_{B(r_out)} |phi~ - phi~(0)|
  double c_phi = 0.0;          // from the C^5 bookkeeping
  double c_phi_over_lambda = 0.0;
  bool c0_ok = false;          // c0_deviation <= delta0
  bool scale_ok = false;       // 1 / (4 lambda) < R0 / 2
  bool c_phi_ok = false;       // c_phi / lambda < delta0 / 2 (reported only)
  bool phi0_euclidean = false; // phi(0) is the Euclidean model form
};

/// Checks the inputs of a solve of phi (given in y-coordinates) at scale lambda.
PreconditionReport check_preconditions(const PolyFormField& phi, const SolverConfig& cfg);

enum class DecayStatus { Ok, ZeroField, Degenerate };
const char* decay_status_name(DecayStatus s);

struct DecayFit {
  double slope = std::nan("");
  double intercept = std::nan("");
  DecayStatus status = DecayStatus::Ok;
  int radii_used = 0;
  bool meets_contract = false;  // slope >= (1 - theta) - 0.1
};

/// Least-squares slope of log(r sup|A - A0|) against log r over the inner half
/// of the table's radii (l = 0 rows).  Needs >= 4 radii spanning a decade.
DecayFit fit_decay_rate(const DecayTable& table, double theta);

struct SolveReport {
  int iterations = 0;
  double initial_residual = 0.0;  // weighted L2 norm of the monopole residual
  double final_residual = 0.0;
  double initial_objective = 0.0;  // residual^2 + gauge term
  double final_objective = 0.0;
  double gauge_term = 0.0;
  std::vector<double> history;  // objective after each accepted iteration (first entry: start)
  std::vector<std::string> step_kinds;
  bool converged = false;
  std::string stop_reason;
  double boundary_mismatch = 0.0;  // max_k |f_k(r_in)|
  DecayFit decay;
  PreconditionReport preconditions;
  double runtime_seconds = 0.0;
};

struct SolveResult {
  RadialProfilePair profiles;
  SolveReport report;
  DecayTable decay_table;
};

/// Least-squares solve of F_A ^ psi~ + *_{g~} d_A sigma = target on the annulus
/// for the radial ansatz, where phi~ = rescale_phi(phi, lambda).  With a target
/// profile pair the right-hand side is the discrete residual of that pair
/// (manufactured problems); otherwise it is zero.
/// Throws PreconditionError when check_preconditions fails.
SolveResult solve_monopole(const PolyFormField& phi, std::shared_ptr<const RadialAnsatz> ansatz,
                           const SolverConfig& cfg, const RadialProfilePair& init,
                           const RadialProfilePair* target = nullptr);

/// Decay radii used after a solve: log-spaced inside the annulus.
std::vector<double> decay_radii(const SolverConfig& cfg);

/// CSV with header r,f,u (one template) or r,f1,..,fK,u.
void write_profiles_csv(std::ostream& out, const RadialProfilePair& p);
RadialProfilePair read_profiles_csv(std::istream& in);

}  // namespace g2lab
