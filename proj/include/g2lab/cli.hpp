#pragma once

#include "g2lab/polynomial.hpp"
#include "g2lab/solver.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace g2lab {

/// Exit statuses of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitBestEffort = 2 };

/// Parsed key=value config file: one pair per line, '#' starts a comment,
/// blank lines ignored, repeated keys rejected.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> parse_key_values_file(const std::string& path);

/// A shipped structure name or the path of a form / polyform file.
PolyFormField resolve_phi(const std::string& source, double eps);

/// Everything a `solve` run needs, built from key=value pairs.  Keys beyond
/// SolverConfig: phi, eps, c0_target, model (canonical | canonical-twist |
/// abelian), templates, init (zero | profile CSV path), manufactured, seed.
struct SolveSetup {
  SolverConfig cfg;
  std::string phi_source = "euclidean";
  double eps = 0.0;
  double c0_target = -1.0;  // < 0: use eps as given
  std::string model = "canonical";
  int templates = 2;
  std::string init = "zero";
  bool manufactured = false;
  std::uint64_t seed = 7;

  PolyFormField phi;  // resolved structure (after c0_target scaling)
  std::shared_ptr<const RadialAnsatz> ansatz;
  RadialProfilePair init_profiles;
  std::optional<RadialProfilePair> target;
};

/// Applies the pairs (unknown keys throw InvalidInput) and resolves the
/// structure, ansatz and initial profiles.
SolveSetup make_solve_setup(const std::map<std::string, std::string>& kv);

/// Runs the command line; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace g2lab
