#include "g2lab/cli.hpp"

#include "g2lab/fields.hpp"
#include "g2lab/g2core.hpp"
#include "g2lab/model_connection.hpp"
#include "g2lab/rescale.hpp"
#include "g2lab/suites.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace g2lab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidInput("config line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw InvalidInput("config line " + std::to_string(lineno) + ": repeated key '" + key + "'");
  }
  return kv;
}

std::map<std::string, std::string> parse_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  return parse_key_values(in);
}

PolyFormField resolve_phi(const std::string& source, double eps) {
  const auto names = shipped_phi_names();
  if (std::find(names.begin(), names.end(), source) != names.end()) return shipped_phi(source, eps);
  if (std::filesystem::exists(source)) return read_polyform_file(source);
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw InvalidInput("unknown structure '" + source + "' (not a file; shipped names: " + list + ")");
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config key '" + key + "': expected true or false, got '" + v + "'");
}

double parse_number(const std::string& key, const std::string& v) {
  SolverConfig probe;
  probe.set("theta", v);  // reuses the strict numeric parser
  (void)key;
  return probe.theta;
}

bool is_shipped(const std::string& source) {
  const auto names = shipped_phi_names();
  return std::find(names.begin(), names.end(), source) != names.end();
}

}  // namespace

SolveSetup make_solve_setup(const std::map<std::string, std::string>& kv) {
  SolveSetup s;
  for (const auto& [key, value] : kv) {
    if (s.cfg.set(key, value)) continue;
    if (key == "phi") {
      s.phi_source = value;
    } else if (key == "eps") {
      s.eps = parse_number(key, value);
    } else if (key == "c0_target") {
      s.c0_target = parse_number(key, value);
      if (!(s.c0_target >= 0)) throw InvalidInput("c0_target must be non-negative");
    } else if (key == "model") {
      s.model = value;
    } else if (key == "templates") {
      SolverConfig probe;
      probe.set("max_iter", value);
      s.templates = probe.max_iter;
    } else if (key == "init") {
      s.init = value;
    } else if (key == "manufactured") {
      s.manufactured = parse_bool(key, value);
    } else if (key == "seed") {
      SolverConfig probe;
      probe.set("max_iter", value);
      if (probe.max_iter < 0) throw InvalidInput("seed must be non-negative");
      s.seed = static_cast<std::uint64_t>(probe.max_iter);
    } else {
      throw InvalidInput("unknown config key '" + key + "'");
    }
  }
  s.cfg.validate();

  if (s.model == "canonical") {
    s.ansatz = std::make_shared<RadialAnsatz>(canonical_ansatz(s.templates));
  } else if (s.model == "canonical-twist") {
    s.ansatz = std::make_shared<RadialAnsatz>(twisted_canonical_ansatz(g2_twist_generator()));
  } else if (s.model == "abelian") {
    s.ansatz = std::make_shared<RadialAnsatz>(abelian_ansatz());
  } else {
    throw InvalidInput("unknown model '" + s.model + "' (canonical, canonical-twist, abelian)");
  }

  if (s.c0_target >= 0) {
    if (!is_shipped(s.phi_source)) throw InvalidInput("c0_target needs a shipped structure name");
    const PolyFormField unit = shipped_phi(s.phi_source, 1.0);
    const double dev = c0_deviation(rescale_phi(unit, ScaleMap(s.cfg.lambda)), s.cfg.r_out);
    if (!(dev > 0)) throw InvalidInput("structure '" + s.phi_source + "' has no perturbation to scale");
    s.eps = s.c0_target / dev;
  }
  s.phi = resolve_phi(s.phi_source, s.eps);

  const int K = static_cast<int>(s.ansatz->templates.size());
  const auto mesh = log_mesh(s.cfg.r_in, s.cfg.r_out, s.cfg.mesh_points);
  if (s.manufactured) {
    if (s.model != "abelian") throw InvalidInput("manufactured problems use the abelian model");
    const ManufacturedProblem mp = abelian_manufactured(s.cfg);
    s.target = mp.target;
    s.init_profiles = mp.init;
  } else {
    s.init_profiles = RadialProfilePair::zeros(mesh, K);
  }
  if (s.init != "zero") {
    std::ifstream in(s.init);
    if (!in) throw InvalidInput("cannot open initial profiles '" + s.init + "'");
    s.init_profiles = read_profiles_csv(in);
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace {

json to_json(const Vec7& v) { return json(std::vector<double>(v.data(), v.data() + 7)); }

json to_json(const Mat7& m) {
  json rows = json::array();
  for (int i = 0; i < 7; ++i) {
    std::vector<double> r(7);
    for (int j = 0; j < 7; ++j) r[j] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

json to_json(const KForm& a) {
  json terms = json::array();
  const auto& idx = basis_indices(a.degree());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    std::vector<int> axes;
    for (int ax : idx[i].axes()) axes.push_back(ax + 1);
    terms.push_back({{"indices", axes}, {"value", a[i]}});
  }
  return {{"degree", a.degree()}, {"terms", terms}};
}

json to_json(const SuiteReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"worst", c.worst},
                      {"tolerance", c.tolerance},
                      {"witness", c.witness},
                      {"trials", c.trials}});
  return {{"suite", r.suite}, {"passed", r.passed()}, {"checks", checks}};
}

json to_json(const C5Report& c) {
  auto arr = [](const std::array<double, 6>& a) { return std::vector<double>(a.begin(), a.end()); };
  return {{"lambda", c.lambda},         {"C", c.C},
          {"c_phi", c.c_phi},           {"s", arr(c.s)},
          {"t", arr(c.t)},              {"bound", arr(c.bound)},
          {"margin", arr(c.margin)},    {"c5_norm_x", c.c5_norm_x},
          {"c5_margin", c.c5_margin},   {"c5_sum_norm_x", c.c5_sum_norm_x},
          {"exact", c.exact},           {"grid_points", c.grid_points}};
}

json to_json(const DecayFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"status", decay_status_name(f.status)},
          {"radii_used", f.radii_used},
          {"meets_contract", f.meets_contract}};
}

json to_json(const PreconditionReport& p) {
  return {{"c0_deviation", p.c0_deviation}, {"c_phi", p.c_phi},       {"c_phi_over_lambda", p.c_phi_over_lambda},
          {"c0_ok", p.c0_ok},               {"scale_ok", p.scale_ok}, {"c_phi_ok", p.c_phi_ok},
          {"phi0_euclidean", p.phi0_euclidean}};
}

json to_json(const SolveReport& r) {
  return {{"iterations", r.iterations},
          {"initial_residual", r.initial_residual},
          {"final_residual", r.final_residual},
          {"residual_reduction", r.final_residual > 0 ? r.initial_residual / r.final_residual : std::nan("")},
          {"initial_objective", r.initial_objective},
          {"final_objective", r.final_objective},
          {"gauge_term", r.gauge_term},
          {"history", r.history},
          {"step_kinds", r.step_kinds},
          {"converged", r.converged},
          {"stop_reason", r.stop_reason},
          {"boundary_mismatch", r.boundary_mismatch},
          {"decay", to_json(r.decay)},
          {"preconditions", to_json(r.preconditions)}};
}

json config_json(const SolverConfig& c) {
  return {{"theta", c.theta},
          {"p", c.p},
          {"delta0", c.delta0},
          {"lambda", c.lambda},
          {"gauge_penalty", c.gauge_penalty},
          {"tol", c.tol},
          {"max_iter", c.max_iter},
          {"r_in", c.r_in},
          {"r_out", c.r_out},
          {"mesh_points", c.mesh_points},
          {"samples", c.samples},
          {"R0", c.R0},
          {"C", c.C},
          {"decay_radii", c.decay_radii},
          {"decay_samples", c.decay_samples},
          {"decay_order", c.decay_order}};
}

Vec7 parse_point(const std::string& s) {
  Vec7 x = Vec7::Zero();
  if (s.empty()) return x;
  std::stringstream in(s);
  std::string tok;
  int i = 0;
  while (std::getline(in, tok, ',')) {
    if (i >= 7) throw InvalidInput("a point needs exactly 7 comma-separated coordinates");
    SolverConfig probe;
    probe.set("theta", tok);
    x[i++] = probe.theta;
  }
  if (i != 7) throw InvalidInput("a point needs exactly 7 comma-separated coordinates");
  return x;
}

/// Destination of the JSON artifact and the summary line.
class Output {
 public:
  Output(std::string path, std::ostream& out, std::ostream& err) : path_(std::move(path)), out_(out), err_(err) {}

  void emit(const json& j, const std::string& summary) const {
    if (path_.empty() || path_ == "-") {
      out_ << j.dump(2) << "\n";
      err_ << summary << "\n";
      return;
    }
    std::ofstream f(path_);
    if (!f) throw InvalidInput("cannot write '" + path_ + "'");
    f << j.dump(2) << "\n";
    out_ << summary << "\n";
  }

 private:
  std::string path_;
  std::ostream& out_;
  std::ostream& err_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

int suite_status(const SuiteReport& r) { return r.passed() ? kExitOk : kExitBestEffort; }

std::string suite_line(const SuiteReport& r, double secs) {
  return r.suite + ": " + (r.passed() ? "PASS" : "FAIL") + " (" + r.summary() + ") in " + fmt(secs) + " s";
}

// ---------------------------------------------------------------------------
// Commands

struct Common {
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_algebra_check(const Common& c, int trials, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const SuiteReport r = algebra_suite(c.seed, trials);
  json j = {{"command", "algebra-check"}, {"seed", c.seed}, {"trials", trials}, {"report", to_json(r)}};
  Output(c.out, out, err).emit(j, suite_line(r, seconds_since(t0)));
  return suite_status(r);
}

int cmd_g2_derive(const Common& c, const std::string& phi_source, double eps, const std::string& at, int suite_trials,
                  std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const PolyFormField field = resolve_phi(phi_source, eps);
  const Vec7 x = parse_point(at);
  const KForm phi = field(x);
  const G2Structure s = make_structure(phi);
  const double phi_norm_sq = wedge(phi, s.psi)[0] / std::sqrt(s.g.determinant());
  json j = {{"command", "g2-derive"},
            {"phi", phi_source},
            {"point", to_json(x)},
            {"g", to_json(s.g.entries())},
            {"psi", to_json(s.psi)},
            {"vol", s.vol[0]},
            {"nondegeneracy_margin", nondegeneracy_margin(phi)},
            {"phi_norm_sq", phi_norm_sq},
            {"psi_consistency", (s.psi - hodge(s.g, phi)).norm()}};
  int status = kExitOk;
  std::string line = "g2-derive: |phi|^2_g = " + fmt(phi_norm_sq) + ", margin " + fmt(nondegeneracy_margin(phi));
  if (suite_trials > 0) {
    const SuiteReport r = g2_derivation_suite(c.seed, suite_trials);
    j["report"] = to_json(r);
    status = suite_status(r);
    line += "; " + suite_line(r, seconds_since(t0));
  }
  Output(c.out, out, err).emit(j, line);
  return status;
}

int cmd_normalize(const Common& c, const std::string& phi_source, double eps, const std::string& at, int restarts,
                  double tol, int suite_trials, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  if (suite_trials > 0) {
    const SuiteReport r = normalization_suite(c.seed, suite_trials, restarts);
    json j = {{"command", "normalize"}, {"seed", c.seed}, {"trials", suite_trials}, {"report", to_json(r)}};
    Output(c.out, out, err).emit(j, suite_line(r, seconds_since(t0)));
    return suite_status(r);
  }
  const KForm phi = resolve_phi(phi_source, eps)(parse_point(at));
  NormalizeOptions opts;
  opts.restarts = restarts;
  opts.tol = tol;
  opts.seed = c.seed;
  const NormalizationResult r = normalize(phi, opts);
  json j = {{"command", "normalize"},        {"phi", phi_source},     {"seed", c.seed},
            {"L", to_json(r.L)},             {"residual", r.residual}, {"converged", r.converged},
            {"restarts_used", r.restarts_used}, {"iterations", r.iterations}};
  Output(c.out, out, err)
      .emit(j, std::string("normalize: ") + (r.converged ? "converged" : "not converged") + ", residual " +
                   fmt(r.residual) + " after " + std::to_string(r.restarts_used) + " restarts");
  return r.converged ? kExitOk : kExitBestEffort;
}

/// Sampled defect of a grid-backed connection at interior nodes.
DefectReport grid_defect(const std::string& path, const KForm& phi, int samples) {
  GridLieField a = read_grid_field_file(path);
  if (a.degree != 1) throw InvalidInput("connection file must hold a 1-form field");
  GridLieField sigma = GridLieField::sample(a.rank, 0, a.n, a.lo, a.hi, [&](const Vec7&) {
    return std::vector<LieMat>{LieMat::Zero(a.rank, a.rank)};
  });
  const GridFieldPair pair(std::move(a), std::move(sigma));
  const KForm psi = coassociative(phi);
  const int n = pair.a().n;
  std::vector<Vec7> nodes;
  std::array<int, 7> idx{};
  const std::size_t total = pair.a().node_count();
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    bool interior = true;
    for (int ax = 6; ax >= 0; --ax) {
      idx[ax] = static_cast<int>(rem % n);
      rem /= n;
      interior = interior && idx[ax] >= 1 && idx[ax] <= n - 2;
    }
    if (!interior) continue;
    const Vec7 x = pair.a().node_point(idx);
    if (x.norm() > 0) nodes.push_back(x);
  }
  if (nodes.empty()) throw InvalidInput("connection grid has no interior nodes");
  DefectReport rep;
  const std::size_t count = std::min<std::size_t>(nodes.size(), static_cast<std::size_t>(samples));
  for (std::size_t s = 0; s < count; ++s) {
    const Vec7& x = nodes[s * nodes.size() / count];
    const LieValuedKForm f = curvature(pair, x);
    const double d = wedge(f, psi).norm();
    rep.samples.push_back({x, preferred_chart(x), d, f.norm()});
    rep.defect = std::max(rep.defect, d);
  }
  return rep;
}

int cmd_instanton_check(const Common& c, const std::string& connection, const std::string& field_path, int rank,
                        const std::string& phi_source, double eps, int samples, double tol, std::ostream& out,
                        std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const KForm phi = resolve_phi(phi_source, eps)(Vec7::Zero());
  DefectReport rep;
  if (connection == "canonical") {
    rep = instanton_defect(ConeConnection(canonical_connection(6)), phi, samples);
  } else if (connection == "flat") {
    rep = instanton_defect(ConeConnection(flat_connection(rank)), phi, samples);
  } else if (connection == "file") {
    if (field_path.empty()) throw InvalidInput("--connection file needs --field <path>");
    rep = grid_defect(field_path, phi, samples);
  } else {
    throw InvalidInput("unknown connection '" + connection + "' (canonical, flat, file)");
  }
  json table = json::array();
  for (const auto& s : rep.samples)
    table.push_back({{"point", to_json(s.point)},
                     {"chart", chart_name(s.chart)},
                     {"defect", s.defect},
                     {"curvature_norm", s.curvature_norm}});
  const bool ok = rep.defect <= tol;
  json j = {{"command", "instanton-check"}, {"connection", connection}, {"phi", phi_source},
            {"samples", samples},           {"tolerance", tol},        {"defect", rep.defect},
            {"passed", ok},                 {"points", table}};
  Output(c.out, out, err)
      .emit(j, "instanton-check: " + std::string(ok ? "PASS" : "FAIL") + " defect " + fmt(rep.defect) + " over " +
                   std::to_string(rep.samples.size()) + " points in " + fmt(seconds_since(t0)) + " s");
  return ok ? kExitOk : kExitBestEffort;
}

int cmd_rescale_check(const Common& c, const std::string& phi_source, double eps, const RescaleSuiteOptions& opts,
                      std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const PolyFormField phi = resolve_phi(phi_source, eps);
  C5Report c5;
  CovarianceReport cov;
  SuiteReport r;
  try {
    r = rescale_suite(phi, opts, c.seed, &c5, &cov);
  } catch (const InconsistencyError& e) {
    err << "rescale-check: deviation ladder violated: " << e.what() << "\n";
    return kExitBestEffort;
  }
  json table = json::array();
  for (const auto& s : cov.samples)
    table.push_back({{"y", to_json(s.y)}, {"big", s.big}, {"small", s.small}, {"rel_error", s.rel_error}});
  json j = {{"command", "rescale-check"},
            {"phi", phi_source},
            {"seed", c.seed},
            {"c5", to_json(c5)},
            {"covariance", {{"max_rel_error", cov.max_rel_error}, {"points", table}}},
            {"report", to_json(r)}};
  Output(c.out, out, err).emit(j, suite_line(r, seconds_since(t0)));
  return suite_status(r);
}

int cmd_solve(const std::string& config, const std::vector<std::string>& overrides, const std::string& out_dir,
              const std::string& prefix, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  auto kv = config.empty() ? std::map<std::string, std::string>{} : parse_key_values_file(config);
  for (const auto& o : overrides) {
    std::istringstream line(o);
    for (const auto& [k, v] : parse_key_values(line)) kv[k] = v;
  }
  SolveSetup s = make_solve_setup(kv);
  SolveResult res;
  try {
    res = solve_monopole(s.phi, s.ansatz, s.cfg, s.init_profiles, s.target ? &*s.target : nullptr);
  } catch (const PreconditionError& e) {
    err << "solve: precondition failed: " << e.what() << "\n";
    return kExitInvalid;
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path base(out_dir);
  json j = {{"command", "solve"},
            {"config", config_json(s.cfg)},
            {"phi", s.phi_source},
            {"eps", s.eps},
            {"model", s.model},
            {"templates", s.ansatz->template_names},
            {"manufactured", s.manufactured},
            {"report", to_json(res.report)}};
  if (s.target) j["profile_error"] = profile_error(res.profiles, *s.target);
  {
    std::ofstream f(base / (prefix + "_profiles.csv"));
    if (!f) throw InvalidInput("cannot write profiles under '" + out_dir + "'");
    write_profiles_csv(f, res.profiles);
  }
  {
    std::ofstream f(base / (prefix + "_decay.csv"));
    if (!f) throw InvalidInput("cannot write decay table under '" + out_dir + "'");
    write_decay_csv(f, res.decay_table);
  }
  const SolveReport& r = res.report;
  Output((base / (prefix + "_report.json")).string(), out, err)
      .emit(j, "solve: " + std::string(r.converged ? "converged" : "best effort") + " (" + r.stop_reason + "), " +
                   std::to_string(r.iterations) + " iterations, residual " + fmt(r.initial_residual) + " -> " +
                   fmt(r.final_residual) + ", decay slope " + fmt(r.decay.slope) + ", " +
                   fmt(seconds_since(t0)) + " s");
  return r.converged ? kExitOk : kExitBestEffort;
}

int cmd_decay_fit(const Common& c, const std::string& table_path, double theta, std::ostream& out,
                  std::ostream& err) {
  std::ifstream in(table_path);
  if (!in) throw InvalidInput("cannot open decay table '" + table_path + "'");
  const DecayTable t = read_decay_csv(in);
  const DecayFit f = fit_decay_rate(t, theta);
  json j = {{"command", "decay-fit"}, {"table", table_path}, {"theta", theta}, {"fit", to_json(f)}};
  const bool ok = f.status == DecayStatus::Ok && f.meets_contract;
  Output(c.out, out, err)
      .emit(j, "decay-fit: slope " + fmt(f.slope) + " (" + decay_status_name(f.status) + "), contract " +
                   (f.meets_contract ? "met" : "not met"));
  return ok ? kExitOk : kExitBestEffort;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"g2lab: G2-monopole toolkit"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Seed for random suites")->capture_default_str();
    sub->add_option("--out", common.out, "JSON output path ('-' for stdout)");
  };

  int trials = 200;
  auto* algebra = app.add_subcommand("algebra-check", "Exterior-algebra and Hodge invariants on random inputs");
  add_common(algebra);
  algebra->add_option("--trials", trials, "Random trials")->capture_default_str()->check(CLI::PositiveNumber);

  std::string phi_source = "euclidean", at;
  double eps = 0.1;
  int suite_trials = 0;
  auto* derive = app.add_subcommand("g2-derive", "Metric, psi and volume form of a G2 3-form");
  add_common(derive);
  derive->add_option("--phi", phi_source, "Shipped structure name or form file")->capture_default_str();
  derive->add_option("--eps", eps, "Perturbation size of shipped families")->capture_default_str();
  derive->add_option("--at", at, "Point x1,..,x7 at which to evaluate a field (default origin)");
  derive->add_option("--suite", suite_trials, "Also run the derivation suite with this many trials");

  int restarts = 16;
  double ntol = 1e-8;
  auto* norm = app.add_subcommand("normalize", "Find L with L^* phi = phi0");
  add_common(norm);
  norm->add_option("--phi", phi_source, "Shipped structure name or form file")->capture_default_str();
  norm->add_option("--eps", eps, "Perturbation size of shipped families")->capture_default_str();
  norm->add_option("--at", at, "Point x1,..,x7 at which to evaluate a field (default origin)");
  norm->add_option("--restarts", restarts, "Random restarts")->capture_default_str();
  norm->add_option("--tol", ntol, "Residual tolerance")->capture_default_str();
  norm->add_option("--suite", suite_trials, "Run the round-trip suite with this many random M instead");

  std::string connection = "canonical", field_path;
  int rank = 6, samples = 200;
  double dtol = 1e-6;
  auto* inst = app.add_subcommand("instanton-check", "Instanton defect |F ^ psi| of a connection");
  add_common(inst);
  inst->add_option("--connection", connection, "canonical | flat | file")->capture_default_str();
  inst->add_option("--field", field_path, "Binary grid 1-form for --connection file");
  inst->add_option("--rank", rank, "Rank of the flat connection")->capture_default_str();
  inst->add_option("--phi", phi_source, "Shipped structure name or form file")->capture_default_str();
  inst->add_option("--eps", eps, "Perturbation size of shipped families")->capture_default_str();
  inst->add_option("--samples", samples, "Sample points")->capture_default_str()->check(CLI::PositiveNumber);
  inst->add_option("--tol", dtol, "Pass threshold")->capture_default_str();

  RescaleSuiteOptions ropts;
  auto* resc = app.add_subcommand("rescale-check", "Deviation ladder and residual covariance under rescaling");
  add_common(resc);
  resc->add_option("--phi", phi_source, "Shipped structure name or polyform file")->capture_default_str();
  resc->add_option("--eps", eps, "Perturbation size of shipped families")->capture_default_str();
  resc->add_option("--lambda", ropts.lambda, "Scale")->capture_default_str()->check(CLI::PositiveNumber);
  resc->add_option("--C", ropts.C, "Universal constant in c_phi")->capture_default_str()->check(CLI::PositiveNumber);
  resc->add_option("--points", ropts.points, "Covariance sample points")->capture_default_str();
  resc->add_option("--grid-points", ropts.grid_points, "Sup-norm grid size for degree > 2")->capture_default_str();

  std::string config, out_dir = ".", prefix = "solve";
  std::vector<std::string> overrides;
  auto* solve = app.add_subcommand("solve", "Least-squares monopole solve on the annulus");
  solve->add_option("--config", config, "key=value config file");
  solve->add_option("--set", overrides, "Extra key=value pairs (override the file)");
  solve->add_option("--out-dir", out_dir, "Directory for report, profiles and decay table")->capture_default_str();
  solve->add_option("--prefix", prefix, "Artifact file prefix")->capture_default_str();

  std::string table_path;
  double theta = 0.5;
  auto* fit = app.add_subcommand("decay-fit", "Fit the decay exponent of a decay table");
  add_common(fit);
  fit->add_option("--table", table_path, "Decay CSV (r,l,coord_sup,cov_sup)")->required();
  fit->add_option("--theta", theta, "Decay parameter theta")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*algebra) return cmd_algebra_check(common, trials, out, err);
    if (*derive) return cmd_g2_derive(common, phi_source, eps, at, suite_trials, out, err);
    if (*norm) return cmd_normalize(common, phi_source, eps, at, restarts, ntol, suite_trials, out, err);
    if (*inst) return cmd_instanton_check(common, connection, field_path, rank, phi_source, eps, samples, dtol, out, err);
    if (*resc) return cmd_rescale_check(common, phi_source, eps, ropts, out, err);
    if (*solve) return cmd_solve(config, overrides, out_dir, prefix, out, err);
    if (*fit) return cmd_decay_fit(common, table_path, theta, out, err);
  } catch (const DegenerateStructure& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace g2lab
