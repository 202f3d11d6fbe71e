#include "g2lab/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace g2lab;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "g2lab_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("g2lab_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("key=value parsing") {
  std::istringstream in("# comment\n theta = 0.4 \n\nmesh_points=64 # trailing\n");
  const auto kv = parse_key_values(in);
  CHECK(kv.size() == 2);
  CHECK(kv.at("theta") == "0.4");
  CHECK(kv.at("mesh_points") == "64");
  std::istringstream dup("a=1\na=2\n");
  CHECK_THROWS_AS(parse_key_values(dup), InvalidInput);
  std::istringstream noeq("just a line\n");
  CHECK_THROWS_AS(parse_key_values(noeq), InvalidInput);
}

TEST_CASE("solve setup") {
  CHECK_THROWS_AS(make_solve_setup({{"foo", "1"}}), InvalidInput);
  CHECK_THROWS_AS(make_solve_setup({{"model", "nope"}}), InvalidInput);
  CHECK_THROWS_AS(make_solve_setup({{"phi", "no-such-structure"}}), InvalidInput);
  CHECK_THROWS_AS(make_solve_setup({{"theta", "2"}}), InvalidInput);
  const SolveSetup s = make_solve_setup({{"phi", "linear-perturb"}, {"c0_target", "0.02"}});
  CHECK(s.eps == doctest::Approx(0.08));
  CHECK(s.init_profiles.templates() == 2);
  const SolveSetup m = make_solve_setup({{"model", "abelian"}, {"manufactured", "true"}});
  CHECK(m.target.has_value());
  CHECK_THROWS_AS(make_solve_setup({{"manufactured", "true"}}), InvalidInput);
}

TEST_CASE("algebra-check succeeds and is deterministic") {
  const Run a = run({"algebra-check", "--seed", "7", "--trials", "20"});
  const Run b = run({"algebra-check", "--seed", "7", "--trials", "20"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["report"]["passed"] == true);
  CHECK(a.err.find("algebra: PASS") != std::string::npos);
}

TEST_CASE("g2-derive reports the identity metric and the pinned psi") {
  const Run r = run({"g2-derive", "--phi", "euclidean"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 7; ++k) CHECK(j["g"][i][k].get<double>() == doctest::Approx(i == k ? 1.0 : 0.0));
  CHECK(j["psi"]["terms"].size() == 7);
  CHECK(j["phi_norm_sq"].get<double>() == doctest::Approx(7.0));
  bool found = false;
  for (const auto& t : j["psi"]["terms"])
    if (t["indices"] == std::vector<int>{4, 5, 6, 7}) found = t["value"].get<double>() == 1.0;
  CHECK(found);

  const fs::path d = scratch_dir("degenerate");
  std::ofstream(d / "bad.form") << "degree 3\n1 2 3 1.0\n";
  CHECK(run({"g2-derive", "--phi", (d / "bad.form").string()}).code == 1);
}

TEST_CASE("normalize, instanton and rescale commands") {
  CHECK(run({"normalize", "--phi", "linear-perturb", "--at", "0.1,0.2,0,0,0,0,0"}).code == 0);
  CHECK(run({"normalize", "--at", "1,2"}).code == 1);
  CHECK(run({"instanton-check", "--samples", "20"}).code == 0);
  CHECK(run({"instanton-check", "--connection", "wrong"}).code == 1);
  CHECK(run({"instanton-check", "--connection", "file"}).code == 1);

  const Run rs = run({"rescale-check", "--phi", "linear-perturb", "--lambda", "16", "--points", "50"});
  CHECK(rs.code == 0);
  const auto j = nlohmann::json::parse(rs.out);
  for (const auto& m : j["c5"]["margin"]) CHECK(m.get<double>() > 0.0);
  CHECK(j["covariance"]["max_rel_error"].get<double>() <= 1e-9);
}

TEST_CASE("solve and decay-fit write artifacts with the documented exit codes") {
  const fs::path d = scratch_dir("solve");
  std::ofstream(d / "man.cfg") << "model = abelian\nmanufactured = true\nmesh_points = 32\nsamples = 8\n"
                                  "decay_samples = 4\ndecay_order = 1\n";
  const Run r = run({"solve", "--config", (d / "man.cfg").string(), "--out-dir", d.string(), "--prefix", "m"});
  CHECK(r.code == 0);
  CHECK(r.out.find("solve: converged") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(d / "m_report.json"));
  CHECK(report["profile_error"].get<double>() <= 1e-6);
  CHECK(slurp(d / "m_profiles.csv").rfind("r,f,u\n", 0) == 0);
  CHECK(slurp(d / "m_decay.csv").rfind("r,l,coord_sup,cov_sup\n", 0) == 0);

  const Run again = run({"solve", "--config", (d / "man.cfg").string(), "--out-dir", d.string(), "--prefix", "m2"});
  CHECK(again.code == 0);
  CHECK(slurp(d / "m_report.json") == slurp(d / "m2_report.json"));
  CHECK(slurp(d / "m_profiles.csv") == slurp(d / "m2_profiles.csv"));

  const Run fit = run({"decay-fit", "--table", (d / "m_decay.csv").string()});
  CHECK(fit.code == 0);

  CHECK(run({"solve", "--set", "unknown_key=3"}).code == 1);
  CHECK(run({"solve", "--set", "phi=linear-perturb", "--set", "eps=1", "--out-dir", d.string()}).code == 1);
  const Run best = run({"solve", "--config", (d / "man.cfg").string(), "--set", "max_iter=0", "--out-dir",
                        d.string(), "--prefix", "b"});
  CHECK(best.code == 2);

  std::ofstream(d / "zero.csv") << "r,l,coord_sup,cov_sup\n0.01,0,0,0\n0.02,0,0,0\n0.05,0,0,0\n0.1,0,0,0\n";
  const Run zero = run({"decay-fit", "--table", (d / "zero.csv").string()});
  CHECK(zero.code == 2);
  CHECK(nlohmann::json::parse(zero.out)["fit"]["status"] == "zero-field");
  std::ofstream(d / "few.csv") << "r,l,coord_sup,cov_sup\n0.01,0,1,1\n0.1,0,1,1\n";
  CHECK(run({"decay-fit", "--table", (d / "few.csv").string()}).code == 1);
}

TEST_CASE("argument errors exit with status 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"no-such-command"}).code == 1);
  CHECK(run({"algebra-check", "--trials", "-3"}).code == 1);
  CHECK(run({"decay-fit"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}
