// Drives the installed command-line tool as a subprocess.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int exit_code;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "netbench_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
  const std::string cmd = std::string("NETBENCH_DATA_DIR='") + NETBENCH_DATA + "' '" + NETBENCH_CLI + "' " + args +
                          " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string dir(const std::string& name) { return (work_dir() / name).string(); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

int columns(const std::string& line) { return static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1; }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Every regular file except the manifest, relative to root.
std::set<std::string> artifact_files(const fs::path& root) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out.insert(fs::relative(e.path(), root).generic_string());
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run("").exit_code == 1);
  CHECK(run("frobnicate").exit_code == 1);
  CHECK(run("simulate").exit_code == 1);
  const auto r = run("infer --selector bayes");
  CHECK(r.exit_code == 1);
}

TEST_CASE("simulate bundled configs") {
  const auto r = run("simulate cantone-like --output-dir " + dir("sim_c"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("manifest.json") != std::string::npos);
  const auto c = lines(slurp(fs::path(dir("sim_c")) / "dataset_1.csv"));
  REQUIRE(c.size() == 22);
  CHECK(c[0] == "time,x1,x2,x3,x4,x5");
  CHECK(columns(c[1]) == 6);
  CHECK(c.back().starts_with("280,"));

  REQUIRE(run("simulate swat-like --output-dir " + dir("sim_s")).exit_code == 0);
  const auto s = lines(slurp(fs::path(dir("sim_s")) / "dataset_1.csv"));
  REQUIRE(s.size() == 22);
  CHECK(columns(s[1]) == 10);
  CHECK(s.back().starts_with("100,"));
}

TEST_CASE("seed overrides are reproducible") {
  REQUIRE(run("--seed 5 simulate cantone-like --output-dir " + dir("seed_a")).exit_code == 0);
  REQUIRE(run("simulate cantone-like --seed 5 --jobs 3 --output-dir " + dir("seed_b")).exit_code == 0);
  REQUIRE(run("simulate cantone-like --seed 6 --output-dir " + dir("seed_c")).exit_code == 0);
  const std::string a = slurp(fs::path(dir("seed_a")) / "dataset_1.csv");
  CHECK(a == slurp(fs::path(dir("seed_b")) / "dataset_1.csv"));
  CHECK(a != slurp(fs::path(dir("seed_c")) / "dataset_1.csv"));
}

TEST_CASE("manifests list every artifact and re-run bit-identically") {
  REQUIRE(run("simulate cantone-like --output-dir " + dir("man_a")).exit_code == 0);
  const json m = json::parse(slurp(fs::path(dir("man_a")) / "manifest.json"));
  CHECK(m["command"] == "simulate");
  CHECK(m["tool"] == "netbench");
  std::set<std::string> listed;
  for (const auto& a : m["artifacts"]) {
    listed.insert(a["path"].get<std::string>());
    CHECK(a["sha256"].get<std::string>().size() == 64);
  }
  CHECK(listed == artifact_files(dir("man_a")));

  const std::string manifest = (fs::path(dir("man_a")) / "manifest.json").string();
  REQUIRE(run("simulate " + manifest + " --output-dir " + dir("man_b")).exit_code == 0);
  for (const auto& f : listed) CHECK(slurp(fs::path(dir("man_a")) / f) == slurp(fs::path(dir("man_b")) / f));
  // A manifest from another command is rejected.
  CHECK(run("experiment " + manifest + " --output-dir " + dir("man_c")).exit_code == 1);
}

TEST_CASE("infer and evaluate") {
  REQUIRE(run("simulate cantone-like --output-dir " + dir("inf_sim")).exit_code == 0);
  const std::string csv = (fs::path(dir("inf_sim")) / "dataset_1.csv").string();

  const auto r = run("infer " + csv + " --selector bayes --design standard --variance a0 --dmax 2 --epsilon 0.5 "
                     "--output-dir " + dir("inf_a"));
  REQUIRE(r.exit_code == 0);
  const json scores = json::parse(slurp(fs::path(dir("inf_a")) / "edge_scores.json"));
  CHECK(scores["num_vars"] == 5);
  REQUIRE(scores["scores"].size() == 5);
  for (const auto& row : scores["scores"]) CHECK(row.size() == 5);
  CHECK(scores["scheme"] == "bayes-standard-nolag-a0");
  CHECK(fs::exists(fs::path(dir("inf_a")) / "graph.json"));

  const auto v = run("infer " + csv + " --variance var --selector aicc --output-dir " + dir("inf_b"));
  REQUIRE(v.exit_code == 0);
  const json vs = json::parse(slurp(fs::path(dir("inf_b")) / "edge_scores.json"));
  CHECK(vs["scheme"] == "aicc-standard-nolag-var");
  CHECK(vs["semantics"] == "akaike_weight");
  CHECK(!fs::exists(fs::path(dir("inf_b")) / "graph.json"));

  const auto bad = run("infer " + csv + " --dmax 6 --output-dir " + dir("inf_c"));
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.starts_with("error: usage: d_max:"));
  CHECK(run("infer " + csv + " --lag 30 --output-dir " + dir("inf_d")).exit_code == 2);
  CHECK(run("infer " + csv + " --lag 28 --output-dir " + dir("inf_d")).exit_code == 0);

  const std::string sc = (fs::path(dir("inf_a")) / "edge_scores.json").string();
  const auto e = run("evaluate " + sc + " --truth cantone-like --output-dir " + dir("eval"));
  REQUIRE(e.exit_code == 0);
  const json ev = json::parse(slurp(fs::path(dir("eval")) / "evaluation.json"));
  CHECK(ev["aur"].get<double>() >= 0.0);
  CHECK(ev["num_true_edges"].get<int>() + ev["num_false_edges"].get<int>() == 20);
  const auto roc = lines(slurp(fs::path(dir("eval")) / "roc.csv"));
  CHECK(roc[0] == "threshold,fpr,tpr");
  CHECK(roc.back().ends_with(",1,1"));
  const auto self = run("evaluate " + sc + " --truth cantone-like --include-self --output-dir " + dir("eval_s"));
  REQUIRE(self.exit_code == 0);
  CHECK(json::parse(slurp(fs::path(dir("eval_s")) / "evaluation.json"))["num_false_edges"].get<int>() +
            json::parse(slurp(fs::path(dir("eval_s")) / "evaluation.json"))["num_true_edges"].get<int>() ==
        25);

  CHECK(run("infer " + dir("nope.csv") + " --output-dir " + dir("inf_e")).exit_code == 2);
}

TEST_CASE("validate") {
  const auto ok = run("validate cantone-like");
  CHECK(ok.exit_code == 0);
  CHECK(json::parse(ok.out)["errors"].empty());
  CHECK(run("validate even_vs_uneven").exit_code == 0);

  const fs::path model = work_dir() / "neg_lag.json";
  write(model, R"({"name": "neg", "num_vars": 1,
    "drift": [[{"kind": "linear", "coefficient": -0.1, "sources": [0], "lag_minutes": -3}]]})");
  const auto neg = run("validate " + model.string());
  CHECK(neg.exit_code == 1);
  const json nj = json::parse(neg.out);
  REQUIRE(nj["errors"].size() == 1);
  CHECK(nj["errors"][0]["field"] == "drift[0][0].lag_minutes");

  const fs::path sim = work_dir() / "bad_times.json";
  write(sim, R"({"model": "cantone-like",
    "simulation": {"sampling_times": [0, 20, 10, 30], "initial_mean": [1, 1, 1, 1, 1]}})");
  const auto times = run("validate " + sim.string());
  CHECK(times.exit_code == 1);
  const json tj = json::parse(times.out);
  REQUIRE(tj["errors"].size() == 1);
  CHECK(tj["errors"][0]["field"] == "simulation.sampling_times[2]");
}

TEST_CASE("bundled experiments") {
  REQUIRE(run("experiment consistency --output-dir " + dir("exp_cons")).exit_code == 0);
  const auto cons = lines(slurp(fs::path(dir("exp_cons")) / "aur_summary.csv"));
  REQUIRE(cons.size() == 2);
  CHECK(cons[0] == "scheme_id,selector,design,lagged,variance,rep_1,rep_2,rep_3,rep_4,rep_5,mean,sd");
  CHECK(cons[1].starts_with("bayes-standard-nolag-a0,"));

  REQUIRE(run("experiment interventions --output-dir " + dir("exp_int")).exit_code == 0);
  const json im = json::parse(slurp(fs::path(dir("exp_int")) / "manifest.json"));
  CHECK(im["canonical_config"]["kind"] == "interventions");
  CHECK(lines(slurp(fs::path(dir("exp_int")) / "aur_summary.csv")).size() == 9);
  CHECK(lines(slurp(fs::path(dir("exp_int")) / "failures.csv")).size() == 1);

  REQUIRE(run("experiment even_vs_uneven --jobs 2 --output-dir " + dir("exp_evu")).exit_code == 0);
  const fs::path evu = dir("exp_evu");
  CHECK(lines(slurp(evu / "even" / "aur_summary.csv")).size() == 33);
  CHECK(lines(slurp(evu / "uneven" / "aur_summary.csv")).size() == 33);
  const auto cmp = lines(slurp(evu / "regime_comparison.csv"));
  CHECK(cmp.size() == 33);
  CHECK(fs::exists(evu / "even" / "scores" / "bayes-standard-nolag-a0" / "rep_1.json"));
  CHECK(fs::exists(evu / "uneven" / "roc" / "aicc-quadratic-lag-var" / "rep_20.csv"));

  // Re-run the consistency experiment from its manifest.
  const std::string manifest = (fs::path(dir("exp_cons")) / "manifest.json").string();
  REQUIRE(run("experiment " + manifest + " --output-dir " + dir("exp_cons2")).exit_code == 0);
  for (const auto& f : artifact_files(dir("exp_cons")))
    CHECK(slurp(fs::path(dir("exp_cons")) / f) == slurp(fs::path(dir("exp_cons2")) / f));
}
