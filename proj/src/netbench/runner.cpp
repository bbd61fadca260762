#include "netbench/runner.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "netbench/config.hpp"
#include "netbench/error.hpp"
#include "netbench/evaluate.hpp"
#include "netbench/rng.hpp"
#include "netbench/select.hpp"

namespace netbench::runner {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::io, "SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

fs::path resolve_config(const std::string& reference, const char* subdir) {
  const fs::path p(reference);
  if (fs::exists(p)) return p;
  if (reference.find('/') == std::string::npos && !reference.ends_with(".json")) {
    const fs::path bundled = config::data_dir() / subdir / (reference + ".json");
    if (fs::exists(bundled)) return bundled;
  }
  throw Error(ErrorCode::io, "no such config '" + reference + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json artifact_list(const fs::path& dir, std::vector<fs::path> paths) {
  std::sort(paths.begin(), paths.end());
  json out = json::array();
  for (const auto& rel : paths) {
    const std::string bytes = read_bytes(dir / rel);
    out.push_back({{"path", rel.generic_string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  return out;
}

json write_manifest(const std::string& command, const json& canonical, std::uint64_t seed, const RunOptions& opt,
                    const std::vector<fs::path>& artifacts, Clock::time_point start) {
  json m;
  m["manifest_version"] = 1;
  m["tool"] = "netbench";
  m["version"] = kVersion;
  m["command"] = command;
  m["canonical_config"] = canonical;
  m["root_seed"] = seed;
  m["jobs"] = opt.jobs;
  m["artifacts"] = artifact_list(opt.output_dir, artifacts);
  m["timings"] = {{"wall_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
  config::write_text_file(opt.output_dir / "manifest.json", config::dump(m));
  return m;
}

// Returns the config tree and the directory relative references resolve against.
std::pair<json, fs::path> load_request(const std::string& reference, const char* subdir, const char* command) {
  const fs::path path = resolve_config(reference, subdir);
  json spec = config::read_json_file(path);
  if (config::classify(spec) == "manifest") {
    if (spec.value("command", "") != command)
      throw Error(ErrorCode::usage, "manifest was written by '" + spec.value("command", "?") + "', not " + command);
    spec = spec.at("canonical_config");
  }
  return {spec, path.parent_path()};
}

}  // namespace

json run_simulate(const std::string& reference, const RunOptions& opt) {
  const auto start = Clock::now();
  auto [spec, base] = load_request(reference, "configs", "simulate");
  config::SimulateRequest req = config::parse_simulate_request(spec, base);
  if (opt.seed) req.simulation.seed = *opt.seed;
  const std::uint64_t seed = req.simulation.seed;

  std::vector<simulation::Dataset> datasets;
  std::string stem = "dataset_";
  if (req.simulation.mode == simulation::SamplingMode::longitudinal) {
    datasets = simulation::simulate_longitudinal(req.model, req.simulation, req.num_datasets, opt.jobs);
    stem = "cell_";
  } else {
    for (int k = 0; k < req.num_datasets; ++k) {
      simulation::SimulationConfig c = req.simulation;
      c.seed = evaluation::replicate_seed(seed, k);
      datasets.push_back(simulation::simulate_aggregate(req.model, c, opt.jobs));
    }
  }
  std::vector<fs::path> written;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const fs::path rel = stem + std::to_string(k + 1) + ".csv";
    config::write_dataset_csv(datasets[k], opt.output_dir / rel);
    written.push_back(rel);
    written.push_back(config::provenance_path(rel));
  }
  return write_manifest("simulate", config::to_json(req), seed, opt, written, start);
}

json run_experiment(const std::string& reference, const RunOptions& opt) {
  const auto start = Clock::now();
  auto [spec, base] = load_request(reference, "experiments", "experiment");
  config::ExperimentRequest req = config::parse_experiment_request(spec, base);
  if (opt.seed) req.spec.root_seed = *opt.seed;

  std::vector<fs::path> written;
  auto emit = [&](const evaluation::ExperimentResult& result, const fs::path& rel) {
    for (auto& p : evaluation::write_aur_summary(result, opt.output_dir, rel)) written.push_back(p);
    for (auto& p : evaluation::write_cell_artifacts(result, opt.output_dir, rel)) written.push_back(p);
  };
  if (req.regimes.empty()) {
    emit(evaluation::run_experiment(req.spec, opt.jobs), "");
  } else {
    std::vector<evaluation::ExperimentResult> results;
    for (const auto& regime : req.regimes) {
      evaluation::ExperimentSpec s = req.spec;
      s.simulation.sampling_times = regime.sampling_times;
      s.name = regime.name;
      results.push_back(evaluation::run_experiment(s, opt.jobs));
      emit(results.back(), regime.name);
    }
    const auto cmp = evaluation::compare_results(results[0], results[1], req.bootstrap_resamples,
                                                 req.confidence_level, req.spec.root_seed);
    for (auto& p : evaluation::write_regime_comparison(cmp, opt.output_dir, "")) written.push_back(p);
  }
  return write_manifest("experiment", config::to_json(req), req.spec.root_seed, opt, written, start);
}

json run_infer(const std::vector<fs::path>& paths, const regression::SchemeConfig& scheme,
               std::optional<double> epsilon, const RunOptions& opt) {
  const auto start = Clock::now();
  if (paths.empty()) throw Error(ErrorCode::usage, "no dataset given");
  std::vector<simulation::Dataset> datasets;
  for (const auto& p : paths) datasets.push_back(config::read_dataset_csv(p));
  const int P = datasets.front().num_vars();
  for (const auto& d : datasets)
    if (d.num_vars() != P) throw Error(ErrorCode::usage, "pooled datasets have different variable counts");
  regression::SchemeConfig sc = scheme;
  if (epsilon) sc.epsilon = *epsilon;
  try {
    regression::validate(sc, P);
  } catch (const Error& e) {
    throw Error(ErrorCode::usage, e.what(), e.field());
  }
  const selection::EdgeScores scores = selection::infer(datasets, sc);

  std::vector<fs::path> written{"edge_scores.json"};
  json j = config::to_json(scores);
  j["scheme"] = sc.id();
  config::write_text_file(opt.output_dir / written.back(), config::dump(j));
  if (epsilon) {
    json g = config::to_json(selection::threshold_graph(scores, *epsilon));
    g["epsilon"] = *epsilon;
    written.emplace_back("graph.json");
    config::write_text_file(opt.output_dir / written.back(), config::dump(g));
  }
  json canonical;
  canonical["datasets"] = json::array();
  for (const auto& p : paths) canonical["datasets"].push_back(p.generic_string());
  canonical["scheme"] = config::to_json(sc);
  canonical["epsilon"] = epsilon ? json(*epsilon) : json(nullptr);
  return write_manifest("infer", canonical, 0, opt, written, start);
}

json run_evaluate(const fs::path& scores_path, const std::string& truth, bool include_self, const RunOptions& opt) {
  const auto start = Clock::now();
  const selection::EdgeScores scores = config::parse_edge_scores(config::read_json_file(scores_path));
  const Network net = config::load_network(truth);
  const evaluation::RocResult roc = evaluation::roc_auc(scores, net, include_self);
  std::vector<fs::path> written{"roc.csv", "evaluation.json"};
  evaluation::write_roc_csv(roc, opt.output_dir / written[0]);
  const json summary = {{"aur", roc.aur},
                        {"num_true_edges", roc.num_true_edges},
                        {"num_false_edges", roc.num_false_edges},
                        {"include_self_edges", include_self}};
  config::write_text_file(opt.output_dir / written[1], config::dump(summary));
  json canonical = {{"scores", scores_path.generic_string()}, {"truth", truth}, {"include_self_edges", include_self}};
  json m = write_manifest("evaluate", canonical, 0, opt, written, start);
  m["result"] = summary;
  return m;
}

std::vector<ValidationIssue> validate_file(const std::string& reference) {
  std::vector<ValidationIssue> issues;
  try {
    fs::path path(reference);
    if (!fs::exists(path)) {
      for (const char* sub : {"configs", "experiments", "models"}) {
        const fs::path b = config::data_dir() / sub / (reference + ".json");
        if (reference.find('/') == std::string::npos && fs::exists(b)) {
          path = b;
          break;
        }
      }
    }
    json spec = config::read_json_file(path);
    const fs::path base = path.parent_path();
    std::string kind = config::classify(spec);
    if (kind == "manifest") {
      const std::string command = spec.value("command", "");
      spec = spec.at("canonical_config");
      kind = command == "simulate" ? "simulation" : command == "experiment" ? "experiment" : "other";
    }
    if (kind == "model") config::parse_model(spec);
    else if (kind == "simulation") config::parse_simulate_request(spec, base);
    else if (kind == "experiment") config::parse_experiment_request(spec, base);
    else if (kind == "edge_scores") config::parse_edge_scores(spec);
    else if (kind == "graph") config::load_network(path.string());
  } catch (const Error& e) {
    issues.push_back({e.field(), to_string(e.code()), e.what()});
  } catch (const json::exception& e) {
    issues.push_back({"", "schema", e.what()});
  }
  return issues;
}

json to_json(const std::vector<ValidationIssue>& issues) {
  json out = json::array();
  for (const auto& i : issues) out.push_back({{"field", i.field}, {"code", i.code}, {"message", i.message}});
  return {{"valid", issues.empty()}, {"errors", out}};
}

}  // namespace netbench::runner
