#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "netbench/regress.hpp"

namespace netbench::runner {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(const std::string& bytes);

struct RunOptions {
  std::filesystem::path output_dir = "out";
  std::optional<std::uint64_t> seed;  // overrides the config's seed / root seed
  int jobs = 1;
};

// Each run writes its artifacts plus manifest.json into output_dir and returns
// the manifest. A manifest path given as the config re-runs that manifest.

/// `config` is a simulation config file, a bundled config name or a manifest.
/// Writes dataset_<k>.csv (destructive) or cell_<k>.csv (longitudinal) with
/// provenance sidecars.
json run_simulate(const std::string& config, const RunOptions& options);

/// `spec` is an experiment spec file, a bundled experiment name or a manifest.
json run_experiment(const std::string& spec, const RunOptions& options);

/// Pools the datasets, scores edges and writes edge_scores.json, plus
/// graph.json when `epsilon` is given.
json run_infer(const std::vector<std::filesystem::path>& datasets, const regression::SchemeConfig& scheme,
               std::optional<double> epsilon, const RunOptions& options);

/// Scores against a truth network (graph file, model file or bundled model
/// name). Writes roc.csv and evaluation.json.
json run_evaluate(const std::filesystem::path& scores, const std::string& truth, bool include_self_edges,
                  const RunOptions& options);

struct ValidationIssue {
  std::string field;
  std::string code;
  std::string message;
};

/// Parses and checks any configuration file without running it. An empty
/// list means the file is valid.
std::vector<ValidationIssue> validate_file(const std::string& config);
json to_json(const std::vector<ValidationIssue>& issues);

/// Resolves a bundled name ("cantone-like", "even_vs_uneven") under a data
/// subdirectory, or returns the argument as a path.
std::filesystem::path resolve_config(const std::string& reference, const char* subdir);

}  // namespace netbench::runner
