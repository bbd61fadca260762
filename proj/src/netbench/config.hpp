#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "netbench/dynamics.hpp"
#include "netbench/evaluate.hpp"
#include "netbench/network.hpp"
#include "netbench/regress.hpp"
#include "netbench/select.hpp"
#include "netbench/simulate.hpp"

namespace netbench::config {

using nlohmann::json;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Pretty-printed JSON with a trailing newline.
std::string dump(const json& j);

/// Directory holding bundled models, configs and experiment specs.
/// NETBENCH_DATA_DIR overrides the compiled-in location.
std::filesystem::path data_dir();

// Models.
dynamics::DynamicalModel parse_model(const json& spec);
json to_json(const dynamics::DynamicalModel& model);
/// A bundled model name (e.g. "cantone-like") or a path to a model file,
/// resolved relative to `base_dir`.
dynamics::DynamicalModel load_model(const std::string& reference, const std::filesystem::path& base_dir = {});
/// `model` key of a config: inline object, bundled name or path.
dynamics::DynamicalModel model_from_value(const json& value, const std::filesystem::path& base_dir);

// Simulation configs.
simulation::SimulationConfig parse_simulation(const json& spec, int num_vars);
json to_json(const simulation::SimulationConfig& config);
/// Sampling times: a list, or {"start", "stop", "intervals"} for an even grid.
std::vector<double> parse_times(const json& value, const std::string& field);

struct SimulateRequest {
  dynamics::DynamicalModel model;
  simulation::SimulationConfig simulation;
  int num_datasets = 1;
};

SimulateRequest parse_simulate_request(const json& spec, const std::filesystem::path& base_dir);
json to_json(const SimulateRequest& request);

// Schemes.
regression::SchemeConfig parse_scheme(const json& spec, const std::string& field);
json to_json(const regression::SchemeConfig& scheme);

// Experiments. A spec with a "regimes" object runs once per regime
// (overriding sampling_times) and compares the first two.
struct Regime {
  std::string name;
  std::vector<double> sampling_times;
};

struct ExperimentRequest {
  evaluation::ExperimentSpec spec;
  std::vector<Regime> regimes;
  int bootstrap_resamples = 2000;
  double confidence_level = 0.9;
};

ExperimentRequest parse_experiment_request(const json& spec, const std::filesystem::path& base_dir);
json to_json(const ExperimentRequest& request);

// Datasets: CSV with header time,x1..xP plus a provenance sidecar.
void write_dataset_csv(const simulation::Dataset& dataset, const std::filesystem::path& path);
std::string dataset_csv(const simulation::Dataset& dataset);
simulation::Dataset read_dataset_csv(const std::filesystem::path& path);
std::filesystem::path provenance_path(const std::filesystem::path& csv_path);

// Edge scores and graphs.
json to_json(const selection::EdgeScores& scores);
selection::EdgeScores parse_edge_scores(const json& spec);
json to_json(const Network& network);
/// A graph file written by `infer`, or any model config (its true network).
Network load_network(const std::string& reference, const std::filesystem::path& base_dir = {});

/// Kind of configuration tree: "model", "simulation", "experiment", "manifest",
/// "edge_scores" or "graph".
std::string classify(const json& spec);

}  // namespace netbench::config
