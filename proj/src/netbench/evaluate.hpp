#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "netbench/dynamics.hpp"
#include "netbench/network.hpp"
#include "netbench/regress.hpp"
#include "netbench/select.hpp"
#include "netbench/simulate.hpp"

namespace netbench::evaluation {

using selection::EdgeScores;

struct RocPoint {
  double threshold;  // predicted positive iff score >= threshold
  double fpr;
  double tpr;
};

struct RocResult {
  std::vector<RocPoint> points;  // from (0, 0) at +inf to (1, 1)
  double aur = 0.0;
  int num_true_edges = 0;
  int num_false_edges = 0;
};

/// ROC over evaluable entries (diagonal excluded unless requested); AUR is
/// the Mann-Whitney statistic with ties counted one half.
RocResult roc_auc(const EdgeScores& scores, const Network& truth, bool include_self_edges = false);

enum class ExperimentKind {
  aggregate,      // one destructive-sampling dataset per replicate
  longitudinal,   // num_longitudinal single-cell datasets pooled per replicate
  interventions,  // one aggregate dataset per clamped variable, pooled
};

const char* to_string(ExperimentKind kind) noexcept;

struct ExperimentSpec {
  std::string name = "experiment";
  dynamics::DynamicalModel model;
  simulation::SimulationConfig simulation;
  ExperimentKind kind = ExperimentKind::aggregate;
  int num_longitudinal = 10;
  std::vector<regression::SchemeConfig> grid;
  int replicates = 20;
  bool include_self_edges = false;
  std::uint64_t root_seed = 0;
};

void validate(const ExperimentSpec& spec);

struct CellOutcome {
  std::optional<double> aur;
  std::string failure;  // reason when aur is missing
  std::optional<EdgeScores> scores;
  std::optional<RocResult> roc;
};

struct ExperimentResult {
  std::string name;
  std::vector<regression::SchemeConfig> grid;
  int replicates = 0;
  // cells[scheme][replicate]
  std::vector<std::vector<CellOutcome>> cells;

  std::optional<double> mean(std::size_t scheme) const;
  std::optional<double> sd(std::size_t scheme) const;
};

/// Seed for replicate r; every dataset of that replicate derives from it.
std::uint64_t replicate_seed(std::uint64_t root, int replicate);

/// Simulates the datasets of one replicate.
std::vector<simulation::Dataset> simulate_replicate(const ExperimentSpec& spec, int replicate, int jobs = 1);

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

struct RegimeDelta {
  std::string scheme_id;
  std::optional<double> mean_first;
  std::optional<double> mean_second;
  std::optional<double> delta;  // first minus second
  double ci_low = 0.0;
  double ci_high = 0.0;
  double prob_not_positive = 0.0;  // share of bootstrap deltas <= 0
};

struct RegimeComparison {
  std::string first_name;
  std::string second_name;
  double level = 0.9;
  int resamples = 0;
  std::vector<RegimeDelta> deltas;
};

/// Paired bootstrap over replicate indices of per-scheme mean-AUR deltas.
RegimeComparison compare_results(const ExperimentResult& first, const ExperimentResult& second,
                                 int resamples = 2000, double level = 0.9, std::uint64_t seed = 0);

/// Runs both specs and compares them. The specs must differ only in sampling times.
RegimeComparison compare_regimes(const ExperimentSpec& first, const ExperimentSpec& second, int jobs = 1,
                                 int resamples = 2000, double level = 0.9);

// Artifact writers; each returns the paths written, relative to `dir`.
std::vector<std::filesystem::path> write_aur_summary(const ExperimentResult& result, const std::filesystem::path& dir,
                                                     const std::filesystem::path& relative);
std::vector<std::filesystem::path> write_cell_artifacts(const ExperimentResult& result,
                                                        const std::filesystem::path& dir,
                                                        const std::filesystem::path& relative);
std::vector<std::filesystem::path> write_regime_comparison(const RegimeComparison& cmp,
                                                           const std::filesystem::path& dir,
                                                           const std::filesystem::path& relative);
void write_roc_csv(const RocResult& roc, const std::filesystem::path& path);

}  // namespace netbench::evaluation
