#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "netbench/dynamics.hpp"
#include "netbench/rng.hpp"

namespace netbench::simulation {

using dynamics::DynamicalModel;

enum class SamplingMode { destructive, longitudinal };

const char* to_string(SamplingMode mode) noexcept;

struct Intervention {
  int variable = 0;  // only clamp_to_zero is supported

  bool operator==(const Intervention&) const = default;
};

struct SimulationConfig {
  std::vector<double> sampling_times;
  // Integrator substeps per sampling interval. When unset, each interval uses
  // ceil(delta_j / max_step) substeps.
  std::optional<int> substeps;
  double max_step = 0.5;
  int population = 10000;     // N
  int simulated_cells = 30;   // N*
  Eigen::VectorXd initial_mean;
  // Initial-condition spread: either an absolute sd or a ratio <X>/sd.
  std::optional<double> initial_sd;
  std::optional<double> initial_snr;
  // Measurement noise: exactly one of these is set.
  std::optional<double> sigma_meas;
  std::optional<double> snr_target;
  SamplingMode mode = SamplingMode::destructive;
  std::optional<Intervention> intervention;
  std::uint64_t seed = 0;
  // Clip states at 0 after each step (expression levels are non-negative).
  bool clip_negative = true;

  int num_intervals() const noexcept { return static_cast<int>(sampling_times.size()) - 1; }
};

/// Throws a schema error naming the offending field.
void validate(const SimulationConfig& config, int num_vars);

struct Dataset {
  std::vector<double> times;
  Eigen::MatrixXd values;  // (n+1) x P
  bool longitudinal = false;
  nlohmann::json provenance;

  int num_vars() const noexcept { return static_cast<int>(values.cols()); }
};

/// state + dt * drift + diffusion .* sqrt(dt) * noise. `t` only labels a
/// blow-up error.
Eigen::VectorXd em_step(const Eigen::VectorXd& state, const Eigen::VectorXd& drift,
                        const Eigen::VectorXd& diffusion, double dt, const Eigen::VectorXd& noise,
                        double t = 0.0);

/// Diagonal of g(X) for the model's diffusion kind.
Eigen::VectorXd diffusion_scale(const DynamicalModel& model, const Eigen::VectorXd& state);

/// One cell integrated from t_0 to sampling_times[last_index], returned at
/// sampling_times[0..last_index]. Deterministic given `rng`.
Eigen::MatrixXd simulate_cell(const DynamicalModel& model, const SimulationConfig& config, Rng& rng,
                              std::optional<int> last_index = std::nullopt);

/// Deterministic trajectory with cellular noise and initial spread switched off.
Eigen::MatrixXd deterministic_trajectory(const DynamicalModel& model, const SimulationConfig& config);

struct NoiseLevels {
  double sigma_meas = 0.0;
  double initial_sd = 0.0;
  double mean_level = 0.0;  // <X> of the calibration run, 0 when not needed
};

/// Resolves SNR targets into absolute noise levels from a noise-free
/// calibration run of `model`.
NoiseLevels resolve_noise(const DynamicalModel& model, const SimulationConfig& config);

/// Copy of `config` with sigma_meas / initial_sd made absolute.
SimulationConfig with_resolved_noise(const DynamicalModel& model, SimulationConfig config);

Dataset simulate_aggregate(const DynamicalModel& model, const SimulationConfig& config, int jobs = 1);

std::vector<Dataset> simulate_longitudinal(const DynamicalModel& model, const SimulationConfig& config,
                                           int num_datasets, int jobs = 1);

/// Replaces variable `index`'s drift by clamping dynamics holding it at 0.
DynamicalModel apply_intervention(const DynamicalModel& model, int index);

enum class VarianceMode { aggregate, single_cell };

/// Truncated expansion of V(dY - F(Y)) over an interval delta:
/// M/delta^2 + (I/delta + DF) M (I/delta + DF)' [+ g g'/delta].
Eigen::MatrixXd theoretical_variance(const Eigen::MatrixXd& M, const Eigen::MatrixXd& DF,
                                     const std::optional<Eigen::MatrixXd>& g_outer, double delta,
                                     VarianceMode mode);

}  // namespace netbench::simulation
