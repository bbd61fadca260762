#include "netbench/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netbench/config.hpp"
#include "netbench/error.hpp"
#include "netbench/parallel.hpp"

namespace netbench::simulation {

const char* to_string(SamplingMode mode) noexcept {
  return mode == SamplingMode::destructive ? "destructive" : "longitudinal";
}

void validate(const SimulationConfig& config, int num_vars) {
  const auto& t = config.sampling_times;
  if (t.size() < 2) throw Error(ErrorCode::schema, "need at least two sampling times", "sampling_times");
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (!std::isfinite(t[j]))
      throw Error(ErrorCode::schema, "sampling time is not finite", "sampling_times[" + std::to_string(j) + "]");
    if (j > 0 && !(t[j] > t[j - 1]))
      throw Error(ErrorCode::schema, "sampling times must be strictly increasing",
                  "sampling_times[" + std::to_string(j) + "]");
  }
  if (config.substeps && *config.substeps < 1)
    throw Error(ErrorCode::schema, "substeps must be >= 1", "substeps");
  if (!(config.max_step > 0.0)) throw Error(ErrorCode::schema, "max_step_minutes must be > 0", "max_step_minutes");
  if (config.population < 1) throw Error(ErrorCode::schema, "population must be >= 1", "population");
  if (config.simulated_cells < 1) throw Error(ErrorCode::schema, "simulated_cells must be >= 1", "simulated_cells");
  if (config.initial_mean.size() != num_vars)
    throw Error(ErrorCode::schema, "initial_mean needs " + std::to_string(num_vars) + " entries", "initial_mean");
  if (config.initial_sd && config.initial_snr)
    throw Error(ErrorCode::schema, "set at most one of initial_sd / initial_snr", "initial_sd");
  if (config.initial_sd && !(*config.initial_sd >= 0.0))
    throw Error(ErrorCode::schema, "initial_sd must be >= 0", "initial_sd");
  if (config.initial_snr && !(*config.initial_snr > 0.0))
    throw Error(ErrorCode::schema, "initial_snr must be > 0", "initial_snr");
  if (config.sigma_meas.has_value() == config.snr_target.has_value())
    throw Error(ErrorCode::schema, "set exactly one of sigma_meas / snr_target", "sigma_meas");
  if (config.sigma_meas && !(*config.sigma_meas >= 0.0))
    throw Error(ErrorCode::schema, "sigma_meas must be >= 0", "sigma_meas");
  if (config.snr_target && !(*config.snr_target > 0.0))
    throw Error(ErrorCode::schema, "snr_target must be > 0", "snr_target");
  if (config.intervention && (config.intervention->variable < 0 || config.intervention->variable >= num_vars))
    throw Error(ErrorCode::schema, "intervention variable out of range", "intervention.variable");
}

Eigen::VectorXd em_step(const Eigen::VectorXd& state, const Eigen::VectorXd& drift,
                        const Eigen::VectorXd& diffusion, double dt, const Eigen::VectorXd& noise, double t) {
  if (!(dt > 0.0)) throw Error(ErrorCode::argument, "integrator step must be > 0");
  if (noise.size() != state.size() || drift.size() != state.size() || diffusion.size() != state.size())
    throw Error(ErrorCode::argument, "em_step vectors differ in length");
  Eigen::VectorXd next = state + dt * drift + (std::sqrt(dt) * diffusion.array() * noise.array()).matrix();
  if (!next.allFinite()) throw BlowupError(t, "integration blew up at t = " + std::to_string(t));
  return next;
}

Eigen::VectorXd diffusion_scale(const DynamicalModel& model, const Eigen::VectorXd& state) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(model.num_vars());
  for (int p = 0; p < model.num_vars(); ++p) {
    if (model.clamped(p)) continue;
    switch (model.diffusion()) {
      case dynamics::DiffusionKind::none: break;
      case dynamics::DiffusionKind::multiplicative: g(p) = model.sigma_cell() * state(p); break;
      case dynamics::DiffusionKind::additive: g(p) = model.sigma_cell(); break;
    }
  }
  return g;
}

namespace {

// Past states on the integrator grid; lookups interpolate linearly and
// hold the initial condition before t_0.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(int num_vars) : num_vars_(num_vars) {}

  void push(double t, const Eigen::VectorXd& x) {
    times_.push_back(t);
    states_.insert(states_.end(), x.data(), x.data() + num_vars_);
  }

  double value(int var, double t) const {
    if (t <= times_.front()) return states_[static_cast<std::size_t>(var)];
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.end()) return row(times_.size() - 1)[var];
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    return (1.0 - w) * row(lo)[var] + w * row(hi)[var];
  }

 private:
  const double* row(std::size_t i) const { return states_.data() + i * static_cast<std::size_t>(num_vars_); }

  int num_vars_;
  std::vector<double> times_;
  std::vector<double> states_;
};

int substeps_for(const SimulationConfig& config, double delta) {
  if (config.substeps) return *config.substeps;
  return std::max(1, static_cast<int>(std::ceil(delta / config.max_step - 1e-9)));
}

Eigen::MatrixXd integrate(const DynamicalModel& model, const SimulationConfig& config, Rng* rng, int last,
                          bool noise_off) {
  const int P = model.num_vars();
  const auto& times = config.sampling_times;
  std::normal_distribution<double> normal;

  const double sd = noise_off ? 0.0 : config.initial_sd.value_or(0.0);
  if (!noise_off && config.initial_snr && !config.initial_sd)
    throw Error(ErrorCode::argument, "initial_snr must be resolved before simulating a cell");
  Eigen::VectorXd x = config.initial_mean;
  for (int p = 0; p < P; ++p) {
    if (sd > 0.0) x(p) += sd * normal(*rng);
    if (config.clip_negative) x(p) = std::max(x(p), 0.0);
    if (model.clamped(p)) x(p) = 0.0;
  }

  const bool delayed = !model.markovian();
  const bool cell_noise =
      !noise_off && model.diffusion() != dynamics::DiffusionKind::none && model.sigma_cell() > 0.0;
  HistoryBuffer history(P);
  if (delayed) history.push(times[0], x);

  Eigen::MatrixXd out(last + 1, P);
  out.row(0) = x.transpose();
  Eigen::VectorXd drift(P);
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(P);
  const Eigen::VectorXd no_diffusion = Eigen::VectorXd::Zero(P);

  for (int j = 1; j <= last; ++j) {
    const double t0 = times[static_cast<std::size_t>(j - 1)];
    const double delta = times[static_cast<std::size_t>(j)] - t0;
    const int k = substeps_for(config, delta);
    const double dt = delta / k;
    for (int s = 0; s < k; ++s) {
      const double t = t0 + s * dt;
      auto state = [&](int var, double lag) { return lag == 0.0 ? x(var) : history.value(var, t - lag); };
      dynamics::drift_into(model, state, std::span<double>(drift.data(), static_cast<std::size_t>(P)));
      if (cell_noise) {
        for (int p = 0; p < P; ++p) noise(p) = normal(*rng);
        x = em_step(x, drift, diffusion_scale(model, x), dt, noise, t);
      } else {
        x = em_step(x, drift, no_diffusion, dt, noise, t);
      }
      for (int p = 0; p < P; ++p) {
        if (config.clip_negative) x(p) = std::max(x(p), 0.0);
        if (model.clamped(p)) x(p) = 0.0;
      }
      if (delayed) history.push(s + 1 == k ? times[static_cast<std::size_t>(j)] : t0 + (s + 1) * dt, x);
    }
    out.row(j) = x.transpose();
  }
  return out;
}

nlohmann::json provenance_for(const DynamicalModel& model, const SimulationConfig& config,
                              const NoiseLevels& noise, std::optional<int> replicate) {
  nlohmann::json p;
  p["model"] = model.name();
  p["config"] = config::to_json(config);
  p["resolved_sigma_meas"] = noise.sigma_meas;
  p["resolved_initial_sd"] = noise.initial_sd;
  p["calibration_mean_level"] = noise.mean_level;
  if (replicate) p["dataset_index"] = *replicate;
  return p;
}

DynamicalModel maybe_intervene(const DynamicalModel& model, const SimulationConfig& config) {
  return config.intervention ? apply_intervention(model, config.intervention->variable) : model;
}

}  // namespace

Eigen::MatrixXd simulate_cell(const DynamicalModel& model, const SimulationConfig& config, Rng& rng,
                              std::optional<int> last_index) {
  const int last = last_index.value_or(config.num_intervals());
  if (last < 0 || last > config.num_intervals()) throw Error(ErrorCode::argument, "sampling index out of range");
  return integrate(model, config, &rng, last, false);
}

Eigen::MatrixXd deterministic_trajectory(const DynamicalModel& model, const SimulationConfig& config) {
  return integrate(model, config, nullptr, config.num_intervals(), true);
}

NoiseLevels resolve_noise(const DynamicalModel& model, const SimulationConfig& config) {
  NoiseLevels levels;
  if (config.snr_target || config.initial_snr) {
    levels.mean_level = std::abs(deterministic_trajectory(model, config).mean());
  }
  levels.sigma_meas = config.snr_target ? levels.mean_level / *config.snr_target : config.sigma_meas.value_or(0.0);
  levels.initial_sd = config.initial_snr ? levels.mean_level / *config.initial_snr : config.initial_sd.value_or(0.0);
  return levels;
}

SimulationConfig with_resolved_noise(const DynamicalModel& model, SimulationConfig config) {
  const NoiseLevels levels = resolve_noise(model, config);
  config.sigma_meas = levels.sigma_meas;
  config.snr_target.reset();
  config.initial_sd = levels.initial_sd;
  config.initial_snr.reset();
  return config;
}

Dataset simulate_aggregate(const DynamicalModel& model, const SimulationConfig& config, int jobs) {
  validate(config, model.num_vars());
  if (config.mode != SamplingMode::destructive)
    throw Error(ErrorCode::argument, "simulate_aggregate requires destructive sampling");
  const NoiseLevels noise = resolve_noise(model, config);
  SimulationConfig cfg = with_resolved_noise(model, config);
  const DynamicalModel cell_model = maybe_intervene(model, config);

  const int P = model.num_vars();
  const int n_points = static_cast<int>(cfg.sampling_times.size());
  const int n_star = cfg.simulated_cells;
  Eigen::MatrixXd values(n_points, P);

  parallel_for(static_cast<std::size_t>(n_points), jobs, [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    Eigen::MatrixXd cells(n_star, P);
    for (int k = 0; k < n_star; ++k) {
      Rng rng = make_rng(cfg.seed, {stream_cell, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)});
      cells.row(k) = integrate(cell_model, cfg, &rng, j, false).row(j);
    }

    Rng boot = make_rng(cfg.seed, {stream_bootstrap, static_cast<std::uint64_t>(j)});
    std::uniform_int_distribution<int> pick(0, n_star - 1);
    std::vector<long> counts(static_cast<std::size_t>(n_star), 0);
    for (int b = 0; b < cfg.population; ++b) ++counts[static_cast<std::size_t>(pick(boot))];
    // Averaging relative to the first cell keeps a bootstrap of identical
    // cells bit-exact.
    const Eigen::RowVectorXd ref = cells.row(0);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(P);
    for (int k = 0; k < n_star; ++k)
      acc += static_cast<double>(counts[static_cast<std::size_t>(k)]) * (cells.row(k) - ref);
    Eigen::RowVectorXd mean = ref + acc / static_cast<double>(cfg.population);

    if (noise.sigma_meas > 0.0) {
      Rng meas = make_rng(cfg.seed, {stream_measurement, static_cast<std::uint64_t>(j)});
      std::normal_distribution<double> normal;
      for (int p = 0; p < P; ++p) mean(p) += noise.sigma_meas * normal(meas);
    }
    values.row(j) = mean;
  });

  Dataset ds;
  ds.times = cfg.sampling_times;
  ds.values = std::move(values);
  ds.longitudinal = false;
  ds.provenance = provenance_for(model, config, noise, std::nullopt);
  return ds;
}

std::vector<Dataset> simulate_longitudinal(const DynamicalModel& model, const SimulationConfig& config,
                                           int num_datasets, int jobs) {
  validate(config, model.num_vars());
  if (config.mode != SamplingMode::longitudinal)
    throw Error(ErrorCode::argument, "simulate_longitudinal requires longitudinal sampling");
  if (num_datasets < 0) throw Error(ErrorCode::argument, "num_datasets must be >= 0");
  const NoiseLevels noise = resolve_noise(model, config);
  SimulationConfig cfg = with_resolved_noise(model, config);
  const DynamicalModel cell_model = maybe_intervene(model, config);

  std::vector<Dataset> out(static_cast<std::size_t>(num_datasets));
  parallel_for(out.size(), jobs, [&](std::size_t d) {
    Rng rng = make_rng(cfg.seed, {stream_longitudinal_cell, d});
    Eigen::MatrixXd values = integrate(cell_model, cfg, &rng, cfg.num_intervals(), false);
    if (noise.sigma_meas > 0.0) {
      Rng meas = make_rng(cfg.seed, {stream_longitudinal_measurement, d});
      std::normal_distribution<double> normal;
      for (Eigen::Index j = 0; j < values.rows(); ++j)
        for (Eigen::Index p = 0; p < values.cols(); ++p) values(j, p) += noise.sigma_meas * normal(meas);
    }
    Dataset& ds = out[d];
    ds.times = cfg.sampling_times;
    ds.values = std::move(values);
    ds.longitudinal = true;
    ds.provenance = provenance_for(model, config, noise, static_cast<int>(d));
  });
  return out;
}

DynamicalModel apply_intervention(const DynamicalModel& model, int index) {
  if (index < 0 || index >= model.num_vars())
    throw Error(ErrorCode::argument, "intervention index " + std::to_string(index) + " out of range");
  auto drift = model.drift();
  drift[static_cast<std::size_t>(index)].clear();
  auto clamped = model.clamped_mask();
  clamped[static_cast<std::size_t>(index)] = true;
  return DynamicalModel(model.name() + "+clamp(" + model.variable_names()[static_cast<std::size_t>(index)] + ")",
                        std::move(drift), model.diffusion(), model.sigma_cell(), model.variable_names(),
                        std::move(clamped));
}

Eigen::MatrixXd theoretical_variance(const Eigen::MatrixXd& M, const Eigen::MatrixXd& DF,
                                     const std::optional<Eigen::MatrixXd>& g_outer, double delta,
                                     VarianceMode mode) {
  if (!(delta > 0.0)) throw Error(ErrorCode::argument, "sampling interval must be > 0");
  if (M.rows() != M.cols() || DF.rows() != M.rows() || DF.cols() != M.cols())
    throw Error(ErrorCode::argument, "variance expansion needs matching square matrices");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::argument, "measurement covariance must be symmetric");
  const auto I = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  const Eigen::MatrixXd L = I / delta + DF;
  Eigen::MatrixXd V = M / (delta * delta) + L * M * L.transpose();
  if (mode == VarianceMode::single_cell && g_outer) {
    if (g_outer->rows() != M.rows() || g_outer->cols() != M.cols())
      throw Error(ErrorCode::argument, "g g' must match the measurement covariance");
    V += *g_outer / delta;
  }
  return V;
}

}  // namespace netbench::simulation
