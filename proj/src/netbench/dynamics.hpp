#pragma once

#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netbench/network.hpp"

namespace netbench::dynamics {

enum class TermKind {
  constant,         // c
  linear,           // c * x
  degradation,      // -c * x
  hill_activation,  // c * x^n / (K^n + x^n)
  hill_repression,  // c * K^n / (K^n + x^n)
  product,          // c * x_a * x_b
  sine,             // c * sin(2 pi x)
};

const char* to_string(TermKind kind) noexcept;

/// Number of source variables a term of this kind reads.
int arity(TermKind kind) noexcept;

/// One additive contribution to a variable's drift. Every source is read at
/// time t - lag. Hill terms read max(x, 0).
struct DriftTerm {
  TermKind kind = TermKind::constant;
  double coefficient = 0.0;
  std::vector<int> sources;
  double lag = 0.0;
  double K = 1.0;
  double exponent = 1.0;

  bool operator==(const DriftTerm&) const = default;
};

enum class DiffusionKind {
  none,
  multiplicative,  // g(X) = sigma_cell * diag(X)
  additive,        // g(X) = sigma_cell * I
};

const char* to_string(DiffusionKind kind) noexcept;

/// Drift and diffusion of a single-cell SDDE. Immutable once constructed; the
/// maximum delay and the true network are derived from the terms.
class DynamicalModel {
 public:
  // One variable, no terms.
  DynamicalModel() : DynamicalModel("empty", {{}}) {}
  DynamicalModel(std::string name, std::vector<std::vector<DriftTerm>> drift,
                 DiffusionKind diffusion = DiffusionKind::none, double sigma_cell = 0.0,
                 std::vector<std::string> variable_names = {}, std::vector<bool> clamped = {});

  const std::string& name() const noexcept { return name_; }
  int num_vars() const noexcept { return static_cast<int>(drift_.size()); }
  const std::vector<std::vector<DriftTerm>>& drift() const noexcept { return drift_; }
  const std::vector<DriftTerm>& terms(int var) const { return drift_.at(var); }
  DiffusionKind diffusion() const noexcept { return diffusion_; }
  double sigma_cell() const noexcept { return sigma_cell_; }
  const std::vector<std::string>& variable_names() const noexcept { return names_; }

  /// Clamped variables have zero drift and diffusion and stay at 0.
  bool clamped(int var) const { return clamped_.at(var); }
  const std::vector<bool>& clamped_mask() const noexcept { return clamped_; }

  double max_delay() const noexcept { return max_delay_; }
  bool markovian() const noexcept { return max_delay_ == 0.0; }
  const Network& true_network() const noexcept { return network_; }

  bool operator==(const DynamicalModel& other) const;

 private:
  std::string name_;
  std::vector<std::vector<DriftTerm>> drift_;
  DiffusionKind diffusion_;
  double sigma_cell_;
  std::vector<std::string> names_;
  std::vector<bool> clamped_;
  double max_delay_ = 0.0;
  Network network_;
};

/// Value of one term given the (lagged) values of its sources.
double term_value(const DriftTerm& term, double a, double b = 0.0) noexcept;

/// Partial derivative of one term with respect to its k-th source.
double term_derivative(const DriftTerm& term, int k, double a, double b = 0.0);

/// Drift evaluation against an arbitrary lag accessor `state(var, lag)`
/// returning X_var(t - lag). Used by the integrator's hot loop.
template <class LaggedState>
void drift_into(const DynamicalModel& model, LaggedState&& state, std::span<double> out) {
  for (int p = 0; p < model.num_vars(); ++p) {
    double value = 0.0;
    if (!model.clamped(p)) {
      for (const auto& term : model.terms(p)) {
        const int n = arity(term.kind);
        const double a = n > 0 ? state(term.sources[0], term.lag) : 0.0;
        const double b = n > 1 ? state(term.sources[1], term.lag) : 0.0;
        value += term_value(term, a, b);
      }
    }
    out[static_cast<std::size_t>(p)] = value;
  }
}

/// A state history known on [begin, end].
struct HistoryView {
  std::function<Eigen::VectorXd(double)> at;
  double begin = 0.0;
  double end = 0.0;
};

Eigen::VectorXd eval_drift(const DynamicalModel& model, const HistoryView& history, double t);

/// Drift of a Markovian evaluation: every lag reads the same state.
Eigen::VectorXd eval_drift_at_state(const DynamicalModel& model, const Eigen::VectorXd& state);

enum class JacobianMode { analytic, finite_difference };

/// Df at a state, with lagged arguments set to that state. Derivatives with
/// respect to X_i(t - lag) are reported in column i. The finite-difference
/// mode uses central differences with step 1e-5 * max(1, |x_i|).
Eigen::MatrixXd jacobian_at(const DynamicalModel& model, const Eigen::VectorXd& state,
                            JacobianMode mode = JacobianMode::analytic);

Eigen::MatrixXd average_jacobian(const DynamicalModel& model, std::span<const Eigen::VectorXd> states);

struct StabilityReport {
  std::vector<std::complex<double>> eigenvalues;
  // True iff every eigenvalue of A + delta*I has non-positive real part.
  bool non_divergent = false;
};

StabilityReport stability_diagnostic(const Eigen::MatrixXd& A, double delta);

/// Jacobian A of an affine drift built from constant, linear and degradation
/// terms without lags. Throws when the model has any other term.
Eigen::MatrixXd linear_drift_matrix(const DynamicalModel& model);

}  // namespace netbench::dynamics
