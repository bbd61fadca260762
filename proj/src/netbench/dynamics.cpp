#include "netbench/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "netbench/error.hpp"

namespace netbench::dynamics {

const char* to_string(TermKind kind) noexcept {
  switch (kind) {
    case TermKind::constant: return "constant";
    case TermKind::linear: return "linear";
    case TermKind::degradation: return "degradation";
    case TermKind::hill_activation: return "hill_activation";
    case TermKind::hill_repression: return "hill_repression";
    case TermKind::product: return "product";
    case TermKind::sine: return "sine";
  }
  return "unknown";
}

const char* to_string(DiffusionKind kind) noexcept {
  switch (kind) {
    case DiffusionKind::none: return "none";
    case DiffusionKind::multiplicative: return "multiplicative";
    case DiffusionKind::additive: return "additive";
  }
  return "unknown";
}

int arity(TermKind kind) noexcept {
  switch (kind) {
    case TermKind::constant: return 0;
    case TermKind::product: return 2;
    default: return 1;
  }
}

namespace {

bool is_hill(TermKind kind) {
  return kind == TermKind::hill_activation || kind == TermKind::hill_repression;
}

std::string term_path(int p, std::size_t k) {
  return "drift[" + std::to_string(p) + "][" + std::to_string(k) + "]";
}

}  // namespace

DynamicalModel::DynamicalModel(std::string name, std::vector<std::vector<DriftTerm>> drift,
                               DiffusionKind diffusion, double sigma_cell,
                               std::vector<std::string> variable_names, std::vector<bool> clamped)
    : name_(std::move(name)),
      drift_(std::move(drift)),
      diffusion_(diffusion),
      sigma_cell_(sigma_cell),
      names_(std::move(variable_names)),
      clamped_(std::move(clamped)),
      network_(std::max<int>(1, static_cast<int>(drift_.size()))) {
  const int P = static_cast<int>(drift_.size());
  if (P < 1) throw Error(ErrorCode::schema, "model needs at least one variable", "num_vars");
  if (!(sigma_cell_ >= 0.0) || !std::isfinite(sigma_cell_))
    throw Error(ErrorCode::schema, "sigma_cell must be finite and >= 0", "diffusion.sigma_cell");
  if (names_.empty()) {
    for (int p = 0; p < P; ++p) names_.push_back("x" + std::to_string(p + 1));
  } else if (static_cast<int>(names_.size()) != P) {
    throw Error(ErrorCode::schema, "expected " + std::to_string(P) + " variable names", "variables");
  }
  if (clamped_.empty()) clamped_.assign(static_cast<std::size_t>(P), false);
  if (static_cast<int>(clamped_.size()) != P)
    throw Error(ErrorCode::schema, "clamp mask length differs from num_vars", "clamped");

  for (int p = 0; p < P; ++p) {
    auto& terms = drift_[static_cast<std::size_t>(p)];
    for (std::size_t k = 0; k < terms.size(); ++k) {
      auto& term = terms[k];
      const std::string path = term_path(p, k);
      if (term.kind == TermKind::degradation && term.sources.empty()) term.sources = {p};
      if (static_cast<int>(term.sources.size()) != arity(term.kind))
        throw Error(ErrorCode::schema,
                    std::string(to_string(term.kind)) + " term needs " + std::to_string(arity(term.kind)) +
                        " source(s)",
                    path + ".sources");
      for (std::size_t s = 0; s < term.sources.size(); ++s) {
        if (term.sources[s] < 0 || term.sources[s] >= P)
          throw Error(ErrorCode::schema, "source index " + std::to_string(term.sources[s]) + " out of range",
                      path + ".sources[" + std::to_string(s) + "]");
      }
      if (!std::isfinite(term.coefficient))
        throw Error(ErrorCode::schema, "coefficient must be finite", path + ".coefficient");
      if (!std::isfinite(term.lag) || term.lag < 0.0)
        throw Error(ErrorCode::schema, "lag must be finite and >= 0", path + ".lag_minutes");
      if (term.kind == TermKind::constant && term.lag != 0.0)
        throw Error(ErrorCode::schema, "constant terms carry no lag", path + ".lag_minutes");
      if (is_hill(term.kind)) {
        if (!(term.K > 0.0) || !std::isfinite(term.K))
          throw Error(ErrorCode::schema, "Hill threshold K must be > 0", path + ".K");
        if (!(term.exponent > 0.0) || !std::isfinite(term.exponent))
          throw Error(ErrorCode::schema, "Hill exponent must be > 0", path + ".exponent");
      }
      max_delay_ = std::max(max_delay_, term.lag);
      for (int source : term.sources) network_.set_edge(source, p);
    }
  }
}

bool DynamicalModel::operator==(const DynamicalModel& other) const {
  return name_ == other.name_ && drift_ == other.drift_ && diffusion_ == other.diffusion_ &&
         sigma_cell_ == other.sigma_cell_ && names_ == other.names_ && clamped_ == other.clamped_;
}

double term_value(const DriftTerm& term, double a, double b) noexcept {
  const double c = term.coefficient;
  switch (term.kind) {
    case TermKind::constant: return c;
    case TermKind::linear: return c * a;
    case TermKind::degradation: return -c * a;
    case TermKind::hill_activation: {
      const double xn = std::pow(std::max(a, 0.0), term.exponent);
      return c * xn / (std::pow(term.K, term.exponent) + xn);
    }
    case TermKind::hill_repression: {
      const double kn = std::pow(term.K, term.exponent);
      return c * kn / (kn + std::pow(std::max(a, 0.0), term.exponent));
    }
    case TermKind::product: return c * a * b;
    case TermKind::sine: return c * std::sin(2.0 * std::numbers::pi * a);
  }
  return 0.0;
}

double term_derivative(const DriftTerm& term, int k, double a, double b) {
  const double c = term.coefficient;
  switch (term.kind) {
    case TermKind::constant: return 0.0;
    case TermKind::linear: return c;
    case TermKind::degradation: return -c;
    case TermKind::hill_activation:
    case TermKind::hill_repression: {
      const double n = term.exponent;
      if (a < 0.0) return 0.0;
      if (a == 0.0) {
        if (n < 1.0) throw Error(ErrorCode::domain, "Hill term with exponent < 1 is not differentiable at 0");
        if (n > 1.0) return 0.0;
      }
      const double kn = std::pow(term.K, n);
      const double xn = std::pow(a, n);
      const double denom = kn + xn;
      const double slope = n * kn * std::pow(a, n - 1.0) / (denom * denom);
      return term.kind == TermKind::hill_activation ? c * slope : -c * slope;
    }
    case TermKind::product: return k == 0 ? c * b : c * a;
    case TermKind::sine: return c * 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * a);
  }
  return 0.0;
}

Eigen::VectorXd eval_drift(const DynamicalModel& model, const HistoryView& history, double t) {
  if (!history.at) throw Error(ErrorCode::argument, "history accessor is empty");
  const double need = t - model.max_delay();
  if (need < history.begin || t > history.end)
    throw Error(ErrorCode::domain, "history does not cover [t - tau, t] = [" + std::to_string(need) + ", " +
                                       std::to_string(t) + "]");
  std::map<double, Eigen::VectorXd> cache;
  auto state = [&](int var, double lag) {
    auto it = cache.find(lag);
    if (it == cache.end()) it = cache.emplace(lag, history.at(t - lag)).first;
    return it->second(var);
  };
  Eigen::VectorXd out(model.num_vars());
  drift_into(model, state, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Eigen::VectorXd eval_drift_at_state(const DynamicalModel& model, const Eigen::VectorXd& state) {
  if (state.size() != model.num_vars()) throw Error(ErrorCode::argument, "state length differs from num_vars");
  Eigen::VectorXd out(model.num_vars());
  drift_into(model, [&](int var, double) { return state(var); },
             std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Eigen::MatrixXd jacobian_at(const DynamicalModel& model, const Eigen::VectorXd& state, JacobianMode mode) {
  const int P = model.num_vars();
  if (state.size() != P) throw Error(ErrorCode::argument, "state length differs from num_vars");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(P, P);

  if (mode == JacobianMode::finite_difference) {
    Eigen::VectorXd plus = state;
    Eigen::VectorXd minus = state;
    for (int i = 0; i < P; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(state(i)));
      plus(i) = state(i) + h;
      minus(i) = state(i) - h;
      J.col(i) = (eval_drift_at_state(model, plus) - eval_drift_at_state(model, minus)) / (2.0 * h);
      plus(i) = minus(i) = state(i);
    }
    return J;
  }

  for (int p = 0; p < P; ++p) {
    if (model.clamped(p)) continue;
    for (const auto& term : model.terms(p)) {
      const int n = arity(term.kind);
      const double a = n > 0 ? state(term.sources[0]) : 0.0;
      const double b = n > 1 ? state(term.sources[1]) : 0.0;
      for (int k = 0; k < n; ++k) J(p, term.sources[static_cast<std::size_t>(k)]) += term_derivative(term, k, a, b);
    }
  }
  return J;
}

Eigen::MatrixXd average_jacobian(const DynamicalModel& model, std::span<const Eigen::VectorXd> states) {
  if (states.empty()) throw Error(ErrorCode::argument, "average_jacobian needs at least one state");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(model.num_vars(), model.num_vars());
  for (const auto& s : states) sum += jacobian_at(model, s);
  return sum / static_cast<double>(states.size());
}

StabilityReport stability_diagnostic(const Eigen::MatrixXd& A, double delta) {
  if (A.rows() != A.cols()) throw Error(ErrorCode::argument, "stability diagnostic needs a square matrix");
  if (!(delta > 0.0)) throw Error(ErrorCode::argument, "sampling interval must be > 0");
  const Eigen::MatrixXd shifted = A + delta * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::EigenSolver<Eigen::MatrixXd> solver(shifted, false);
  StabilityReport report;
  report.non_divergent = true;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const std::complex<double> ev = solver.eigenvalues()(i);
    report.eigenvalues.push_back(ev);
    if (ev.real() > 0.0) report.non_divergent = false;
  }
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(), [](auto x, auto y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return report;
}

Eigen::MatrixXd linear_drift_matrix(const DynamicalModel& model) {
  const int P = model.num_vars();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, P);
  for (int p = 0; p < P; ++p) {
    if (model.clamped(p)) continue;
    for (const auto& term : model.terms(p)) {
      if (term.kind == TermKind::constant) continue;
      if ((term.kind != TermKind::linear && term.kind != TermKind::degradation) || term.lag != 0.0)
        throw Error(ErrorCode::argument, "model '" + model.name() + "' is not affine and Markovian");
      A(p, term.sources[0]) += term.kind == TermKind::linear ? term.coefficient : -term.coefficient;
    }
  }
  return A;
}

}  // namespace netbench::dynamics
