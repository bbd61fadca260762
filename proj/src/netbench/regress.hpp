#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netbench/simulate.hpp"

namespace netbench::regression {

using simulation::Dataset;

enum class Selector { bayes, aicc };
enum class Design { standard, quadratic };
// h(delta) = delta^-alpha for alpha in {0, 1, 2}; var_model regresses Y(t_j)
// on Y(t_{j-1}) and has no variance function.
enum class VarianceModel { alpha0, alpha1, alpha2, var_model };

const char* to_string(Selector s) noexcept;
const char* to_string(Design d) noexcept;
const char* to_string(VarianceModel v) noexcept;

/// One point in the selector x design x lag x variance grid.
struct SchemeConfig {
  Selector selector = Selector::bayes;
  Design design = Design::standard;
  bool lagged = false;
  double lag_minutes = 0.0;
  VarianceModel variance = VarianceModel::alpha0;
  int d_max = 2;
  double epsilon = 0.5;
  std::optional<double> g_factor;  // Zellner g; defaults to the row count
  bool quadratic_squares = true;   // false: distinct pairs only

  /// Canonical `selector-design-lag-variance`, e.g. bayes-standard-nolag-a0.
  std::string id() const;

  bool operator==(const SchemeConfig&) const = default;
};

/// Parses a canonical scheme id; other fields keep their defaults.
SchemeConfig scheme_from_id(const std::string& id);

/// The 32-scheme grid, in canonical order.
std::vector<SchemeConfig> full_grid(double lag_minutes, int d_max);

/// Number of design columns for P variables under a scheme.
int num_design_columns(const SchemeConfig& scheme, int num_vars);

/// Schema-level checks (d_max, epsilon, lag) that need only P.
void validate(const SchemeConfig& scheme, int num_vars);

enum class Transform { identity, product, lagged };

struct ColumnLabel {
  int source = 0;
  int partner = -1;     // second factor of a product column
  Transform transform = Transform::identity;
  double lag = 0.0;     // > 0 for lagged copies (of identity or product columns)
  bool constant = false;

  std::string describe() const;
  bool operator==(const ColumnLabel&) const = default;
};

struct RegressionProblem {
  int target = 0;
  int num_vars = 0;
  Eigen::VectorXd response;
  Eigen::MatrixXd design;
  std::vector<ColumnLabel> labels;
  Eigen::VectorXd intervals;  // delta_j per row
  std::vector<int> group;     // dataset index per row (pooled problems)
  bool var_mode = false;
  bool weights_applied = false;
  bool standardized = false;
  bool response_constant = false;

  int rows() const noexcept { return static_cast<int>(response.size()); }
  int cols() const noexcept { return static_cast<int>(design.cols()); }
  /// Indices of columns not flagged constant.
  std::vector<int> candidate_columns() const;
};

struct FiniteDifferences {
  Eigen::MatrixXd responses;  // n x P, (Y(t_j) - Y(t_{j-1})) / delta_j
  Eigen::VectorXd intervals;  // n
};

FiniteDifferences finite_differences(const Dataset& dataset);

/// Unweighted, unstandardized problem for `target`; rows from several
/// datasets are pooled.
RegressionProblem build_design(std::span<const Dataset> datasets, const SchemeConfig& scheme, int target);
RegressionProblem build_design(const Dataset& dataset, const SchemeConfig& scheme, int target);

/// Multiplies each row by h(delta_j)^(-1/2) = delta_j^(alpha/2).
RegressionProblem apply_variance_weights(RegressionProblem problem, VarianceModel variance);

/// Centres every column and the response and scales to unit population
/// variance. Columns with variance below 1e-12 are flagged constant.
RegressionProblem standardize(RegressionProblem problem);

/// build_design -> apply_variance_weights (unless VAR) -> standardize, for every target.
std::vector<RegressionProblem> prepare_problems(std::span<const Dataset> datasets, const SchemeConfig& scheme);

/// OLS coefficients of the full design (no intercept) via column-pivoted QR.
Eigen::VectorXd ols_coefficients(const RegressionProblem& problem);

/// P x P drift-matrix estimate from pooled finite differences regressed on
/// the standard design, with a separate intercept per dataset. It realises
/// the average-Jacobian estimand over the region the datasets visit.
Eigen::MatrixXd estimate_jacobian(std::span<const Dataset> datasets);

}  // namespace netbench::regression
