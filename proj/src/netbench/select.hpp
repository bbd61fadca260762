#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netbench/network.hpp"
#include "netbench/regress.hpp"

namespace netbench::selection {

using regression::RegressionProblem;

using Subset = std::vector<int>;

inline constexpr std::size_t kDefaultSubsetCap = 1'000'000;

/// All subsets of {0..C-1} of size 0..d_max, size-major then lexicographic.
std::vector<Subset> enumerate_subsets(int num_candidates, int d_max, std::size_t cap = kDefaultSubsetCap);

/// log of (1+g)^(-m/2) [y'y - g/(1+g) yhat'yhat]^(-n/2), yhat the projection of
/// y onto the columns in S. Throws ErrorCode::singular when B_S is rank
/// deficient. Constants common to all subsets are dropped.
double gprior_log_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, std::span<const int> subset,
                           double g);
double gprior_log_marginal(const RegressionProblem& problem, std::span<const int> subset,
                           std::optional<double> g_factor = std::nullopt);

/// n log(sigma2) + 2m + 2m(m+1)/(n-m-1), sigma2 the mean squared OLS residual.
/// Throws ErrorCode::small_sample when n <= m + 1.
double aicc_score(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, std::span<const int> subset);
double aicc_score(const RegressionProblem& problem, std::span<const int> subset);

/// log C(n, k).
double log_binomial(int n, int k);

struct SubsetScoreTable {
  int target = 0;
  std::vector<Subset> subsets;          // design-column indices
  std::vector<double> log_scores;       // -inf for skipped subsets
  std::vector<double> prior_log_weights;
  int skipped = 0;

  /// Normalized exp(log_score + prior) per subset.
  std::vector<double> posterior() const;
};

SubsetScoreTable score_subsets_bayes(const RegressionProblem& problem, int d_max,
                                     std::optional<double> g_factor = std::nullopt);
/// log_scores hold -AICc / 2 (Akaike-weight exponents); priors are zero.
SubsetScoreTable score_subsets_aicc(const RegressionProblem& problem, int d_max);

enum class Semantics { posterior_probability, akaike_weight };

const char* to_string(Semantics s) noexcept;

/// P x P confidences, entry (i, j) for the edge i -> j.
struct EdgeScores {
  int num_vars = 0;
  Semantics semantics = Semantics::posterior_probability;
  Eigen::MatrixXd scores;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;

  bool evaluable(int from, int to) const { return mask(from, to); }
};

/// Edge score of source i for a target = total subset weight whose columns
/// involve i (identity, product or lagged).
EdgeScores bayes_edge_posteriors(std::span<const RegressionProblem> problems, int d_max,
                                 std::optional<double> g_factor = std::nullopt);

struct AiccEdgeResult {
  EdgeScores scores;
  std::vector<Subset> best_subsets;  // argmin AICc per target (column indices)
};

AiccEdgeResult aicc_edge_scores(std::span<const RegressionProblem> problems, int d_max);

/// (i, j) in the graph iff score > epsilon and the entry is evaluable.
Network threshold_graph(const EdgeScores& scores, double epsilon);

/// Full pipeline for one scheme: prepare problems, then score.
EdgeScores infer(std::span<const simulation::Dataset> datasets, const regression::SchemeConfig& scheme);

}  // namespace netbench::selection
