#include "netbench/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "netbench/error.hpp"

namespace netbench::selection {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRankThreshold = 1e-10;

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& design, std::span<const int> subset) {
  Eigen::MatrixXd out(design.rows(), static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k) {
    if (subset[k] < 0 || subset[k] >= design.cols()) throw Error(ErrorCode::argument, "subset column out of range");
    out.col(static_cast<Eigen::Index>(k)) = design.col(subset[k]);
  }
  return out;
}

// Squared norm of the projection of y onto span(B_S), and the OLS residual.
struct Projection {
  double fitted_sq = 0.0;
  double residual_sq = 0.0;
};

Projection project(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, std::span<const int> subset) {
  if (y.size() != design.rows()) throw Error(ErrorCode::argument, "response and design row counts differ");
  Projection out;
  if (subset.empty()) {
    out.residual_sq = y.squaredNorm();
    return out;
  }
  const Eigen::MatrixXd B = gather_columns(design, subset);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < B.cols()) throw Error(ErrorCode::singular, "predictor subset is rank deficient");
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd fitted = B * coef;
  out.fitted_sq = fitted.squaredNorm();
  out.residual_sq = (y - fitted).squaredNorm();
  return out;
}

void require_standardized(const RegressionProblem& problem) {
  if (!problem.standardized) throw Error(ErrorCode::argument, "edge scoring expects standardized problems");
}

// Variables a design column depends on.
void column_sources(const regression::ColumnLabel& label, std::set<int>& out) {
  out.insert(label.source);
  if (label.partner >= 0) out.insert(label.partner);
}

EdgeScores aggregate_edges(std::span<const RegressionProblem> problems, Semantics semantics,
                           const std::vector<SubsetScoreTable>& tables) {
  const int P = problems.front().num_vars;
  EdgeScores out;
  out.num_vars = P;
  out.semantics = semantics;
  out.scores = Eigen::MatrixXd::Zero(P, P);
  out.mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(P, P, false);
  for (std::size_t t = 0; t < problems.size(); ++t) {
    const RegressionProblem& prob = problems[t];
    const int target = prob.target;
    for (int c : prob.candidate_columns()) {
      std::set<int> src;
      column_sources(prob.labels[static_cast<std::size_t>(c)], src);
      for (int i : src) out.mask(i, target) = true;
    }
    const SubsetScoreTable& table = tables[t];
    const std::vector<double> weights = table.posterior();
    for (std::size_t s = 0; s < table.subsets.size(); ++s) {
      if (weights[s] == 0.0) continue;
      std::set<int> src;
      for (int c : table.subsets[s]) column_sources(prob.labels[static_cast<std::size_t>(c)], src);
      for (int i : src) out.scores(i, target) += weights[s];
    }
  }
  // Guard the [0, 1] invariant against summation round-off.
  out.scores = out.scores.cwiseMin(1.0).cwiseMax(0.0);
  return out;
}

void check_targets(std::span<const RegressionProblem> problems) {
  if (problems.empty()) throw Error(ErrorCode::argument, "no regression problems");
  const int P = problems.front().num_vars;
  std::vector<bool> seen(static_cast<std::size_t>(P), false);
  for (const auto& prob : problems) {
    if (prob.num_vars != P || prob.target < 0 || prob.target >= P || seen[static_cast<std::size_t>(prob.target)])
      throw Error(ErrorCode::argument, "problems must cover distinct targets of one network");
    seen[static_cast<std::size_t>(prob.target)] = true;
    require_standardized(prob);
  }
}

template <class ScoreFn>
SubsetScoreTable score_subsets(const RegressionProblem& problem, int d_max, bool with_prior, ScoreFn&& score) {
  if (problem.response_constant)
    throw Error(ErrorCode::degenerate_target, "response of target " + std::to_string(problem.target) + " is constant");
  const std::vector<int> candidates = problem.candidate_columns();
  const int c = static_cast<int>(candidates.size());
  if (d_max < 0) throw Error(ErrorCode::argument, "d_max must be >= 0");
  const int d = std::min(d_max, c);

  SubsetScoreTable table;
  table.target = problem.target;
  for (Subset& local : enumerate_subsets(c, d)) {
    for (int& idx : local) idx = candidates[static_cast<std::size_t>(idx)];
    double value = kNegInf;
    try {
      value = score(local);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::singular && e.code() != ErrorCode::small_sample) throw;
      ++table.skipped;
    }
    table.prior_log_weights.push_back(with_prior ? -log_binomial(c, static_cast<int>(local.size())) : 0.0);
    table.log_scores.push_back(value);
    table.subsets.push_back(std::move(local));
  }
  const bool any_finite =
      std::any_of(table.log_scores.begin(), table.log_scores.end(), [](double v) { return std::isfinite(v); });
  if (!any_finite)
    throw Error(ErrorCode::degenerate_target, "no scorable subset for target " + std::to_string(problem.target));
  return table;
}

}  // namespace

std::vector<Subset> enumerate_subsets(int num_candidates, int d_max, std::size_t cap) {
  if (num_candidates < 0 || d_max < 0) throw Error(ErrorCode::argument, "candidate count and d_max must be >= 0");
  if (d_max > num_candidates)
    throw Error(ErrorCode::argument, "d_max = " + std::to_string(d_max) + " exceeds " +
                                         std::to_string(num_candidates) + " candidates");
  double total = 0.0;
  for (int k = 0; k <= d_max; ++k) total += std::exp(log_binomial(num_candidates, k));
  if (total > static_cast<double>(cap) + 0.5)
    throw Error(ErrorCode::too_large, "enumerating " + std::to_string(static_cast<long long>(total)) +
                                          " subsets exceeds the cap of " + std::to_string(cap) +
                                          "; model-space MCMC is not supported, lower d_max");

  std::vector<Subset> out;
  out.reserve(static_cast<std::size_t>(total + 0.5));
  out.emplace_back();
  for (int k = 1; k <= d_max; ++k) {
    Subset s(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = i;
    for (;;) {
      out.push_back(s);
      int i = k - 1;
      while (i >= 0 && s[static_cast<std::size_t>(i)] == num_candidates - k + i) --i;
      if (i < 0) break;
      ++s[static_cast<std::size_t>(i)];
      for (int r = i + 1; r < k; ++r) s[static_cast<std::size_t>(r)] = s[static_cast<std::size_t>(r - 1)] + 1;
    }
  }
  return out;
}

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double gprior_log_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, std::span<const int> subset,
                           double g) {
  if (!(g > 0.0)) throw Error(ErrorCode::argument, "g must be > 0");
  const Projection proj = project(y, design, subset);
  const double n = static_cast<double>(y.size());
  const double m = static_cast<double>(subset.size());
  const double quad = y.squaredNorm() - (g / (1.0 + g)) * proj.fitted_sq;
  return -0.5 * m * std::log1p(g) - 0.5 * n * std::log(std::max(quad, 0.0));
}

double gprior_log_marginal(const RegressionProblem& problem, std::span<const int> subset,
                           std::optional<double> g_factor) {
  return gprior_log_marginal(problem.response, problem.design, subset,
                             g_factor.value_or(static_cast<double>(problem.rows())));
}

double aicc_score(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, std::span<const int> subset) {
  const int n = static_cast<int>(y.size());
  const int m = static_cast<int>(subset.size());
  if (n <= m + 1)
    throw Error(ErrorCode::small_sample, "AICc needs n > m + 1 (n = " + std::to_string(n) +
                                             ", m = " + std::to_string(m) + ")");
  const Projection proj = project(y, design, subset);
  const double sigma2 = std::max(proj.residual_sq / n, std::numeric_limits<double>::min());
  return n * std::log(sigma2) + 2.0 * m + 2.0 * m * (m + 1.0) / (n - m - 1.0);
}

double aicc_score(const RegressionProblem& problem, std::span<const int> subset) {
  return aicc_score(problem.response, problem.design, subset);
}

std::vector<double> SubsetScoreTable::posterior() const {
  std::vector<double> w(log_scores.size(), 0.0);
  double top = kNegInf;
  for (std::size_t s = 0; s < w.size(); ++s) top = std::max(top, log_scores[s] + prior_log_weights[s]);
  if (!std::isfinite(top)) return w;
  double total = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    const double v = log_scores[s] + prior_log_weights[s];
    w[s] = std::isfinite(v) ? std::exp(v - top) : 0.0;
    total += w[s];
  }
  for (double& x : w) x /= total;
  return w;
}

SubsetScoreTable score_subsets_bayes(const RegressionProblem& problem, int d_max, std::optional<double> g_factor) {
  return score_subsets(problem, d_max, true,
                       [&](const Subset& s) { return gprior_log_marginal(problem, s, g_factor); });
}

SubsetScoreTable score_subsets_aicc(const RegressionProblem& problem, int d_max) {
  return score_subsets(problem, d_max, false, [&](const Subset& s) { return -0.5 * aicc_score(problem, s); });
}

const char* to_string(Semantics s) noexcept {
  return s == Semantics::posterior_probability ? "posterior_probability" : "akaike_weight";
}

EdgeScores bayes_edge_posteriors(std::span<const RegressionProblem> problems, int d_max,
                                 std::optional<double> g_factor) {
  check_targets(problems);
  std::vector<SubsetScoreTable> tables;
  for (const auto& prob : problems) tables.push_back(score_subsets_bayes(prob, d_max, g_factor));
  return aggregate_edges(problems, Semantics::posterior_probability, tables);
}

AiccEdgeResult aicc_edge_scores(std::span<const RegressionProblem> problems, int d_max) {
  check_targets(problems);
  std::vector<SubsetScoreTable> tables;
  AiccEdgeResult result;
  for (const auto& prob : problems) {
    tables.push_back(score_subsets_aicc(prob, d_max));
    const auto& t = tables.back();
    const auto best = std::max_element(t.log_scores.begin(), t.log_scores.end());
    result.best_subsets.push_back(t.subsets[static_cast<std::size_t>(best - t.log_scores.begin())]);
  }
  result.scores = aggregate_edges(problems, Semantics::akaike_weight, tables);
  return result;
}

Network threshold_graph(const EdgeScores& scores, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::argument, "epsilon must lie in [0, 1]");
  Network g(scores.num_vars);
  for (int i = 0; i < scores.num_vars; ++i)
    for (int j = 0; j < scores.num_vars; ++j)
      if (scores.mask(i, j) && scores.scores(i, j) > epsilon) g.set_edge(i, j);
  return g;
}

EdgeScores infer(std::span<const simulation::Dataset> datasets, const regression::SchemeConfig& scheme) {
  const auto problems = regression::prepare_problems(datasets, scheme);
  if (scheme.selector == regression::Selector::bayes)
    return bayes_edge_posteriors(problems, scheme.d_max, scheme.g_factor);
  return aicc_edge_scores(problems, scheme.d_max).scores;
}

}  // namespace netbench::selection
