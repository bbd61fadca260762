#include "netbench/regress.hpp"

#include <cmath>
#include <sstream>

#include "netbench/error.hpp"

namespace netbench::regression {

const char* to_string(Selector s) noexcept { return s == Selector::bayes ? "bayes" : "aicc"; }

const char* to_string(Design d) noexcept { return d == Design::standard ? "standard" : "quadratic"; }

const char* to_string(VarianceModel v) noexcept {
  switch (v) {
    case VarianceModel::alpha0: return "a0";
    case VarianceModel::alpha1: return "a1";
    case VarianceModel::alpha2: return "a2";
    case VarianceModel::var_model: return "var";
  }
  return "unknown";
}

std::string SchemeConfig::id() const {
  return std::string(to_string(selector)) + "-" + to_string(design) + "-" + (lagged ? "lag" : "nolag") + "-" +
         to_string(variance);
}

SchemeConfig scheme_from_id(const std::string& id) {
  std::vector<std::string> parts;
  std::stringstream ss(id);
  for (std::string part; std::getline(ss, part, '-');) parts.push_back(part);
  auto fail = [&] { throw Error(ErrorCode::usage, "malformed scheme id '" + id + "'", "scheme_id"); };
  if (parts.size() != 4) fail();
  SchemeConfig s;
  if (parts[0] == "bayes") s.selector = Selector::bayes;
  else if (parts[0] == "aicc") s.selector = Selector::aicc;
  else fail();
  if (parts[1] == "standard") s.design = Design::standard;
  else if (parts[1] == "quadratic") s.design = Design::quadratic;
  else fail();
  if (parts[2] == "lag") s.lagged = true;
  else if (parts[2] != "nolag") fail();
  if (parts[3] == "a0") s.variance = VarianceModel::alpha0;
  else if (parts[3] == "a1") s.variance = VarianceModel::alpha1;
  else if (parts[3] == "a2") s.variance = VarianceModel::alpha2;
  else if (parts[3] == "var") s.variance = VarianceModel::var_model;
  else fail();
  return s;
}

std::vector<SchemeConfig> full_grid(double lag_minutes, int d_max) {
  std::vector<SchemeConfig> grid;
  for (Selector sel : {Selector::bayes, Selector::aicc})
    for (Design des : {Design::standard, Design::quadratic})
      for (bool lagged : {false, true})
        for (VarianceModel v :
             {VarianceModel::alpha0, VarianceModel::alpha1, VarianceModel::alpha2, VarianceModel::var_model}) {
          SchemeConfig s;
          s.selector = sel;
          s.design = des;
          s.lagged = lagged;
          s.lag_minutes = lagged ? lag_minutes : 0.0;
          s.variance = v;
          s.d_max = d_max;
          grid.push_back(s);
        }
  return grid;
}

int num_design_columns(const SchemeConfig& scheme, int num_vars) {
  int c = num_vars;
  if (scheme.design == Design::quadratic)
    c += scheme.quadratic_squares ? num_vars * (num_vars + 1) / 2 : num_vars * (num_vars - 1) / 2;
  return scheme.lagged ? 2 * c : c;
}

void validate(const SchemeConfig& scheme, int num_vars) {
  const int c = num_design_columns(scheme, num_vars);
  if (scheme.d_max < 0 || scheme.d_max > c)
    throw Error(ErrorCode::usage,
                "d_max = " + std::to_string(scheme.d_max) + " exceeds the " + std::to_string(c) +
                    " candidate predictors",
                "d_max");
  if (!(scheme.epsilon >= 0.0 && scheme.epsilon <= 1.0))
    throw Error(ErrorCode::usage, "epsilon must lie in [0, 1]", "epsilon");
  if (scheme.lagged && !(scheme.lag_minutes > 0.0))
    throw Error(ErrorCode::usage, "lagged schemes need lag_minutes > 0", "lag_minutes");
  if (scheme.g_factor && !(*scheme.g_factor > 0.0))
    throw Error(ErrorCode::usage, "g_factor must be > 0", "g_factor");
}

std::string ColumnLabel::describe() const {
  std::string name = "x" + std::to_string(source + 1);
  if (transform == Transform::product || partner >= 0) name += "*x" + std::to_string(partner + 1);
  if (lag > 0.0) {
    std::ostringstream os;
    os << name << "(t-" << lag << ")";
    name = os.str();
  }
  return name;
}

std::vector<int> RegressionProblem::candidate_columns() const {
  std::vector<int> out;
  for (int c = 0; c < cols(); ++c)
    if (!labels[static_cast<std::size_t>(c)].constant) out.push_back(c);
  return out;
}

namespace {

constexpr double kTimeTolerance = 1e-9;

void check_times(const Dataset& ds) {
  if (ds.times.size() < 2) throw Error(ErrorCode::degenerate_interval, "dataset needs at least one interval");
  if (static_cast<Eigen::Index>(ds.times.size()) != ds.values.rows())
    throw Error(ErrorCode::argument, "dataset time and value rows differ");
  for (std::size_t j = 1; j < ds.times.size(); ++j)
    if (!(ds.times[j] > ds.times[j - 1]))
      throw Error(ErrorCode::degenerate_interval,
                  "non-increasing or duplicate time stamp at row " + std::to_string(j));
}

bool evenly_sampled(const std::vector<double>& t) {
  const double delta = t[1] - t[0];
  for (std::size_t j = 2; j < t.size(); ++j)
    if (std::abs((t[j] - t[j - 1]) - delta) > kTimeTolerance * std::max(1.0, delta)) return false;
  return true;
}

// Base (unlagged) column labels for the standard or quadratic basis.
std::vector<ColumnLabel> base_labels(const SchemeConfig& scheme, int P) {
  std::vector<ColumnLabel> labels;
  for (int i = 0; i < P; ++i) labels.push_back({i, -1, Transform::identity, 0.0, false});
  if (scheme.design == Design::quadratic) {
    for (int i = 0; i < P; ++i)
      for (int k = scheme.quadratic_squares ? i : i + 1; k < P; ++k)
        labels.push_back({i, k, Transform::product, 0.0, false});
  }
  return labels;
}

double column_value(const ColumnLabel& label, const Eigen::RowVectorXd& y) {
  return label.partner >= 0 ? y(label.source) * y(label.partner) : y(label.source);
}

}  // namespace

FiniteDifferences finite_differences(const Dataset& dataset) {
  check_times(dataset);
  const Eigen::Index n = dataset.values.rows() - 1;
  FiniteDifferences fd;
  fd.responses.resize(n, dataset.values.cols());
  fd.intervals.resize(n);
  for (Eigen::Index j = 1; j <= n; ++j) {
    const double delta = dataset.times[static_cast<std::size_t>(j)] - dataset.times[static_cast<std::size_t>(j - 1)];
    fd.intervals(j - 1) = delta;
    fd.responses.row(j - 1) = (dataset.values.row(j) - dataset.values.row(j - 1)) / delta;
  }
  return fd;
}

RegressionProblem build_design(const Dataset& dataset, const SchemeConfig& scheme, int target) {
  return build_design(std::span<const Dataset>(&dataset, 1), scheme, target);
}

RegressionProblem build_design(std::span<const Dataset> datasets, const SchemeConfig& scheme, int target) {
  if (datasets.empty()) throw Error(ErrorCode::argument, "no datasets to build a design from");
  const int P = datasets.front().num_vars();
  if (target < 0 || target >= P) throw Error(ErrorCode::argument, "target " + std::to_string(target) + " out of range");
  for (const auto& ds : datasets) {
    if (ds.num_vars() != P) throw Error(ErrorCode::argument, "pooled datasets differ in num_vars");
    check_times(ds);
  }

  const std::vector<ColumnLabel> base = base_labels(scheme, P);
  std::vector<ColumnLabel> labels = base;
  if (scheme.lagged) {
    for (ColumnLabel l : base) {
      l.transform = l.partner >= 0 ? Transform::product : Transform::lagged;
      l.lag = scheme.lag_minutes;
      labels.push_back(l);
    }
  }

  struct Row {
    double response;
    double interval;
    int group;
    Eigen::Index predictor;  // row index of Y(t_{j-1})
    Eigen::Index lagged;     // row index of Y(t_{j-1} - lag), or -1
    std::size_t dataset;
  };
  std::vector<Row> rows;
  const bool var_mode = scheme.variance == VarianceModel::var_model;

  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& ds = datasets[d];
    const auto& t = ds.times;
    if (scheme.lagged) {
      if (!(scheme.lag_minutes > 0.0)) throw Error(ErrorCode::alignment, "lag must be > 0", "lag_minutes");
      if (evenly_sampled(t)) {
        const double delta = t[1] - t[0];
        const double ratio = scheme.lag_minutes / delta;
        if (std::abs(ratio - std::round(ratio)) * delta > kTimeTolerance)
          throw Error(ErrorCode::alignment,
                      "lag " + std::to_string(scheme.lag_minutes) +
                          " min is not a multiple of the sampling interval " + std::to_string(delta),
                      "lag_minutes");
      }
    }
    for (std::size_t j = 1; j < t.size(); ++j) {
      Row row{};
      row.dataset = d;
      row.group = static_cast<int>(d);
      row.predictor = static_cast<Eigen::Index>(j - 1);
      row.interval = t[j] - t[j - 1];
      row.lagged = -1;
      if (scheme.lagged) {
        // Latest sample at or before t_{j-1} - lag.
        const double wanted = t[j - 1] - scheme.lag_minutes;
        for (std::size_t k = j; k-- > 0;) {
          if (t[k] <= wanted + kTimeTolerance) {
            row.lagged = static_cast<Eigen::Index>(k);
            break;
          }
        }
        if (row.lagged < 0) continue;
      }
      const double now = ds.values(static_cast<Eigen::Index>(j), target);
      const double prev = ds.values(row.predictor, target);
      row.response = var_mode ? now : (now - prev) / row.interval;
      rows.push_back(row);
    }
  }
  if (rows.empty())
    throw Error(ErrorCode::alignment,
                "no rows have history for lag " + std::to_string(scheme.lag_minutes) + " min", "lag_minutes");

  RegressionProblem prob;
  prob.target = target;
  prob.num_vars = P;
  prob.var_mode = var_mode;
  prob.labels = labels;
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto C = static_cast<Eigen::Index>(labels.size());
  prob.response.resize(m);
  prob.intervals.resize(m);
  prob.design.resize(m, C);
  prob.group.resize(rows.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    const Row& row = rows[static_cast<std::size_t>(r)];
    const auto& ds = datasets[row.dataset];
    prob.response(r) = row.response;
    prob.intervals(r) = row.interval;
    prob.group[static_cast<std::size_t>(r)] = row.group;
    const Eigen::RowVectorXd y = ds.values.row(row.predictor);
    for (std::size_t c = 0; c < base.size(); ++c) prob.design(r, static_cast<Eigen::Index>(c)) = column_value(base[c], y);
    if (scheme.lagged) {
      const Eigen::RowVectorXd yl = ds.values.row(row.lagged);
      for (std::size_t c = 0; c < base.size(); ++c)
        prob.design(r, static_cast<Eigen::Index>(base.size() + c)) = column_value(base[c], yl);
    }
  }
  return prob;
}

RegressionProblem apply_variance_weights(RegressionProblem problem, VarianceModel variance) {
  if (problem.var_mode || variance == VarianceModel::var_model)
    throw Error(ErrorCode::invalid_scheme, "the VAR model has no variance function to apply");
  if (problem.weights_applied) throw Error(ErrorCode::argument, "variance weights already applied");
  const double alpha = variance == VarianceModel::alpha0 ? 0.0 : variance == VarianceModel::alpha1 ? 1.0 : 2.0;
  if (alpha != 0.0) {
    for (Eigen::Index r = 0; r < problem.design.rows(); ++r) {
      const double w = std::pow(problem.intervals(r), alpha / 2.0);
      problem.design.row(r) *= w;
      problem.response(r) *= w;
    }
  }
  problem.weights_applied = true;
  return problem;
}

namespace {

// Returns false when the vector is (numerically) constant.
bool standardize_in_place(Eigen::Ref<Eigen::VectorXd> v) {
  const double mean = v.mean();
  v.array() -= mean;
  const double var = v.squaredNorm() / static_cast<double>(v.size());
  if (var < 1e-12) {
    v.setZero();
    return false;
  }
  v /= std::sqrt(var);
  return true;
}

}  // namespace

RegressionProblem standardize(RegressionProblem problem) {
  for (Eigen::Index c = 0; c < problem.design.cols(); ++c) {
    Eigen::VectorXd col = problem.design.col(c);
    problem.labels[static_cast<std::size_t>(c)].constant = !standardize_in_place(col);
    problem.design.col(c) = col;
  }
  problem.response_constant = !standardize_in_place(problem.response);
  problem.standardized = true;
  return problem;
}

std::vector<RegressionProblem> prepare_problems(std::span<const Dataset> datasets, const SchemeConfig& scheme) {
  if (datasets.empty()) throw Error(ErrorCode::argument, "no datasets");
  validate(scheme, datasets.front().num_vars());
  std::vector<RegressionProblem> out;
  for (int p = 0; p < datasets.front().num_vars(); ++p) {
    RegressionProblem prob = build_design(datasets, scheme, p);
    if (!prob.var_mode) prob = apply_variance_weights(std::move(prob), scheme.variance);
    out.push_back(standardize(std::move(prob)));
  }
  return out;
}

Eigen::VectorXd ols_coefficients(const RegressionProblem& problem) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(problem.design);
  if (qr.rank() < problem.design.cols()) throw Error(ErrorCode::singular, "design matrix is rank deficient");
  return qr.solve(problem.response);
}

Eigen::MatrixXd estimate_jacobian(std::span<const Dataset> datasets) {
  if (datasets.empty()) throw Error(ErrorCode::argument, "no datasets");
  const int P = datasets.front().num_vars();
  SchemeConfig scheme;
  Eigen::MatrixXd A(P, P);
  for (int p = 0; p < P; ++p) {
    RegressionProblem prob = build_design(datasets, scheme, p);
    // Demean within each dataset: one intercept per trajectory.
    const int groups = static_cast<int>(datasets.size());
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(groups, prob.cols() + 1);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(groups);
    for (int r = 0; r < prob.rows(); ++r) {
      const int g = prob.group[static_cast<std::size_t>(r)];
      sums.row(g).head(prob.cols()) += prob.design.row(r);
      sums(g, prob.cols()) += prob.response(r);
      counts(g) += 1.0;
    }
    for (int r = 0; r < prob.rows(); ++r) {
      const int g = prob.group[static_cast<std::size_t>(r)];
      prob.design.row(r) -= sums.row(g).head(prob.cols()) / counts(g);
      prob.response(r) -= sums(g, prob.cols()) / counts(g);
    }
    A.row(p) = ols_coefficients(prob).transpose();
  }
  return A;
}

}  // namespace netbench::regression
