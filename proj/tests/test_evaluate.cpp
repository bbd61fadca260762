#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "netbench/config.hpp"
#include "netbench/error.hpp"
#include "netbench/evaluate.hpp"
#include "oracles.hpp"

using namespace netbench;
using namespace netbench::evaluation;

namespace {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

EdgeScores make_scores(Eigen::MatrixXd s) {
  EdgeScores e;
  e.num_vars = static_cast<int>(s.rows());
  e.mask = Mask::Constant(s.rows(), s.cols(), true);
  e.scores = std::move(s);
  return e;
}

Network make_truth(std::initializer_list<std::pair<int, int>> edges, int P) {
  Network n(P);
  for (auto [i, j] : edges) n.set_edge(i, j);
  return n;
}

std::vector<double> even(double stop, int n) {
  std::vector<double> t;
  for (int j = 0; j <= n; ++j) t.push_back(stop * j / n);
  return t;
}

ExperimentSpec small_spec(std::vector<regression::SchemeConfig> grid, int replicates) {
  ExperimentSpec spec;
  spec.model = config::load_model("cantone-like");
  spec.simulation.sampling_times = even(280, 14);
  spec.simulation.initial_mean = (Eigen::VectorXd(5) << 2.0, 0.0, 0.1, 1.5, 0.0).finished();
  spec.simulation.initial_snr = 10.0;
  spec.simulation.snr_target = 10.0;
  spec.simulation.simulated_cells = 10;
  spec.grid = std::move(grid);
  spec.replicates = replicates;
  spec.root_seed = 77;
  return spec;
}

regression::SchemeConfig sid(const std::string& id) { return regression::scheme_from_id(id); }

}  // namespace

TEST_CASE("AUR examples") {
  // With P = 2 and self-edges included there are four evaluated entries.
  const auto truth = make_truth({{0, 0}, {0, 1}}, 2);
  CHECK(roc_auc(make_scores((Eigen::MatrixXd(2, 2) << 0.9, 0.8, 0.2, 0.1).finished()), truth, true).aur == 1.0);
  CHECK(roc_auc(make_scores((Eigen::MatrixXd(2, 2) << 0.9, 0.4, 0.7, 0.1).finished()), truth, true).aur == 0.75);
  const auto flat = roc_auc(make_scores(Eigen::MatrixXd::Constant(2, 2, 0.3)), truth, true);
  CHECK(flat.aur == 0.5);
  CHECK(flat.num_true_edges == 2);
  CHECK(flat.num_false_edges == 2);
}

TEST_CASE("ROC curve runs from (0,0) to (1,1)") {
  const auto truth = make_truth({{0, 1}, {1, 2}}, 3);
  const auto roc = roc_auc(make_scores((Eigen::MatrixXd(3, 3) << 0, 0.9, 0.1, 0.5, 0, 0.7, 0.5, 0.2, 0).finished()),
                           truth);
  REQUIRE(roc.points.size() >= 2);
  CHECK(std::isinf(roc.points.front().threshold));
  CHECK(roc.points.front().fpr == 0.0);
  CHECK(roc.points.front().tpr == 0.0);
  CHECK(roc.points.back().fpr == 1.0);
  CHECK(roc.points.back().tpr == 1.0);
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    CHECK(roc.points[k].threshold < roc.points[k - 1].threshold);
    CHECK(roc.points[k].fpr >= roc.points[k - 1].fpr);
    CHECK(roc.points[k].tpr >= roc.points[k - 1].tpr);
  }
  // Four off-diagonal false entries {0.1, 0.5, 0.5, 0.2}; true {0.9, 0.7}.
  CHECK(roc.num_false_edges == 4);
  CHECK(roc.aur == 1.0);
}

TEST_CASE("degenerate truth leaves the AUR undefined") {
  const auto s = make_scores(Eigen::MatrixXd::Constant(2, 2, 0.5));
  try {
    roc_auc(s, make_truth({}, 2));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_aur);
  }
  CHECK_THROWS_AS(roc_auc(s, make_truth({{0, 1}, {1, 0}}, 2)), Error);
  CHECK_THROWS_AS(roc_auc(s, make_truth({{0, 1}}, 3)), Error);
}

TEST_CASE("property: AUR equals pair counting, survives monotone maps and relabeling") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(2, 10), level(0, 8);
  std::bernoulli_distribution coin(0.35), hidden(0.1);
  for (int trial = 0; trial < 200; ++trial) {
    const int P = dim(rng);
    Eigen::MatrixXd s(P, P);
    Network truth(P);
    Mask mask = Mask::Constant(P, P, true);
    for (int i = 0; i < P; ++i)
      for (int j = 0; j < P; ++j) {
        s(i, j) = level(rng) / 8.0;  // coarse levels force ties
        if (coin(rng)) truth.set_edge(i, j);
        if (hidden(rng)) mask(i, j) = false;
      }
    const bool self = trial % 2 == 0;
    std::vector<double> pos, neg;
    for (int i = 0; i < P; ++i)
      for (int j = 0; j < P; ++j) {
        if (!mask(i, j) || (!self && i == j)) continue;
        (truth.edge(i, j) ? pos : neg).push_back(s(i, j));
      }
    if (pos.empty() || neg.empty()) continue;
    EdgeScores e = make_scores(s);
    e.mask = mask;
    const double aur = roc_auc(e, truth, self).aur;
    CHECK(aur == oracle::pairwise_aur(pos, neg));

    EdgeScores cubed = e;
    cubed.scores = s.array().cube();
    CHECK(roc_auc(cubed, truth, self).aur == aur);

    std::vector<int> perm(static_cast<std::size_t>(P));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EdgeScores permuted = e;
    Network permuted_truth(P);
    for (int i = 0; i < P; ++i)
      for (int j = 0; j < P; ++j) {
        permuted.scores(perm[i], perm[j]) = s(i, j);
        permuted.mask(perm[i], perm[j]) = mask(i, j);
        permuted_truth.set_edge(perm[i], perm[j], truth.edge(i, j));
      }
    CHECK(roc_auc(permuted, permuted_truth, self).aur == aur);
  }
}

TEST_CASE("experiments are a pure function of spec and root seed") {
  const auto spec = small_spec({sid("bayes-standard-nolag-a0"), sid("aicc-standard-nolag-var")}, 2);
  const auto a = run_experiment(spec, 1);
  const auto b = run_experiment(spec, 3);
  REQUIRE(a.cells.size() == 2);
  for (std::size_t s = 0; s < 2; ++s)
    for (int r = 0; r < 2; ++r) {
      REQUIRE(a.cells[s][r].aur);
      CHECK(*a.cells[s][r].aur == *b.cells[s][r].aur);
      CHECK(a.cells[s][r].scores->scores == b.cells[s][r].scores->scores);
    }
  CHECK(replicate_seed(77, 0) != replicate_seed(77, 1));
  CHECK(replicate_seed(77, 1) == replicate_seed(77, 1));

  auto other = spec;
  other.root_seed = 78;
  CHECK(run_experiment(other).cells[0][0].scores->scores != a.cells[0][0].scores->scores);
}

TEST_CASE("even sampling gives identical AUR across alpha") {
  const auto spec = small_spec(
      {sid("bayes-standard-nolag-a0"), sid("bayes-standard-nolag-a1"), sid("bayes-standard-nolag-a2")}, 3);
  const auto res = run_experiment(spec);
  for (int r = 0; r < 3; ++r) {
    CHECK(*res.cells[1][r].aur == doctest::Approx(*res.cells[0][r].aur).epsilon(1e-12));
    CHECK(*res.cells[2][r].aur == doctest::Approx(*res.cells[0][r].aur).epsilon(1e-12));
  }
}

TEST_CASE("zero-noise linear model is reconstructed") {
  ExperimentSpec spec;
  spec.model = config::load_model("linear5");
  spec.simulation.sampling_times = even(100, 100);
  spec.simulation.initial_mean = (Eigen::VectorXd(5) << 2.0, 0.1, 1.0, 0.5, 0.2).finished();
  spec.simulation.initial_sd = 0.0;
  spec.simulation.sigma_meas = 0.0;
  spec.grid = {sid("bayes-standard-nolag-a0")};
  spec.replicates = 1;
  const auto res = run_experiment(spec);
  REQUIRE(res.cells[0][0].aur);
  CHECK(*res.cells[0][0].aur >= 0.95);
}

TEST_CASE("failing schemes become missing cells") {
  auto bad = sid("bayes-standard-lag-a0");
  bad.lag_minutes = 30.0;  // not a multiple of the 20 min interval
  const auto res = run_experiment(small_spec({sid("bayes-standard-nolag-a0"), bad}, 2));
  CHECK(res.cells[0][0].aur);
  for (int r = 0; r < 2; ++r) {
    CHECK(!res.cells[1][r].aur);
    CHECK(res.cells[1][r].failure.starts_with("alignment"));
  }
  CHECK(res.mean(0));
  CHECK(!res.mean(1));
  CHECK(!res.sd(1));
}

TEST_CASE("mean and sd over present replicates") {
  ExperimentResult r;
  r.grid = {sid("bayes-standard-nolag-a0")};
  r.replicates = 3;
  auto cell = [](std::optional<double> aur) {
    CellOutcome c;
    c.aur = aur;
    return c;
  };
  r.cells = {{cell(0.6), cell(std::nullopt), cell(0.8)}};
  CHECK(*r.mean(0) == doctest::Approx(0.7));
  CHECK(*r.sd(0) == doctest::Approx(std::sqrt(0.02)));
  r.cells[0][2].aur.reset();
  CHECK(*r.mean(0) == doctest::Approx(0.6));
  CHECK(!r.sd(0));
}

TEST_CASE("regime comparison") {
  const auto spec = small_spec({sid("bayes-standard-nolag-a0")}, 3);
  const auto res = run_experiment(spec);
  const auto same = compare_results(res, res, 200, 0.9, 5);
  REQUIRE(same.deltas.size() == 1);
  CHECK(*same.deltas[0].delta == 0.0);
  CHECK(same.deltas[0].ci_low == 0.0);
  CHECK(same.deltas[0].ci_high == 0.0);
  CHECK(same.deltas[0].prob_not_positive == 1.0);

  const auto wider = run_experiment(small_spec({sid("bayes-standard-nolag-a0"), sid("aicc-standard-nolag-a0")}, 3));
  CHECK_THROWS_AS(compare_results(res, wider), Error);

  auto uneven = spec;
  uneven.simulation.sampling_times = {0, 1, 5, 10, 15, 20, 30, 40, 60, 90, 120, 160, 200, 240, 280};
  const auto cmp = compare_regimes(spec, uneven, 1, 200);
  CHECK(cmp.deltas[0].ci_low <= *cmp.deltas[0].delta);
  CHECK(*cmp.deltas[0].delta <= cmp.deltas[0].ci_high);
  auto other_model = uneven;
  other_model.replicates = 4;
  CHECK_THROWS_AS(compare_regimes(spec, other_model, 1, 50), Error);
}

TEST_CASE("noise-free linear control: regimes at matched n agree") {
  ExperimentSpec spec;
  spec.model = config::load_model("linear5");
  spec.simulation.sampling_times = even(100, 20);
  // One Euler step per interval: finite differences are then exactly f(Y),
  // so both regimes fit the drift without error.
  spec.simulation.substeps = 1;
  spec.simulation.initial_mean = (Eigen::VectorXd(5) << 2.0, 0.1, 1.0, 0.5, 0.2).finished();
  spec.simulation.initial_sd = 0.0;
  spec.simulation.sigma_meas = 0.0;
  spec.grid = {sid("bayes-standard-nolag-a0"), sid("bayes-standard-nolag-a1"), sid("bayes-standard-nolag-a2")};
  spec.replicates = 2;
  auto uneven = spec;
  uneven.simulation.sampling_times = {0, 1, 2, 3, 5, 7, 10, 13, 17, 21, 26, 31, 37, 43, 50, 58, 66, 75, 84, 92, 100};
  const auto cmp = compare_regimes(spec, uneven, 1, 100);
  for (const auto& d : cmp.deltas) {
    INFO(d.scheme_id << " " << *d.mean_first << " " << *d.mean_second);
    CHECK(std::abs(*d.delta) <= 0.05);
  }
}

TEST_CASE("experiment spec validation") {
  auto spec = small_spec({}, 1);
  CHECK_THROWS_AS(validate(spec), Error);
  spec.grid = {sid("bayes-standard-nolag-a0")};
  spec.replicates = 0;
  CHECK_THROWS_AS(validate(spec), Error);
}
