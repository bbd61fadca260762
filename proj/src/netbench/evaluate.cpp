#include "netbench/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "netbench/config.hpp"
#include "netbench/error.hpp"
#include "netbench/parallel.hpp"
#include "netbench/rng.hpp"

namespace netbench::evaluation {

namespace fs = std::filesystem;

namespace {

struct Scored {
  double score;
  bool positive;
};

std::vector<Scored> evaluable_entries(const EdgeScores& scores, const Network& truth, bool include_self) {
  if (scores.num_vars != truth.num_vars() || scores.scores.rows() != scores.num_vars ||
      scores.scores.cols() != scores.num_vars || scores.mask.rows() != scores.num_vars ||
      scores.mask.cols() != scores.num_vars)
    throw Error(ErrorCode::argument, "edge scores and truth have different dimensions");
  std::vector<Scored> out;
  for (int i = 0; i < scores.num_vars; ++i)
    for (int j = 0; j < scores.num_vars; ++j) {
      if (i == j && !include_self) continue;
      if (!scores.evaluable(i, j)) continue;
      out.push_back({scores.scores(i, j), truth.edge(i, j)});
    }
  return out;
}

}  // namespace

RocResult roc_auc(const EdgeScores& scores, const Network& truth, bool include_self_edges) {
  std::vector<Scored> entries = evaluable_entries(scores, truth, include_self_edges);
  for (const auto& e : entries)
    if (std::isnan(e.score)) throw Error(ErrorCode::argument, "edge score is NaN");
  RocResult res;
  for (const auto& e : entries) (e.positive ? res.num_true_edges : res.num_false_edges)++;
  if (res.num_true_edges == 0 || res.num_false_edges == 0)
    throw Error(ErrorCode::undefined_aur, "AUR needs at least one true and one false edge among evaluated entries");

  std::sort(entries.begin(), entries.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  const double P = res.num_true_edges;
  const double N = res.num_false_edges;

  // Sweep distinct thresholds from the top; count 2 per won pair, 1 per tie.
  long long tp = 0, fp = 0;
  long long twice_u = 0;
  res.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (std::size_t k = 0; k < entries.size();) {
    std::size_t end = k;
    long long pos = 0, neg = 0;
    while (end < entries.size() && entries[end].score == entries[k].score) {
      (entries[end].positive ? pos : neg)++;
      ++end;
    }
    const long long neg_below = res.num_false_edges - fp - neg;
    twice_u += pos * (2 * neg_below + neg);
    tp += pos;
    fp += neg;
    res.points.push_back({entries[k].score, static_cast<double>(fp) / N, static_cast<double>(tp) / P});
    k = end;
  }
  res.aur = static_cast<double>(twice_u) / (2.0 * P * N);
  return res;
}

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::aggregate: return "aggregate";
    case ExperimentKind::longitudinal: return "longitudinal";
    case ExperimentKind::interventions: return "interventions";
  }
  return "?";
}

void validate(const ExperimentSpec& spec) {
  if (spec.replicates < 1) throw Error(ErrorCode::argument, "replicates must be >= 1", "replicates");
  if (spec.grid.empty()) throw Error(ErrorCode::argument, "scheme grid is empty", "grid");
  if (spec.kind == ExperimentKind::longitudinal && spec.num_longitudinal < 1)
    throw Error(ErrorCode::argument, "num_longitudinal must be >= 1", "num_longitudinal");
  simulation::validate(spec.simulation, spec.model.num_vars());
  if (spec.kind == ExperimentKind::interventions && spec.simulation.intervention)
    throw Error(ErrorCode::argument, "interventions experiments choose the clamped variable themselves",
                "simulation.intervention");
  for (const auto& s : spec.grid) regression::validate(s, spec.model.num_vars());
}

std::optional<double> ExperimentResult::mean(std::size_t scheme) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& c : cells.at(scheme))
    if (c.aur) {
      sum += *c.aur;
      ++count;
    }
  if (count == 0) return std::nullopt;
  return sum / count;
}

std::optional<double> ExperimentResult::sd(std::size_t scheme) const {
  const auto m = mean(scheme);
  if (!m) return std::nullopt;
  double ss = 0.0;
  int count = 0;
  for (const auto& c : cells.at(scheme))
    if (c.aur) {
      ss += (*c.aur - *m) * (*c.aur - *m);
      ++count;
    }
  if (count < 2) return std::nullopt;
  return std::sqrt(ss / (count - 1));
}

std::uint64_t replicate_seed(std::uint64_t root, int replicate) {
  return derive_seed(root, {stream_replicate, static_cast<std::uint64_t>(replicate)});
}

std::vector<simulation::Dataset> simulate_replicate(const ExperimentSpec& spec, int replicate, int jobs) {
  simulation::SimulationConfig cfg = spec.simulation;
  cfg.seed = replicate_seed(spec.root_seed, replicate);
  switch (spec.kind) {
    case ExperimentKind::aggregate:
      cfg.mode = simulation::SamplingMode::destructive;
      return {simulation::simulate_aggregate(spec.model, cfg, jobs)};
    case ExperimentKind::longitudinal:
      cfg.mode = simulation::SamplingMode::longitudinal;
      return simulation::simulate_longitudinal(spec.model, cfg, spec.num_longitudinal, jobs);
    case ExperimentKind::interventions: {
      cfg.mode = simulation::SamplingMode::destructive;
      std::vector<simulation::Dataset> out;
      for (int p = 0; p < spec.model.num_vars(); ++p) {
        simulation::SimulationConfig c = cfg;
        c.intervention = simulation::Intervention{p};
        c.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(p)});
        out.push_back(simulation::simulate_aggregate(spec.model, c, jobs));
      }
      return out;
    }
  }
  return {};
}

namespace {

std::string describe_failure(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code())) + ": " + e.what();
  return std::string("runtime: ") + e.what();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  validate(spec);
  const auto R = static_cast<std::size_t>(spec.replicates);
  const std::size_t S = spec.grid.size();

  std::vector<std::vector<simulation::Dataset>> data(R);
  std::vector<std::string> sim_failure(R);
  // Simulation is seeded per replicate and per time point, so splitting the
  // worker budget either way yields the same numbers.
  const bool outer = static_cast<int>(R) >= jobs;
  auto simulate_one = [&](std::size_t r) {
    try {
      data[r] = simulate_replicate(spec, static_cast<int>(r), outer ? 1 : jobs);
    } catch (const std::exception& e) {
      sim_failure[r] = "simulation failed: " + describe_failure(e);
    }
  };
  if (outer) parallel_for(R, jobs, simulate_one);
  else for (std::size_t r = 0; r < R; ++r) simulate_one(r);

  const Network truth = spec.model.true_network();
  ExperimentResult result;
  result.name = spec.name;
  result.grid = spec.grid;
  result.replicates = spec.replicates;
  result.cells.assign(S, std::vector<CellOutcome>(R));
  parallel_for(S * R, jobs, [&](std::size_t idx) {
    const std::size_t s = idx / R;
    const std::size_t r = idx % R;
    CellOutcome& cell = result.cells[s][r];
    if (!sim_failure[r].empty()) {
      cell.failure = sim_failure[r];
      return;
    }
    try {
      cell.scores = selection::infer(data[r], spec.grid[s]);
      cell.roc = roc_auc(*cell.scores, truth, spec.include_self_edges);
      cell.aur = cell.roc->aur;
    } catch (const std::exception& e) {
      cell.failure = describe_failure(e);
    }
  });
  return result;
}

RegimeComparison compare_results(const ExperimentResult& first, const ExperimentResult& second, int resamples,
                                 double level, std::uint64_t seed) {
  if (first.grid.size() != second.grid.size() || first.replicates != second.replicates)
    throw Error(ErrorCode::argument, "regime results have mismatched grids or replicate counts");
  for (std::size_t s = 0; s < first.grid.size(); ++s)
    if (!(first.grid[s] == second.grid[s]))
      throw Error(ErrorCode::argument, "regime grids differ at scheme " + std::to_string(s));
  if (resamples < 1) throw Error(ErrorCode::argument, "resamples must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::argument, "level must lie in (0, 1)");

  RegimeComparison cmp;
  cmp.first_name = first.name;
  cmp.second_name = second.name;
  cmp.level = level;
  cmp.resamples = resamples;
  for (std::size_t s = 0; s < first.grid.size(); ++s) {
    RegimeDelta d;
    d.scheme_id = first.grid[s].id();
    d.mean_first = first.mean(s);
    d.mean_second = second.mean(s);
    std::vector<double> paired;
    for (int r = 0; r < first.replicates; ++r) {
      const auto& a = first.cells[s][static_cast<std::size_t>(r)].aur;
      const auto& b = second.cells[s][static_cast<std::size_t>(r)].aur;
      if (a && b) paired.push_back(*a - *b);
    }
    if (!paired.empty()) {
      const double K = static_cast<double>(paired.size());
      d.delta = std::accumulate(paired.begin(), paired.end(), 0.0) / K;
      Rng rng = make_rng(seed, {stream_regime_bootstrap, static_cast<std::uint64_t>(s)});
      std::uniform_int_distribution<std::size_t> pick(0, paired.size() - 1);
      std::vector<double> boot(static_cast<std::size_t>(resamples));
      int not_positive = 0;
      for (auto& b : boot) {
        double sum = 0.0;
        for (std::size_t k = 0; k < paired.size(); ++k) sum += paired[pick(rng)];
        b = sum / K;
        if (b <= 0.0) ++not_positive;
      }
      std::sort(boot.begin(), boot.end());
      const double tail = (1.0 - level) / 2.0;
      auto quantile = [&](double q) {
        const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(boot.size() - 1)));
        return boot[i];
      };
      d.ci_low = quantile(tail);
      d.ci_high = quantile(1.0 - tail);
      d.prob_not_positive = static_cast<double>(not_positive) / resamples;
    }
    cmp.deltas.push_back(std::move(d));
  }
  return cmp;
}

RegimeComparison compare_regimes(const ExperimentSpec& first, const ExperimentSpec& second, int jobs,
                                 int resamples, double level) {
  auto shape = [](const ExperimentSpec& s) {
    simulation::SimulationConfig sim = s.simulation;
    sim.sampling_times.clear();
    config::json j = config::to_json(sim);
    j["model"] = config::to_json(s.model);
    j["kind"] = to_string(s.kind);
    j["num_longitudinal"] = s.num_longitudinal;
    j["replicates"] = s.replicates;
    j["include_self_edges"] = s.include_self_edges;
    j["root_seed"] = s.root_seed;
    return j;
  };
  if (first.grid != second.grid) throw Error(ErrorCode::argument, "regime specs have different scheme grids");
  if (shape(first) != shape(second))
    throw Error(ErrorCode::argument, "regime specs must differ only in sampling times");
  const ExperimentResult a = run_experiment(first, jobs);
  const ExperimentResult b = run_experiment(second, jobs);
  return compare_results(a, b, resamples, level, first.root_seed);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? config::format_double(*v) : std::string(); }

std::string csv_field(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

std::vector<fs::path> write_aur_summary(const ExperimentResult& result, const fs::path& dir,
                                        const fs::path& relative) {
  std::string table = "scheme_id,selector,design,lagged,variance";
  for (int r = 1; r <= result.replicates; ++r) table += ",rep_" + std::to_string(r);
  table += ",mean,sd\n";
  std::string failures = "scheme_id,replicate,reason\n";
  for (std::size_t s = 0; s < result.grid.size(); ++s) {
    const auto& sc = result.grid[s];
    table += sc.id() + "," + regression::to_string(sc.selector) + "," + regression::to_string(sc.design) + "," +
             (sc.lagged ? "yes" : "no") + "," + regression::to_string(sc.variance);
    for (int r = 0; r < result.replicates; ++r) {
      const auto& cell = result.cells[s][static_cast<std::size_t>(r)];
      table += "," + opt(cell.aur);
      if (!cell.aur) failures += sc.id() + "," + std::to_string(r + 1) + "," + csv_field(cell.failure) + "\n";
    }
    table += "," + opt(result.mean(s)) + "," + opt(result.sd(s)) + "\n";
  }
  const fs::path summary = relative / "aur_summary.csv";
  const fs::path fail = relative / "failures.csv";
  config::write_text_file(dir / summary, table);
  config::write_text_file(dir / fail, failures);
  return {summary, fail};
}

std::vector<fs::path> write_cell_artifacts(const ExperimentResult& result, const fs::path& dir,
                                           const fs::path& relative) {
  std::vector<fs::path> written;
  for (std::size_t s = 0; s < result.grid.size(); ++s) {
    const std::string id = result.grid[s].id();
    for (int r = 0; r < result.replicates; ++r) {
      const auto& cell = result.cells[s][static_cast<std::size_t>(r)];
      const std::string stem = "rep_" + std::to_string(r + 1);
      if (cell.scores) {
        config::json j = config::to_json(*cell.scores);
        j["scheme"] = id;
        j["replicate"] = r + 1;
        const fs::path p = relative / "scores" / id / (stem + ".json");
        config::write_text_file(dir / p, config::dump(j));
        written.push_back(p);
      }
      if (cell.roc) {
        const fs::path p = relative / "roc" / id / (stem + ".csv");
        write_roc_csv(*cell.roc, dir / p);
        written.push_back(p);
      }
    }
  }
  return written;
}

std::vector<fs::path> write_regime_comparison(const RegimeComparison& cmp, const fs::path& dir,
                                              const fs::path& relative) {
  std::string out = "scheme_id,regime_a,regime_b,mean_a,mean_b,delta,ci_low,ci_high,prob_delta_le_0\n";
  for (const auto& d : cmp.deltas) {
    out += d.scheme_id + "," + csv_field(cmp.first_name) + "," + csv_field(cmp.second_name) + "," +
           opt(d.mean_first) + "," + opt(d.mean_second) + "," + opt(d.delta) + ",";
    if (d.delta)
      out += config::format_double(d.ci_low) + "," + config::format_double(d.ci_high) + "," +
             config::format_double(d.prob_not_positive);
    else
      out += ",,";
    out += "\n";
  }
  const fs::path p = relative / "regime_comparison.csv";
  config::write_text_file(dir / p, out);
  return {p};
}

void write_roc_csv(const RocResult& roc, const fs::path& path) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& pt : roc.points)
    out += config::format_double(pt.threshold) + "," + config::format_double(pt.fpr) + "," +
           config::format_double(pt.tpr) + "\n";
  config::write_text_file(path, out);
}

}  // namespace netbench::evaluation
