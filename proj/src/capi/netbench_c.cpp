#include "netbench/netbench.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "netbench/config.hpp"
#include "netbench/error.hpp"
#include "netbench/evaluate.hpp"
#include "netbench/runner.hpp"
#include "netbench/select.hpp"

struct nb_model {
  netbench::dynamics::DynamicalModel value;
};
struct nb_network {
  netbench::Network value;
};
struct nb_dataset {
  netbench::simulation::Dataset value;
};
struct nb_scores {
  netbench::selection::EdgeScores value;
};
struct nb_roc {
  netbench::evaluation::RocResult value;
};

namespace {

using netbench::Error;
using netbench::ErrorCode;
namespace config = netbench::config;
namespace regression = netbench::regression;

thread_local std::string last_message;
thread_local std::string last_field;

nb_status status_of(ErrorCode code) { return static_cast<nb_status>(static_cast<int>(code) + 1); }

nb_status fail(nb_status status, std::string message, std::string field = {}) {
  last_message = std::move(message);
  last_field = std::move(field);
  return status;
}

// Runs `fn`, mapping exceptions to statuses. `fn` returns void.
template <class Fn>
nb_status guard(Fn&& fn) {
  try {
    fn();
    return NB_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what(), e.field());
  } catch (const nlohmann::json::exception& e) {
    return fail(NB_ERR_SCHEMA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(NB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NB_ERR_INTERNAL, e.what());
  }
}

#define NB_REQUIRE(cond, what)                                   \
  do {                                                           \
    if (!(cond)) return fail(NB_ERR_ARGUMENT, what " is NULL"); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

regression::SchemeConfig to_core(const nb_scheme_config& c) {
  regression::SchemeConfig s;
  if (c.selector != NB_SELECTOR_BAYES && c.selector != NB_SELECTOR_AICC)
    throw Error(ErrorCode::usage, "unknown selector", "selector");
  if (c.design != NB_DESIGN_STANDARD && c.design != NB_DESIGN_QUADRATIC)
    throw Error(ErrorCode::usage, "unknown design", "design");
  if (c.variance < NB_VARIANCE_A0 || c.variance > NB_VARIANCE_VAR)
    throw Error(ErrorCode::usage, "unknown variance model", "variance");
  s.selector = c.selector == NB_SELECTOR_BAYES ? regression::Selector::bayes : regression::Selector::aicc;
  s.design = c.design == NB_DESIGN_STANDARD ? regression::Design::standard : regression::Design::quadratic;
  s.lagged = c.lagged != 0;
  s.lag_minutes = c.lag_minutes;
  s.variance = static_cast<regression::VarianceModel>(static_cast<int>(c.variance));
  s.d_max = c.d_max;
  s.epsilon = c.epsilon;
  if (c.has_g_factor) s.g_factor = c.g_factor;
  s.quadratic_squares = c.quadratic_squares != 0;
  return s;
}

nb_scheme_config from_core(const regression::SchemeConfig& s) {
  nb_scheme_config c;
  c.selector = s.selector == regression::Selector::bayes ? NB_SELECTOR_BAYES : NB_SELECTOR_AICC;
  c.design = s.design == regression::Design::standard ? NB_DESIGN_STANDARD : NB_DESIGN_QUADRATIC;
  c.lagged = s.lagged ? 1 : 0;
  c.lag_minutes = s.lag_minutes;
  c.variance = static_cast<nb_variance>(static_cast<int>(s.variance));
  c.d_max = s.d_max;
  c.epsilon = s.epsilon;
  c.has_g_factor = s.g_factor ? 1 : 0;
  c.g_factor = s.g_factor.value_or(0.0);
  c.quadratic_squares = s.quadratic_squares ? 1 : 0;
  return c;
}

netbench::runner::RunOptions to_core(const nb_run_options* o) {
  netbench::runner::RunOptions r;
  if (!o) return r;
  if (o->output_dir) r.output_dir = o->output_dir;
  if (o->has_seed) r.seed = o->seed;
  if (o->jobs < 1) throw Error(ErrorCode::usage, "jobs must be >= 1", "jobs");
  r.jobs = o->jobs;
  return r;
}

}  // namespace

extern "C" {

const char* nb_status_name(nb_status status) {
  if (status == NB_OK) return "ok";
  if (status == NB_ERR_INTERNAL) return "internal";
  if (status > NB_OK && status < NB_ERR_INTERNAL) return netbench::to_string(static_cast<ErrorCode>(status - 1));
  return "unknown";
}

int nb_status_is_usage(nb_status status) {
  if (status <= NB_OK || status >= NB_ERR_INTERNAL) return 0;
  return netbench::is_usage_error(static_cast<ErrorCode>(status - 1)) ? 1 : 0;
}

const char* nb_last_error_message(void) { return last_message.c_str(); }
const char* nb_last_error_field(void) { return last_field.c_str(); }
const char* nb_version(void) { return netbench::runner::kVersion; }
void nb_string_free(char* s) { std::free(s); }

nb_status nb_model_load(const char* reference, nb_model** out) {
  NB_REQUIRE(reference, "reference");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = new nb_model{config::load_model(reference)}; });
}

nb_status nb_model_parse(const char* json_text, nb_model** out) {
  NB_REQUIRE(json_text, "json_text");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = new nb_model{config::parse_model(nlohmann::json::parse(json_text))}; });
}

int nb_model_num_vars(const nb_model* model) { return model ? model->value.num_vars() : 0; }

nb_status nb_model_to_json(const nb_model* model, char** out) {
  NB_REQUIRE(model, "model");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = dup_string(config::dump(config::to_json(model->value))); });
}

void nb_model_free(nb_model* model) { delete model; }

nb_status nb_network_load(const char* reference, nb_network** out) {
  NB_REQUIRE(reference, "reference");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = new nb_network{config::load_network(reference)}; });
}

nb_status nb_network_from_model(const nb_model* model, nb_network** out) {
  NB_REQUIRE(model, "model");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = new nb_network{model->value.true_network()}; });
}

int nb_network_num_vars(const nb_network* network) { return network ? network->value.num_vars() : 0; }

nb_status nb_network_edge(const nb_network* network, int from, int to, int* out) {
  NB_REQUIRE(network, "network");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = network->value.edge(from, to) ? 1 : 0; });
}

nb_status nb_network_to_json(const nb_network* network, char** out) {
  NB_REQUIRE(network, "network");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = dup_string(config::dump(config::to_json(network->value))); });
}

void nb_network_free(nb_network* network) { delete network; }

nb_status nb_dataset_read_csv(const char* path, nb_dataset** out) {
  NB_REQUIRE(path, "path");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = new nb_dataset{config::read_dataset_csv(path)}; });
}

nb_status nb_dataset_write_csv(const nb_dataset* dataset, const char* path) {
  NB_REQUIRE(dataset, "dataset");
  NB_REQUIRE(path, "path");
  return guard([&] { config::write_dataset_csv(dataset->value, path); });
}

nb_status nb_dataset_simulate(const nb_model* model, const char* simulation_json, int jobs, nb_dataset** out) {
  NB_REQUIRE(model, "model");
  NB_REQUIRE(simulation_json, "simulation_json");
  NB_REQUIRE(out, "out");
  return guard([&] {
    const auto cfg = config::parse_simulation(nlohmann::json::parse(simulation_json), model->value.num_vars());
    *out = new nb_dataset{netbench::simulation::simulate_aggregate(model->value, cfg, jobs < 1 ? 1 : jobs)};
  });
}

size_t nb_dataset_rows(const nb_dataset* dataset) { return dataset ? dataset->value.times.size() : 0; }
int nb_dataset_num_vars(const nb_dataset* dataset) { return dataset ? dataset->value.num_vars() : 0; }

nb_status nb_dataset_time(const nb_dataset* dataset, size_t row, double* out) {
  NB_REQUIRE(dataset, "dataset");
  NB_REQUIRE(out, "out");
  if (row >= dataset->value.times.size()) return fail(NB_ERR_ARGUMENT, "row out of range");
  *out = dataset->value.times[row];
  return NB_OK;
}

nb_status nb_dataset_value(const nb_dataset* dataset, size_t row, int var, double* out) {
  NB_REQUIRE(dataset, "dataset");
  NB_REQUIRE(out, "out");
  if (row >= dataset->value.times.size() || var < 0 || var >= dataset->value.num_vars())
    return fail(NB_ERR_ARGUMENT, "row or variable out of range");
  *out = dataset->value.values(static_cast<Eigen::Index>(row), var);
  return NB_OK;
}

void nb_dataset_free(nb_dataset* dataset) { delete dataset; }

void nb_scheme_default(nb_scheme_config* out) {
  if (out) *out = from_core(regression::SchemeConfig{});
}

nb_status nb_scheme_from_id(const char* id, nb_scheme_config* out) {
  NB_REQUIRE(id, "id");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = from_core(regression::scheme_from_id(id)); });
}

nb_status nb_scheme_id(const nb_scheme_config* scheme, char** out) {
  NB_REQUIRE(scheme, "scheme");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = dup_string(to_core(*scheme).id()); });
}

nb_status nb_scheme_validate(const nb_scheme_config* scheme, int num_vars) {
  NB_REQUIRE(scheme, "scheme");
  return guard([&] { regression::validate(to_core(*scheme), num_vars); });
}

nb_status nb_infer(const nb_dataset* const* datasets, size_t count, const nb_scheme_config* scheme,
                   nb_scores** out) {
  NB_REQUIRE(datasets, "datasets");
  NB_REQUIRE(scheme, "scheme");
  NB_REQUIRE(out, "out");
  if (count == 0) return fail(NB_ERR_ARGUMENT, "no datasets");
  return guard([&] {
    std::vector<netbench::simulation::Dataset> pooled;
    for (size_t k = 0; k < count; ++k) {
      if (!datasets[k]) throw Error(ErrorCode::argument, "dataset " + std::to_string(k) + " is NULL");
      pooled.push_back(datasets[k]->value);
    }
    *out = new nb_scores{netbench::selection::infer(pooled, to_core(*scheme))};
  });
}

int nb_scores_num_vars(const nb_scores* scores) { return scores ? scores->value.num_vars : 0; }

nb_status nb_scores_get(const nb_scores* scores, int from, int to, double* score, int* evaluable) {
  NB_REQUIRE(scores, "scores");
  const int P = scores->value.num_vars;
  if (from < 0 || to < 0 || from >= P || to >= P) return fail(NB_ERR_ARGUMENT, "edge index out of range");
  if (score) *score = scores->value.scores(from, to);
  if (evaluable) *evaluable = scores->value.mask(from, to) ? 1 : 0;
  return NB_OK;
}

nb_status nb_scores_to_json(const nb_scores* scores, char** out) {
  NB_REQUIRE(scores, "scores");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = dup_string(config::dump(config::to_json(scores->value))); });
}

nb_status nb_scores_parse(const char* json_text, nb_scores** out) {
  NB_REQUIRE(json_text, "json_text");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = new nb_scores{config::parse_edge_scores(nlohmann::json::parse(json_text))}; });
}

nb_status nb_scores_threshold(const nb_scores* scores, double epsilon, nb_network** out) {
  NB_REQUIRE(scores, "scores");
  NB_REQUIRE(out, "out");
  return guard([&] { *out = new nb_network{netbench::selection::threshold_graph(scores->value, epsilon)}; });
}

void nb_scores_free(nb_scores* scores) { delete scores; }

nb_status nb_roc_auc(const nb_scores* scores, const nb_network* truth, int include_self_edges, nb_roc** out) {
  NB_REQUIRE(scores, "scores");
  NB_REQUIRE(truth, "truth");
  NB_REQUIRE(out, "out");
  return guard([&] {
    *out = new nb_roc{netbench::evaluation::roc_auc(scores->value, truth->value, include_self_edges != 0)};
  });
}

double nb_roc_aur(const nb_roc* roc) { return roc ? roc->value.aur : 0.0; }
size_t nb_roc_num_points(const nb_roc* roc) { return roc ? roc->value.points.size() : 0; }

nb_status nb_roc_point(const nb_roc* roc, size_t index, double* threshold, double* fpr, double* tpr) {
  NB_REQUIRE(roc, "roc");
  if (index >= roc->value.points.size()) return fail(NB_ERR_ARGUMENT, "ROC point index out of range");
  const auto& p = roc->value.points[index];
  if (threshold) *threshold = p.threshold;
  if (fpr) *fpr = p.fpr;
  if (tpr) *tpr = p.tpr;
  return NB_OK;
}

void nb_roc_free(nb_roc* roc) { delete roc; }

void nb_run_options_default(nb_run_options* out) {
  if (!out) return;
  out->output_dir = "out";
  out->has_seed = 0;
  out->seed = 0;
  out->jobs = 1;
}

nb_status nb_run_simulate(const char* config_ref, const nb_run_options* options, char** manifest) {
  NB_REQUIRE(config_ref, "config");
  return guard([&] {
    const auto m = netbench::runner::run_simulate(config_ref, to_core(options));
    if (manifest) *manifest = dup_string(config::dump(m));
  });
}

nb_status nb_run_experiment(const char* spec, const nb_run_options* options, char** manifest) {
  NB_REQUIRE(spec, "spec");
  return guard([&] {
    const auto m = netbench::runner::run_experiment(spec, to_core(options));
    if (manifest) *manifest = dup_string(config::dump(m));
  });
}

nb_status nb_run_infer(const char* const* dataset_paths, size_t count, const nb_scheme_config* scheme,
                       int has_epsilon, double epsilon, const nb_run_options* options, char** manifest) {
  NB_REQUIRE(dataset_paths, "dataset_paths");
  NB_REQUIRE(scheme, "scheme");
  return guard([&] {
    std::vector<std::filesystem::path> paths;
    for (size_t k = 0; k < count; ++k) {
      if (!dataset_paths[k]) throw Error(ErrorCode::argument, "dataset path is NULL");
      paths.emplace_back(dataset_paths[k]);
    }
    std::optional<double> eps;
    if (has_epsilon) eps = epsilon;
    const auto m = netbench::runner::run_infer(paths, to_core(*scheme), eps, to_core(options));
    if (manifest) *manifest = dup_string(config::dump(m));
  });
}

nb_status nb_run_evaluate(const char* scores_path, const char* truth, int include_self_edges,
                          const nb_run_options* options, char** manifest) {
  NB_REQUIRE(scores_path, "scores_path");
  NB_REQUIRE(truth, "truth");
  return guard([&] {
    const auto m = netbench::runner::run_evaluate(scores_path, truth, include_self_edges != 0, to_core(options));
    if (manifest) *manifest = dup_string(config::dump(m));
  });
}

nb_status nb_validate(const char* config_ref, char** report) {
  NB_REQUIRE(config_ref, "config");
  nb_status status = NB_OK;
  const nb_status run = guard([&] {
    const auto issues = netbench::runner::validate_file(config_ref);
    if (report) *report = dup_string(config::dump(netbench::runner::to_json(issues)));
    if (!issues.empty()) {
      const auto& first = issues.front();
      status = NB_ERR_SCHEMA;
      for (int c = NB_ERR_ARGUMENT; c < NB_ERR_INTERNAL; ++c)
        if (first.code == nb_status_name(static_cast<nb_status>(c))) status = static_cast<nb_status>(c);
      fail(status, first.message, first.field);
    }
  });
  return run != NB_OK ? run : status;
}

}  // extern "C"
