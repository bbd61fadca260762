#include "netbench/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "netbench/error.hpp"

#ifndef NETBENCH_DEFAULT_DATA_DIR
#define NETBENCH_DEFAULT_DATA_DIR "data"
#endif

namespace netbench::config {

namespace fs = std::filesystem;
using dynamics::DiffusionKind;
using dynamics::DriftTerm;
using dynamics::DynamicalModel;
using dynamics::TermKind;

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::schema, message, field);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_error(path.empty() ? "<root>" : path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(join(path, key), "missing required field");
  return *it;
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) schema_error(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) schema_error(field, "expected a finite number");
  return x;
}

long long as_integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) {
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<long long>(x);
    }
    schema_error(field, "expected an integer");
  }
  return v.get<long long>();
}

std::uint64_t as_seed(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const long long x = as_integer(v, field);
  if (x < 0) schema_error(field, "seed must be >= 0");
  return static_cast<std::uint64_t>(x);
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) schema_error(field, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) schema_error(field, "expected a string");
  return v.get<std::string>();
}

const json* optional_field(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) schema_error(join(path, key), "unknown field");
}

TermKind parse_kind(const std::string& s, const std::string& field) {
  static const std::pair<const char*, TermKind> kinds[] = {
      {"constant", TermKind::constant},
      {"linear", TermKind::linear},
      {"degradation", TermKind::degradation},
      {"hill_activation", TermKind::hill_activation},
      {"hill_repression", TermKind::hill_repression},
      {"product", TermKind::product},
      {"sine", TermKind::sine},
  };
  for (const auto& [name, kind] : kinds)
    if (s == name) return kind;
  schema_error(field, "unknown term kind '" + s + "'");
}

DiffusionKind parse_diffusion_kind(const std::string& s, const std::string& field) {
  if (s == "none") return DiffusionKind::none;
  if (s == "multiplicative") return DiffusionKind::multiplicative;
  if (s == "additive") return DiffusionKind::additive;
  schema_error(field, "unknown diffusion kind '" + s + "'");
}

bool is_hill(TermKind k) { return k == TermKind::hill_activation || k == TermKind::hill_repression; }

DriftTerm parse_term(const json& t, const std::string& path) {
  if (!t.is_object()) schema_error(path, "expected a term object");
  reject_unknown(t, {"kind", "coefficient", "sources", "lag_minutes", "K", "exponent"}, path);
  DriftTerm term;
  term.kind = parse_kind(as_string(require(t, "kind", path), join(path, "kind")), join(path, "kind"));
  term.coefficient = as_number(require(t, "coefficient", path), join(path, "coefficient"));
  if (const json* src = optional_field(t, "sources")) {
    if (!src->is_array()) schema_error(join(path, "sources"), "expected a list of variable indices");
    for (std::size_t i = 0; i < src->size(); ++i)
      term.sources.push_back(static_cast<int>(as_integer((*src)[i], index_path(join(path, "sources"), i))));
  }
  if (const json* lag = optional_field(t, "lag_minutes")) {
    term.lag = as_number(*lag, join(path, "lag_minutes"));
    if (term.lag < 0.0) schema_error(join(path, "lag_minutes"), "lag must be >= 0");
  }
  if (is_hill(term.kind)) {
    term.K = as_number(require(t, "K", path), join(path, "K"));
    if (!(term.K > 0.0)) schema_error(join(path, "K"), "Hill threshold K must be > 0");
    if (const json* e = optional_field(t, "exponent")) term.exponent = as_number(*e, join(path, "exponent"));
  }
  return term;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::schema, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::io, "write to '" + path.string() + "' failed");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path data_dir() {
  if (const char* env = std::getenv("NETBENCH_DATA_DIR"); env && *env) return fs::path(env);
  return fs::path(NETBENCH_DEFAULT_DATA_DIR);
}

DynamicalModel parse_model(const json& spec) {
  if (!spec.is_object()) schema_error("<root>", "model spec must be an object");
  reject_unknown(spec, {"name", "description", "num_vars", "variables", "max_delay_minutes", "diffusion", "drift",
                        "clamped"},
                 "");
  const long long P = as_integer(require(spec, "num_vars", ""), "num_vars");
  if (P < 1) schema_error("num_vars", "num_vars must be >= 1");
  const std::string name = spec.contains("name") ? as_string(spec["name"], "name") : "model";

  std::vector<std::string> names;
  if (const json* v = optional_field(spec, "variables")) {
    if (!v->is_array()) schema_error("variables", "expected a list of names");
    for (std::size_t i = 0; i < v->size(); ++i) names.push_back(as_string((*v)[i], index_path("variables", i)));
  }

  DiffusionKind diffusion = DiffusionKind::none;
  double sigma_cell = 0.0;
  if (const json* d = optional_field(spec, "diffusion")) {
    if (!d->is_object()) schema_error("diffusion", "expected an object");
    reject_unknown(*d, {"kind", "sigma_cell"}, "diffusion");
    diffusion = parse_diffusion_kind(as_string(require(*d, "kind", "diffusion"), "diffusion.kind"), "diffusion.kind");
    if (const json* s = optional_field(*d, "sigma_cell")) sigma_cell = as_number(*s, "diffusion.sigma_cell");
    if (sigma_cell < 0.0) schema_error("diffusion.sigma_cell", "sigma_cell must be >= 0");
  }

  const json& drift_spec = require(spec, "drift", "");
  if (!drift_spec.is_array() || static_cast<long long>(drift_spec.size()) != P)
    schema_error("drift", "expected one term list per variable (" + std::to_string(P) + ")");
  std::vector<std::vector<DriftTerm>> drift(static_cast<std::size_t>(P));
  double max_lag = 0.0;
  for (std::size_t p = 0; p < drift_spec.size(); ++p) {
    const std::string path = index_path("drift", p);
    if (!drift_spec[p].is_array()) schema_error(path, "expected a list of terms");
    for (std::size_t k = 0; k < drift_spec[p].size(); ++k) {
      drift[p].push_back(parse_term(drift_spec[p][k], index_path(path, k)));
      max_lag = std::max(max_lag, drift[p].back().lag);
    }
  }
  if (const json* tau = optional_field(spec, "max_delay_minutes")) {
    const double declared = as_number(*tau, "max_delay_minutes");
    if (declared < 0.0) schema_error("max_delay_minutes", "max_delay_minutes must be >= 0");
    if (declared < max_lag) schema_error("max_delay_minutes", "a term lag exceeds max_delay_minutes");
  }

  std::vector<bool> clamped;
  if (const json* c = optional_field(spec, "clamped")) {
    if (!c->is_array()) schema_error("clamped", "expected a list of variable indices");
    clamped.assign(static_cast<std::size_t>(P), false);
    for (std::size_t i = 0; i < c->size(); ++i) {
      const long long v = as_integer((*c)[i], index_path("clamped", i));
      if (v < 0 || v >= P) schema_error(index_path("clamped", i), "variable index out of range");
      clamped[static_cast<std::size_t>(v)] = true;
    }
  }
  return DynamicalModel(name, std::move(drift), diffusion, sigma_cell, std::move(names), std::move(clamped));
}

json to_json(const DynamicalModel& model) {
  json j;
  j["name"] = model.name();
  j["num_vars"] = model.num_vars();
  j["variables"] = model.variable_names();
  j["max_delay_minutes"] = model.max_delay();
  j["diffusion"] = {{"kind", dynamics::to_string(model.diffusion())}, {"sigma_cell", model.sigma_cell()}};
  json drift = json::array();
  for (const auto& terms : model.drift()) {
    json list = json::array();
    for (const auto& t : terms) {
      json term;
      term["kind"] = dynamics::to_string(t.kind);
      term["coefficient"] = t.coefficient;
      term["sources"] = t.sources;
      term["lag_minutes"] = t.lag;
      if (is_hill(t.kind)) {
        term["K"] = t.K;
        term["exponent"] = t.exponent;
      }
      list.push_back(term);
    }
    drift.push_back(list);
  }
  j["drift"] = drift;
  json clamped = json::array();
  for (int p = 0; p < model.num_vars(); ++p)
    if (model.clamped(p)) clamped.push_back(p);
  if (!clamped.empty()) j["clamped"] = clamped;
  return j;
}

namespace {

fs::path resolve_path(const std::string& reference, const fs::path& base_dir) {
  fs::path p(reference);
  if (p.is_relative() && !base_dir.empty() && fs::exists(base_dir / p)) return base_dir / p;
  return p;
}

bool looks_like_path(const std::string& reference) {
  return reference.find('/') != std::string::npos || reference.ends_with(".json");
}

}  // namespace

DynamicalModel load_model(const std::string& reference, const fs::path& base_dir) {
  if (!looks_like_path(reference)) {
    const fs::path bundled = data_dir() / "models" / (reference + ".json");
    if (!fs::exists(bundled)) throw Error(ErrorCode::schema, "unknown bundled model '" + reference + "'", "model");
    return parse_model(read_json_file(bundled));
  }
  return parse_model(read_json_file(resolve_path(reference, base_dir)));
}

DynamicalModel model_from_value(const json& value, const fs::path& base_dir) {
  if (value.is_string()) return load_model(value.get<std::string>(), base_dir);
  if (value.is_object()) {
    try {
      return parse_model(value);
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), e.field().empty() ? "model" : "model." + e.field());
    }
  }
  schema_error("model", "expected a bundled model name, a path or an inline model");
}

std::vector<double> parse_times(const json& value, const std::string& field) {
  std::vector<double> t;
  if (value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i) t.push_back(as_number(value[i], index_path(field, i)));
  } else if (value.is_object()) {
    reject_unknown(value, {"start", "stop", "intervals"}, field);
    const double start = as_number(require(value, "start", field), join(field, "start"));
    const double stop = as_number(require(value, "stop", field), join(field, "stop"));
    const long long n = as_integer(require(value, "intervals", field), join(field, "intervals"));
    if (n < 1) schema_error(join(field, "intervals"), "need at least one interval");
    if (!(stop > start)) schema_error(join(field, "stop"), "stop must exceed start");
    for (long long j = 0; j <= n; ++j)
      t.push_back(j == n ? stop : start + (stop - start) * static_cast<double>(j) / static_cast<double>(n));
  } else {
    schema_error(field, "expected a list of times or {start, stop, intervals}");
  }
  for (std::size_t j = 1; j < t.size(); ++j)
    if (!(t[j] > t[j - 1])) schema_error(index_path(field, j), "sampling times must be strictly increasing");
  if (t.size() < 2) schema_error(field, "need at least two sampling times");
  return t;
}

simulation::SimulationConfig parse_simulation(const json& spec, int num_vars) {
  const std::string path = "simulation";
  if (!spec.is_object()) schema_error(path, "expected an object");
  reject_unknown(spec,
                 {"sampling_times", "substeps", "max_step_minutes", "population", "simulated_cells", "initial_mean",
                  "initial_sd", "initial_snr", "sigma_meas", "snr_target", "sampling_mode", "intervention", "seed",
                  "clip_negative"},
                 path);
  simulation::SimulationConfig c;
  c.sampling_times = parse_times(require(spec, "sampling_times", path), join(path, "sampling_times"));
  if (const json* v = optional_field(spec, "substeps")) {
    c.substeps = static_cast<int>(as_integer(*v, join(path, "substeps")));
    if (*c.substeps < 1) schema_error(join(path, "substeps"), "substeps must be >= 1");
  }
  if (const json* v = optional_field(spec, "max_step_minutes")) c.max_step = as_number(*v, join(path, "max_step_minutes"));
  if (const json* v = optional_field(spec, "population")) c.population = static_cast<int>(as_integer(*v, join(path, "population")));
  if (const json* v = optional_field(spec, "simulated_cells"))
    c.simulated_cells = static_cast<int>(as_integer(*v, join(path, "simulated_cells")));
  const json& mean = require(spec, "initial_mean", path);
  if (!mean.is_array()) schema_error(join(path, "initial_mean"), "expected a list");
  c.initial_mean.resize(static_cast<Eigen::Index>(mean.size()));
  for (std::size_t i = 0; i < mean.size(); ++i)
    c.initial_mean(static_cast<Eigen::Index>(i)) = as_number(mean[i], index_path(join(path, "initial_mean"), i));
  if (const json* v = optional_field(spec, "initial_sd")) c.initial_sd = as_number(*v, join(path, "initial_sd"));
  if (const json* v = optional_field(spec, "initial_snr")) c.initial_snr = as_number(*v, join(path, "initial_snr"));
  if (!c.initial_sd && !c.initial_snr) c.initial_snr = 10.0;
  if (const json* v = optional_field(spec, "sigma_meas")) c.sigma_meas = as_number(*v, join(path, "sigma_meas"));
  if (const json* v = optional_field(spec, "snr_target")) c.snr_target = as_number(*v, join(path, "snr_target"));
  if (!c.sigma_meas && !c.snr_target) c.snr_target = 10.0;
  if (const json* v = optional_field(spec, "sampling_mode")) {
    const std::string m = as_string(*v, join(path, "sampling_mode"));
    if (m == "destructive") c.mode = simulation::SamplingMode::destructive;
    else if (m == "longitudinal") c.mode = simulation::SamplingMode::longitudinal;
    else schema_error(join(path, "sampling_mode"), "expected destructive or longitudinal");
  }
  if (const json* v = optional_field(spec, "intervention")) {
    const std::string ipath = join(path, "intervention");
    reject_unknown(*v, {"variable", "mode"}, ipath);
    simulation::Intervention iv;
    iv.variable = static_cast<int>(as_integer(require(*v, "variable", ipath), join(ipath, "variable")));
    if (const json* m = optional_field(*v, "mode"); m && as_string(*m, join(ipath, "mode")) != "clamp_to_zero")
      schema_error(join(ipath, "mode"), "only clamp_to_zero is supported");
    c.intervention = iv;
  }
  if (const json* v = optional_field(spec, "seed")) c.seed = as_seed(*v, join(path, "seed"));
  if (const json* v = optional_field(spec, "clip_negative")) c.clip_negative = as_bool(*v, join(path, "clip_negative"));
  try {
    simulation::validate(c, num_vars);
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), join(path, e.field()));
  }
  return c;
}

json to_json(const simulation::SimulationConfig& c) {
  json j;
  j["sampling_times"] = c.sampling_times;
  j["substeps"] = c.substeps ? json(*c.substeps) : json(nullptr);
  j["max_step_minutes"] = c.max_step;
  j["population"] = c.population;
  j["simulated_cells"] = c.simulated_cells;
  j["initial_mean"] = std::vector<double>(c.initial_mean.data(), c.initial_mean.data() + c.initial_mean.size());
  if (c.initial_sd) j["initial_sd"] = *c.initial_sd;
  if (c.initial_snr) j["initial_snr"] = *c.initial_snr;
  if (c.sigma_meas) j["sigma_meas"] = *c.sigma_meas;
  if (c.snr_target) j["snr_target"] = *c.snr_target;
  j["sampling_mode"] = simulation::to_string(c.mode);
  if (c.intervention) j["intervention"] = {{"variable", c.intervention->variable}, {"mode", "clamp_to_zero"}};
  j["seed"] = c.seed;
  j["clip_negative"] = c.clip_negative;
  return j;
}

SimulateRequest parse_simulate_request(const json& spec, const fs::path& base_dir) {
  if (!spec.is_object()) schema_error("<root>", "expected an object");
  reject_unknown(spec, {"model", "simulation", "num_datasets", "description"}, "");
  SimulateRequest req;
  req.model = model_from_value(require(spec, "model", ""), base_dir);
  req.simulation = parse_simulation(require(spec, "simulation", ""), req.model.num_vars());
  if (const json* v = optional_field(spec, "num_datasets")) {
    req.num_datasets = static_cast<int>(as_integer(*v, "num_datasets"));
    if (req.num_datasets < 0) schema_error("num_datasets", "num_datasets must be >= 0");
  }
  return req;
}

json to_json(const SimulateRequest& request) {
  return {{"model", to_json(request.model)},
          {"simulation", to_json(request.simulation)},
          {"num_datasets", request.num_datasets}};
}

namespace {

regression::Selector parse_selector(const std::string& s, const std::string& field) {
  if (s == "bayes") return regression::Selector::bayes;
  if (s == "aicc") return regression::Selector::aicc;
  schema_error(field, "selector must be bayes or aicc");
}

regression::Design parse_design(const std::string& s, const std::string& field) {
  if (s == "standard") return regression::Design::standard;
  if (s == "quadratic") return regression::Design::quadratic;
  schema_error(field, "design must be standard or quadratic");
}

regression::VarianceModel parse_variance(const std::string& s, const std::string& field) {
  if (s == "a0") return regression::VarianceModel::alpha0;
  if (s == "a1") return regression::VarianceModel::alpha1;
  if (s == "a2") return regression::VarianceModel::alpha2;
  if (s == "var") return regression::VarianceModel::var_model;
  schema_error(field, "variance must be a0, a1, a2 or var");
}

}  // namespace

regression::SchemeConfig parse_scheme(const json& spec, const std::string& field) {
  if (spec.is_string()) {
    try {
      return regression::scheme_from_id(spec.get<std::string>());
    } catch (const Error& e) {
      schema_error(field, e.what());
    }
  }
  if (!spec.is_object()) schema_error(field, "expected a scheme id or object");
  reject_unknown(spec,
                 {"id", "selector", "design", "lagged", "lag_minutes", "variance", "d_max", "epsilon", "g_factor",
                  "quadratic_squares"},
                 field);
  regression::SchemeConfig s;
  if (const json* v = optional_field(spec, "id")) s = parse_scheme(*v, join(field, "id"));
  if (const json* v = optional_field(spec, "selector")) s.selector = parse_selector(as_string(*v, join(field, "selector")), join(field, "selector"));
  if (const json* v = optional_field(spec, "design")) s.design = parse_design(as_string(*v, join(field, "design")), join(field, "design"));
  if (const json* v = optional_field(spec, "lagged")) s.lagged = as_bool(*v, join(field, "lagged"));
  if (const json* v = optional_field(spec, "lag_minutes")) s.lag_minutes = as_number(*v, join(field, "lag_minutes"));
  if (const json* v = optional_field(spec, "variance")) s.variance = parse_variance(as_string(*v, join(field, "variance")), join(field, "variance"));
  if (const json* v = optional_field(spec, "d_max")) s.d_max = static_cast<int>(as_integer(*v, join(field, "d_max")));
  if (const json* v = optional_field(spec, "epsilon")) s.epsilon = as_number(*v, join(field, "epsilon"));
  if (const json* v = optional_field(spec, "g_factor")) s.g_factor = as_number(*v, join(field, "g_factor"));
  if (const json* v = optional_field(spec, "quadratic_squares")) s.quadratic_squares = as_bool(*v, join(field, "quadratic_squares"));
  if (const json* v = optional_field(spec, "id"); v && s.id() != v->get<std::string>())
    schema_error(join(field, "id"), "id disagrees with the scheme fields");
  return s;
}

json to_json(const regression::SchemeConfig& s) {
  json j;
  j["id"] = s.id();
  j["selector"] = regression::to_string(s.selector);
  j["design"] = regression::to_string(s.design);
  j["lagged"] = s.lagged;
  j["lag_minutes"] = s.lag_minutes;
  j["variance"] = regression::to_string(s.variance);
  j["d_max"] = s.d_max;
  j["epsilon"] = s.epsilon;
  j["g_factor"] = s.g_factor ? json(*s.g_factor) : json(nullptr);
  j["quadratic_squares"] = s.quadratic_squares;
  return j;
}

ExperimentRequest parse_experiment_request(const json& spec, const fs::path& base_dir) {
  if (!spec.is_object()) schema_error("<root>", "expected an object");
  reject_unknown(spec,
                 {"name", "description", "model", "simulation", "kind", "num_longitudinal", "replicates",
                  "root_seed", "include_self_edges", "lag_minutes", "d_max", "epsilon", "grid", "regimes",
                  "bootstrap_resamples", "confidence_level"},
                 "");
  ExperimentRequest req;
  auto& s = req.spec;
  if (const json* v = optional_field(spec, "name")) s.name = as_string(*v, "name");
  s.model = model_from_value(require(spec, "model", ""), base_dir);
  if (const json* v = optional_field(spec, "kind")) {
    const std::string k = as_string(*v, "kind");
    if (k == "aggregate") s.kind = evaluation::ExperimentKind::aggregate;
    else if (k == "longitudinal") s.kind = evaluation::ExperimentKind::longitudinal;
    else if (k == "interventions") s.kind = evaluation::ExperimentKind::interventions;
    else schema_error("kind", "kind must be aggregate, longitudinal or interventions");
  }
  json sim = require(spec, "simulation", "");
  if (sim.is_object()) {
    const bool longitudinal = s.kind == evaluation::ExperimentKind::longitudinal;
    if (!sim.contains("sampling_mode")) sim["sampling_mode"] = longitudinal ? "longitudinal" : "destructive";
    // Regimes override the sampling times; supply a placeholder if absent.
    if (!sim.contains("sampling_times") && spec.contains("regimes"))
      sim["sampling_times"] = json::array({0.0, 1.0});
  }
  s.simulation = parse_simulation(sim, s.model.num_vars());
  if (const json* v = optional_field(spec, "num_longitudinal")) s.num_longitudinal = static_cast<int>(as_integer(*v, "num_longitudinal"));
  if (const json* v = optional_field(spec, "replicates")) s.replicates = static_cast<int>(as_integer(*v, "replicates"));
  if (const json* v = optional_field(spec, "root_seed")) s.root_seed = as_seed(*v, "root_seed");
  if (const json* v = optional_field(spec, "include_self_edges")) s.include_self_edges = as_bool(*v, "include_self_edges");

  const double lag = optional_field(spec, "lag_minutes") ? as_number(spec["lag_minutes"], "lag_minutes") : 0.0;
  const int d_max = optional_field(spec, "d_max") ? static_cast<int>(as_integer(spec["d_max"], "d_max")) : 2;
  const double eps = optional_field(spec, "epsilon") ? as_number(spec["epsilon"], "epsilon") : 0.5;
  auto inherit = [&](regression::SchemeConfig sc, const json& entry) {
    const bool obj = entry.is_object();
    if (!obj || !entry.contains("lag_minutes")) sc.lag_minutes = sc.lagged ? lag : 0.0;
    if (!obj || !entry.contains("d_max")) sc.d_max = d_max;
    if (!obj || !entry.contains("epsilon")) sc.epsilon = eps;
    return sc;
  };

  const json* grid = optional_field(spec, "grid");
  if (!grid || (grid->is_string() && grid->get<std::string>() == "full")) {
    s.grid = regression::full_grid(lag, d_max);
    for (auto& sc : s.grid) sc.epsilon = eps;
  } else if (grid->is_array()) {
    for (std::size_t i = 0; i < grid->size(); ++i)
      s.grid.push_back(inherit(parse_scheme((*grid)[i], index_path("grid", i)), (*grid)[i]));
  } else if (grid->is_object()) {
    reject_unknown(*grid, {"selector", "design", "lagged", "variance"}, "grid");
    auto axis = [&](const char* key, std::vector<std::string> fallback) {
      std::vector<std::string> out;
      const json* a = optional_field(*grid, key);
      if (!a) return fallback;
      if (!a->is_array() || a->empty()) schema_error(join("grid", key), "expected a non-empty list");
      for (std::size_t i = 0; i < a->size(); ++i) {
        const json& e = (*a)[i];
        out.push_back(e.is_boolean() ? (e.get<bool>() ? "lag" : "nolag") : as_string(e, index_path(join("grid", key), i)));
      }
      return out;
    };
    for (const auto& sel : axis("selector", {"bayes", "aicc"}))
      for (const auto& des : axis("design", {"standard", "quadratic"}))
        for (const auto& lg : axis("lagged", {"nolag", "lag"}))
          for (const auto& var : axis("variance", {"a0", "a1", "a2", "var"})) {
            const std::string id = sel + "-" + des + "-" + lg + "-" + var;
            s.grid.push_back(inherit(parse_scheme(json(id), "grid"), json(id)));
          }
  } else {
    schema_error("grid", "expected \"full\", a list of schemes or per-axis lists");
  }
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    try {
      regression::validate(s.grid[i], s.model.num_vars());
    } catch (const Error& e) {
      throw Error(ErrorCode::schema, e.what(), index_path("grid", i) + "." + e.field());
    }
  }

  if (const json* r = optional_field(spec, "regimes")) {
    if (!r->is_array() || r->size() != 2) schema_error("regimes", "expected exactly two regimes");
    for (std::size_t i = 0; i < r->size(); ++i) {
      const std::string path = index_path("regimes", i);
      reject_unknown((*r)[i], {"name", "sampling_times"}, path);
      Regime regime;
      regime.name = as_string(require((*r)[i], "name", path), join(path, "name"));
      regime.sampling_times = parse_times(require((*r)[i], "sampling_times", path), join(path, "sampling_times"));
      req.regimes.push_back(std::move(regime));
    }
    if (req.regimes[0].name == req.regimes[1].name) schema_error("regimes", "regime names must differ");
  }
  if (const json* v = optional_field(spec, "bootstrap_resamples"))
    req.bootstrap_resamples = static_cast<int>(as_integer(*v, "bootstrap_resamples"));
  if (const json* v = optional_field(spec, "confidence_level")) req.confidence_level = as_number(*v, "confidence_level");
  if (req.bootstrap_resamples < 1) schema_error("bootstrap_resamples", "bootstrap_resamples must be >= 1");
  if (!(req.confidence_level > 0.0 && req.confidence_level < 1.0))
    schema_error("confidence_level", "confidence_level must lie in (0, 1)");
  try {
    evaluation::validate(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::schema, e.what(), e.field());
  }
  return req;
}

json to_json(const ExperimentRequest& request) {
  const auto& s = request.spec;
  json j;
  j["name"] = s.name;
  j["model"] = to_json(s.model);
  j["simulation"] = to_json(s.simulation);
  j["kind"] = evaluation::to_string(s.kind);
  j["num_longitudinal"] = s.num_longitudinal;
  j["replicates"] = s.replicates;
  j["root_seed"] = s.root_seed;
  j["include_self_edges"] = s.include_self_edges;
  json grid = json::array();
  for (const auto& sc : s.grid) grid.push_back(to_json(sc));
  j["grid"] = grid;
  if (!request.regimes.empty()) {
    json regimes = json::array();
    for (const auto& r : request.regimes) regimes.push_back({{"name", r.name}, {"sampling_times", r.sampling_times}});
    j["regimes"] = regimes;
  }
  j["bootstrap_resamples"] = request.bootstrap_resamples;
  j["confidence_level"] = request.confidence_level;
  return j;
}

std::string dataset_csv(const simulation::Dataset& dataset) {
  std::string out = "time";
  for (int p = 0; p < dataset.num_vars(); ++p) out += ",x" + std::to_string(p + 1);
  out += "\n";
  for (std::size_t j = 0; j < dataset.times.size(); ++j) {
    out += format_double(dataset.times[j]);
    for (int p = 0; p < dataset.num_vars(); ++p)
      out += "," + format_double(dataset.values(static_cast<Eigen::Index>(j), p));
    out += "\n";
  }
  return out;
}

fs::path provenance_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".provenance.json");
  return p;
}

void write_dataset_csv(const simulation::Dataset& dataset, const fs::path& path) {
  write_text_file(path, dataset_csv(dataset));
  json side = dataset.provenance.is_null() ? json::object() : dataset.provenance;
  side["longitudinal"] = dataset.longitudinal;
  write_text_file(provenance_path(path), dump(side));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  std::string s = cell;
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  double v = 0.0;
  const auto res = std::from_chars(s.data() + start, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw Error(ErrorCode::schema, "bad numeric value '" + cell + "' at " + where);
  return v;
}

}  // namespace

simulation::Dataset read_dataset_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::schema, "'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "time")
    throw Error(ErrorCode::schema, "'" + path.string() + "': header must be time,x1..xP");
  for (std::size_t p = 1; p < header.size(); ++p)
    if (header[p] != "x" + std::to_string(p))
      throw Error(ErrorCode::schema, "'" + path.string() + "': column " + std::to_string(p) + " must be x" +
                                         std::to_string(p));
  const std::size_t P = header.size() - 1;
  std::vector<double> times;
  std::vector<double> flat;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(row);
    if (cells.size() != P + 1) throw Error(ErrorCode::schema, "wrong number of columns at " + where);
    times.push_back(parse_cell(cells[0], where));
    for (std::size_t p = 1; p <= P; ++p) flat.push_back(parse_cell(cells[p], where));
  }
  simulation::Dataset ds;
  ds.times = std::move(times);
  ds.values.resize(static_cast<Eigen::Index>(ds.times.size()), static_cast<Eigen::Index>(P));
  for (std::size_t j = 0; j < ds.times.size(); ++j)
    for (std::size_t p = 0; p < P; ++p)
      ds.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) = flat[j * P + p];
  for (std::size_t j = 1; j < ds.times.size(); ++j)
    if (!(ds.times[j] > ds.times[j - 1]))
      throw Error(ErrorCode::degenerate_interval, "'" + path.string() + "': times must be strictly increasing");
  if (const fs::path side = provenance_path(path); fs::exists(side)) {
    ds.provenance = read_json_file(side);
    if (ds.provenance.contains("longitudinal") && ds.provenance["longitudinal"].is_boolean())
      ds.longitudinal = ds.provenance["longitudinal"].get<bool>();
  }
  return ds;
}

json to_json(const selection::EdgeScores& scores) {
  json rows = json::array();
  json mask = json::array();
  for (int i = 0; i < scores.num_vars; ++i) {
    json r = json::array();
    json m = json::array();
    for (int j = 0; j < scores.num_vars; ++j) {
      r.push_back(scores.scores(i, j));
      m.push_back(static_cast<bool>(scores.mask(i, j)));
    }
    rows.push_back(r);
    mask.push_back(m);
  }
  return {{"num_vars", scores.num_vars},
          {"semantics", selection::to_string(scores.semantics)},
          {"scores", rows},
          {"mask", mask}};
}

selection::EdgeScores parse_edge_scores(const json& spec) {
  selection::EdgeScores out;
  const long long P = as_integer(require(spec, "num_vars", ""), "num_vars");
  if (P < 1) schema_error("num_vars", "num_vars must be >= 1");
  out.num_vars = static_cast<int>(P);
  const std::string sem = as_string(require(spec, "semantics", ""), "semantics");
  if (sem == "posterior_probability") out.semantics = selection::Semantics::posterior_probability;
  else if (sem == "akaike_weight") out.semantics = selection::Semantics::akaike_weight;
  else schema_error("semantics", "unknown semantics '" + sem + "'");
  const json& rows = require(spec, "scores", "");
  const json& mask = require(spec, "mask", "");
  if (!rows.is_array() || static_cast<long long>(rows.size()) != P) schema_error("scores", "expected P rows");
  if (!mask.is_array() || static_cast<long long>(mask.size()) != P) schema_error("mask", "expected P rows");
  out.scores.resize(P, P);
  out.mask.resize(P, P);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || static_cast<long long>(rows[i].size()) != P) schema_error(index_path("scores", i), "expected P entries");
    if (!mask[i].is_array() || static_cast<long long>(mask[i].size()) != P) schema_error(index_path("mask", i), "expected P entries");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const std::string f = index_path(index_path("scores", i), j);
      const double v = as_number(rows[i][j], f);
      if (v < 0.0 || v > 1.0) schema_error(f, "scores must lie in [0, 1]");
      out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      out.mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = as_bool(mask[i][j], index_path(index_path("mask", i), j));
    }
  }
  return out;
}

json to_json(const Network& network) {
  json edges = json::array();
  json adjacency = json::array();
  for (int i = 0; i < network.num_vars(); ++i) {
    json row = json::array();
    for (int j = 0; j < network.num_vars(); ++j) {
      row.push_back(network.edge(i, j) ? 1 : 0);
      if (network.edge(i, j)) edges.push_back({i, j});
    }
    adjacency.push_back(row);
  }
  return {{"num_vars", network.num_vars()}, {"edges", edges}, {"adjacency", adjacency}};
}

Network load_network(const std::string& reference, const fs::path& base_dir) {
  if (!looks_like_path(reference)) return load_model(reference, base_dir).true_network();
  const json spec = read_json_file(resolve_path(reference, base_dir));
  const std::string kind = classify(spec);
  if (kind == "model") return parse_model(spec).true_network();
  if (kind == "simulation") return parse_simulate_request(spec, resolve_path(reference, base_dir).parent_path()).model.true_network();
  if (kind != "graph") schema_error("<root>", "'" + reference + "' holds neither a graph nor a model");
  const long long P = as_integer(require(spec, "num_vars", ""), "num_vars");
  if (P < 1) schema_error("num_vars", "num_vars must be >= 1");
  Network net(static_cast<int>(P));
  const json& edges = require(spec, "edges", "");
  if (!edges.is_array()) schema_error("edges", "expected a list of [from, to] pairs");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string f = index_path("edges", e);
    if (!edges[e].is_array() || edges[e].size() != 2) schema_error(f, "expected [from, to]");
    const long long a = as_integer(edges[e][0], f + "[0]");
    const long long b = as_integer(edges[e][1], f + "[1]");
    if (a < 0 || b < 0 || a >= P || b >= P) schema_error(f, "vertex index out of range");
    net.set_edge(static_cast<int>(a), static_cast<int>(b));
  }
  return net;
}

std::string classify(const json& spec) {
  if (!spec.is_object()) schema_error("<root>", "expected an object");
  if (spec.contains("manifest_version")) return "manifest";
  if (spec.contains("drift")) return "model";
  if (spec.contains("semantics")) return "edge_scores";
  if (spec.contains("edges") || spec.contains("adjacency")) return "graph";
  if (spec.contains("grid") || spec.contains("replicates") || spec.contains("regimes") || spec.contains("kind") ||
      spec.contains("root_seed"))
    return "experiment";
  if (spec.contains("simulation")) return "simulation";
  schema_error("<root>", "cannot tell what kind of configuration this is");
}

}  // namespace netbench::config
