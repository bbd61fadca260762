#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "netbench/netbench.h"

namespace {

struct Owned {
  char* text = nullptr;
  ~Owned() { nb_string_free(text); }
};

int report(nb_status status) {
  if (status == NB_OK) return 0;
  const std::string field = nb_last_error_field();
  std::cerr << "error: " << nb_status_name(status) << ": " << (field.empty() ? "-" : field) << ": "
            << nb_last_error_message() << "\n";
  return nb_status_is_usage(status) ? 1 : 2;
}

nb_selector parse_selector(const std::string& s) { return s == "aicc" ? NB_SELECTOR_AICC : NB_SELECTOR_BAYES; }
nb_design parse_design(const std::string& s) { return s == "quadratic" ? NB_DESIGN_QUADRATIC : NB_DESIGN_STANDARD; }
nb_variance parse_variance(const std::string& s) {
  if (s == "a1") return NB_VARIANCE_A1;
  if (s == "a2") return NB_VARIANCE_A2;
  if (s == "var") return NB_VARIANCE_VAR;
  return NB_VARIANCE_A0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-inference benchmarking on simulated time courses"};
  app.set_version_flag("--version", std::string(nb_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string output_dir = "out";
  app.add_option("--seed", seed, "Override the config's seed (root seed for experiments)");
  app.add_option("--jobs", jobs, "Worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", output_dir, "Directory for artifacts and manifest.json");

  std::string config;
  auto* simulate = app.add_subcommand("simulate", "Simulate datasets from a config or manifest");
  simulate->add_option("config", config, "Config file, bundled config name or manifest")->required();

  std::vector<std::string> datasets;
  std::string selector = "bayes", design = "standard", variance = "a0";
  std::optional<double> lag, epsilon, g;
  int dmax = 2;
  bool no_squares = false;
  auto* infer = app.add_subcommand("infer", "Score edges from one or more pooled datasets");
  infer->add_option("datasets", datasets, "Dataset CSV files")->required();
  infer->add_option("--selector", selector)->check(CLI::IsMember({"bayes", "aicc"}));
  infer->add_option("--design", design)->check(CLI::IsMember({"standard", "quadratic"}));
  infer->add_option("--lag", lag, "Add predictors lagged by this many minutes");
  infer->add_option("--variance", variance)->check(CLI::IsMember({"a0", "a1", "a2", "var"}));
  infer->add_option("--dmax", dmax, "Maximum in-degree");
  infer->add_option("--epsilon", epsilon, "Also write the graph of edges scoring above this");
  infer->add_option("--g", g, "Zellner g (default: number of rows)");
  infer->add_flag("--no-squares", no_squares, "Quadratic design without squared terms");

  std::string scores, truth;
  bool include_self = false;
  auto* evaluate = app.add_subcommand("evaluate", "ROC and AUR of edge scores against a true network");
  evaluate->add_option("scores", scores, "Edge-scores JSON written by infer")->required();
  evaluate->add_option("--truth", truth, "Graph file, model file or bundled model name")->required();
  evaluate->add_flag("--include-self", include_self, "Count self-edges in the ROC");

  std::string spec;
  auto* experiment = app.add_subcommand("experiment", "Run an experiment over a scheme grid");
  experiment->add_option("spec", spec, "Experiment spec, bundled experiment name or manifest")->required();

  std::string target;
  auto* validate = app.add_subcommand("validate", "Check a configuration file without running it");
  validate->add_option("config", target, "Any configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  nb_run_options options;
  nb_run_options_default(&options);
  options.output_dir = output_dir.c_str();
  options.jobs = jobs;
  if (seed) {
    options.has_seed = 1;
    options.seed = *seed;
  }

  Owned out;
  nb_status status = NB_OK;
  if (simulate->parsed()) {
    status = nb_run_simulate(config.c_str(), &options, &out.text);
  } else if (experiment->parsed()) {
    status = nb_run_experiment(spec.c_str(), &options, &out.text);
  } else if (infer->parsed()) {
    nb_scheme_config scheme;
    nb_scheme_default(&scheme);
    scheme.selector = parse_selector(selector);
    scheme.design = parse_design(design);
    scheme.variance = parse_variance(variance);
    scheme.lagged = lag ? 1 : 0;
    scheme.lag_minutes = lag.value_or(0.0);
    scheme.d_max = dmax;
    scheme.quadratic_squares = no_squares ? 0 : 1;
    if (g) {
      scheme.has_g_factor = 1;
      scheme.g_factor = *g;
    }
    std::vector<const char*> paths;
    for (const auto& d : datasets) paths.push_back(d.c_str());
    status = nb_run_infer(paths.data(), paths.size(), &scheme, epsilon ? 1 : 0, epsilon.value_or(0.0), &options,
                          &out.text);
  } else if (evaluate->parsed()) {
    status = nb_run_evaluate(scores.c_str(), truth.c_str(), include_self ? 1 : 0, &options, &out.text);
  } else if (validate->parsed()) {
    status = nb_validate(target.c_str(), &out.text);
    if (out.text) std::fputs(out.text, stdout);
    return report(status);
  }
  if (status == NB_OK) std::cout << output_dir << "/manifest.json\n";
  return report(status);
}
