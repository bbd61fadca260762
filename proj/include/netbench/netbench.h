#ifndef NETBENCH_NETBENCH_H
#define NETBENCH_NETBENCH_H

/*
 * netbench C API.
 *
 * Every fallible call returns an nb_status. On failure the calling thread's
 * last error (message and offending field) is set and any out-parameter is
 * left untouched. Handles are opaque; free each with its matching _free
 * function (NULL is accepted). Strings returned through char** are owned by
 * the caller and released with nb_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NB_API __declspec(dllexport)
#elif defined(NETBENCH_BUILDING_LIBRARY)
#define NB_API __attribute__((visibility("default")))
#else
#define NB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nb_status {
  NB_OK = 0,
  NB_ERR_ARGUMENT,
  NB_ERR_DOMAIN,
  NB_ERR_SCHEMA,
  NB_ERR_USAGE,
  NB_ERR_IO,
  NB_ERR_BLOWUP,
  NB_ERR_SINGULAR,
  NB_ERR_SMALL_SAMPLE,
  NB_ERR_ALIGNMENT,
  NB_ERR_DEGENERATE_INTERVAL,
  NB_ERR_INVALID_SCHEME,
  NB_ERR_DEGENERATE_TARGET,
  NB_ERR_TOO_LARGE,
  NB_ERR_UNDEFINED_AUR,
  NB_ERR_INTERNAL
} nb_status;

/* Short machine-readable name, e.g. "schema". */
NB_API const char* nb_status_name(nb_status status);
/* Nonzero for statuses caused by bad input (usage, schema, argument, invalid scheme). */
NB_API int nb_status_is_usage(nb_status status);

NB_API const char* nb_last_error_message(void);
NB_API const char* nb_last_error_field(void);

NB_API const char* nb_version(void);
NB_API void nb_string_free(char* s);

/* Models. `reference` is a bundled model name or a path to a model file. */
typedef struct nb_model nb_model;
NB_API nb_status nb_model_load(const char* reference, nb_model** out);
NB_API nb_status nb_model_parse(const char* json_text, nb_model** out);
NB_API int nb_model_num_vars(const nb_model* model);
NB_API nb_status nb_model_to_json(const nb_model* model, char** out);
NB_API void nb_model_free(nb_model* model);

/* Directed graphs over P variables; edge (from, to). */
typedef struct nb_network nb_network;
/* A graph file, a model file or a bundled model name (its true network). */
NB_API nb_status nb_network_load(const char* reference, nb_network** out);
NB_API nb_status nb_network_from_model(const nb_model* model, nb_network** out);
NB_API int nb_network_num_vars(const nb_network* network);
NB_API nb_status nb_network_edge(const nb_network* network, int from, int to, int* out);
NB_API nb_status nb_network_to_json(const nb_network* network, char** out);
NB_API void nb_network_free(nb_network* network);

/* Time-course datasets: rows are sampling times, columns variables. */
typedef struct nb_dataset nb_dataset;
NB_API nb_status nb_dataset_read_csv(const char* path, nb_dataset** out);
NB_API nb_status nb_dataset_write_csv(const nb_dataset* dataset, const char* path);
/* Simulates one destructive-sampling dataset from a simulation config object. */
NB_API nb_status nb_dataset_simulate(const nb_model* model, const char* simulation_json, int jobs,
                                     nb_dataset** out);
NB_API size_t nb_dataset_rows(const nb_dataset* dataset);
NB_API int nb_dataset_num_vars(const nb_dataset* dataset);
NB_API nb_status nb_dataset_time(const nb_dataset* dataset, size_t row, double* out);
NB_API nb_status nb_dataset_value(const nb_dataset* dataset, size_t row, int var, double* out);
NB_API void nb_dataset_free(nb_dataset* dataset);

/* Inference schemes. */
typedef enum nb_selector { NB_SELECTOR_BAYES = 0, NB_SELECTOR_AICC = 1 } nb_selector;
typedef enum nb_design { NB_DESIGN_STANDARD = 0, NB_DESIGN_QUADRATIC = 1 } nb_design;
typedef enum nb_variance {
  NB_VARIANCE_A0 = 0,
  NB_VARIANCE_A1 = 1,
  NB_VARIANCE_A2 = 2,
  NB_VARIANCE_VAR = 3
} nb_variance;

typedef struct nb_scheme_config {
  nb_selector selector;
  nb_design design;
  int lagged;
  double lag_minutes;
  nb_variance variance;
  int d_max;
  double epsilon;
  int has_g_factor;
  double g_factor;
  int quadratic_squares;
} nb_scheme_config;

NB_API void nb_scheme_default(nb_scheme_config* out);
/* Parses a canonical id such as "bayes-standard-nolag-a0". */
NB_API nb_status nb_scheme_from_id(const char* id, nb_scheme_config* out);
NB_API nb_status nb_scheme_id(const nb_scheme_config* scheme, char** out);
NB_API nb_status nb_scheme_validate(const nb_scheme_config* scheme, int num_vars);

/* Edge scores: P x P confidences in [0, 1], entry (i, j) for edge i -> j. */
typedef struct nb_scores nb_scores;
/* Pools the datasets and scores every target. */
NB_API nb_status nb_infer(const nb_dataset* const* datasets, size_t count, const nb_scheme_config* scheme,
                          nb_scores** out);
NB_API int nb_scores_num_vars(const nb_scores* scores);
NB_API nb_status nb_scores_get(const nb_scores* scores, int from, int to, double* score, int* evaluable);
NB_API nb_status nb_scores_to_json(const nb_scores* scores, char** out);
NB_API nb_status nb_scores_parse(const char* json_text, nb_scores** out);
/* Edge present iff score > epsilon. */
NB_API nb_status nb_scores_threshold(const nb_scores* scores, double epsilon, nb_network** out);
NB_API void nb_scores_free(nb_scores* scores);

/* ROC analysis. */
typedef struct nb_roc nb_roc;
NB_API nb_status nb_roc_auc(const nb_scores* scores, const nb_network* truth, int include_self_edges,
                            nb_roc** out);
NB_API double nb_roc_aur(const nb_roc* roc);
NB_API size_t nb_roc_num_points(const nb_roc* roc);
NB_API nb_status nb_roc_point(const nb_roc* roc, size_t index, double* threshold, double* fpr, double* tpr);
NB_API void nb_roc_free(nb_roc* roc);

/* Pipelines. Each writes artifacts and manifest.json into output_dir and
 * returns the manifest as JSON text. */
typedef struct nb_run_options {
  const char* output_dir;
  int has_seed;
  uint64_t seed;
  int jobs;
} nb_run_options;

NB_API void nb_run_options_default(nb_run_options* out);
NB_API nb_status nb_run_simulate(const char* config, const nb_run_options* options, char** manifest);
NB_API nb_status nb_run_experiment(const char* spec, const nb_run_options* options, char** manifest);
NB_API nb_status nb_run_infer(const char* const* dataset_paths, size_t count, const nb_scheme_config* scheme,
                              int has_epsilon, double epsilon, const nb_run_options* options, char** manifest);
NB_API nb_status nb_run_evaluate(const char* scores_path, const char* truth, int include_self_edges,
                                 const nb_run_options* options, char** manifest);

/* Checks a configuration file without running it. `report` receives
 * {"valid": bool, "errors": [{field, code, message}]}. Returns NB_OK when
 * valid, otherwise the status of the first error. */
NB_API nb_status nb_validate(const char* config, char** report);

#ifdef __cplusplus
}
#endif

#endif
