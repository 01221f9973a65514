/* C interface to the anant library: opaque handles and status codes.
 * Every function returns ANANT_OK on success; on failure the message is
 * available from anant_last_error() on the calling thread. */
#ifndef ANANT_ANANT_H
#define ANANT_ANANT_H

#include <stddef.h>
#include <stdint.h>

#if defined(ANANT_BUILDING_LIBRARY)
#define ANANT_API __attribute__((visibility("default")))
#else
#define ANANT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum anant_status {
  ANANT_OK = 0,
  ANANT_ERR_INVALID_ARGUMENT = 1,
  ANANT_ERR_CONFIG = 2,
  ANANT_ERR_MISMATCH = 3,
  ANANT_ERR_NUMERIC = 4,
  ANANT_ERR_IO = 5,
  ANANT_ERR_INTERNAL = 6
} anant_status;

typedef struct anant_config anant_config;
typedef struct anant_model anant_model;

typedef struct anant_train_summary {
  double rel_l2_percent;  /* on the config's n_test scattered points */
  double final_total_loss;
  double final_data_loss;
  double final_residual_loss;
  double wall_seconds;
  long iterations;
} anant_train_summary;

ANANT_API const char* anant_version(void);
ANANT_API const char* anant_last_error(void);
ANANT_API const char* anant_status_string(anant_status status);

/* Configuration. */
ANANT_API anant_status anant_config_load(const char* path, anant_config** out);
ANANT_API anant_status anant_config_parse(const char* json_text, anant_config** out);
/* "section.key=value"; the config is re-validated. */
ANANT_API anant_status anant_config_override(anant_config* cfg, const char* assignment);
ANANT_API anant_status anant_config_set_seed(anant_config* cfg, uint64_t seed);
/* Writes 16 hex digits and a terminator; len must be at least 17. */
ANANT_API anant_status anant_config_hash(const anant_config* cfg, char* buf, size_t len);
/* Canonical JSON. `needed` receives the size including the terminator. */
ANANT_API anant_status anant_config_to_json(const anant_config* cfg, char* buf, size_t len, size_t* needed);
ANANT_API void anant_config_free(anant_config* cfg);

/* Training. With a non-null out_dir, writes checkpoint.json,
 * train_log.csv and summary.json there. out_model and summary may be null. */
ANANT_API anant_status anant_train(const anant_config* cfg, const char* out_dir, anant_model** out_model,
                                   anant_train_summary* summary);

/* Models. */
ANANT_API anant_status anant_model_load(const char* checkpoint_path, anant_model** out);
ANANT_API anant_status anant_model_save(const anant_model* model, const char* checkpoint_path);
ANANT_API anant_status anant_model_coords(const anant_model* model, int* coords);
/* points: n rows of `coords` values, row-major. out: n values. */
ANANT_API anant_status anant_model_predict(const anant_model* model, const double* points, size_t n,
                                           size_t coords, double* out);
ANANT_API void anant_model_free(anant_model* model);

/* Relative L2 error (percent) of a model on the config's test points.
 * A null cfg uses the model's own config. Writes eval.json to out_dir if given. */
ANANT_API anant_status anant_eval(const anant_model* model, const anant_config* cfg, const char* out_dir,
                                  double* rel_l2_percent);
/* Multi-seed protocol over eval.n_seeds seeds; writes multi_seed.json. */
ANANT_API anant_status anant_multi_seed(const anant_config* cfg, int threads, const char* out_dir, double* mean,
                                        double* std_dev);
/* kind: "precond", "sensitivity" or "scaling". */
ANANT_API anant_status anant_study(const anant_config* cfg, const char* kind, const char* out_dir);
/* One CSV per eval.slices entry (or one default slice). */
ANANT_API anant_status anant_slice(const anant_model* model, const anant_config* cfg, const char* out_dir,
                                   int* files_written);

#ifdef __cplusplus
}
#endif

#endif
