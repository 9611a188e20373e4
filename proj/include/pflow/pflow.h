#ifndef PFLOW_H
#define PFLOW_H

/* C interface of the pflow shared library.
 *
 * Every function returns a status code (PFLOW_OK on success). After a failure
 * pflow_last_error() returns the message of the most recent error raised on
 * the calling thread. Handles are opaque and owned by the caller. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PFLOW_API __declspec(dllexport)
#else
#define PFLOW_API __attribute__((visibility("default")))
#endif

enum pflow_status {
  PFLOW_OK = 0,
  PFLOW_ERR_INVALID_ARGUMENT = 1,
  PFLOW_ERR_DIMENSION_MISMATCH = 2,
  PFLOW_ERR_NOT_CONVERGED = 3,
  PFLOW_ERR_CFL_VIOLATION = 4,
  PFLOW_ERR_NOT_DIVERGENCE_FREE = 5,
  PFLOW_ERR_CONFIG = 6,
  PFLOW_ERR_IO = 7,
  PFLOW_ERR_INCONSISTENT = 8,
  PFLOW_ERR_INTERNAL = 99
};

enum pflow_scenario {
  PFLOW_SCENARIO_FROM_CONFIG = -1,
  PFLOW_SCENARIO_SINGLE = 0,
  PFLOW_SCENARIO_PAIR = 1,
  PFLOW_SCENARIO_TRIPLE = 2,
  PFLOW_SCENARIO_SWEEP = 3
};

typedef struct pflow_config pflow_config;
typedef struct pflow_result pflow_result;

typedef void (*pflow_log_fn)(const char* message, void* user);

PFLOW_API const char* pflow_version(void);
PFLOW_API const char* pflow_status_string(int status);
PFLOW_API const char* pflow_last_error(void);

/* Configuration: "key = value" text, see the README for the schema. */
PFLOW_API int pflow_config_default(pflow_config** out);
PFLOW_API int pflow_config_parse(const char* text, pflow_config** out);
PFLOW_API int pflow_config_load(const char* path, pflow_config** out);
PFLOW_API int pflow_config_set(pflow_config* cfg, const char* key, const char* value);
/* Copies the effective value of key into buf (NUL terminated). *needed (may be
 * NULL) receives the required size including the terminator. */
PFLOW_API int pflow_config_get(const pflow_config* cfg, const char* key, char* buf, size_t size,
                               size_t* needed);
PFLOW_API int pflow_config_format(const pflow_config* cfg, char* buf, size_t size, size_t* needed);
PFLOW_API void pflow_config_free(pflow_config* cfg);

/* Runs a scenario. out_dir may be NULL or empty (no artifacts written);
 * log may be NULL. */
PFLOW_API int pflow_run(const pflow_config* cfg, int scenario, const char* out_dir, int threads,
                        pflow_log_fn log, void* user, pflow_result** out);
PFLOW_API int pflow_result_passed(const pflow_result* res, int* passed);
PFLOW_API int pflow_result_report(const pflow_result* res, char* buf, size_t size, size_t* needed);
PFLOW_API int pflow_result_report_csv(const pflow_result* res, char* buf, size_t size,
                                      size_t* needed);
PFLOW_API int pflow_result_check_count(const pflow_result* res, int* count);
/* Name of check k and its measured sides. */
PFLOW_API int pflow_result_check(const pflow_result* res, int k, char* name, size_t name_size,
                                 double* lhs, double* rhs, int* passed);
/* Named scalar results: "beta", "t_end", "beta1", "poincare_constant",
 * "lagrangian_residual" (single runs), "slope:<name>" (sweeps) and
 * "<pair>:<stability key>" for every pair of an ensemble. */
PFLOW_API int pflow_result_value(const pflow_result* res, const char* key, double* value);
PFLOW_API void pflow_result_free(pflow_result* res);

/* Re-checks a run directory. *passed is 1 when the stored report is
 * reproduced and every check passes. */
PFLOW_API int pflow_verify(const char* dir, int* passed, char* buf, size_t size, size_t* needed);

/* Poincare constant C_P = 1/sqrt(lambda1) of the discrete Dirichlet Laplacian. */
PFLOW_API int pflow_poincare(int nx, int ny, double lx, double ly, double* cp, double* lambda1);

#ifdef __cplusplus
}
#endif

#endif /* PFLOW_H */
