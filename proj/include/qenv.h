#ifndef QENV_H
#define QENV_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Error codes shared by every entry point. */
#define QENV_OK 0
#define QENV_ERR_USAGE 1      /* bad arguments or malformed input */
#define QENV_ERR_VALIDATION 2 /* a hard validity condition failed */
#define QENV_ERR_NUMERICAL 3  /* numerical failure at runtime */

/* Impurity kind policies accepted by qenv_env_sample. */
#define QENV_KIND_QUANTUM 0
#define QENV_KIND_CLASSICAL 1
#define QENV_KIND_MIX 2

/* Message for the last failing call on this thread; empty string after a
   success. The pointer stays valid until the next qenv call on the thread. */
const char* qenv_last_error(void);

/* Releases any char* the library handed out through an out-parameter. */
void qenv_string_free(char* s);

/* ----- commands -----
   Each command takes one JSON configuration object as text and returns an
   error code. When summary_out is non-NULL it receives a malloc'd
   human-readable summary (error text on failure); free it with
   qenv_string_free. The accepted keys per command mirror the CLI flags. */
int qenv_cmd_generate(const char* config_json, char** summary_out);
int qenv_cmd_train(const char* config_json, char** summary_out);
int qenv_cmd_evaluate(const char* config_json, char** summary_out);
int qenv_cmd_validate(const char* config_json, char** summary_out);
int qenv_cmd_oracle(const char* config_json, char** summary_out);

/* ----- environments ----- */
typedef struct qenv_env qenv_env;

/* NULL on failure; inspect qenv_last_error. */
qenv_env* qenv_env_from_json(const char* json_text);

/* Malloc'd JSON text, or NULL on failure. */
char* qenv_env_to_json(const qenv_env* env);

/* Random two-level impurities in a default flat band with a 500-point time
   grid on [0, 25]; equal seeds draw identical parameters across policies. */
qenv_env* qenv_env_sample(uint64_t seed, int n_impurities, double energy_halfwidth,
                          int kind_policy);

/* Writes one "name ratio=... pass|FAIL" line per validity condition into
   *report_out (when non-NULL). QENV_OK when every hard condition holds,
   QENV_ERR_VALIDATION otherwise. */
int qenv_env_validate(const qenv_env* env, double dt, char** report_out);

void qenv_env_free(qenv_env* env);

/* ----- coherence traces ----- */
typedef struct qenv_trace qenv_trace;

/* Exact decay trace with every impurity treated as quantum. NULL on failure. */
qenv_trace* qenv_trace_quantum(const qenv_env* env);

/* Telegraph-noise decay trace averaged over n_traj trajectories per impurity;
   deterministic in (env, n_traj, seed). NULL on failure. */
qenv_trace* qenv_trace_classical(const qenv_env* env, int n_traj, uint64_t seed);

/* Number of grid points, or -1 on a NULL trace. */
int qenv_trace_length(const qenv_trace* trace);

/* Copies the time grid and |D(t)| into caller buffers of qenv_trace_length
   doubles. Either pointer may be NULL to skip that column. */
int qenv_trace_copy(const qenv_trace* trace, double* time_out, double* abs_out);

int qenv_trace_warning_count(const qenv_trace* trace);

/* Pointer owned by the trace; valid until qenv_trace_free. NULL if the index
   is out of range. */
const char* qenv_trace_warning(const qenv_trace* trace, int index);

void qenv_trace_free(qenv_trace* trace);

#ifdef __cplusplus
}
#endif

#endif
