// Copyright 2026 The qmupl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the qmupl library. All functions return a status code;
 * on failure a message describing the problem is available from
 * qmupl_last_error() on the calling thread. Objects are opaque and owned by
 * the caller, who releases them with the matching destroy function. */
#ifndef QMUPL_QMUPL_H_
#define QMUPL_QMUPL_H_

#include <stddef.h>

#if defined(QMUPL_BUILDING_LIBRARY)
#define QMUPL_API __attribute__((visibility("default")))
#else
#define QMUPL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qmupl_status {
  QMUPL_OK = 0,
  QMUPL_ERR_INVALID_ARGUMENT = 1, /* null pointer or unknown name */
  QMUPL_ERR_DOMAIN = 2,           /* value outside the model's domain */
  QMUPL_ERR_CONFIG = 3,           /* malformed configuration or run options */
  QMUPL_ERR_IO = 4,               /* file could not be read or written */
  QMUPL_ERR_PROPAGATION = 5,      /* non-finite value during time stepping */
  QMUPL_ERR_NO_HIT = 6,           /* step budget exhausted */
  QMUPL_ERR_BOUNDARY_LEAK = 7,    /* grid amplitude reached the lattice edge */
  QMUPL_ERR_INVARIANT = 8,        /* run finished but an in-run check failed */
  QMUPL_ERR_INTERNAL = 9
} qmupl_status;

QMUPL_API const char* qmupl_status_string(qmupl_status status);
QMUPL_API const char* qmupl_last_error(void);
QMUPL_API const char* qmupl_version(void);

/* ---- parameters -------------------------------------------------------- */

/* Physical parameters plus collapse thresholds. Field names are
 * m, m0, lambda0, hbar, kappa, T, t0 and a, b, multiplier. */
typedef struct qmupl_params qmupl_params;

/* preset is "reference", "desk" or NULL (reference). */
QMUPL_API qmupl_status qmupl_params_create(const char* preset, qmupl_params** out);
/* Reads a JSON configuration file. */
QMUPL_API qmupl_status qmupl_params_load(const char* path, qmupl_params** out);
QMUPL_API void qmupl_params_destroy(qmupl_params* params);
/* Physical fields are range-checked on entry (QMUPL_ERR_DOMAIN leaves the handle unchanged);
 * thresholds a, b and multiplier are checked when used. */
QMUPL_API qmupl_status qmupl_params_set(qmupl_params* params, const char* name, double value);
QMUPL_API qmupl_status qmupl_params_get(const qmupl_params* params, const char* name,
                                        double* value);

typedef struct qmupl_derived {
  double lambda;
  double omega;
  double sigma_q;
  double sigma_p;
} qmupl_derived;

QMUPL_API qmupl_status qmupl_derive_constants(const qmupl_params* params, qmupl_derived* out);

/* ---- closed-form results ----------------------------------------------- */

QMUPL_API qmupl_status qmupl_collapse_time(const qmupl_params* params, double gamma0,
                                           double* t_collapse, int* exceeds_T);
QMUPL_API qmupl_status qmupl_collapse_probability(double gamma0, double b, double* p_plus,
                                                  double* p_minus);
QMUPL_API qmupl_status qmupl_hitting_time_stats(double gamma0, double b, double* mean,
                                                double* variance);
QMUPL_API qmupl_status qmupl_stability_bound(double a, double b, double* bound,
                                             double* deficit);

/* ---- experiment runs --------------------------------------------------- */

typedef struct qmupl_run qmupl_run;
typedef struct qmupl_result qmupl_result;

/* experiment: analytic-report, eigenstate, superposition, reduced-gamma,
 * grid-oracle or compare. */
QMUPL_API qmupl_status qmupl_run_create(const char* experiment, qmupl_run** out);
QMUPL_API void qmupl_run_destroy(qmupl_run* run);
/* Sets an option from its text form. Malformed values are reported by
 * qmupl_run_validate and qmupl_run_execute. */
QMUPL_API qmupl_status qmupl_run_set(qmupl_run* run, const char* key, const char* value);
/* Copies every field of params into the run's options. */
QMUPL_API qmupl_status qmupl_run_use_params(qmupl_run* run, const qmupl_params* params);
/* Returns QMUPL_ERR_CONFIG with all problems listed in qmupl_last_error(). */
QMUPL_API qmupl_status qmupl_run_validate(const qmupl_run* run);
/* Executes the run. On QMUPL_OK and on QMUPL_ERR_INVARIANT *out holds the
 * result; otherwise *out is NULL. */
QMUPL_API qmupl_status qmupl_run_execute(const qmupl_run* run, qmupl_result** out);

QMUPL_API const char* qmupl_result_json(const qmupl_result* result);
QMUPL_API int qmupl_result_passed(const qmupl_result* result);
QMUPL_API size_t qmupl_result_failure_count(const qmupl_result* result);
QMUPL_API const char* qmupl_result_failure(const qmupl_result* result, size_t index);
QMUPL_API void qmupl_result_destroy(qmupl_result* result);

#ifdef __cplusplus
}
#endif

#endif /* QMUPL_QMUPL_H_ */
