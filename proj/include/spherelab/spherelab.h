/* Copyright 2026 spherelab contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of the spherelab shared library.
 *
 * The library runs reproducible Monte Carlo experiments on energy-conserving
 * N-particle stochastic dynamics: diffusions on high-dimensional spheres in
 * three equivalent representations (tangent-projected Ito, Heun-integrated
 * Stratonovich, composed random rotations), the pair-rotation jump process
 * whose small-angle limit they are, couplings of tagged components to
 * Ornstein-Uhlenbeck references, and the momentum-conserving N-particle
 * variant.
 *
 * All handles are opaque; every function returns a status code. On any
 * failure slab_last_error() returns a human-readable message for the calling
 * thread.
 */

#ifndef SPHERELAB_SPHERELAB_H
#define SPHERELAB_SPHERELAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slab_status {
  SLAB_OK = 0,
  SLAB_ERROR = 1,           /* runtime failure, contract violation, I/O */
  SLAB_INVALID_SPEC = 2,    /* configuration does not parse or validate */
  SLAB_BUDGET_EXCEEDED = 3, /* event/step budget hit; outputs are partial */
  SLAB_CHECK_FAILED = 4     /* a requested acceptance check failed */
} slab_status;

/* Library version string, e.g. "0.1.0". */
const char* slab_version(void);

/* Message of the last failure on this thread (empty string if none). */
const char* slab_last_error(void);

/* ------------------------------------------------------------------ */
/* Experiments                                                         */

typedef struct slab_experiment slab_experiment;

/* Loads and validates an experiment configuration from a JSON file. */
slab_status slab_experiment_open(const char* config_path,
                                 slab_experiment** out);

/* Same, from an in-memory JSON document. */
slab_status slab_experiment_open_text(const char* config_json,
                                      slab_experiment** out);

void slab_experiment_close(slab_experiment* experiment);

/* Experiment kind name ("simulate", "couple", "chaos", "kac", "momentum",
 * "marginal", "covariation"). */
const char* slab_experiment_kind(const slab_experiment* experiment);

/* Fails with SLAB_INVALID_SPEC unless the experiment has the given kind. */
slab_status slab_experiment_require_kind(const slab_experiment* experiment,
                                         const char* kind);

/* Overrides applied after loading, before running. format: "csv" | "json". */
slab_status slab_experiment_override_seed(slab_experiment* experiment,
                                          uint64_t seed);
slab_status slab_experiment_override_workers(slab_experiment* experiment,
                                             int workers);
slab_status slab_experiment_override_output(slab_experiment* experiment,
                                            const char* out_dir,
                                            const char* format);

/* Runs the experiment and writes manifest.json, summary.json and the series
 * files into the output directory. Re-running an identical configuration
 * reproduces the numeric outputs byte for byte. With with_checks nonzero a
 * failing summary check yields SLAB_CHECK_FAILED; a hit budget yields
 * SLAB_BUDGET_EXCEEDED with partial outputs flagged in the manifest. */
slab_status slab_experiment_run(slab_experiment* experiment, int with_checks);

/* Path of the manifest written by the last successful run. */
const char* slab_experiment_manifest_path(const slab_experiment* experiment);

/* ------------------------------------------------------------------ */
/* Reports                                                             */

/* Diff of two run manifests of the same experiment kind. The report is a
 * JSON document allocated by the library; free it with slab_string_free. */
slab_status slab_compare_runs(const char* manifest_a, const char* manifest_b,
                              char** report_json);

/* Recomputes the summary verdicts of a finished run from its stored series
 * files and reports whether they match summary.json. */
slab_status slab_audit_run(const char* run_dir, char** report_json);

void slab_string_free(char* text);

/* ------------------------------------------------------------------ */
/* Direct simulation                                                   */

typedef struct slab_trajectory slab_trajectory;

/* Simulates one sphere-diffusion trajectory on the grid dt, 2dt, ..., horizon.
 * integrator: "ito-em" | "strat-heun" | "rotation" | "kac-jump".
 * If initial is non-NULL it must hold `dimension` components on the sphere of
 * radius sqrt(dimension); otherwise the initial state is sampled uniformly.
 * The result is deterministic in (seed, trajectory). */
slab_status slab_simulate_sphere(size_t dimension, double dt, double horizon,
                                 const char* integrator, int renormalize,
                                 uint64_t seed, uint64_t trajectory,
                                 const double* initial,
                                 slab_trajectory** out);

size_t slab_trajectory_steps(const slab_trajectory* trajectory);
size_t slab_trajectory_dimension(const slab_trajectory* trajectory);
double slab_trajectory_time(const slab_trajectory* trajectory, size_t step);

/* Copies the state at grid index `step` (0 = initial) into `out`, which must
 * hold `dimension` doubles. */
slab_status slab_trajectory_state(const slab_trajectory* trajectory,
                                  size_t step, double* out);

void slab_trajectory_free(slab_trajectory* trajectory);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPHERELAB_SPHERELAB_H */
