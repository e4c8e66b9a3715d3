#ifndef QOCO_H
#define QOCO_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum QocoStatus {
  QOCO_STATUS_OK = 0,
  QOCO_STATUS_NULL_POINTER = 1,
  QOCO_STATUS_INVALID_ARGUMENT = 2,
  QOCO_STATUS_CONFIG = 3,
  QOCO_STATUS_DIMENSION_MISMATCH = 4,
  QOCO_STATUS_DOMAIN_VIOLATION = 5,
  QOCO_STATUS_MEMORY_GUARD = 6,
  QOCO_STATUS_CALIBRATION = 7,
  QOCO_STATUS_RUNTIME = 8,
  QOCO_STATUS_PANIC = 9,
} QocoStatus;

// A validated experiment configuration.
typedef struct QocoExperiment QocoExperiment;

// Settings of the simulated quantum gradient estimator.
typedef struct QocoQuantumEstimator QocoQuantumEstimator;

// One finished game.
typedef struct QocoRun QocoRun;

// Register widths and derived constants of one quantum estimate.
typedef struct QocoParams {
  double beta;
  // Qubits per coordinate register.
  uint32_t b;
  // Fractional bits of the phase register.
  uint32_t c;
  // `2^(b n)`.
  uint64_t amplitudes;
  // L1 error threshold the estimate meets with probability `1 - rho`.
  double error_bound;
} QocoParams;

// Loss callback: returns f(x) for the `n` coordinates at `x`.
typedef double (*QocoLossFn)(const double *x, size_t n, void *user_data);

typedef struct QocoRunSummary {
  double regret;
  double bound;
  double comparator_objective;
  bool bound_satisfied;
  bool comparator_converged;
  uint64_t lemma_exceedances;
  uint64_t total_queries;
  uint64_t rounds;
  uint64_t dim;
} QocoRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qoco_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *qoco_last_error(void);

// Derives the register widths for one estimate.
//
// # Safety
// `out` must point to a writable `QocoParams`.
enum QocoStatus qoco_derive_params(size_t n,
                                   double lipschitz,
                                   double rho,
                                   double p,
                                   double r,
                                   double r_prime,
                                   uint64_t memory_guard,
                                   struct QocoParams *out);

// Re-runs the decoding calibration; fails with `QOCO_STATUS_CALIBRATION`
// if the built-in convention does not decode on-grid slopes exactly.
enum QocoStatus qoco_calibrate(void);

// # Safety
// `out` must point to writable storage for one handle pointer.
enum QocoStatus qoco_quantum_estimator_new(double lipschitz,
                                           double rho,
                                           double p,
                                           uint64_t memory_guard,
                                           struct QocoQuantumEstimator **out);

// # Safety
// `estimator` must be NULL or a handle from `qoco_quantum_estimator_new`
// that has not been freed.
void qoco_quantum_estimator_free(struct QocoQuantumEstimator *estimator);

// One simulated quantum gradient estimate of `loss` near `x`. Writes the
// sampled point to `z_out` and the estimate to `grad_out` (both length
// `n`; either may be NULL) and the parameters used to `params_out` (may be
// NULL).
//
// # Safety
// `x` must hold `n` doubles; non-NULL outputs must be writable for their
// stated lengths; `loss` must accept any finite point.
enum QocoStatus qoco_quantum_estimate(const struct QocoQuantumEstimator *estimator,
                                      QocoLossFn loss,
                                      void *user_data,
                                      const double *x,
                                      size_t n,
                                      double r,
                                      double r_prime,
                                      uint64_t seed,
                                      double *z_out,
                                      double *grad_out,
                                      struct QocoParams *params_out);

// Central-difference gradient estimate of `loss` near `x` (`2n` loss
// evaluations). Writes `z_out` and `grad_out` (length `n`, may be NULL) and
// the evaluation count to `queries_out` (may be NULL).
//
// # Safety
// As for `qoco_quantum_estimate`.
enum QocoStatus qoco_classical_estimate(QocoLossFn loss,
                                        void *user_data,
                                        const double *x,
                                        size_t n,
                                        double r,
                                        double r_prime,
                                        uint64_t seed,
                                        double *z_out,
                                        double *grad_out,
                                        uint64_t *queries_out);

// Parses and validates an experiment from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum QocoStatus qoco_experiment_from_json(const char *json, struct QocoExperiment **out);

// # Safety
// `experiment` must be NULL or a live handle.
void qoco_experiment_free(struct QocoExperiment *experiment);

// Dimension of the experiment's feasible set, or 0 for NULL.
//
// # Safety
// `experiment` must be NULL or a live handle.
size_t qoco_experiment_dim(const struct QocoExperiment *experiment);

// Number of rounds, or 0 for NULL.
//
// # Safety
// `experiment` must be NULL or a live handle.
size_t qoco_experiment_horizon(const struct QocoExperiment *experiment);

// Plays one seeded game and evaluates it.
//
// # Safety
// `experiment` must be a live handle; `out` must be writable.
enum QocoStatus qoco_experiment_run(const struct QocoExperiment *experiment,
                                    uint64_t seed,
                                    struct QocoRun **out);

// # Safety
// `run` must be NULL or a live handle.
void qoco_run_free(struct QocoRun *run);

// # Safety
// `run` must be a live handle; `out` must be writable.
enum QocoStatus qoco_run_summary(const struct QocoRun *run, struct QocoRunSummary *out);

// Copies the played points, row-major `rounds x dim`, into `out`, which
// must hold `len` doubles.
//
// # Safety
// `run` must be a live handle; `out` must hold `len` doubles.
enum QocoStatus qoco_run_decisions(const struct QocoRun *run, double *out, size_t len);

// The transcript CSV. The string is owned by the run and freed with it.
//
// # Safety
// `run` must be NULL or a live handle.
const char *qoco_run_transcript_csv(const struct QocoRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QOCO_H */
