#ifndef SFP_H
#define SFP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Step size schedule.
typedef enum SfpSchedule {
  SFP_SCHEDULE_CONSTANT = 0,
  SFP_SCHEDULE_INV_SQRT = 1,
} SfpSchedule;

// Per-cell quadrature rule.
typedef enum SfpRule {
  SFP_RULE_MIDPOINT = 0,
  SFP_RULE_GAUSS5 = 1,
} SfpRule;

// Result codes.
typedef enum SfpStatus {
  SFP_STATUS_OK = 0,
  SFP_STATUS_NULL_POINTER = 1,
  SFP_STATUS_INVALID_ARGUMENT = 2,
  SFP_STATUS_DIMENSION_MISMATCH = 3,
  SFP_STATUS_OUTSIDE_DUAL_DOMAIN = 4,
  SFP_STATUS_NUMERICAL_FAILURE = 5,
  SFP_STATUS_NO_ACCEPTED_ITERATE = 6,
  SFP_STATUS_SINGLE_CLASS = 7,
  SFP_STATUS_IO = 8,
  SFP_STATUS_PARSE = 9,
  SFP_STATUS_INDEX_OUT_OF_RANGE = 10,
  SFP_STATUS_PANIC = 11,
} SfpStatus;

// A trained functional classifier and its quadrature.
typedef struct SfpClassifier SfpClassifier;

// A line spectral estimation problem.
typedef struct SfpLseProblem SfpLseProblem;

// A solved problem: primal solution and ascent report.
typedef struct SfpSolution SfpSolution;

// Solver settings. `acceptance_delta < 0` uses the live integration error estimate.
typedef struct SfpSolverConfig {
  size_t steps;
  double eta0;
  enum SfpSchedule schedule;
  size_t cells;
  enum SfpRule rule;
  double acceptance_delta;
  size_t output_grid;
} SfpSolverConfig;

// One extracted spectral component.
typedef struct SfpComponent {
  double f_hat;
  double a_hat;
  double lo;
  double hi;
  double mass;
} SfpComponent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *sfp_last_error(void);

// Default solver settings.
struct SfpSolverConfig sfp_solver_config_default(void);

// Builds a line spectral problem from `p` samples `y` at `times`.
// Pass `r = INFINITY` for the linear model.
//
// # Safety
// `y` and `times` must point to `p` doubles; `out` must be writable.
enum SfpStatus sfp_lse_new(const double *y,
                           const double *times,
                           size_t p,
                           double b,
                           double lambda,
                           double epsilon,
                           double r,
                           struct SfpLseProblem **out);

// # Safety
// `problem` must come from [`sfp_lse_new`] and not be used afterwards.
void sfp_lse_free(struct SfpLseProblem *problem);

// Runs the approximate supergradient solver.
//
// # Safety
// `problem` must be a live handle, `config` may be null for defaults, `out` must be writable.
enum SfpStatus sfp_lse_solve(const struct SfpLseProblem *problem,
                             const struct SfpSolverConfig *config,
                             struct SfpSolution **out);

// # Safety
// `solution` must come from a solve call and not be used afterwards.
void sfp_solution_free(struct SfpSolution *solution);

// Primal objective `P`; NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double sfp_solution_objective(const struct SfpSolution *solution);

// Best dual value reached; NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double sfp_solution_dual_value(const struct SfpSolution *solution);

// `|P − d_best|`; NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double sfp_solution_gap(const struct SfpSolution *solution);

// Support measure; NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double sfp_solution_l0(const struct SfpSolution *solution);

// 1 if the ascent stopped because backtracking was exhausted.
//
// # Safety
// `solution` must be null or a live handle.
int32_t sfp_solution_backtrack_exhausted(const struct SfpSolution *solution);

// Number of support intervals; 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t sfp_solution_support_count(const struct SfpSolution *solution);

// Support interval `index`.
//
// # Safety
// `solution` must be a live handle; `lo` and `hi` must be writable.
enum SfpStatus sfp_solution_support_interval(const struct SfpSolution *solution,
                                             size_t index,
                                             double *lo,
                                             double *hi);

// `X*(beta)`; NaN for a null handle or a failed pointwise solve.
//
// # Safety
// `solution` must be null or a live handle.
double sfp_solution_evaluate(const struct SfpSolution *solution, double beta);

// Writes up to `capacity` components, largest `|a_hat|` first, and stores the
// total number found in `count`. Pass `capacity = 0` to query the count.
//
// # Safety
// `solution` must be a live handle; `out` must hold `capacity` entries; `count` must be writable.
enum SfpStatus sfp_solution_components(const struct SfpSolution *solution,
                                       struct SfpComponent *out,
                                       size_t capacity,
                                       size_t *count);

// Trains a functional classifier on `n` series of `knots` values each
// (row-major), sampled on uniform knots over `[0, 1]`, with labels in {0, 1}.
// Pass `r = INFINITY` and `lambda = 0` for the plain model.
//
// # Safety
// `values` must hold `n·knots` doubles, `labels` `n` bytes; `out` must be writable.
enum SfpStatus sfp_rfda_train(const double *values,
                              const uint8_t *labels,
                              size_t n,
                              size_t knots,
                              double lambda,
                              double r,
                              double eps_tilde,
                              const struct SfpSolverConfig *config,
                              struct SfpClassifier **out);

// `P(label = 1)` for one series of the training length.
//
// # Safety
// `classifier` must be a live handle; `values` must hold `knots` doubles; `prob` must be writable.
enum SfpStatus sfp_rfda_predict(const struct SfpClassifier *classifier,
                                const double *values,
                                size_t knots,
                                double *prob);

// Intercept `b` of `σ(∫ρ[Z W] − b)`; NaN for a null handle.
//
// # Safety
// `classifier` must be null or a live handle.
double sfp_rfda_intercept(const struct SfpClassifier *classifier);

// # Safety
// `classifier` must come from [`sfp_rfda_train`] and not be used afterwards.
void sfp_rfda_free(struct SfpClassifier *classifier);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFP_H */
