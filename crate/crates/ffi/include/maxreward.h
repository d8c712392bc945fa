#ifndef MAXREWARD_H
#define MAXREWARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MrStatus {
  MR_OK = 0,
  MR_NULL_POINTER = 1,
  MR_INVALID_ARGUMENT = 2,
  MR_INVALID_DISTRIBUTION = 3,
  MR_OUTSIDE_WEDGE = 4,
  MR_UNSATISFIABLE_BASELINE = 5,
  MR_BUFFER_TOO_SMALL = 6,
  MR_INTERNAL = 7,
  MR_PANIC = 8,
} MrStatus;

/*
 Reward distribution.
 */
typedef struct MrDistribution MrDistribution;

/*
 Materialized lattice reward field.
 */
typedef struct MrLatticeField MrLatticeField;

/*
 Continuous plan with its workload counters.
 */
typedef struct MrPlan MrPlan;

/*
 Marked Poisson point field.
 */
typedef struct MrPointField MrPointField;

/*
 One target of a point field or plan.
 */
typedef struct MrTarget {
  double p1;
  double p2;
  double reward;
} MrTarget;

typedef struct MrCounters {
  uint64_t dp_relaxations;
  uint64_t planner_calls;
  uint64_t targets_visited;
  uint64_t candidates_seen;
  double distance;
} MrCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf`, NUL-terminated
 and truncated to `len` bytes. Returns the untruncated length including the
 terminator, or 0 when there is no error.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t mr_last_error_message(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *mr_version(void);

/*
 Parses a distribution spec such as `exponential:rate=1`.

 # Safety
 `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum MrStatus mr_distribution_parse(const char *spec, struct MrDistribution **out);

/*
 # Safety
 `dist` must be null or come from [`mr_distribution_parse`].
 */
void mr_distribution_free(struct MrDistribution *dist);

/*
 Mean of the distribution; infinite for heavy tails without a mean.

 # Safety
 `dist` must be a live handle; `mean` must be writable.
 */
enum MrStatus mr_distribution_mean(const struct MrDistribution *dist, double *mean);

/*
 Draws `count` rewards from stream `(seed, stream)` into `out`.

 # Safety
 `dist` must be a live handle; `out` must hold `count` doubles.
 */
enum MrStatus mr_distribution_sample(const struct MrDistribution *dist,
                                     uint64_t seed,
                                     uint64_t stream,
                                     size_t count,
                                     double *out);

/*
 Lattice field of i.i.d. rewards on every vertex up to `horizon` levels.

 # Safety
 `dist` must be a live handle; `out` must be writable.
 */
enum MrStatus mr_lattice_field_new(const struct MrDistribution *dist,
                                   size_t horizon,
                                   uint64_t seed,
                                   uint64_t stream,
                                   struct MrLatticeField **out);

/*
 # Safety
 `field` must be null or come from [`mr_lattice_field_new`].
 */
void mr_lattice_field_free(struct MrLatticeField *field);

/*
 Reward at vertex `(v1, v2)`.

 # Safety
 `field` must be a live handle; `reward` must be writable.
 */
enum MrStatus mr_lattice_field_reward(const struct MrLatticeField *field,
                                      size_t v1,
                                      size_t v2,
                                      double *reward);

/*
 Best total reward over monotone paths of `n` vertices from the origin.

 # Safety
 `field` must be a live handle; `total` must be writable.
 */
enum MrStatus mr_lattice_optimal_reward(const struct MrLatticeField *field,
                                        size_t n,
                                        double *total);

/*
 Monte-Carlo estimate of the mean reward per vertex over `n` vertices.

 # Safety
 `dist` must be a live handle; `mean` and `stderr` must be writable.
 */
enum MrStatus mr_estimate_r_star(const struct MrDistribution *dist,
                                 size_t n,
                                 size_t trials,
                                 uint64_t seed,
                                 double *mean,
                                 double *stderr);

/*
 Poisson field on the cone reachable from the origin within `length`.

 # Safety
 `dist` must be a live handle; `out` must be writable.
 */
enum MrStatus mr_point_field_cone(double lambda,
                                  const struct MrDistribution *dist,
                                  double alpha,
                                  double length,
                                  uint64_t seed,
                                  uint64_t stream,
                                  struct MrPointField **out);

/*
 # Safety
 `field` must be null or a handle from this library.
 */
void mr_point_field_free(struct MrPointField *field);

/*
 Number of targets in the field.

 # Safety
 `field` must be a live handle; `len` must be writable.
 */
enum MrStatus mr_point_field_len(const struct MrPointField *field, size_t *len);

/*
 Copies the targets, sorted by `p1`, into `out`. `written` receives the
 target count even when the buffer is too small.

 # Safety
 `field` must be a live handle; `out` must hold `capacity` targets.
 */
enum MrStatus mr_point_field_targets(const struct MrPointField *field,
                                     struct MrTarget *out,
                                     size_t capacity,
                                     size_t *written);

/*
 Reward-maximizing plan from `(x1, x2)` over `horizon` of travel.

 # Safety
 `field` must be a live handle; `out` must be writable.
 */
enum MrStatus mr_optimal_plan(const struct MrPointField *field,
                              double x1,
                              double x2,
                              double horizon,
                              double alpha,
                              struct MrPlan **out);

/*
 Reward-maximizing plan over an explicit target list.

 # Safety
 `targets` must point to `count` targets; `out` must be writable.
 */
enum MrStatus mr_optimal_plan_targets(const struct MrTarget *targets,
                                      size_t count,
                                      double x1,
                                      double x2,
                                      double horizon,
                                      double alpha,
                                      struct MrPlan **out);

/*
 Receding-horizon plan from the origin with sensing range `sensing`.

 # Safety
 `field` must be a live handle; `out` must be writable.
 */
enum MrStatus mr_receding_plan(const struct MrPointField *field,
                               double length,
                               double sensing,
                               double alpha,
                               struct MrPlan **out);

/*
 # Safety
 `plan` must be null or a handle from this library.
 */
void mr_plan_free(struct MrPlan *plan);

/*
 # Safety
 `plan` must be a live handle; `total` must be writable.
 */
enum MrStatus mr_plan_total_reward(const struct MrPlan *plan, double *total);

/*
 # Safety
 `plan` must be a live handle; `counters` must be writable.
 */
enum MrStatus mr_plan_counters(const struct MrPlan *plan, struct MrCounters *counters);

/*
 Copies the visited targets, in visiting order, into `out`.

 # Safety
 `plan` must be a live handle; `out` must hold `capacity` targets.
 */
enum MrStatus mr_plan_visited(const struct MrPlan *plan,
                              struct MrTarget *out,
                              size_t capacity,
                              size_t *written);

/*
 Conjugate update of a Gaussian belief by one Gaussian measurement.

 # Safety
 `mean` and `precision` must be readable and writable.
 */
enum MrStatus mr_gaussian_update(double *mean,
                                 double *precision,
                                 double value,
                                 double measurement_precision);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAXREWARD_H */
