#ifndef QUASILEVEL_H
#define QUASILEVEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QlStatus {
  QL_STATUS_OK = 0,
  QL_STATUS_NULL_POINTER = 1,
  QL_STATUS_INVALID_ARGUMENT = 2,
  QL_STATUS_INVALID_PAIR = 3,
  QL_STATUS_OVERFLOW = 4,
  QL_STATUS_NOT_PERIODIC = 5,
  QL_STATUS_WINDOW_TOO_SMALL = 6,
  QL_STATUS_AMBIGUOUS = 7,
  QL_STATUS_MEMORY_CAP = 8,
  QL_STATUS_NON_GENERIC = 9,
  QL_STATUS_INTERNAL = 10,
} QlStatus;

/**
 * Opaque sampled grid.
 */
typedef struct QlGrid QlGrid;

/**
 * Opaque potential `V(r, α, a)`.
 */
typedef struct QlPotential QlPotential;

typedef struct QlMagicAngle {
  uint64_t n;
  uint64_t m;
  uint64_t m0;
  uint64_t n0;
  double angle;
  double b1_x;
  double b1_y;
  double b2_x;
  double b2_y;
  double t_nm;
} QlMagicAngle;

typedef struct QlClosedStats {
  double d_hat;
  uint64_t closed;
  uint64_t censored;
} QlClosedStats;

typedef struct QlThreshold {
  double positive_lo;
  double positive_hi;
  double negative_lo;
  double negative_hi;
  double spacing;
} QlThreshold;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ql_last_error_message(void);

/**
 * Creates `V(r, α, a)` with `alpha` in radians.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QlStatus ql_potential_new(double v0,
                               double k,
                               double alpha,
                               double ax,
                               double ay,
                               struct QlPotential **out);

/**
 * # Safety
 * `p` must be null or a handle from [`ql_potential_new`] not yet freed.
 */
void ql_potential_free(struct QlPotential *p);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum QlStatus ql_potential_eval(const struct QlPotential *p, double x, double y, double *out);

/**
 * Gradient with respect to `r`.
 *
 * # Safety
 * `p` must be a live handle and `gx`, `gy` writable.
 */
enum QlStatus ql_potential_grad(const struct QlPotential *p,
                                double x,
                                double y,
                                double *gx,
                                double *gy);

/**
 * # Safety
 * `out` must be writable.
 */
enum QlStatus ql_magic_angle(uint64_t n, uint64_t m, struct QlMagicAngle *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum QlStatus ql_diameter_bound(double epsilon, double v0, double k, double *out);

/**
 * Samples `p` on the square window of edge `edge` centred at `(cx, cy)`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum QlStatus ql_grid_sample_open(const struct QlPotential *p,
                                  double cx,
                                  double cy,
                                  double edge,
                                  double spacing,
                                  struct QlGrid **out);

/**
 * Samples one period cell of the `(n, m)` approximant with shift `a` and
 * `cells` samples per side.
 *
 * # Safety
 * `out` must be writable.
 */
enum QlStatus ql_grid_sample_periodic(uint64_t n,
                                      uint64_t m,
                                      double ax,
                                      double ay,
                                      size_t cells,
                                      struct QlGrid **out);

/**
 * # Safety
 * `g` must be null or a grid handle not yet freed.
 */
void ql_grid_free(struct QlGrid *g);

/**
 * Dimensions and a borrowed pointer to the row-major values, valid while
 * the grid lives.
 *
 * # Safety
 * `g` must be a live handle; the out pointers must be writable.
 */
enum QlStatus ql_grid_values(const struct QlGrid *g, size_t *nx, size_t *ny, const double **values);

/**
 * Largest closed component diameter at `epsilon` over both signs.
 *
 * # Safety
 * `g` must be a live open-window grid handle and `out` writable.
 */
enum QlStatus ql_max_closed_diameter(const struct QlGrid *g,
                                     double epsilon,
                                     struct QlClosedStats *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum QlStatus ql_estimate_epsilon_nm(uint64_t n,
                                     uint64_t m,
                                     double ax,
                                     double ay,
                                     double tol,
                                     struct QlThreshold *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUASILEVEL_H */
