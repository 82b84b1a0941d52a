#ifndef SANDPILE_H
#define SANDPILE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Slope bound family.
typedef enum SpConstraintKind {
  // `c = 1`
  SP_UNIFORM = 0,
  // `c = 1/sqrt(w)`
  SP_INV_SQRT_W = 1,
  // `c = 1/w`
  SP_INV_W = 2,
} SpConstraintKind;

// Result of every fallible call.
typedef enum SpStatus {
  SP_OK = 0,
  // A required pointer was null or a string was not UTF-8.
  SP_NULL_ARGUMENT = 1,
  // Invalid input: graph, field, parameter or file errors.
  SP_INVALID = 2,
  // A solver failed to converge or overflowed.
  SP_SOLVER_FAILURE = 3,
  // The output buffer is too small.
  SP_BUFFER_TOO_SMALL = 4,
  // Internal error (a Rust panic was caught).
  SP_INTERNAL = 5,
} SpStatus;

// Opaque graph handle.
typedef struct SpGraph SpGraph;

// Opaque trajectory handle.
typedef struct SpTrajectory SpTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length.
size_t sp_last_error_message(char *buf, size_t len);

// Parses a constraint kind name (`uniform`, `inv-sqrt-w`, `inv-w`).
enum SpStatus sp_constraint_kind_parse(const char *name, enum SpConstraintKind *out);

// Builds a graph from edge-list text (`<x> <y> <weight>` per line).
enum SpStatus sp_graph_from_edge_list(const char *text, struct SpGraph **out);

// Loads a graph from an edge-list file.
enum SpStatus sp_graph_load(const char *path, struct SpGraph **out);

// Path `x1 - ... - xn` with unit weights.
enum SpStatus sp_graph_path(size_t n, struct SpGraph **out);

// Integer lattice truncated to `[-radius, radius]`.
enum SpStatus sp_graph_truncated_z(size_t radius, struct SpGraph **out);

// Releases a graph; null is ignored.
void sp_graph_free(struct SpGraph *g);

// Number of vertices (0 for null).
size_t sp_graph_vertex_count(const struct SpGraph *g);

// Number of edges (0 for null).
size_t sp_graph_edge_count(const struct SpGraph *g);

// Degrees `d_x` into `out` (length at least the vertex count).
enum SpStatus sp_graph_degrees(const struct SpGraph *g, double *out, size_t len);

// Copies the label of vertex `index` into `buf` (NUL terminated).
enum SpStatus sp_graph_label(const struct SpGraph *g, size_t index, char *buf, size_t len);

// Index of the vertex named `label`.
enum SpStatus sp_graph_index_of(const struct SpGraph *g, const char *label, size_t *out);

// Largest `|u(y) - u(x)| / c_xy` over the edges.
enum SpStatus sp_max_relative_slope(const struct SpGraph *g,
                                    enum SpConstraintKind kind,
                                    const double *u,
                                    size_t n,
                                    double *out);

// ν-weighted projection of `z` onto the stable set; result in `out`.
enum SpStatus sp_project(const struct SpGraph *g,
                         enum SpConstraintKind kind,
                         const double *z,
                         size_t n,
                         double tol,
                         double *out);

// Resolvent `(I + lambda dJ_p)^{-1} z` of the p-energy for `kind`.
enum SpStatus sp_resolvent_p(const struct SpGraph *g,
                             enum SpConstraintKind kind,
                             double p,
                             double lambda,
                             const double *z,
                             size_t n,
                             double tol,
                             double *out);

// Growth model from a stable `u0` under the time-constant source `f`
// (null for none) on `[0, t_end]`.
enum SpStatus sp_solve_growth(const struct SpGraph *g,
                              enum SpConstraintKind kind,
                              const double *u0,
                              const double *f,
                              size_t n,
                              double t_end,
                              double dt,
                              double tol,
                              struct SpTrajectory **out);

// p-flow from `u0` under the time-constant source `f` (null for none).
enum SpStatus sp_solve_p_flow(const struct SpGraph *g,
                              enum SpConstraintKind kind,
                              double p,
                              const double *u0,
                              const double *f,
                              size_t n,
                              double t_end,
                              double dt,
                              struct SpTrajectory **out);

// Collapse of `u0`: writes the limit into `u_inf`; when `traj` is not
// null it receives the rescaled trajectory on `[1/L, 1]`.
enum SpStatus sp_solve_collapse(const struct SpGraph *g,
                                enum SpConstraintKind kind,
                                const double *u0,
                                size_t n,
                                double dt,
                                double *u_inf,
                                struct SpTrajectory **traj);

// Optimal transport cost between densities `f0`, `f1` (masses `f d_x`)
// in the hop metric.
enum SpStatus sp_ot_cost(const struct SpGraph *g,
                         const double *f0,
                         const double *f1,
                         size_t n,
                         double *out);

// Releases a trajectory; null is ignored.
void sp_trajectory_free(struct SpTrajectory *t);

// Number of samples (0 for null).
size_t sp_trajectory_len(const struct SpTrajectory *t);

// Largest absolute per-step mass residual (0 for null).
double sp_trajectory_max_residual(const struct SpTrajectory *t);

// Sample times into `out` (length at least `sp_trajectory_len`).
enum SpStatus sp_trajectory_times(const struct SpTrajectory *t, double *out, size_t len);

// Sample `index` into `out` (length at least the vertex count).
enum SpStatus sp_trajectory_state(const struct SpTrajectory *t,
                                  size_t index,
                                  double *out,
                                  size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SANDPILE_H */
