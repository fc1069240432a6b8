#ifndef CONECG_H
#define CONECG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Master type: 0 = LP (diagonally dominant), 1 = SOCP (scaled diagonally dominant).
#define CONECG_MODE_LP 0

#define CONECG_MODE_SOCP 1

// Pricing: 0 = eigenvectors, 1 = triples.
#define CONECG_PRICING_EIG 0

#define CONECG_PRICING_TRIPLES 1

typedef enum ConecgStatus {
  CONECG_STATUS_OK = 0,
  CONECG_STATUS_NULL_POINTER = 1,
  CONECG_STATUS_INVALID_ARGUMENT = 2,
  CONECG_STATUS_PARSE_ERROR = 3,
  CONECG_STATUS_SOLVER_ERROR = 4,
  CONECG_STATUS_INFEASIBLE = 5,
  CONECG_STATUS_SIZE_LIMIT = 6,
  CONECG_STATUS_BUDGET = 7,
  CONECG_STATUS_INTERNAL = 8,
  CONECG_STATUS_PANIC = 9,
} ConecgStatus;

typedef struct ConecgGraph ConecgGraph;

typedef struct ConecgPoly ConecgPoly;

typedef struct ConecgSdp ConecgSdp;

typedef struct ConecgTrace ConecgTrace;

// Column-generation settings; fill with [`conecg_config_default`].
typedef struct ConecgConfig {
  uint32_t mode;
  uint32_t pricing;
  uint32_t cuts_per_iter;
  uint64_t t1;
  uint64_t t2;
  uint32_t max_iters;
  // Seconds; zero or negative means no limit.
  double time_limit_s;
  // Nonzero to record wall-clock times in the trace.
  uint32_t record_timing;
} ConecgConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *conecg_version(void);

// Message for the last failed call on this thread; empty if none. Valid
// until the next failing call on the same thread.
const char *conecg_last_error(void);

// Writes the default configuration (LP, eigenvector pricing, one cut per
// iteration, 50 iterations, no time limit).
//
// # Safety
// `out` must be null or point to writable memory for one `ConecgConfig`.
enum ConecgStatus conecg_config_default(struct ConecgConfig *out);

// Creates a graph with `n` nodes and no edges.
//
// # Safety
// `out` must be null or a valid pointer to a handle slot.
enum ConecgStatus conecg_graph_new(size_t n, struct ConecgGraph **out);

// Adds edge {i, j} (0-based). Adding an existing edge is a no-op.
//
// # Safety
// `g` must be null or a handle from this library that has not been freed.
enum ConecgStatus conecg_graph_add_edge(struct ConecgGraph *g, size_t i, size_t j);

// Parses a DIMACS edge list ("p edge n m", "e i j" with 1-based nodes).
//
// # Safety
// `text` must be null or a NUL-terminated string; `out` a valid handle slot.
enum ConecgStatus conecg_graph_from_dimacs(const char *text, struct ConecgGraph **out);

// # Safety
// `g` must be null or a graph handle not yet freed.
void conecg_graph_free(struct ConecgGraph *g);

// Node and edge counts.
//
// # Safety
// `g` must be a live graph handle; outputs may be null.
enum ConecgStatus conecg_graph_size(const struct ConecgGraph *g, size_t *n, size_t *m);

// Single-master upper bound on the stability number: DSOS₁ (mode LP) or
// SDSOS₁ (mode SOCP).
//
// # Safety
// `g` must be a live graph handle and `out` a writable double.
enum ConecgStatus conecg_stableset_bound(const struct ConecgGraph *g, uint32_t mode, double *out);

// Column generation for the stability-number bound.
//
// # Safety
// Handles must be live; `cfg` must point to a `ConecgConfig`; `out` to a
// handle slot.
enum ConecgStatus conecg_stableset_cg(const struct ConecgGraph *g,
                                      const struct ConecgConfig *cfg,
                                      struct ConecgTrace **out);

// Parses a polynomial: header "n deg", then lines "e1 … en c".
//
// # Safety
// `text` must be a NUL-terminated string; `out` a valid handle slot.
enum ConecgStatus conecg_poly_parse(const char *text, struct ConecgPoly **out);

// # Safety
// `p` must be null or a polynomial handle not yet freed.
void conecg_poly_free(struct ConecgPoly *p);

// Largest λ such that (p − λ(Σx_i²)^d)(Σx_i²)^r is dsos (mode LP) or
// sdsos (mode SOCP).
//
// # Safety
// `p` must be a live polynomial handle and `out` a writable double.
enum ConecgStatus conecg_poly_bound(const struct ConecgPoly *p,
                                    uint32_t r,
                                    uint32_t mode,
                                    double *out);

// Column generation for the sphere minimum of a form.
//
// # Safety
// As for [`conecg_stableset_cg`].
enum ConecgStatus conecg_polymin_cg(const struct ConecgPoly *p,
                                    const struct ConecgConfig *cfg,
                                    struct ConecgTrace **out);

// Parses an SDP: "m n", C, then m blocks of b_i followed by A_i.
//
// # Safety
// `text` must be a NUL-terminated string; `out` a valid handle slot.
enum ConecgStatus conecg_sdp_parse(const char *text, struct ConecgSdp **out);

// # Safety
// `s` must be null or an SDP handle not yet freed.
void conecg_sdp_free(struct ConecgSdp *s);

// Column generation for max bᵀy s.t. C − Σ y_iA_i ⪰ 0.
//
// # Safety
// As for [`conecg_stableset_cg`].
enum ConecgStatus conecg_sdp_cg(const struct ConecgSdp *s,
                                const struct ConecgConfig *cfg,
                                struct ConecgTrace **out);

// Number of rows (initial solve plus one per iteration); 0 for null.
//
// # Safety
// `t` must be null or a live trace handle.
size_t conecg_trace_len(const struct ConecgTrace *t);

// Bound of row `i`.
//
// # Safety
// `t` must be a live trace handle and `out` a writable double.
enum ConecgStatus conecg_trace_bound(const struct ConecgTrace *t, size_t i, double *out);

// 1 if the run stopped because no violated atom remained, else 0.
//
// # Safety
// `t` must be null or a live trace handle.
int32_t conecg_trace_converged(const struct ConecgTrace *t);

// Trace as CSV (iter,bound,atoms_added,status,elapsed_ms). Release with
// [`conecg_string_free`]. Null on failure.
//
// # Safety
// `t` must be null or a live trace handle.
char *conecg_trace_to_csv(const struct ConecgTrace *t);

// # Safety
// `t` must be null or a trace handle not yet freed.
void conecg_trace_free(struct ConecgTrace *t);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void conecg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONECG_H */
