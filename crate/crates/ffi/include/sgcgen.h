#ifndef SGCGEN_H
#define SGCGEN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum SgcStatus {
  SGC_STATUS_OK = 0,
  SGC_STATUS_NULL_POINTER = 1,
  SGC_STATUS_INVALID_UTF8 = 2,
  SGC_STATUS_PARSE = 3,
  SGC_STATUS_EMPTY_GRAPH = 4,
  SGC_STATUS_NODE_OUT_OF_RANGE = 5,
  SGC_STATUS_DISCONNECTED = 6,
  SGC_STATUS_INVALID_PARAMS = 7,
  SGC_STATUS_INCONSISTENT_PARTITION = 8,
  SGC_STATUS_SIZE_MISMATCH = 9,
  SGC_STATUS_TOO_FEW_POINTS = 10,
  SGC_STATUS_INVALID_ARGUMENT = 11,
  SGC_STATUS_NOT_CONVERGED = 12,
  SGC_STATUS_NO_CANDIDATE = 13,
  SGC_STATUS_IO = 14,
  SGC_STATUS_PANIC = 15,
} SgcStatus;

typedef enum SgcMethod {
  SGC_METHOD_STANDARD = 0,
  SGC_METHOD_REGULARIZED = 1,
} SgcMethod;

typedef enum SgcMismatch {
  SGC_MISMATCH_EIG = 0,
  SGC_MISMATCH_MOD = 1,
  SGC_MISMATCH_AIC = 2,
  SGC_MISMATCH_BIC = 3,
} SgcMismatch;

// Opaque graph handle.
typedef struct SgcGraph SgcGraph;

// Opaque community assignment.
typedef struct SgcPartition SgcPartition;

// Opaque model-selection result.
typedef struct SgcReport SgcReport;

// Model-selection settings. Start from `sgc_select_options_default`.
typedef struct SgcSelectOptions {
  enum SgcMethod method;
  enum SgcMismatch mismatch;
  // Penalty weight; negative means the method's default.
  double alpha;
  // Largest K tried; 0 means `min(50, n)`.
  size_t k_max;
  uint64_t seed;
} SgcSelectOptions;

// Clustering scores. External entries are NaN when no truth was given.
typedef struct SgcMetrics {
  double nmi;
  double ri;
  double fm;
  double accuracy;
  double conductance;
  double normalized_cut;
  double avg_odf;
  double modularity;
} SgcMetrics;

// Message for the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *sgc_last_error(void);

// Library version as a static string.
const char *sgc_version(void);

// Builds a graph on `n` nodes from `m` edges `(us[i], vs[i])`. Duplicates and
// self-loops are dropped.
//
// # Safety
// `us` and `vs` must point to `m` readable elements; `out` must be writable.
enum SgcStatus sgc_graph_from_edges(size_t n,
                                    const size_t *us,
                                    const size_t *vs,
                                    size_t m,
                                    struct SgcGraph **out);

// Parses a whitespace-separated edge list. Node ids are renumbered in order
// of first appearance; lines starting with `#` are skipped.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum SgcStatus sgc_graph_parse(const char *text, struct SgcGraph **out);

// Replaces `*graph` with its largest connected component and writes the number
// of dropped nodes to `dropped` when non-NULL.
//
// # Safety
// `graph` must hold a live handle; `dropped` is NULL or writable.
enum SgcStatus sgc_graph_keep_largest_component(struct SgcGraph *graph, size_t *dropped);

// Number of nodes, or 0 for NULL.
//
// # Safety
// `graph` is NULL or a live handle.
size_t sgc_graph_node_count(const struct SgcGraph *graph);

// Number of edges, or 0 for NULL.
//
// # Safety
// `graph` is NULL or a live handle.
size_t sgc_graph_edge_count(const struct SgcGraph *graph);

// # Safety
// `graph` is NULL or a handle not yet freed.
void sgc_graph_free(struct SgcGraph *graph);

// Samples a stochastic block model. `p` is the row-major `k x k` symmetric
// probability matrix. `planted` may be NULL.
//
// # Safety
// `sizes` must hold `k` values and `p` `k * k`; `graph` must be writable;
// `planted` is NULL or writable.
enum SgcStatus sgc_generate_sbm(size_t k,
                                const size_t *sizes,
                                const double *p,
                                uint64_t seed,
                                struct SgcGraph **graph,
                                struct SgcPartition **planted);

// Partition from labels `0..K`, every community non-empty.
//
// # Safety
// `graph` must be live; `labels` must hold `n` values; `out` must be writable.
enum SgcStatus sgc_partition_new(const struct SgcGraph *graph,
                                 const size_t *labels,
                                 size_t n,
                                 struct SgcPartition **out);

// Number of communities, or 0 for NULL.
//
// # Safety
// `partition` is NULL or a live handle.
size_t sgc_partition_k(const struct SgcPartition *partition);

// Copies the labels into `out`, which must have room for `len` values and
// `len` must equal the node count.
//
// # Safety
// `partition` must be live; `out` must have `len` writable slots.
enum SgcStatus sgc_partition_labels(const struct SgcPartition *partition, size_t *out, size_t len);

// # Safety
// `partition` is NULL or a handle not yet freed.
void sgc_partition_free(struct SgcPartition *partition);

struct SgcSelectOptions sgc_select_options_default(void);

// Chooses K and clusters `graph`. `options` may be NULL for defaults. The
// graph must be connected for the standard method.
//
// # Safety
// `graph` must be live; `options` is NULL or readable; `out` must be writable.
enum SgcStatus sgc_select(const struct SgcGraph *graph,
                          const struct SgcSelectOptions *options,
                          struct SgcReport **out);

// Chosen number of communities, or 0 for NULL.
//
// # Safety
// `report` is NULL or a live handle.
size_t sgc_report_k_star(const struct SgcReport *report);

// Copy of the chosen partition; free it with `sgc_partition_free`.
//
// # Safety
// `report` must be live; `out` must be writable.
enum SgcStatus sgc_report_partition(const struct SgcReport *report, struct SgcPartition **out);

// Full report as JSON; free the string with `sgc_string_free`. NULL on failure.
//
// # Safety
// `report` is NULL or a live handle.
char *sgc_report_json(const struct SgcReport *report);

// # Safety
// `report` is NULL or a handle not yet freed.
void sgc_report_free(struct SgcReport *report);

// # Safety
// `s` is NULL or a string returned by this library and not yet freed.
void sgc_string_free(char *s);

// Scores `predicted` on `graph`. `truth` may be NULL; otherwise it holds one
// label per node and the external metrics and accuracy are filled in.
//
// # Safety
// `graph` and `predicted` must be live; `truth` is NULL or holds `n` values;
// `out` must be writable.
enum SgcStatus sgc_evaluate(const struct SgcGraph *graph,
                            const struct SgcPartition *predicted,
                            const size_t *truth,
                            struct SgcMetrics *out);

#endif  /* SGCGEN_H */
