#ifndef TREELAYOUT_H
#define TREELAYOUT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Slot value meaning "no child" in child arrays.
#define TL_NONE UINT32_MAX

typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  // A parameter is out of its domain.
  TL_STATUS_INVALID_ARGUMENT = 2,
  // Input does not describe a valid tree or layout.
  TL_STATUS_INVALID = 3,
  // The request exceeds a search budget.
  TL_STATUS_BUDGET = 4,
  // A caller buffer is too small.
  TL_STATUS_BUFFER_TOO_SMALL = 5,
  TL_STATUS_INTERNAL = 6,
} TlStatus;

typedef struct TlLayout TlLayout;

typedef struct TlOrder TlOrder;

typedef struct TlTree TlTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. Valid until the next
// failing call on the same thread; never null.
const char *tl_last_error(void);

// Builds a tree from child arrays of length `n`; `TL_NONE` marks a missing
// child.
//
// # Safety
// `left` and `right` must point to `n` readable values.
enum TlStatus tl_tree_from_children(size_t n,
                                    const uint32_t *left,
                                    const uint32_t *right,
                                    struct TlTree **out);

// Parses a tree from its JSON interchange text.
//
// # Safety
// `json` must be a NUL-terminated string.
enum TlStatus tl_tree_from_json(const char *json, struct TlTree **out);

// # Safety
// `out` must be writable.
enum TlStatus tl_tree_perfect(uint32_t height, struct TlTree **out);

// # Safety
// `out` must be writable.
enum TlStatus tl_tree_path(size_t n, struct TlTree **out);

// # Safety
// `out` must be writable.
enum TlStatus tl_tree_random(size_t n, uint64_t seed, struct TlTree **out);

// # Safety
// `out` must be writable.
enum TlStatus tl_tree_lower_bound(uint64_t block_size,
                                  uint64_t inv_p,
                                  uint64_t n,
                                  struct TlTree **out);

// Node count, or 0 for a null handle.
//
// # Safety
// `tree` must be null or a live handle.
size_t tl_tree_len(const struct TlTree *tree);

// Depth of the deepest node, or 0 for a null handle.
//
// # Safety
// `tree` must be null or a live handle.
uint32_t tl_tree_height(const struct TlTree *tree);

// # Safety
// `tree` must be null or a handle not yet freed.
void tl_tree_free(struct TlTree *tree);

// Two-phase block layout with blocks of at most `block_size` nodes and
// phase-1 depth factor `c_num / c_den`.
//
// # Safety
// `tree` must be a live handle and `out` writable.
enum TlStatus tl_layout_aware(const struct TlTree *tree,
                              uint64_t block_size,
                              uint64_t c_num,
                              uint64_t c_den,
                              struct TlLayout **out);

// Number of blocks, or 0 for a null handle.
//
// # Safety
// `layout` must be null or a live handle.
size_t tl_layout_block_count(const struct TlLayout *layout);

// Writes each node's block id into `buf`, which must hold one entry per
// node.
//
// # Safety
// `buf` must point to `cap` writable values.
enum TlStatus tl_layout_block_ids(const struct TlLayout *layout, uint32_t *buf, size_t cap);

// Worst transfer count over nodes at exactly `depth`.
//
// # Safety
// Handles must be live, `layout` built for `tree`, and `out` writable.
enum TlStatus tl_layout_worst_case(const struct TlTree *tree,
                                   const struct TlLayout *layout,
                                   uint32_t depth,
                                   uint32_t *out);

// # Safety
// `layout` must be null or a handle not yet freed.
void tl_layout_free(struct TlLayout *layout);

// Block-size-independent linear order.
//
// # Safety
// `tree` must be a live handle and `out` writable.
enum TlStatus tl_layout_oblivious(const struct TlTree *tree, struct TlOrder **out);

// Writes the node at each position into `buf`.
//
// # Safety
// `buf` must point to `cap` writable values.
enum TlStatus tl_order_nodes(const struct TlOrder *order, uint32_t *buf, size_t cap);

// Worst transfer count at exactly `depth` when the order is cut into
// aligned blocks of `block_size` slots, shifted by `offset`.
//
// # Safety
// Handles must be live, `order` built for `tree`, and `out` writable.
enum TlStatus tl_order_worst_case(const struct TlTree *tree,
                                  const struct TlOrder *order,
                                  uint64_t block_size,
                                  uint64_t offset,
                                  uint32_t depth,
                                  uint32_t *out);

// # Safety
// `order` must be null or a handle not yet freed.
void tl_order_free(struct TlOrder *order);

// Fewest worst-case transfers to `depth` over all layouts, by exhaustive
// search. Trees above 12 nodes report `TL_STATUS_BUDGET`.
//
// # Safety
// `tree` must be a live handle and `out` writable.
enum TlStatus tl_optimal_cost(const struct TlTree *tree,
                              uint64_t block_size,
                              uint32_t depth,
                              uint32_t *out);

// Asymptotic transfer bound for `n` nodes, depth `d`, block size `b`.
double tl_theoretical_bound(uint64_t n, uint64_t d, uint64_t b);

// Root of `(1/p)·lg(1/p) = b·lg n / (2d)`, clamped to `[1/n, 1]`.
//
// # Safety
// `out` must be writable.
enum TlStatus tl_solve_p(uint64_t n, uint64_t d, uint64_t b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREELAYOUT_H */
