#ifndef YOSIDA_H
#define YOSIDA_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum YosidaStatus {
  YOSIDA_STATUS_OK = 0,
  YOSIDA_STATUS_NULL_POINTER = 1,
  YOSIDA_STATUS_INVALID_ARGUMENT = 2,
  YOSIDA_STATUS_NON_CONVERGENCE = 3,
  YOSIDA_STATUS_UNSUPPORTED = 4,
  YOSIDA_STATUS_UNCERTIFIED = 5,
  YOSIDA_STATUS_VALIDATION = 6,
  YOSIDA_STATUS_SEARCH_FAILURE = 7,
  YOSIDA_STATUS_IO = 8,
  YOSIDA_STATUS_PANIC = 9,
} YosidaStatus;

// A maximal monotone operator on `R^n`.
typedef struct YosidaOperator YosidaOperator;

// An inclusion problem loaded from a TOML problem file.
typedef struct YosidaProblem YosidaProblem;

// Result of an annulus search.
typedef struct YosidaTrace YosidaTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *yosida_last_error(void);

// `x ↦ coeff·|x_i|^{gamma−1} x_i` on `R^dim`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum YosidaStatus yosida_operator_power(double gamma,
                                        double coeff,
                                        size_t dim,
                                        struct YosidaOperator **out);

// `x ↦ a x` on `R^dim`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum YosidaStatus yosida_operator_scaled_identity(double a,
                                                  size_t dim,
                                                  struct YosidaOperator **out);

// Subdifferential of `weight·‖x‖₁` on `R^dim`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum YosidaStatus yosida_operator_l1(double weight, size_t dim, struct YosidaOperator **out);

// Normal cone of the box `[lo, hi]`; `lo` and `hi` hold `dim` entries each.
//
// # Safety
// `lo` and `hi` must point to `dim` readable doubles; `out` must be writable.
enum YosidaStatus yosida_operator_box_cone(const double *lo,
                                           const double *hi,
                                           size_t dim,
                                           struct YosidaOperator **out);

// Discrete p-Laplacian on the unit interval with `intervals` cells.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum YosidaStatus yosida_operator_p_laplacian(size_t intervals,
                                              double p,
                                              struct YosidaOperator **out);

// Dimension of the operator's space, or 0 for a null handle.
//
// # Safety
// `op` must be null or a handle returned by this library.
size_t yosida_operator_dim(const struct YosidaOperator *op);

// # Safety
// `op` must be null or a handle returned by this library, not yet freed.
void yosida_operator_free(struct YosidaOperator *op);

// Resolvent `J_λ x` and Yosida approximant `A_λ x` for the gauge
// `φ(r) = r^{p−1}`. Both outputs hold `n` doubles.
//
// # Safety
// `x`, `x_lambda` and `a_lambda` must point to `n` doubles each.
enum YosidaStatus yosida_resolvent(const struct YosidaOperator *op,
                                   double p,
                                   double lambda,
                                   const double *x,
                                   size_t n,
                                   double tol,
                                   double *x_lambda,
                                   double *a_lambda);

// Parses a TOML problem file held in memory.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum YosidaStatus yosida_problem_from_toml(const char *text, struct YosidaProblem **out);

// Reads and parses a TOML problem file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum YosidaStatus yosida_problem_load(const char *path, struct YosidaProblem **out);

// # Safety
// `problem` must be null or a handle returned by this library.
size_t yosida_problem_dim(const struct YosidaProblem *problem);

// # Safety
// `problem` must be null or a handle returned by this library, not yet freed.
void yosida_problem_free(struct YosidaProblem *problem);

// Degree certificates, annulus search and continuation with the file's
// schedule and search settings.
//
// # Safety
// `problem` must be a live handle; `out` must be writable.
enum YosidaStatus yosida_annulus_search(const struct YosidaProblem *problem,
                                        struct YosidaTrace **out);

// Number of candidates in the trace, or 0 for a null handle.
//
// # Safety
// `trace` must be null or a handle returned by this library.
size_t yosida_trace_candidate_count(const struct YosidaTrace *trace);

// Copies candidate `index` into `coords` (`n` doubles) and its `l^p` norm into `norm`.
//
// # Safety
// `trace` must be a live handle, `coords` must hold `n` doubles and `norm` must be writable or null.
enum YosidaStatus yosida_trace_candidate(const struct YosidaTrace *trace,
                                         size_t index,
                                         double *coords,
                                         size_t n,
                                         double *norm);

// The trace as CSV in a newly allocated string, released with [`yosida_string_free`].
//
// # Safety
// `trace` must be a live handle; `out` must be writable.
enum YosidaStatus yosida_trace_csv(const struct YosidaTrace *trace, char **out);

// # Safety
// `trace` must be null or a handle returned by this library, not yet freed.
void yosida_trace_free(struct YosidaTrace *trace);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void yosida_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* YOSIDA_H */
