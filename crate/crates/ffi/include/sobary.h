#ifndef SOBARY_H
#define SOBARY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SobaryStatus {
  SOBARY_STATUS_OK = 0,
  SOBARY_STATUS_NULL_POINTER = 1,
  SOBARY_STATUS_INVALID_ARGUMENT = 2,
  SOBARY_STATUS_ASSUMPTION_VIOLATION = 3,
  SOBARY_STATUS_SINGULAR_SOLVE = 4,
  SOBARY_STATUS_NEAR_POLE = 5,
  SOBARY_STATUS_IO = 6,
  SOBARY_STATUS_PARSE = 7,
  SOBARY_STATUS_BUFFER_TOO_SMALL = 8,
  SOBARY_STATUS_PANIC = 9,
} SobaryStatus;

typedef enum SobaryMethod {
  SOBARY_METHOD_FIRST_ORDER = 0,
  SOBARY_METHOD_STIFFNESS_CONSTRAINED = 1,
  SOBARY_METHOD_DAMPING_CONSTRAINED = 2,
  SOBARY_METHOD_ZERO_DAMPING = 3,
} SobaryMethod;

/**
 * Which matrix of a model to copy out.
 */
typedef enum SobaryMatrix {
  SOBARY_MATRIX_MASS = 0,
  SOBARY_MATRIX_DAMPING = 1,
  SOBARY_MATRIX_STIFFNESS = 2,
  /**
   * State matrix of a first-order model.
   */
  SOBARY_MATRIX_STATE = 3,
} SobaryMatrix;

typedef enum SobaryVector {
  SOBARY_VECTOR_INPUT = 0,
  SOBARY_VECTOR_OUTPUT = 1,
} SobaryVector;

/**
 * Opaque barycentric form.
 */
typedef struct SobaryForm SobaryForm;

/**
 * Opaque fitted realization.
 */
typedef struct SobaryModel SobaryModel;

typedef struct SobaryComplex {
  double re;
  double im;
} SobaryComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sobary_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sobary_last_error_message(void);

/**
 * Fits a model of order `r` to left data `(lambda, h)` and right data `(mu, g)`.
 *
 * `support` must hold `r` points for the stiffness- and damping-constrained
 * methods and be null otherwise. `out_form` and `out_cond` may be null.
 *
 * # Safety
 * All non-null pointers must be valid for `r` elements (one for the
 * output pointers).
 */
enum SobaryStatus sobary_fit(enum SobaryMethod method,
                             const struct SobaryComplex *lambda,
                             const struct SobaryComplex *h,
                             const struct SobaryComplex *mu,
                             const struct SobaryComplex *g,
                             size_t r,
                             const struct SobaryComplex *support,
                             bool realify,
                             struct SobaryModel **out_model,
                             struct SobaryForm **out_form,
                             double *out_cond);

/**
 * # Safety
 * `model` must come from this library and not be freed twice; null is ignored.
 */
void sobary_model_free(struct SobaryModel *model);

/**
 * # Safety
 * `form` must come from this library and not be freed twice; null is ignored.
 */
void sobary_form_free(struct SobaryForm *form);

/**
 * # Safety
 * `model` and `out` must be valid.
 */
enum SobaryStatus sobary_model_eval(const struct SobaryModel *model,
                                    struct SobaryComplex s,
                                    struct SobaryComplex *out);

/**
 * # Safety
 * `form` and `out` must be valid.
 */
enum SobaryStatus sobary_form_eval(const struct SobaryForm *form,
                                   struct SobaryComplex s,
                                   struct SobaryComplex *out);

/**
 * Copies the form weights; `out_len` receives the count even when the buffer is too small.
 *
 * # Safety
 * `buf` must be valid for `capacity` elements.
 */
enum SobaryStatus sobary_form_weights(const struct SobaryForm *form,
                                      struct SobaryComplex *buf,
                                      size_t capacity,
                                      size_t *out_len);

/**
 * Order `r` of the model and whether it is second order.
 *
 * # Safety
 * `model` must be valid; output pointers may be null.
 */
enum SobaryStatus sobary_model_info(const struct SobaryModel *model,
                                    size_t *out_order,
                                    bool *out_second_order,
                                    bool *out_real);

/**
 * Poles of the model (`2r` for second order, `r` for first order).
 *
 * # Safety
 * `buf` must be valid for `capacity` elements.
 */
enum SobaryStatus sobary_model_poles(const struct SobaryModel *model,
                                     struct SobaryComplex *buf,
                                     size_t capacity,
                                     size_t *out_len);

/**
 * Copies one `r x r` matrix row-major into `buf`.
 *
 * # Safety
 * `buf` must be valid for `capacity` elements.
 */
enum SobaryStatus sobary_model_matrix(const struct SobaryModel *model,
                                      enum SobaryMatrix which,
                                      struct SobaryComplex *buf,
                                      size_t capacity,
                                      size_t *out_len);

/**
 * # Safety
 * `buf` must be valid for `capacity` elements.
 */
enum SobaryStatus sobary_model_vector(const struct SobaryModel *model,
                                      enum SobaryVector which,
                                      struct SobaryComplex *buf,
                                      size_t capacity,
                                      size_t *out_len);

/**
 * Reads a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_model` valid.
 */
enum SobaryStatus sobary_model_read(const char *path, struct SobaryModel **out_model);

/**
 * Writes a model file without provenance data.
 *
 * # Safety
 * `model` must be valid and `path` NUL-terminated.
 */
enum SobaryStatus sobary_model_write(const struct SobaryModel *model, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOBARY_H */
