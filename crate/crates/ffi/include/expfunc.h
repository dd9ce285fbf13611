#ifndef EXPFUNC_H
#define EXPFUNC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every function.
typedef enum ExpfuncStatus {
  EXPFUNC_STATUS_OK = 0,
  EXPFUNC_STATUS_NULL_POINTER = 1,
  EXPFUNC_STATUS_INVALID_UTF8 = 2,
  EXPFUNC_STATUS_CONFIG = 3,
  EXPFUNC_STATUS_INVALID_MODEL = 4,
  EXPFUNC_STATUS_DOMAIN = 5,
  EXPFUNC_STATUS_NONCONVERGENT = 6,
  EXPFUNC_STATUS_TRUNCATION = 7,
  EXPFUNC_STATUS_BUDGET = 8,
  EXPFUNC_STATUS_UNVERIFIED = 9,
  EXPFUNC_STATUS_PANIC = 10,
} ExpfuncStatus;

// Opaque model handle.
typedef struct ExpfuncModel ExpfuncModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *expfunc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *expfunc_version(void);

// Builds a model from its JSON description.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer. The
// handle must be released with [`expfunc_model_free`].
enum ExpfuncStatus expfunc_model_from_json(const char *json, struct ExpfuncModel **out);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must come from [`expfunc_model_from_json`] and not be used again.
void expfunc_model_free(struct ExpfuncModel *model);

// φ⁽ᵒʳᵈᵉʳ⁾(re + i·im) for order 0..=3.
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_phi(const struct ExpfuncModel *model,
                               double re,
                               double im,
                               int order,
                               double *out_re,
                               double *out_im);

// log M(z) = log E[I^{z−1}] on the principal branch.
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_log_mellin(const struct ExpfuncModel *model,
                                      double re,
                                      double im,
                                      double *out_re,
                                      double *out_im);

// f⁽ⁿ⁾(x), the n-th derivative of the density of I, with an error estimate.
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_density_deriv(const struct ExpfuncModel *model,
                                         double x,
                                         int n,
                                         double tol,
                                         double *value,
                                         double *abs_err);

// P(I > x).
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_tail(const struct ExpfuncModel *model,
                                double x,
                                double tol,
                                double *value,
                                double *abs_err);

// E[Iⁿ].
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_moment(const struct ExpfuncModel *model, int n, double *value);

// Large-x asymptotic of f⁽ⁿ⁾(x). `log_abs` stays finite when `value`
// underflows; `positive_increase` is 0 when the model's positive increase
// could not be verified.
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_asymptotic(const struct ExpfuncModel *model,
                                      double x,
                                      int n,
                                      double *value,
                                      double *log_abs,
                                      int *positive_increase);

// The v > 0 with v/φ(v) = x.
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_varphi_star(const struct ExpfuncModel *model, double x, double *value);

// The constant T in the asymptotic prefactor e^{−T}.
//
// # Safety
// Pointers must be valid.
enum ExpfuncStatus expfunc_t_phis(const struct ExpfuncModel *model, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPFUNC_H */
