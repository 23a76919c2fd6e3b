/* C ABI for the lrlab low-rank matrix recovery laboratory.
 *
 * Kept in sync with crates/ffi/src/lib.rs by hand; the Rust side is the
 * source of truth. Complex data crosses the boundary as separate re/im
 * double buffers (a NULL im pointer means "all imaginary parts zero");
 * matrices are row-major of length n1 * n2.
 */

#ifndef LRLAB_H
#define LRLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum LrlabStatus {
  LRLAB_OK = 0,
  LRLAB_NULL_POINTER = 1,
  LRLAB_INVALID_ARGUMENT = 2,
  LRLAB_SHAPE_MISMATCH = 3,
  LRLAB_INVALID_UTF8 = 4,
  LRLAB_BUFFER_TOO_SMALL = 5,
  LRLAB_PANIC = 6,
} LrlabStatus;

typedef enum LrlabSolverStatus {
  LRLAB_SOLVER_CONVERGED = 0,
  LRLAB_SOLVER_MAX_ITERS = 1,
  LRLAB_SOLVER_INFEASIBLE = 2,
} LrlabSolverStatus;

/* Phase-retrieval vector models. */
enum {
  LRLAB_PR_GAUSSIAN = 0,
  LRLAB_PR_RADEMACHER = 1,
  LRLAB_PR_UNIMODULAR = 2,
  LRLAB_PR_MASKED_FOURIER = 3,
};

/* Opaque ensemble handle; release with lrlab_ensemble_free. */
typedef struct LrlabEnsemble LrlabEnsemble;

const char *lrlab_version(void);

LrlabStatus lrlab_ensemble_gaussian(size_t n1, size_t n2, size_t m, uint64_t seed,
                                    LrlabEnsemble **out);
LrlabStatus lrlab_ensemble_completion(size_t n1, size_t n2, size_t m, uint64_t seed,
                                      LrlabEnsemble **out);
LrlabStatus lrlab_ensemble_blind_deconv(size_t k, size_t n, size_t l, uint64_t seed,
                                        LrlabEnsemble **out);
LrlabStatus lrlab_ensemble_phase_retrieval(size_t n, size_t m, uint32_t model, uint64_t seed,
                                           LrlabEnsemble **out);
LrlabStatus lrlab_ensemble_demixing(size_t k, size_t n, size_t l, size_t r, uint64_t seed,
                                    LrlabEnsemble **out);
LrlabStatus lrlab_ensemble_from_descriptor(const char *text, LrlabEnsemble **out);
void lrlab_ensemble_free(LrlabEnsemble *handle);

LrlabStatus lrlab_ensemble_dims(const LrlabEnsemble *handle, size_t *n1, size_t *n2, size_t *m);

/* Writes the NUL-terminated plain-text descriptor; *written receives the
 * required size (including the terminator) regardless of success. */
LrlabStatus lrlab_ensemble_descriptor(const LrlabEnsemble *handle, char *buf, size_t cap,
                                      size_t *written);

LrlabStatus lrlab_ensemble_apply(const LrlabEnsemble *handle, const double *x_re,
                                 const double *x_im, size_t x_len, double *y_re, double *y_im,
                                 size_t y_len);
LrlabStatus lrlab_ensemble_adjoint(const LrlabEnsemble *handle, const double *y_re,
                                   const double *y_im, size_t y_len, double *x_re, double *x_im,
                                   size_t x_len);
LrlabStatus lrlab_ensemble_operator_norm(const LrlabEnsemble *handle, double tol,
                                         size_t max_iters, double *value, int32_t *converged);

/* min ||X||_* subject to ||A(X) - y||_2 <= tau. */
LrlabStatus lrlab_nucnorm_min(const LrlabEnsemble *handle, const double *y_re, const double *y_im,
                              size_t y_len, double tau, size_t max_iters, double *x_hat_re,
                              double *x_hat_im, size_t x_len, double *objective, double *residual,
                              size_t *iterations, LrlabSolverStatus *solver_status);

/* l1 fit over the PSD cone; handle must be a phase-retrieval ensemble. */
LrlabStatus lrlab_psd_l1_fit(const LrlabEnsemble *handle, const double *y, size_t y_len,
                             size_t max_iters, double *x_hat_re, double *x_hat_im, size_t x_len,
                             double *objective, size_t *iterations,
                             LrlabSolverStatus *solver_status);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LRLAB_H */
