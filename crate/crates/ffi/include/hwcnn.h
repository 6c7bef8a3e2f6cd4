#ifndef HWCNN_H
#define HWCNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HwcnnStatus {
  HWCNN_STATUS_OK = 0,
  HWCNN_STATUS_NULL_POINTER = 1,
  HWCNN_STATUS_BUFFER_SIZE = 2,
  HWCNN_STATUS_INVALID_ARGUMENT = 3,
  HWCNN_STATUS_CONFIG = 4,
  HWCNN_STATUS_ZERO_NORM = 5,
  HWCNN_STATUS_PANIC = 6,
} HwcnnStatus;

/**
 * Opaque compiled network.
 */
typedef struct HwcnnModel HwcnnModel;

/**
 * Opaque real state over the weight-k subspace of n qubits.
 */
typedef struct HwcnnState HwcnnState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hwcnn_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *hwcnn_last_error(void);

enum HwcnnStatus hwcnn_binomial(size_t n, size_t k, uint64_t *out);

/**
 * Position of `bits` (qubit 0 is the most significant of the n bits) in the
 * ascending enumeration of weight-k strings.
 */
enum HwcnnStatus hwcnn_rank(size_t n, size_t k, uint64_t bits, size_t *out);

enum HwcnnStatus hwcnn_unrank(size_t n, size_t k, size_t index, uint64_t *out);

/**
 * Normalizes `amplitudes` (length C(n,k)) into a new state.
 */
enum HwcnnStatus hwcnn_state_new(size_t n,
                                 size_t k,
                                 const double *amplitudes,
                                 size_t len,
                                 struct HwcnnState **out);

/**
 * Subspace dimension, or 0 for a null handle.
 */
size_t hwcnn_state_dim(const struct HwcnnState *state);

enum HwcnnStatus hwcnn_state_apply_rbs(struct HwcnnState *state, size_t p, size_t q, double theta);

enum HwcnnStatus hwcnn_state_amplitudes(const struct HwcnnState *state, double *out, size_t len);

/**
 * Releases a state; NULL is ignored.
 */
void hwcnn_state_free(struct HwcnnState *state);

/**
 * Compiles a network from a JSON config document (NUL-terminated UTF-8).
 * Dataset paths in the document are not touched.
 */
enum HwcnnStatus hwcnn_model_from_config(const char *json, struct HwcnnModel **out);

void hwcnn_model_free(struct HwcnnModel *model);

size_t hwcnn_model_n_params(const struct HwcnnModel *model);

/**
 * Length of the flattened input tensor.
 */
size_t hwcnn_model_input_len(const struct HwcnnModel *model);

size_t hwcnn_model_n_classes(const struct HwcnnModel *model);

/**
 * Writes the hex architecture digest (64 characters) and a NUL into `out`,
 * which must hold exactly 65 bytes.
 */
enum HwcnnStatus hwcnn_model_digest(const struct HwcnnModel *model, char *out, size_t len);

/**
 * Seeded initial parameters, the same ones `hwcnn train` starts from.
 */
enum HwcnnStatus hwcnn_model_init_params(const struct HwcnnModel *model,
                                         uint64_t seed,
                                         double *out,
                                         size_t len);

/**
 * Class probabilities for input `x`.
 */
enum HwcnnStatus hwcnn_model_predict(const struct HwcnnModel *model,
                                     const double *x,
                                     size_t x_len,
                                     const double *params,
                                     size_t params_len,
                                     double *probs,
                                     size_t probs_len);

/**
 * Cross-entropy loss for `label` and its exact gradient.
 */
enum HwcnnStatus hwcnn_model_loss_and_grad(const struct HwcnnModel *model,
                                           const double *x,
                                           size_t x_len,
                                           size_t label,
                                           const double *params,
                                           size_t params_len,
                                           double *loss,
                                           double *grad,
                                           size_t grad_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HWCNN_H */
