#ifndef MAGRES_H
#define MAGRES_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MagresStatus {
  MAGRES_STATUS_OK = 0,
  MAGRES_STATUS_NULL_POINTER = 1,
  MAGRES_STATUS_INVALID_ARGUMENT = 2,
  MAGRES_STATUS_DIMENSION = 3,
  MAGRES_STATUS_NUMERIC = 4,
  MAGRES_STATUS_CONFIG = 5,
  MAGRES_STATUS_IO = 6,
  MAGRES_STATUS_PANIC = 7,
} MagresStatus;

/**
 * Analog/binary neuron with its own noise stream.
 */
typedef struct MagresNeuron MagresNeuron;

/**
 * Reservoir topology plus its current state.
 */
typedef struct MagresReservoir MagresReservoir;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *magres_last_error(void);

/**
 * Toolkit version as a static NUL-terminated string.
 */
const char *magres_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void magres_string_free(char *s);

/**
 * Mean retention time `attempt_time * exp(energy_barrier)` in seconds.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MagresStatus magres_retention_time(double energy_barrier, double attempt_time, double *out);

/**
 * Creates a neuron with white noise, the saturating envelope and the given
 * supply, slope and noise scale.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MagresStatus magres_neuron_new(double v_dd,
                                    double beta,
                                    double alpha0,
                                    uint64_t seed,
                                    struct MagresNeuron **out);

/**
 * # Safety
 * `neuron` must come from [`magres_neuron_new`] and not have been freed.
 */
void magres_neuron_free(struct MagresNeuron *neuron);

/**
 * One analog neuron sample in volts.
 *
 * # Safety
 * `neuron` must be a live handle; `out` must be valid for writes.
 */
enum MagresStatus magres_neuron_asn(struct MagresNeuron *neuron, double v_in, double *out);

/**
 * One binary neuron sample, -v_dd/2 or +v_dd/2.
 *
 * # Safety
 * `neuron` must be a live handle; `out` must be valid for writes.
 */
enum MagresStatus magres_neuron_bsn(struct MagresNeuron *neuron, double v_in, double *out);

/**
 * Builds a reservoir from a TOML table of reservoir fields; omitted fields
 * take their defaults. The state starts at zero.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum MagresStatus magres_reservoir_new(const char *config_toml, struct MagresReservoir **out);

/**
 * # Safety
 * `reservoir` must come from [`magres_reservoir_new`] and not have been freed.
 */
void magres_reservoir_free(struct MagresReservoir *reservoir);

/**
 * Writes the node, input and output counts; any out pointer may be null.
 *
 * # Safety
 * `reservoir` must be a live handle; non-null outs must be valid for writes.
 */
enum MagresStatus magres_reservoir_dims(const struct MagresReservoir *reservoir,
                                        size_t *n_nodes,
                                        size_t *n_inputs,
                                        size_t *n_outputs);

/**
 * Spectral radius the recurrent matrix was scaled to.
 *
 * # Safety
 * `reservoir` must be a live handle; `out` must be valid for writes.
 */
enum MagresStatus magres_reservoir_spectral_radius(const struct MagresReservoir *reservoir,
                                                   double *out);

/**
 * Advances the state one tick with input `u` and fed-back output `y_prev`.
 *
 * # Safety
 * `reservoir` must be a live handle; `u` and `y_prev` must hold `n_u` and
 * `n_y` doubles.
 */
enum MagresStatus magres_reservoir_step(struct MagresReservoir *reservoir,
                                        const double *u,
                                        size_t n_u,
                                        const double *y_prev,
                                        size_t n_y);

/**
 * Copies the state into `out`, which must hold exactly `n_nodes` doubles.
 *
 * # Safety
 * `reservoir` must be a live handle; `out` must be valid for `len` writes.
 */
enum MagresStatus magres_reservoir_state(const struct MagresReservoir *reservoir,
                                         double *out,
                                         size_t len);

/**
 * Resets the state to zero and rewinds the noise stream.
 *
 * # Safety
 * `reservoir` must be a live handle.
 */
enum MagresStatus magres_reservoir_reset(struct MagresReservoir *reservoir);

/**
 * Maps a row-major `rows x cols` weight matrix onto differential conductance
 * pairs, optionally quantized to `levels` levels (0 disables). Writes
 * `rows*cols` values to each of `g_plus` and `g_minus`, and the scale in S
 * per unit weight to `g_scale`.
 *
 * # Safety
 * `weights`, `g_plus` and `g_minus` must hold `rows*cols` doubles;
 * `g_scale` must be valid for writes.
 */
enum MagresStatus magres_weights_to_conductances(const double *weights,
                                                 size_t rows,
                                                 size_t cols,
                                                 double g_max,
                                                 size_t levels,
                                                 double *g_plus,
                                                 double *g_minus,
                                                 double *g_scale);

/**
 * Runs the experiment described by a TOML config for a single seed and
 * returns its metrics as JSON in `out_json`.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out_json` must be valid
 * for writes.
 */
enum MagresStatus magres_run_experiment(const char *config_toml, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGRES_H */
