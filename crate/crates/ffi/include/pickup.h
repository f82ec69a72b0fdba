#ifndef PICKUP_H
#define PICKUP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PkStatus {
  PK_STATUS_OK = 0,
  PK_STATUS_INVALID_INPUT = 1,
  PK_STATUS_CAPACITY_EXCEEDED = 2,
  PK_STATUS_SCATTER_DEADLOCK = 3,
  PK_STATUS_DISCONNECTED = 4,
  PK_STATUS_NOT_POSITIVE_DEFINITE = 5,
  PK_STATUS_EIGEN = 6,
  PK_STATUS_DEGENERATE = 7,
  PK_STATUS_EXCITATION = 8,
  PK_STATUS_NON_FINITE = 9,
  PK_STATUS_PARSE = 10,
  PK_STATUS_IO = 11,
  PK_STATUS_NULL_POINTER = 12,
  PK_STATUS_BUFFER_TOO_SMALL = 13,
  PK_STATUS_PANIC = 14,
} PkStatus;

typedef enum PkPattern {
  PK_PATTERN_MACHINE = 0,
  PK_PATTERN_SCATTER = 1,
} PkPattern;

typedef enum PkRanking {
  PK_RANKING_ABS_S = 0,
  PK_RANKING_ENERGY = 1,
} PkRanking;

typedef enum PkWavFormat {
  PK_WAV_FORMAT_PCM16 = 0,
  PK_WAV_FORMAT_FLOAT32 = 1,
} PkWavFormat;

/**
 * A winding layout and its contact graph.
 */
typedef struct PkLayout PkLayout;

/**
 * Natural frequencies with residues under the default excitation.
 */
typedef struct PkModes PkModes;

typedef struct PkWaveform PkWaveform;

typedef struct PkWindingSpec {
  size_t n_turns;
  double wire_diameter;
  size_t window_columns;
  size_t max_layers;
  /**
   * A `PkPattern` value.
   */
  uint32_t pattern;
  double scatter_traverse_sigma;
  uint64_t seed;
} PkWindingSpec;

typedef struct PkParams {
  double r_dc_ohms;
  double m_henries;
  double alpha;
  double c0_farads;
  uint32_t d;
} PkParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *pk_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pk_version(void);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `PkWindingSpec`.
 */
enum PkStatus pk_winding_spec_default(struct PkWindingSpec *out);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `PkParams`.
 */
enum PkStatus pk_params_default(struct PkParams *out);

/**
 * Generates a layout and its contact graph.
 *
 * # Safety
 * `spec` must point to a valid `PkWindingSpec`; `out` must be writable.
 */
enum PkStatus pk_layout_generate(const struct PkWindingSpec *spec,
                                 double contact_epsilon,
                                 struct PkLayout **out);

/**
 * # Safety
 * `layout` must be null or a handle from `pk_layout_generate`, freed once.
 */
void pk_layout_free(struct PkLayout *layout);

/**
 * # Safety
 * `layout` must be a live handle; `out` must be writable.
 */
enum PkStatus pk_layout_n_turns(const struct PkLayout *layout, size_t *out);

/**
 * Writes the 64 hex digits of the layout hash plus a NUL into `buf`.
 *
 * # Safety
 * `layout` must be a live handle; `buf` must hold `cap` bytes.
 */
enum PkStatus pk_layout_hash(const struct PkLayout *layout, char *buf, size_t cap);

/**
 * Contact edges as flattened `(i, j)` pairs with `i < j`; `len` receives
 * twice the edge count.
 *
 * # Safety
 * `layout` must be a live handle; `buf` null or holding `cap` entries.
 */
enum PkStatus pk_layout_edges(const struct PkLayout *layout, size_t *buf, size_t cap, size_t *len);

/**
 * Natural frequencies and residues for a layout.
 *
 * # Safety
 * `layout` and `params` must be valid; `out` must be writable.
 */
enum PkStatus pk_modes_compute(const struct PkLayout *layout,
                               const struct PkParams *params,
                               struct PkModes **out);

/**
 * # Safety
 * `modes` must be null or a handle from `pk_modes_compute`, freed once.
 */
void pk_modes_free(struct PkModes *modes);

/**
 * Natural frequencies as interleaved `(re, im)`; `len` receives twice the
 * mode count.
 *
 * # Safety
 * `modes` must be a live handle; `buf` null or holding `cap` doubles.
 */
enum PkStatus pk_modes_s(const struct PkModes *modes, double *buf, size_t cap, size_t *len);

/**
 * `γ²` eigenvalues as interleaved `(re, im)`.
 *
 * # Safety
 * `modes` must be a live handle; `buf` null or holding `cap` doubles.
 */
enum PkStatus pk_modes_gamma2(const struct PkModes *modes, double *buf, size_t cap, size_t *len);

/**
 * Largest normalised smallest singular value over all modes.
 *
 * # Safety
 * `modes` must be a live handle; `out` must be writable.
 */
enum PkStatus pk_modes_residual_max(const struct PkModes *modes, double *out);

/**
 * Impulse response sampled at `sample_rate` for `duration` seconds, keeping
 * `truncate` modes ranked by a `PkRanking` value (0 keeps all).
 *
 * # Safety
 * `modes` must be a live handle; `out` must be writable.
 */
enum PkStatus pk_synthesize(const struct PkModes *modes,
                            uint32_t sample_rate,
                            double duration,
                            size_t truncate,
                            uint32_t ranking,
                            struct PkWaveform **out);

/**
 * # Safety
 * `wave` must be null or a handle from `pk_synthesize`, freed once.
 */
void pk_waveform_free(struct PkWaveform *wave);

/**
 * Borrows the samples; valid while the handle lives.
 *
 * # Safety
 * `wave` must be a live handle; `data` and `len` must be writable.
 */
enum PkStatus pk_waveform_samples(const struct PkWaveform *wave, const double **data, size_t *len);

/**
 * Encodes the waveform as a mono WAV file in a `PkWavFormat`.
 *
 * # Safety
 * `wave` must be a live handle; `buf` null or holding `cap` bytes.
 */
enum PkStatus pk_waveform_wav(const struct PkWaveform *wave,
                              uint32_t format,
                              uint8_t *buf,
                              size_t cap,
                              size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PICKUP_H */
