#ifndef MMW_DISCOVERY_H
#define MMW_DISCOVERY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum MmwStatus {
  MMW_STATUS_OK = 0,
  MMW_STATUS_NULL_POINTER = 1,
  MMW_STATUS_INVALID_ARGUMENT = 2,
  MMW_STATUS_NUMERICAL = 3,
  MMW_STATUS_SERIALIZATION = 4,
  MMW_STATUS_PANIC = 5,
} MmwStatus;

// Beamforming scheme selector for [`mmw_channel_scheme_loss_db`].
typedef enum MmwScheme {
  MMW_SCHEME_OPTIMAL = 0,
  MMW_SCHEME_EGT_RSV = 1,
  MMW_SCHEME_PROP1 = 2,
  MMW_SCHEME_DIRECTIONAL_MATCHED_FILTER = 3,
  MMW_SCHEME_DIRECTIONAL_DOMINANT = 4,
} MmwScheme;

// Codebook side for [`mmw_codebook_build`].
typedef enum MmwSide {
  MMW_SIDE_MWB = 0,
  MMW_SIDE_UE = 1,
} MmwSide;

// A channel realization together with the scenario that produced it.
typedef struct MmwChannel MmwChannel;

// A beam-sweep codebook.
typedef struct MmwCodebook MmwCodebook;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes, or 0 if
// there is no error.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t mmw_last_error_message(char *buf, size_t len);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void mmw_string_free(char *s);

// Builds a channel from a scenario JSON document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum MmwStatus mmw_channel_from_json(const char *json, struct MmwChannel **out);

// Draws the scenario of trial `trial` under `seed` (half-wavelength arrays,
// 30 to 150 degree field of view) and builds its channel.
//
// # Safety
// `out` must be writable.
enum MmwStatus mmw_channel_sample(uint64_t seed,
                                  uint64_t trial,
                                  size_t n_paths,
                                  size_t n_r,
                                  size_t n_t,
                                  double rho_db,
                                  struct MmwChannel **out);

// # Safety
// `ch` must be null or a handle from this library, freed at most once.
void mmw_channel_free(struct MmwChannel *ch);

// Writes the receive and transmit array sizes.
//
// # Safety
// `ch` must be a live handle; `n_r` and `n_t` must be writable.
enum MmwStatus mmw_channel_dims(const struct MmwChannel *ch, size_t *n_r, size_t *n_t);

// Copies `H` in row-major order as interleaved `(re, im)` doubles; `len` is
// the capacity of `data` in doubles and must be at least `2 N_r N_t`.
//
// # Safety
// `ch` must be a live handle; `data` must be valid for `len` doubles.
enum MmwStatus mmw_channel_matrix(const struct MmwChannel *ch, double *data, size_t len);

// Largest achievable beamforming gain `sigma_1(H)^2` (linear).
//
// # Safety
// `ch` must be a live handle; `gain` must be writable.
enum MmwStatus mmw_channel_optimal_gain(const struct MmwChannel *ch, double *gain);

// Loss in dB of `scheme` against the optimum. `bits > 0` quantizes the
// transmit phases of the equal-gain schemes; 0 leaves them continuous.
//
// # Safety
// `ch` must be a live handle; `loss` must be writable.
enum MmwStatus mmw_channel_scheme_loss_db(const struct MmwChannel *ch,
                                          enum MmwScheme scheme,
                                          uint32_t bits,
                                          double *loss);

// Parseval upper bound on worst-case gain, in dB.
//
// # Safety
// `out` must be writable.
enum MmwStatus mmw_parseval_bound_db(size_t n_t, double fov_width, size_t n_beams, double *out);

// Sampled-Gram upper bound on worst-case gain over an interval of width
// `omega0`, in dB, with the default search grid.
//
// # Safety
// `out` must be writable.
enum MmwStatus mmw_thm3_bound_db(size_t n_t, double omega0, size_t j_max, double *out);

// Designs a sweep codebook over the field of view `[fov_lo_deg, fov_hi_deg]`.
// `m = 1` gives CPO beams, `m` in 2..=4 broadened beams.
//
// # Safety
// `out` must be writable.
enum MmwStatus mmw_codebook_build(size_t n,
                                  double fov_lo_deg,
                                  double fov_hi_deg,
                                  size_t n_beams,
                                  uint8_t m,
                                  enum MmwSide side,
                                  struct MmwCodebook **out);

// # Safety
// `cb` must be null or a handle from this library, freed at most once.
void mmw_codebook_free(struct MmwCodebook *cb);

// Number of beams.
//
// # Safety
// `cb` must be a live handle; `len` must be writable.
enum MmwStatus mmw_codebook_len(const struct MmwCodebook *cb, size_t *len);

// Copies beam `index` as interleaved `(re, im)` doubles; `len` must be at
// least twice the array size.
//
// # Safety
// `cb` must be a live handle; `data` must be valid for `len` doubles.
enum MmwStatus mmw_codebook_beam(const struct MmwCodebook *cb,
                                 size_t index,
                                 double *data,
                                 size_t len);

// Serializes the codebook to JSON. Free the result with [`mmw_string_free`].
//
// # Safety
// `cb` must be a live handle; `out` must be writable.
enum MmwStatus mmw_codebook_to_json(const struct MmwCodebook *cb, char **out);

// Runs an experiment described by `config_json` and returns the per-trial
// CSV. `workers = 0` uses the default pool size. Free the result with
// [`mmw_string_free`].
//
// # Safety
// `config_json` must be a NUL-terminated string; `out_csv` must be writable.
enum MmwStatus mmw_experiment_run(const char *config_json, size_t workers, char **out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMW_DISCOVERY_H */
