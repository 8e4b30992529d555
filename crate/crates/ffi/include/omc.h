#ifndef OMC_H
#define OMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OmcStatus {
  OMC_STATUS_OK = 0,
  OMC_STATUS_INVALID_INPUT = 1,
  OMC_STATUS_NUMERICAL = 2,
  OMC_STATUS_PARSE = 3,
  OMC_STATUS_IO = 4,
  OMC_STATUS_NULL_POINTER = 5,
  OMC_STATUS_UTF8 = 6,
  OMC_STATUS_PANIC = 7,
} OmcStatus;

/**
 * Cavity parameters.
 */
typedef struct OmcCavity OmcCavity;

/**
 * Sampled optical and mechanical fields with boundary patches.
 */
typedef struct OmcFields OmcFields;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *omc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *omc_version(void);

/**
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum OmcStatus omc_cavity_new(double omega_o_hz,
                              double omega_m_hz,
                              double kappa_hz,
                              double kappa_e_hz,
                              double gamma_hz,
                              double g0_hz,
                              struct OmcCavity **out);

/**
 * Parses a cavity JSON document (keys `omega_o_hz`, `omega_m_hz`,
 * `kappa_hz`, `kappa_e_hz`, `gamma_hz`, `g0_hz`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writing.
 */
enum OmcStatus omc_cavity_from_json(const char *json, struct OmcCavity **out);

/**
 * # Safety
 * `c` must be null or a handle from `omc_cavity_new`/`omc_cavity_from_json`
 * that has not been freed.
 */
void omc_cavity_free(struct OmcCavity *c);

/**
 * `C0 = 4 g0² / (κ γ)`.
 *
 * # Safety
 * `c` must be a live handle; `out` valid for writing.
 */
enum OmcStatus omc_cavity_cooperativity(const struct OmcCavity *c, double *out);

/**
 * Intracavity photon number for an on-chip pump.
 *
 * # Safety
 * `c` must be a live handle; `out` valid for writing.
 */
enum OmcStatus omc_cavity_photons(const struct OmcCavity *c,
                                  double p_in_w,
                                  double delta_hz,
                                  double lambda0_m,
                                  double *out);

/**
 * Effective mechanical linewidth (Hz) with both sideband terms. Negative
 * values mean the drive is past the lasing threshold.
 *
 * # Safety
 * `c` must be a live handle; `out` valid for writing.
 */
enum OmcStatus omc_cavity_effective_linewidth(const struct OmcCavity *c,
                                              double p_in_w,
                                              double delta_hz,
                                              double lambda0_m,
                                              double *out_gamma_eff_hz);

/**
 * Photon number and blue-sideband pump power (W) at unit cooperativity.
 *
 * # Safety
 * `c` must be a live handle; both outputs valid for writing.
 */
enum OmcStatus omc_cavity_lasing_threshold(const struct OmcCavity *c,
                                           double lambda0_m,
                                           double *out_photons,
                                           double *out_power_w);

/**
 * Probe reflection `r(Ω)` at `n` probe offsets (Hz) under the given pump.
 *
 * # Safety
 * `probe_hz`, `out_re` and `out_im` must each point to `n` doubles.
 */
enum OmcStatus omc_cavity_omit(const struct OmcCavity *c,
                               double p_in_w,
                               double delta_hz,
                               double lambda0_m,
                               const double *probe_hz,
                               size_t n,
                               double *out_re,
                               double *out_im);

/**
 * Parses a field document (the `omc g0 --fields` format).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writing.
 */
enum OmcStatus omc_fields_from_json(const char *json, struct OmcFields **out);

/**
 * # Safety
 * `f` must be null or a live handle from `omc_fields_from_json`.
 */
void omc_fields_free(struct OmcFields *f);

/**
 * Moving-boundary zero-point coupling, signed, Hz.
 *
 * # Safety
 * `f` must be a live handle; `out_g0_hz` valid for writing.
 */
enum OmcStatus omc_fields_g0(const struct OmcFields *f, double *out_g0_hz);

/**
 * `f_SAW = 2 n_eff v_SAW / λ₀`, Hz.
 *
 * # Safety
 * `out_hz` must be valid for writing.
 */
enum OmcStatus omc_saw_cutoff_hz(double n_eff, double lambda0_m, double v_saw, double *out_hz);

/**
 * `|sin(ΔkL)/(ΔkL)|`.
 */
double omc_suppression_factor(double delta_k, double length_m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OMC_H */
