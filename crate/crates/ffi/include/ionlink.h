#ifndef IONLINK_H
#define IONLINK_H

#include <stdbool.h>
#include <stddef.h>

typedef enum IonlinkStatus {
  IONLINK_STATUS_OK = 0,
  IONLINK_STATUS_INVALID_PARAMETER = 1,
  IONLINK_STATUS_NOT_DOUBLE_WELL = 2,
  IONLINK_STATUS_SINGULAR_CONFIGURATION = 3,
  IONLINK_STATUS_NOT_CONVERGED = 4,
  IONLINK_STATUS_BASIN_ESCAPE = 5,
  IONLINK_STATUS_UNSTABLE = 6,
  IONLINK_STATUS_CUTOFF_TOO_SMALL = 7,
  IONLINK_STATUS_FIT_FAILED = 8,
  IONLINK_STATUS_PARSE_ERROR = 9,
  IONLINK_STATUS_IO_ERROR = 10,
  IONLINK_STATUS_NULL_POINTER = 11,
  IONLINK_STATUS_BUFFER_TOO_SMALL = 12,
  IONLINK_STATUS_PANIC = 13,
} IonlinkStatus;

// Opaque quartic potential.
typedef struct IonlinkPotential IonlinkPotential;

// Opaque result of a voltage scan across an avoided crossing.
typedef struct IonlinkScan IonlinkScan;

// Geometry of the two wells at one control voltage. Lengths in m,
// frequencies in Hz, energy in J.
typedef struct IonlinkWells {
  double left_min;
  double right_min;
  double barrier_z;
  double separation_r;
  double freq_left;
  double freq_right;
  double barrier_height;
} IonlinkWells;

// One scan voltage: the two lowest mode frequencies in Hz.
typedef struct IonlinkScanPoint {
  double u_ax;
  double nu_low;
  double nu_high;
  bool stable;
} IonlinkScanPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library from the same thread.
const char *ionlink_last_error(void);

// Static, nul-terminated version string.
const char *ionlink_version(void);

// # Safety
// `out` must be a valid pointer to a handle slot.
enum IonlinkStatus ionlink_potential_new(double alpha1,
                                         double alpha2,
                                         double alpha4,
                                         double tune1,
                                         double tune2,
                                         struct IonlinkPotential **out);

// Symmetric double well with minima `separation_m` apart and local
// frequency `freq_hz`, plus linear voltage tuning.
//
// # Safety
// `species_name` is null or a nul-terminated string; `out` is a valid handle slot.
enum IonlinkStatus ionlink_potential_calibrate(double separation_m,
                                               double freq_hz,
                                               const char *species_name,
                                               double tune1,
                                               double tune2,
                                               struct IonlinkPotential **out);

// # Safety
// `p` is null or a handle from this library that has not been freed.
void ionlink_potential_free(struct IonlinkPotential *p);

// Coefficients `[alpha1, alpha2, alpha4, tune1, tune2]`.
//
// # Safety
// `p` is a live handle; `out` points to 5 doubles.
enum IonlinkStatus ionlink_potential_coefficients(const struct IonlinkPotential *p, double *out);

// Potential energy in J at position `z` (m) and control voltage `u_ax` (V).
//
// # Safety
// `p` is a live handle; `out` is a valid pointer.
enum IonlinkStatus ionlink_potential_eval(const struct IonlinkPotential *p,
                                          double u_ax,
                                          double z,
                                          double *out);

// # Safety
// `p` is a live handle; `species_name` as above; `out` is a valid pointer.
enum IonlinkStatus ionlink_find_wells(const struct IonlinkPotential *p,
                                      double u_ax,
                                      const char *species_name,
                                      struct IonlinkWells *out);

// Equilibrium positions (m, ascending) of `n_left + n_right` ions.
//
// # Safety
// `p` is a live handle; `out` holds at least `capacity` doubles.
enum IonlinkStatus ionlink_equilibrium(const struct IonlinkPotential *p,
                                       double u_ax,
                                       const char *species_name,
                                       size_t n_left,
                                       size_t n_right,
                                       double *out,
                                       size_t capacity);

// Normal-mode frequencies in Hz, ascending.
//
// # Safety
// As for [`ionlink_equilibrium`].
enum IonlinkStatus ionlink_mode_frequencies(const struct IonlinkPotential *p,
                                            double u_ax,
                                            const char *species_name,
                                            size_t n_left,
                                            size_t n_right,
                                            double *out,
                                            size_t capacity);

// Scan the control voltage over `steps` points. Passing NaN for both
// `u_min` and `u_max` centres the range on the estimated resonance.
//
// # Safety
// `p` is a live handle; `out` is a valid handle slot.
enum IonlinkStatus ionlink_scan_crossing(const struct IonlinkPotential *p,
                                         const char *species_name,
                                         size_t n_left,
                                         size_t n_right,
                                         double u_min,
                                         double u_max,
                                         size_t steps,
                                         struct IonlinkScan **out);

// # Safety
// `s` is null or a live scan handle.
void ionlink_scan_free(struct IonlinkScan *s);

// Number of scan points; 0 for a null handle.
//
// # Safety
// `s` is null or a live scan handle.
size_t ionlink_scan_len(const struct IonlinkScan *s);

// # Safety
// `s` is a live scan handle; `out` is a valid pointer.
enum IonlinkStatus ionlink_scan_point(const struct IonlinkScan *s,
                                      size_t index,
                                      struct IonlinkScanPoint *out);

// Minimal splitting in Hz and the voltage where it occurs.
//
// # Safety
// `s` is a live scan handle; outputs are valid pointers.
enum IonlinkStatus ionlink_scan_result(const struct IonlinkScan *s,
                                       double *splitting_hz,
                                       double *resonance_voltage);

// Dipole coupling rate in rad/s between two single ions at distance
// `r_m`, oscillating at `f1_hz` and `f2_hz`.
//
// # Safety
// Species names as above; `out` is a valid pointer.
enum IonlinkStatus ionlink_coupling_rate(const char *species1,
                                         const char *species2,
                                         double f1_hz,
                                         double f2_hz,
                                         double r_m,
                                         double *out);

// # Safety
// `out` is a valid pointer.
enum IonlinkStatus ionlink_swap_time(double omega_c, double *out);

// # Safety
// `out` is a valid pointer.
enum IonlinkStatus ionlink_gate_time(double omega_c, double *out);

// Relative strength of the coupling for dipoles tilted by `theta` (rad)
// from the inter-ion axis.
double ionlink_angular_factor(double theta);

// Mean phonon number of ion 1 at each of `len` delays.
//
// # Safety
// `taus` and `out` each point to `len` doubles.
enum IonlinkStatus ionlink_exchange_trace(double n1_0,
                                          double n2_0,
                                          double omega_c,
                                          double tau_damp,
                                          double gamma_h,
                                          const double *taus,
                                          size_t len,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IONLINK_H */
