#ifndef ISING_PROBE_H
#define ISING_PROBE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum IpStatus {
  IP_STATUS_OK = 0,
  // An argument lies outside the model's domain.
  IP_STATUS_INVALID_ARGUMENT = 1,
  // A required pointer was null.
  IP_STATUS_NULL_POINTER = 2,
  // The request exceeds an exact path's size limit.
  IP_STATUS_CAPACITY = 3,
  // The input carries no usable signal (all-zero state or spectrum).
  IP_STATUS_DEGENERATE = 4,
  // A photon-number branch needed by the probe is not in the mode table.
  IP_STATUS_MISSING_BRANCH = 5,
  // A caller-supplied buffer has the wrong length.
  IP_STATUS_BUFFER_SIZE = 6,
  // An unexpected internal failure.
  IP_STATUS_INTERNAL = 7,
} IpStatus;

// Mode table of a chain, together with its parameters.
typedef struct IpModeTable IpModeTable;

// Resonator initial state.
typedef struct IpProbe IpProbe;

// Time grid resolved by [`ip_auto_time_grid`].
typedef struct IpTimeGrid {
  double t_max;
  uintptr_t n_samples;
  double carrier;
} IpTimeGrid;

// Broadening metrics of a sampled spectrum.
typedef struct IpMetrics {
  double w90;
  double entropy;
  double participation;
} IpMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` as a
// NUL-terminated string, truncating if needed.
//
// Returns the full message length excluding the terminator, or 0 when no
// error has been recorded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t ip_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *ip_version(void);

// Quasiparticle energy `ε_k(λ)` in units of `B`.
double ip_dispersion(double k, double lambda);

// Bogoliubov angle `θ_k(λ) ∈ [0, π]`.
double ip_bogoliubov_angle(double k, double lambda);

// Builds the mode table for branches `0 … n_max`.
//
// # Safety
// `out` must be a valid pointer to writable handle storage.
enum IpStatus ip_mode_table_new(uintptr_t n_sites,
                                double lambda,
                                double g_over_b,
                                double gamma_over_b,
                                uintptr_t n_max,
                                struct IpModeTable **out);

// Releases a mode table; null is ignored.
//
// # Safety
// `table` must be null or a handle from [`ip_mode_table_new`] that has not
// been freed.
void ip_mode_table_free(struct IpModeTable *table);

// Number of positive momenta `N/2`, or 0 for a null handle.
//
// # Safety
// `table` must be null or a live handle.
uintptr_t ip_mode_table_n_modes(const struct IpModeTable *table);

// Decoherence factor `D_{n,n−1}(t)`.
//
// # Safety
// `table` must be a live handle; `re` and `im` must be writable.
enum IpStatus ip_decoherence_factor(const struct IpModeTable *table,
                                    uintptr_t n,
                                    double t,
                                    double *re,
                                    double *im);

// Normalized Fock superposition with coefficients `re[i] + i·im[i]`.
//
// # Safety
// `re` and `im` must each point to `len` readable doubles; `out` must be
// writable.
enum IpStatus ip_probe_fock_new(const double *re,
                                const double *im,
                                uintptr_t len,
                                struct IpProbe **out);

// Coherent state `|α⟩` truncated once the photon-weighted tail drops below
// `tail_tol`.
//
// # Safety
// `out` must be writable.
enum IpStatus ip_probe_coherent_new(double alpha_re,
                                    double alpha_im,
                                    double tail_tol,
                                    struct IpProbe **out);

// Releases a probe; null is ignored.
//
// # Safety
// `probe` must be null or a live handle from one of the probe constructors.
void ip_probe_free(struct IpProbe *probe);

// `Σ_n n|c_n|²`, or NaN for a null handle.
//
// # Safety
// `probe` must be null or a live handle.
double ip_probe_mean_photon_number(const struct IpProbe *probe);

// Highest retained Fock level, or 0 for a null handle.
//
// # Safety
// `probe` must be null or a live handle.
uintptr_t ip_probe_n_max(const struct IpProbe *probe);

// Default time grid for this chain and probe.
//
// # Safety
// `table` and `probe` must be live handles; `out` must be writable.
enum IpStatus ip_auto_time_grid(const struct IpModeTable *table,
                                const struct IpProbe *probe,
                                struct IpTimeGrid *out);

// `S(t_j)` on `t_j = −t_max + j·2t_max/n_samples`, written as separate
// real and imaginary parts.
//
// # Safety
// Handles must be live; `re` and `im` must each point to `len` writable
// doubles, with `len == grid.n_samples`.
enum IpStatus ip_correlation(const struct IpModeTable *table,
                             const struct IpProbe *probe,
                             struct IpTimeGrid grid,
                             double *re,
                             double *im,
                             uintptr_t len);

// `S(ω_m)` from the FFT of the correlation series, with
// `ω_m = carrier + m·π/t_max`, `m = −n/2 … n/2−1`.
//
// # Safety
// Handles must be live; `omega` and `values` must each point to `len`
// writable doubles, with `len == grid.n_samples`.
enum IpStatus ip_spectrum(const struct IpModeTable *table,
                          const struct IpProbe *probe,
                          struct IpTimeGrid grid,
                          double *omega,
                          double *values,
                          uintptr_t len);

// Broadening metrics of a spectrum sampled on a uniform grid.
//
// # Safety
// `omega` and `values` must each point to `len` readable doubles; `out`
// must be writable.
enum IpStatus ip_broadening_metrics(const double *omega,
                                    const double *values,
                                    uintptr_t len,
                                    struct IpMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISING_PROBE_H */
