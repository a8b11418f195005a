//! C ABI for the `ising-probe` library.
//!
//! Objects are handed out as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an
//! [`IpStatus`]; on failure a description of the most recent error on the
//! calling thread is available from [`ip_last_error_message`]. Panics never
//! cross the boundary: they are caught and reported as
//! [`IpStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ising_probe::spectrum::{broadening_metrics, correlation_series, spectrum_fft, Spectrum, TimeGrid};
use ising_probe::{
    auto_time_grid, bogoliubov_angle, build_mode_table, coherent_state, decoherence_factor, dispersion,
    fock_superposition, ChainParams, Error, ModeTable, ProbeState,
};
use num_complex::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpStatus {
    Ok = 0,
    /// An argument lies outside the model's domain.
    InvalidArgument = 1,
    /// A required pointer was null.
    NullPointer = 2,
    /// The request exceeds an exact path's size limit.
    Capacity = 3,
    /// The input carries no usable signal (all-zero state or spectrum).
    Degenerate = 4,
    /// A photon-number branch needed by the probe is not in the mode table.
    MissingBranch = 5,
    /// A caller-supplied buffer has the wrong length.
    BufferSize = 6,
    /// An unexpected internal failure.
    Internal = 7,
}

/// Mode table of a chain, together with its parameters.
pub struct IpModeTable {
    params: ChainParams,
    table: ModeTable,
}

/// Resonator initial state.
pub struct IpProbe {
    state: ProbeState,
}

/// Time grid resolved by [`ip_auto_time_grid`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IpTimeGrid {
    pub t_max: f64,
    pub n_samples: usize,
    pub carrier: f64,
}

/// Broadening metrics of a sampled spectrum.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IpMetrics {
    pub w90: f64,
    pub entropy: f64,
    pub participation: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IpStatus {
    match e {
        Error::Capacity(_) => IpStatus::Capacity,
        Error::Degenerate(_) => IpStatus::Degenerate,
        Error::MissingBranch(_) => IpStatus::MissingBranch,
        _ => IpStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (IpStatus, String)>) -> IpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            IpStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (IpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (IpStatus, String) {
    (IpStatus::NullPointer, format!("{name} is null"))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating if needed.
///
/// Returns the full message length excluding the terminator, or 0 when no
/// error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ip_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ip_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Quasiparticle energy `ε_k(λ)` in units of `B`.
#[no_mangle]
pub extern "C" fn ip_dispersion(k: f64, lambda: f64) -> f64 {
    dispersion(k, lambda)
}

/// Bogoliubov angle `θ_k(λ) ∈ [0, π]`.
#[no_mangle]
pub extern "C" fn ip_bogoliubov_angle(k: f64, lambda: f64) -> f64 {
    bogoliubov_angle(k, lambda)
}

/// Builds the mode table for branches `0 … n_max`.
///
/// # Safety
/// `out` must be a valid pointer to writable handle storage.
#[no_mangle]
pub unsafe extern "C" fn ip_mode_table_new(
    n_sites: usize,
    lambda: f64,
    g_over_b: f64,
    gamma_over_b: f64,
    n_max: usize,
    out: *mut *mut IpModeTable,
) -> IpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ChainParams::new(n_sites, lambda, g_over_b, gamma_over_b).map_err(lib_err)?;
        let table = build_mode_table(&params, n_max).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IpModeTable { params, table }));
        Ok(())
    })
}

/// Releases a mode table; null is ignored.
///
/// # Safety
/// `table` must be null or a handle from [`ip_mode_table_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ip_mode_table_free(table: *mut IpModeTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of positive momenta `N/2`, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ip_mode_table_n_modes(table: *const IpModeTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.n_modes())
}

/// Decoherence factor `D_{n,n−1}(t)`.
///
/// # Safety
/// `table` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ip_decoherence_factor(
    table: *const IpModeTable,
    n: usize,
    t: f64,
    re: *mut f64,
    im: *mut f64,
) -> IpStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let d = decoherence_factor(&table.table, n, t).map_err(lib_err)?;
        *re = d.re;
        *im = d.im;
        Ok(())
    })
}

/// Normalized Fock superposition with coefficients `re[i] + i·im[i]`.
///
/// # Safety
/// `re` and `im` must each point to `len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ip_probe_fock_new(
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut IpProbe,
) -> IpStatus {
    guard(|| {
        if re.is_null() || im.is_null() || out.is_null() {
            return Err(null("re/im/out"));
        }
        let re = std::slice::from_raw_parts(re, len);
        let im = std::slice::from_raw_parts(im, len);
        let c: Vec<Complex64> = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let state = fock_superposition(&c).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IpProbe { state }));
        Ok(())
    })
}

/// Coherent state `|α⟩` truncated once the photon-weighted tail drops below
/// `tail_tol`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ip_probe_coherent_new(
    alpha_re: f64,
    alpha_im: f64,
    tail_tol: f64,
    out: *mut *mut IpProbe,
) -> IpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = coherent_state(Complex64::new(alpha_re, alpha_im), tail_tol).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IpProbe { state }));
        Ok(())
    })
}

/// Releases a probe; null is ignored.
///
/// # Safety
/// `probe` must be null or a live handle from one of the probe constructors.
#[no_mangle]
pub unsafe extern "C" fn ip_probe_free(probe: *mut IpProbe) {
    if !probe.is_null() {
        drop(Box::from_raw(probe));
    }
}

/// `Σ_n n|c_n|²`, or NaN for a null handle.
///
/// # Safety
/// `probe` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ip_probe_mean_photon_number(probe: *const IpProbe) -> f64 {
    probe.as_ref().map_or(f64::NAN, |p| p.state.mean_photon_number())
}

/// Highest retained Fock level, or 0 for a null handle.
///
/// # Safety
/// `probe` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ip_probe_n_max(probe: *const IpProbe) -> usize {
    probe.as_ref().map_or(0, |p| p.state.n_max())
}

/// Default time grid for this chain and probe.
///
/// # Safety
/// `table` and `probe` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ip_auto_time_grid(
    table: *const IpModeTable,
    probe: *const IpProbe,
    out: *mut IpTimeGrid,
) -> IpStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        let probe = probe.as_ref().ok_or_else(|| null("probe"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let g = auto_time_grid(&table.params, &table.table, &probe.state).map_err(lib_err)?;
        *out = IpTimeGrid {
            t_max: g.t_max,
            n_samples: g.n_samples,
            carrier: g.carrier,
        };
        Ok(())
    })
}

fn resolve_grid(grid: IpTimeGrid, len: usize) -> Result<TimeGrid, (IpStatus, String)> {
    let g = TimeGrid::new(grid.t_max, grid.n_samples, grid.carrier).map_err(lib_err)?;
    if len != g.n_samples {
        return Err((
            IpStatus::BufferSize,
            format!("buffers hold {len} samples, grid needs {}", g.n_samples),
        ));
    }
    Ok(g)
}

/// `S(t_j)` on `t_j = −t_max + j·2t_max/n_samples`, written as separate
/// real and imaginary parts.
///
/// # Safety
/// Handles must be live; `re` and `im` must each point to `len` writable
/// doubles, with `len == grid.n_samples`.
#[no_mangle]
pub unsafe extern "C" fn ip_correlation(
    table: *const IpModeTable,
    probe: *const IpProbe,
    grid: IpTimeGrid,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> IpStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        let probe = probe.as_ref().ok_or_else(|| null("probe"))?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let g = resolve_grid(grid, len)?;
        let s = correlation_series(&table.params, &table.table, &probe.state, &g).map_err(lib_err)?;
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (i, v) in s.values.iter().enumerate() {
            re[i] = v.re;
            im[i] = v.im;
        }
        Ok(())
    })
}

/// `S(ω_m)` from the FFT of the correlation series, with
/// `ω_m = carrier + m·π/t_max`, `m = −n/2 … n/2−1`.
///
/// # Safety
/// Handles must be live; `omega` and `values` must each point to `len`
/// writable doubles, with `len == grid.n_samples`.
#[no_mangle]
pub unsafe extern "C" fn ip_spectrum(
    table: *const IpModeTable,
    probe: *const IpProbe,
    grid: IpTimeGrid,
    omega: *mut f64,
    values: *mut f64,
    len: usize,
) -> IpStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        let probe = probe.as_ref().ok_or_else(|| null("probe"))?;
        if omega.is_null() || values.is_null() {
            return Err(null("omega/values"));
        }
        let g = resolve_grid(grid, len)?;
        let s = correlation_series(&table.params, &table.table, &probe.state, &g).map_err(lib_err)?;
        let spec = spectrum_fft(&s);
        std::slice::from_raw_parts_mut(omega, len).copy_from_slice(&spec.frequencies);
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(&spec.values);
        Ok(())
    })
}

/// Broadening metrics of a spectrum sampled on a uniform grid.
///
/// # Safety
/// `omega` and `values` must each point to `len` readable doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ip_broadening_metrics(
    omega: *const f64,
    values: *const f64,
    len: usize,
    out: *mut IpMetrics,
) -> IpStatus {
    guard(|| {
        if omega.is_null() || values.is_null() || out.is_null() {
            return Err(null("omega/values/out"));
        }
        if len < 2 {
            return Err((IpStatus::BufferSize, "metrics need at least two samples".to_string()));
        }
        let spec = Spectrum {
            frequencies: std::slice::from_raw_parts(omega, len).to_vec(),
            values: std::slice::from_raw_parts(values, len).to_vec(),
            imag_residue: 0.0,
            lines: None,
        };
        let m = broadening_metrics(&spec).map_err(lib_err)?;
        *out = IpMetrics {
            w90: m.w90,
            entropy: m.entropy,
            participation: m.participation,
        };
        Ok(())
    })
}
