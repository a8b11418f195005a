//! Resonator correlation function `S(t)`, its spectrum `S(ω)` and the
//! broadening metrics used to locate the critical point.
//!
//! Conventions:
//!
//! * `S(t) = Σ_n n|c_n|² D_{n,n−1}(t) e^{−Γ|t|}` on the symmetric grid
//!   `t_j = −t_max + j·Δt`, `Δt = 2·t_max/M`.
//! * `S(ω) = ∫dt e^{−iωt} S(t)`, so a line `F·e^{iΩt}e^{−Γ|t|}` becomes
//!   `2ΓF/(Γ² + (ω−Ω)²)`.
//! * Spectra are sampled on `ω_m = carrier + m·π/t_max`, `m ∈ [−M/2, M/2)`.
//!   The carrier demodulates the series before the FFT so the frequency
//!   window follows the spectral weight, which can sit far from `ω = 0`
//!   (about `2Ng` deep in the paramagnet).
//! * The FFT uses the periodic trapezoidal rule: the sample at `−t_max`
//!   stands for both ends of the window and enters as its real part. The
//!   discrete sum is then exactly Hermitian and `Σ_m S(ω_m)·Δω = 2π·S(0)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::decoherence::{clamp_underflow, combine, phase, BranchPair, ModeCoefficients, SpectralLine};
use crate::error::{Error, Result};
use crate::model::ChainParams;
use crate::probe::ProbeState;
use crate::tfim::ModeTable;

/// `t_max = ENVELOPE_SPAN / Γ` for the automatic grid.
pub const ENVELOPE_SPAN: f64 = 8.0;
/// Smallest automatic sample count.
pub const MIN_AUTO_SAMPLES: usize = 1 << 10;
/// Largest sample count any grid may request.
pub const MAX_SAMPLES: usize = 1 << 24;
/// Chains with at most this many modes size the automatic band from the
/// exact line list instead of the spread estimate.
const EXACT_BAND_MODES: usize = 8;
/// Lines lighter than this do not widen the automatic band.
const BAND_LINE_FLOOR: f64 = 1e-9;
/// Standard deviations of the line distribution covered by the band.
const BAND_SIGMAS: f64 = 6.0;
/// Lorentzian half-widths added on each side of the band.
const BAND_GAMMAS: f64 = 20.0;
/// Nyquist frequency is this multiple of the estimated half-band.
const BAND_PADDING: f64 = 2.0;
/// A spectrum whose largest magnitude is below this is degenerate.
pub const SPECTRUM_NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_samples: usize,
    /// Frequency about which the spectrum window is centered.
    pub carrier: f64,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_samples: usize, carrier: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::param(format!("t_max must be positive, got {t_max}")));
        }
        if n_samples < 2 || !n_samples.is_power_of_two() {
            return Err(Error::param(format!(
                "n_samples must be a power of two >= 2, got {n_samples}"
            )));
        }
        if n_samples > MAX_SAMPLES {
            return Err(Error::capacity(format!(
                "n_samples = {n_samples} exceeds the limit of {MAX_SAMPLES}"
            )));
        }
        if !carrier.is_finite() {
            return Err(Error::param("carrier frequency must be finite"));
        }
        Ok(Self {
            t_max,
            n_samples,
            carrier,
        })
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.t_max / self.n_samples as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        -self.t_max + j as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|j| self.time(j)).collect()
    }

    /// Index of `t = 0`.
    pub fn origin(&self) -> usize {
        self.n_samples / 2
    }

    pub fn d_omega(&self) -> f64 {
        PI / self.t_max
    }

    /// Half-width of the frequency window around the carrier.
    pub fn nyquist(&self) -> f64 {
        PI / self.dt()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let half = (self.n_samples / 2) as i64;
        (-half..half)
            .map(|m| self.carrier + m as f64 * self.d_omega())
            .collect()
    }
}

/// `S(t)` evaluator shared by every time-domain path.
///
/// Phases `e^{iε_{m,k} t}` are computed once per branch level and mode and
/// reused by both neighbouring branch pairs; each branch's product is still
/// accumulated in ascending `k`, bit-identical to
/// [`crate::decoherence::decoherence_factor`].
#[derive(Debug, Clone)]
pub struct Correlator {
    n_modes: usize,
    levels: usize,
    /// `eps[k * levels + m]`
    eps: Vec<f64>,
    branches: Vec<WeightedBranch>,
    gamma: f64,
}

#[derive(Debug, Clone)]
struct WeightedBranch {
    n: usize,
    weight: f64,
    pair: BranchPair,
    /// `coeffs[k]`, copied out of `pair` for a tight inner loop
    coeffs: Vec<ModeCoefficients>,
}

impl Correlator {
    pub fn new(params: &ChainParams, table: &ModeTable, state: &ProbeState) -> Result<Self> {
        let weights = state.branch_weights();
        let highest = state.highest_branch();
        if highest > table.n_max() {
            return Err(Error::MissingBranch(highest));
        }
        let levels = highest + 1;
        let n_modes = table.n_modes();
        let mut eps = vec![0.0; n_modes * levels];
        for m in 0..levels {
            let b = table.branch(m)?;
            for k in 0..n_modes {
                eps[k * levels + m] = b.epsilon[k];
            }
        }
        let branches = weights
            .into_iter()
            .map(|(n, weight)| {
                let pair = BranchPair::adjacent(table, n)?;
                let coeffs = pair.modes.iter().map(|m| m.coeffs).collect();
                Ok(WeightedBranch {
                    n,
                    weight,
                    pair,
                    coeffs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_modes,
            levels,
            eps,
            branches,
            gamma: params.gamma_over_b,
        })
    }

    /// `(n, n|c_n|²)` of every contributing branch.
    pub fn weights(&self) -> Vec<(usize, f64)> {
        self.branches.iter().map(|b| (b.n, b.weight)).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, &BranchPair)> {
        self.branches.iter().map(|b| (b.weight, &b.pair))
    }

    /// `Σ_n n|c_n|² D_{n,n−1}(t)`, without the resonator envelope.
    pub fn coherent_part(&self, t: f64) -> Complex64 {
        let mut acc = vec![Complex64::new(1.0, 0.0); self.branches.len()];
        let mut phases = vec![Complex64::new(0.0, 0.0); self.levels];
        for k in 0..self.n_modes {
            let row = &self.eps[k * self.levels..(k + 1) * self.levels];
            for (p, &e) in phases.iter_mut().zip(row) {
                *p = phase(e * t);
            }
            for (a, b) in acc.iter_mut().zip(&self.branches) {
                *a *= combine(&b.coeffs[k], phases[b.n], phases[b.n - 1]);
            }
        }
        acc.iter()
            .zip(&self.branches)
            .map(|(d, b)| clamp_underflow(*d) * b.weight)
            .sum()
    }

    pub fn value(&self, t: f64) -> Complex64 {
        if self.branches.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        self.coherent_part(t) * (-self.gamma * t.abs()).exp()
    }

    /// Weighted mean line frequency over all branches.
    pub fn mean_frequency(&self) -> f64 {
        let total = self.total_weight();
        if total == 0.0 {
            return 0.0;
        }
        self.branches
            .iter()
            .map(|b| b.weight * b.pair.mean_frequency())
            .sum::<f64>()
            / total
    }

    /// Half-width around `carrier` that holds the non-negligible lines.
    pub fn band_estimate(&self, carrier: f64) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                if b.pair.modes.len() <= EXACT_BAND_MODES {
                    let set = b
                        .pair
                        .lines(EXACT_BAND_MODES, BAND_LINE_FLOOR)
                        .expect("within enumeration capacity");
                    set.lines
                        .iter()
                        .map(|l| (l.center - carrier).abs())
                        .fold(0.0, f64::max)
                } else {
                    (b.pair.mean_frequency() - carrier).abs() + BAND_SIGMAS * b.pair.spread()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Grid with `t_max = 8/Γ`, centered on the weighted mean line frequency,
/// and enough samples for the Nyquist frequency to cover twice the
/// estimated band.
pub fn auto_time_grid(params: &ChainParams, table: &ModeTable, state: &ProbeState) -> Result<TimeGrid> {
    let corr = Correlator::new(params, table, state)?;
    auto_grid_for(&corr, params.gamma_over_b)
}

pub(crate) fn auto_grid_for(corr: &Correlator, gamma: f64) -> Result<TimeGrid> {
    if !(gamma > 0.0) {
        return Err(Error::param(
            "automatic time grid needs gamma_over_b > 0 to bound the window",
        ));
    }
    let t_max = ENVELOPE_SPAN / gamma;
    let carrier = corr.mean_frequency();
    let half_band = corr.band_estimate(carrier) + BAND_GAMMAS * gamma;
    let dt = PI / (BAND_PADDING * half_band);
    let wanted = (2.0 * t_max / dt).ceil();
    if wanted > MAX_SAMPLES as f64 {
        return Err(Error::capacity(format!(
            "automatic grid needs {wanted:.0} samples, above the limit of {MAX_SAMPLES}"
        )));
    }
    let n_samples = (wanted as usize).next_power_of_two().max(MIN_AUTO_SAMPLES);
    TimeGrid::new(t_max, n_samples, carrier)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSeries {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
}

impl CorrelationSeries {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// `S(0)`.
    pub fn at_origin(&self) -> Complex64 {
        self.values[self.grid.origin()]
    }

    /// Samples demodulated by the carrier, with the `−t_max` endpoint
    /// symmetrized.
    fn demodulated(&self) -> Vec<Complex64> {
        let g = &self.grid;
        let mut f: Vec<Complex64> = self
            .values
            .iter()
            .enumerate()
            .map(|(j, s)| s * phase(-g.carrier * g.time(j)))
            .collect();
        f[0] = Complex64::new(f[0].re, 0.0);
        f
    }
}

pub fn correlation_series(
    params: &ChainParams,
    table: &ModeTable,
    state: &ProbeState,
    grid: &TimeGrid,
) -> Result<CorrelationSeries> {
    let corr = Correlator::new(params, table, state)?;
    Ok(series_from(&corr, grid))
}

pub(crate) fn series_from(corr: &Correlator, grid: &TimeGrid) -> CorrelationSeries {
    let values = (0..grid.n_samples)
        .into_par_iter()
        .map(|j| corr.value(grid.time(j)))
        .collect();
    CorrelationSeries {
        grid: *grid,
        values,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest imaginary part relative to the largest real part; zero for
    /// spectra built directly from lines.
    pub imag_residue: f64,
    /// Weighted Lorentzian lines, present for spectra built from them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines: Option<Vec<SpectralLine>>,
}

impl Spectrum {
    pub fn d_omega(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }
}

fn fft_of(f: Vec<Complex64>, grid: &TimeGrid) -> Vec<Complex64> {
    let m = grid.n_samples;
    let mut buf = f;
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dt = grid.dt();
    let half = m / 2;
    // ω index −M/2..M/2 ↔ FFT bin (m mod M); e^{iω_m t_max} = (−1)^m
    (0..m)
        .map(|i| {
            let bin = (i + half) % m;
            let sign = if (i + half) % 2 == 0 { 1.0 } else { -1.0 };
            buf[bin] * (dt * sign)
        })
        .collect()
}

pub fn spectrum_fft(series: &CorrelationSeries) -> Spectrum {
    let out = fft_of(series.demodulated(), &series.grid);
    let peak = out.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let imag = out.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Spectrum {
        frequencies: series.grid.frequencies(),
        values: out.iter().map(|z| z.re).collect(),
        imag_residue: if peak > 0.0 { imag / peak } else { 0.0 },
        lines: None,
    }
}

/// Continuous-frequency value of the discrete transform, used to refine
/// peak positions between grid points.
fn transform_at(f: &[Complex64], grid: &TimeGrid, omega: f64) -> f64 {
    let rel = omega - grid.carrier;
    f.iter()
        .enumerate()
        .map(|(j, v)| (v * phase(-rel * grid.time(j))).re)
        .sum::<f64>()
        * grid.dt()
}

/// `S(ω) = Σ_n n|c_n|² Σ_lines 2ΓF/(Γ² + (ω−Ω)²)` from enumerated lines.
pub fn spectrum_analytic(
    params: &ChainParams,
    table: &ModeTable,
    state: &ProbeState,
    freq_grid: &[f64],
    max_modes: usize,
    line_floor: f64,
) -> Result<Spectrum> {
    let gamma = params.gamma_over_b;
    if !(gamma > 0.0) {
        return Err(Error::param("Lorentzian spectrum needs gamma_over_b > 0"));
    }
    let corr = Correlator::new(params, table, state)?;
    let mut lines = Vec::new();
    for (weight, pair) in corr.pairs() {
        let set = pair.lines(max_modes, line_floor)?;
        lines.extend(set.lines.iter().map(|l| SpectralLine {
            center: l.center,
            weight: l.weight * weight,
        }));
    }
    let values = freq_grid
        .par_iter()
        .map(|&w| lorentzian_sum(&lines, gamma, w))
        .collect();
    Ok(Spectrum {
        frequencies: freq_grid.to_vec(),
        values,
        imag_residue: 0.0,
        lines: Some(lines),
    })
}

pub fn lorentzian(omega: f64, center: f64, gamma: f64) -> f64 {
    let d = omega - center;
    2.0 * gamma / (gamma * gamma + d * d)
}

pub(crate) fn lorentzian_sum(lines: &[SpectralLine], gamma: f64, omega: f64) -> f64 {
    lines
        .iter()
        .map(|l| l.weight * lorentzian(omega, l.center, gamma))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BroadeningMetrics {
    /// Width of the narrowest contiguous window holding 90% of `Σ|S(ω)|`.
    pub w90: f64,
    /// `−Σ p ln p` with `p_i = |S(ω_i)|/Σ|S|`, in nats.
    pub entropy: f64,
    /// `1/(M·Σ p²)`: 1 for a flat spectrum, `1/M` for a single bin.
    pub participation: f64,
}

pub fn broadening_metrics(spec: &Spectrum) -> Result<BroadeningMetrics> {
    let mags: Vec<f64> = spec.values.iter().map(|v| v.abs()).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if !(peak > SPECTRUM_NOISE_FLOOR) || mags.len() < 2 {
        return Err(Error::Degenerate(
            "spectrum has no value above the noise floor".into(),
        ));
    }
    let total: f64 = mags.iter().sum();
    let p: Vec<f64> = mags.iter().map(|m| m / total).collect();

    let mut prefix = Vec::with_capacity(p.len() + 1);
    prefix.push(0.0);
    for x in &p {
        prefix.push(prefix.last().unwrap() + x);
    }
    let target = 0.9 * prefix[p.len()];
    let mut best = p.len();
    let mut hi = 0;
    for lo in 0..p.len() {
        while hi < p.len() && prefix[hi] - prefix[lo] < target {
            hi += 1;
        }
        if prefix[hi] - prefix[lo] < target {
            break;
        }
        best = best.min(hi - lo);
    }

    let entropy = -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>();
    let participation = 1.0 / (p.len() as f64 * p.iter().map(|x| x * x).sum::<f64>());
    Ok(BroadeningMetrics {
        w90: best as f64 * spec.d_omega(),
        entropy,
        participation,
    })
}

/// Comparison against a single Lorentzian `L(ω, Ω_s, Γ)·Σ n|c_n|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FarFieldReport {
    /// Relative L2 deviation between the actual and the model spectrum.
    pub deviation: f64,
    /// Fitted line center `Ω_s`.
    pub shift: f64,
    pub total_weight: f64,
}

/// Fits the single-Lorentzian limit to the spectrum on `grid`.
///
/// The L2 distance is taken in the time domain, which by the discrete
/// Parseval identity equals the distance between the sampled spectra. The
/// shift maximizing the overlap is found on the FFT grid and then refined by
/// golden-section search.
pub fn far_field_check(
    params: &ChainParams,
    table: &ModeTable,
    state: &ProbeState,
    grid: &TimeGrid,
) -> Result<FarFieldReport> {
    let corr = Correlator::new(params, table, state)?;
    let series = series_from(&corr, grid);
    Ok(far_field_from(&series, corr.total_weight(), params.gamma_over_b))
}

pub(crate) fn far_field_from(series: &CorrelationSeries, weight: f64, gamma: f64) -> FarFieldReport {
    let grid = &series.grid;
    let times = grid.times();
    if weight == 0.0 {
        return FarFieldReport {
            deviation: 0.0,
            shift: grid.carrier,
            total_weight: 0.0,
        };
    }
    // overlap(Ω) = Re Σ_j e^{−iΩt_j} e^{−Γ|t_j|} S_j, up to constants
    let mut windowed = series.demodulated();
    for (v, t) in windowed.iter_mut().zip(&times) {
        *v *= (-gamma * t.abs()).exp();
    }
    let coarse = fft_of(windowed.clone(), grid);
    let freqs = grid.frequencies();
    let best = (0..coarse.len())
        .max_by(|&a, &b| coarse[a].re.total_cmp(&coarse[b].re))
        .unwrap();
    let objective = |w: f64| transform_at(&windowed, grid, w);
    let lo = freqs[best.saturating_sub(1)];
    let hi = freqs[(best + 1).min(freqs.len() - 1)];
    let refined = golden_max(objective, lo, hi, 1e-9 * grid.d_omega());
    let shift = if objective(refined) > objective(freqs[best]) {
        refined
    } else {
        freqs[best]
    };

    let (num, den) = series
        .values
        .iter()
        .zip(&times)
        .map(|(s, &t)| {
            let model = phase(shift * t) * (weight * (-gamma * t.abs()).exp());
            ((s - model).norm_sqr(), model.norm_sqr())
        })
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    FarFieldReport {
        deviation: (num / den).sqrt(),
        shift,
        total_weight: weight,
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakReport {
    /// Location of the spectral maximum, refined between grid points.
    pub location: f64,
    pub height: f64,
    /// Largest `|S(ω)|` farther than `exclusion` from the peak, relative to
    /// the peak height.
    pub runner_up_ratio: f64,
    pub exclusion: f64,
}

/// Locates the highest peak of `S(ω)`; everything within `exclusion` of it
/// is attributed to the same peak.
pub fn dominant_peak(series: &CorrelationSeries, exclusion: f64) -> PeakReport {
    let spec = spectrum_fft(series);
    let best = (0..spec.values.len())
        .max_by(|&a, &b| spec.values[a].total_cmp(&spec.values[b]))
        .unwrap();
    let f = series.demodulated();
    let grid = &series.grid;
    let lo = spec.frequencies[best.saturating_sub(1)];
    let hi = spec.frequencies[(best + 1).min(spec.values.len() - 1)];
    let objective = |w: f64| transform_at(&f, grid, w);
    let refined = golden_max(objective, lo, hi, 1e-9 * grid.d_omega());
    let (location, height) = if objective(refined) >= spec.values[best] {
        (refined, objective(refined))
    } else {
        (spec.frequencies[best], spec.values[best])
    };
    let runner_up = spec
        .frequencies
        .iter()
        .zip(&spec.values)
        .filter(|(w, _)| (*w - location).abs() > exclusion)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    PeakReport {
        location,
        height,
        runner_up_ratio: runner_up / height,
        exclusion,
    }
}

/// First time at which `|S(t)|/S(0)` drops below `threshold`, scanning with
/// `step` up to `t_stop` and bisecting the bracketing interval.
pub fn decay_time(
    params: &ChainParams,
    table: &ModeTable,
    state: &ProbeState,
    threshold: f64,
    step: f64,
    t_stop: f64,
) -> Result<Option<f64>> {
    let corr = Correlator::new(params, table, state)?;
    decay_time_for(&corr, threshold, step, t_stop)
}

pub(crate) fn decay_time_for(corr: &Correlator, threshold: f64, step: f64, t_stop: f64) -> Result<Option<f64>> {
    if !(step > 0.0 && t_stop > 0.0) {
        return Err(Error::param("decay scan needs positive step and t_stop"));
    }
    let s0 = corr.value(0.0).norm();
    if s0 == 0.0 {
        return Err(Error::Degenerate("S(0) vanishes; nothing decays".into()));
    }
    let below = |t: f64| corr.value(t).norm() / s0 < threshold;
    let n_steps = (t_stop / step).ceil() as usize;
    let mut prev = 0.0;
    for i in 1..=n_steps {
        let t = (i as f64 * step).min(t_stop);
        if below(t) {
            let (mut a, mut b) = (prev, t);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if below(mid) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(Some(b));
        }
        prev = t;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::decoherence_factor;
    use crate::probe::{coherent_state, fock_superposition};
    use crate::tfim::build_mode_table;

    fn two_level() -> ProbeState {
        fock_superposition(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap()
    }

    fn setup(n: usize, lam: f64, g: f64, gamma: f64, state: &ProbeState) -> (ChainParams, ModeTable) {
        let p = ChainParams::new(n, lam, g, gamma).unwrap();
        let t = build_mode_table(&p, state.highest_branch().max(1)).unwrap();
        (p, t)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(TimeGrid::new(10.0, 1000, 0.0).is_err());
        assert!(TimeGrid::new(10.0, 1, 0.0).is_err());
        assert!(TimeGrid::new(0.0, 1024, 0.0).is_err());
        assert!(matches!(TimeGrid::new(1.0, 1 << 25, 0.0), Err(Error::Capacity(_))));
        let g = TimeGrid::new(4.0, 8, 1.5).unwrap();
        assert_eq!(g.times(), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.time(g.origin()), 0.0);
        assert_eq!(g.frequencies()[4], 1.5);
    }

    #[test]
    fn vacuum_probe_gives_zero_series() {
        let vac = fock_superposition(&[Complex64::new(1.0, 0.0)]).unwrap();
        let (p, t) = setup(20, 1.0, 0.1, 0.05, &vac);
        let grid = TimeGrid::new(50.0, 256, 0.0).unwrap();
        let s = correlation_series(&p, &t, &vac, &grid).unwrap();
        assert!(s.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn origin_equals_mean_photon_number() {
        for state in [two_level(), coherent_state(Complex64::new(1.0, 0.0), 1e-12).unwrap()] {
            let (p, t) = setup(200, 1.0, 0.08125, 0.0039, &state);
            let grid = TimeGrid::new(10.0, 64, 0.0).unwrap();
            let s = correlation_series(&p, &t, &state, &grid).unwrap();
            let s0 = s.at_origin();
            assert!((s0.re - state.mean_photon_number()).abs() < 1e-10);
            assert!(s0.im.abs() < 1e-10);
            assert!(s.values.iter().all(|v| v.norm() <= s0.norm() + 1e-10));
        }
    }

    #[test]
    fn missing_branch_is_named() {
        let state = fock_superposition(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
        let p = ChainParams::new(8, 1.0, 0.1, 0.01).unwrap();
        let t = build_mode_table(&p, 2).unwrap();
        let grid = TimeGrid::new(10.0, 64, 0.0).unwrap();
        assert!(matches!(
            correlation_series(&p, &t, &state, &grid),
            Err(Error::MissingBranch(3))
        ));
    }

    #[test]
    fn correlator_matches_product_formula_bitwise() {
        let state = coherent_state(Complex64::new(0.8, 0.3), 1e-10).unwrap();
        let (p, t) = setup(30, 0.9, 0.05, 0.01, &state);
        let corr = Correlator::new(&p, &t, &state).unwrap();
        for time in [0.3, 2.0, 11.0] {
            let direct: Complex64 = state
                .branch_weights()
                .iter()
                .map(|&(n, w)| decoherence_factor(&t, n, time).unwrap() * w)
                .sum();
            assert_eq!(corr.coherent_part(time), direct);
        }
    }

    #[test]
    fn single_exponential_transforms_to_lorentzian() {
        // g = 0: S(t) = e^{−Γ|t|} for the one-photon Fock state
        let one = fock_superposition(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
        let gamma = 0.05;
        let (p, t) = setup(10, 1.0, 0.0, gamma, &one);
        let grid = auto_time_grid(&p, &t, &one).unwrap();
        assert!(grid.t_max >= 8.0 / gamma);
        let spec = spectrum_fft(&correlation_series(&p, &t, &one, &grid).unwrap());
        let peak = spec.values.iter().copied().fold(f64::MIN, f64::max);
        assert!((peak - 2.0 / gamma).abs() < 0.02 * 2.0 / gamma);
        assert!(spec.imag_residue < 1e-6);
    }

    #[test]
    fn discrete_parseval_identity() {
        let state = two_level();
        let (p, t) = setup(16, 1.0, 0.1, 0.05, &state);
        let grid = auto_time_grid(&p, &t, &state).unwrap();
        let series = correlation_series(&p, &t, &state, &grid).unwrap();
        let spec = spectrum_fft(&series);
        let integral: f64 = spec.values.iter().sum::<f64>() * spec.d_omega();
        assert!((integral - 2.0 * PI * 0.5).abs() < 1e-10);
    }

    #[test]
    fn isolated_line_peak_and_width_scaling() {
        let lines = [SpectralLine { center: 1.3, weight: 1.0 }];
        assert!((lorentzian_sum(&lines, 0.1, 1.3) - 2.0 / 0.1).abs() < 1e-12);
        let ratio = lorentzian_sum(&lines, 0.05, 1.3) / lorentzian_sum(&lines, 0.1, 1.3);
        assert!((ratio - 2.0).abs() < 2e-3);
    }

    #[test]
    fn metrics_of_white_spectrum() {
        let spec = Spectrum {
            frequencies: (0..512).map(|i| i as f64 * 0.1).collect(),
            values: vec![3.0; 512],
            imag_residue: 0.0,
            lines: None,
        };
        let m = broadening_metrics(&spec).unwrap();
        assert!((m.entropy - (512f64).ln()).abs() < 1e-12);
        assert!((m.participation - 1.0).abs() < 1e-12);
        assert!((m.w90 - 0.1 * (0.9f64 * 512.0).ceil()).abs() < 1e-9);
    }

    #[test]
    fn metrics_of_sampled_lorentzian() {
        let gamma = 0.01;
        let d = gamma / 64.0;
        let spec = Spectrum {
            frequencies: (-200_000..200_000).map(|i| i as f64 * d).collect(),
            values: (-200_000..200_000).map(|i| lorentzian(i as f64 * d, 0.0, gamma)).collect(),
            imag_residue: 0.0,
            lines: None,
        };
        let m = broadening_metrics(&spec).unwrap();
        // finite window of ±3125Γ holds all but 2e-4 of the mass
        let expected = 2.0 * gamma * (0.45 * PI).tan();
        assert!((m.w90 / expected - 1.0).abs() < 5e-3, "{}", m.w90 / gamma);
        assert!((m.w90 / gamma - 12.6).abs() < 0.1);
    }

    #[test]
    fn metrics_reject_zero_spectrum() {
        let spec = Spectrum {
            frequencies: vec![0.0, 1.0, 2.0],
            values: vec![0.0; 3],
            imag_residue: 0.0,
            lines: None,
        };
        assert!(matches!(broadening_metrics(&spec), Err(Error::Degenerate(_))));
    }

    #[test]
    fn global_probe_phase_is_invisible() {
        let state = coherent_state(Complex64::new(0.7, 0.2), 1e-10).unwrap();
        let (p, t) = setup(24, 1.0, 0.05, 0.05, &state);
        let grid = TimeGrid::new(160.0, 2048, 0.0).unwrap();
        let a = spectrum_fft(&correlation_series(&p, &t, &state, &grid).unwrap());
        let phased = state.with_global_phase(1.1);
        let b = spectrum_fft(&correlation_series(&p, &t, &phased, &grid).unwrap());
        let scale = a.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn uncoupled_far_field_is_exact() {
        let state = two_level();
        let (p, t) = setup(50, 3.0, 0.0, 0.02, &state);
        let grid = auto_time_grid(&p, &t, &state).unwrap();
        let r = far_field_check(&p, &t, &state, &grid).unwrap();
        assert!(r.deviation < 1e-10, "{}", r.deviation);
        assert!(r.shift.abs() < 1e-9);
    }

    #[test]
    fn decay_time_of_pure_envelope() {
        let state = two_level();
        let (p, t) = setup(10, 2.0, 0.0, 0.1, &state);
        let td = decay_time(&p, &t, &state, 0.1, 0.5, 100.0).unwrap().unwrap();
        assert!((td - 10f64.ln() / 0.1).abs() < 1e-9);
        assert!(decay_time(&p, &t, &state, 0.1, 0.5, 10.0).unwrap().is_none());
    }

    #[test]
    fn dominant_peak_of_far_field_chain() {
        let state = two_level();
        let (p, t) = setup(40, 50.0, 0.05, 0.02, &state);
        let grid = auto_time_grid(&p, &t, &state).unwrap();
        let series = correlation_series(&p, &t, &state, &grid).unwrap();
        let peak = dominant_peak(&series, 10.0 * p.gamma_over_b);
        let pair = BranchPair::adjacent(&t, 1).unwrap();
        let dominant: f64 = pair.modes.iter().map(|m| m.eps_lower - m.eps_upper).sum();
        assert!((peak.location - dominant).abs() < 1e-3 * p.gamma_over_b);
        assert!(peak.runner_up_ratio < 0.02);
    }
}
