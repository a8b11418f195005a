//! Brute-force validators: dense exact diagonalization of the spin chain,
//! per-mode 2×2 matrix exponentials, and the eigenvector-overlap spectrum.
//!
//! Nothing here uses the free-fermion solution. The dense Hamiltonian acts on
//! the `2^N` σ_z product states with bit `α` of the basis index set when spin
//! `α` points down. All time evolution goes through symmetric
//! eigendecompositions.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::decoherence::{mode_factor, mode_coefficients, BranchPair};
use crate::error::{Error, Result};
use crate::model::ChainParams;
use crate::probe::{fock_superposition, coherent_state, ProbeState};
use crate::spectrum::{lorentzian, spectrum_analytic, Spectrum};
use crate::tfim::{build_mode_table, dispersion, momentum_grid};

/// Largest chain the dense Hamiltonian accepts.
pub const MAX_DENSE_SITES: usize = 12;
/// Largest chain the eigenvector-overlap spectrum accepts.
pub const MAX_SPECTRUM_SITES: usize = 10;
/// Eigenvalues closer than this (relative to `max(1, |E|)`) form one
/// degenerate cluster during ground-state selection.
const CLUSTER_TOL: f64 = 1e-9;
/// Overlap products below this are dropped from the oracle spectrum.
const OVERLAP_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct DenseSpinHamiltonian {
    pub n_sites: usize,
    pub lambda: f64,
    pub matrix: DMatrix<f64>,
}

impl DenseSpinHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Applies the global parity `∏σ_x`, which flips every spin.
    pub fn apply_parity(&self, v: &DVector<f64>) -> DVector<f64> {
        let mask = self.dim() - 1;
        DVector::from_fn(self.dim(), |s, _| v[s ^ mask])
    }

    /// `max |H − Hᵀ|`.
    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// `max |HP − PH|`.
    pub fn parity_residual(&self) -> f64 {
        let mask = self.dim() - 1;
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                worst = worst.max((m[(i, j)] - m[(i ^ mask, j ^ mask)]).abs());
            }
        }
        worst
    }
}

/// `Σ_α (λσ_x^(α) + σ_z^(α)σ_z^(α+1))` with periodic closure, `B = 1`.
pub fn build_dense(n_sites: usize, lam: f64) -> Result<DenseSpinHamiltonian> {
    if n_sites < 2 {
        return Err(Error::param(format!("dense chain needs n_sites >= 2, got {n_sites}")));
    }
    if n_sites > MAX_DENSE_SITES {
        return Err(Error::capacity(format!(
            "dense oracle supports at most {MAX_DENSE_SITES} sites, got {n_sites}"
        )));
    }
    if !lam.is_finite() {
        return Err(Error::param("lambda must be finite"));
    }
    let dim = 1usize << n_sites;
    let mut m = DMatrix::zeros(dim, dim);
    let spin = |s: usize, a: usize| if s >> a & 1 == 0 { 1.0 } else { -1.0 };
    for s in 0..dim {
        let mut diag = 0.0;
        for a in 0..n_sites {
            diag += spin(s, a) * spin(s, (a + 1) % n_sites);
            m[(s ^ (1 << a), s)] += lam;
        }
        m[(s, s)] = diag;
    }
    Ok(DenseSpinHamiltonian {
        n_sites,
        lambda: lam,
        matrix: m,
    })
}

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn diagonalize(h: &DenseSpinHamiltonian) -> Eigensystem {
    diagonalize_matrix(h.matrix.clone())
}

/// Lowest eigenvector with even parity under `∏σ_x`.
///
/// Eigenvalues are grouped into near-degenerate clusters from the bottom of
/// the spectrum; within the first cluster holding an even-parity direction,
/// the eigenvector with the largest even projection is projected and
/// renormalized. This is exact for a degenerate doublet split only by
/// parity.
pub fn ground_state(h: &DenseSpinHamiltonian, eig: &Eigensystem) -> Result<(f64, DVector<f64>)> {
    let mut start = 0;
    while start < eig.values.len() {
        let e0 = eig.values[start];
        let tol = CLUSTER_TOL * e0.abs().max(1.0);
        let end = (start..eig.values.len())
            .find(|&i| eig.values[i] - e0 > tol)
            .unwrap_or(eig.values.len());
        let best = (start..end)
            .map(|c| {
                let v = eig.vectors.column(c).into_owned();
                let even = (&v + h.apply_parity(&v)) * 0.5;
                let norm = even.norm();
                (norm, even)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("cluster is non-empty");
        if best.0 * best.0 > 0.25 {
            let g = best.1 / best.0;
            let energy = g.dot(&(&h.matrix * &g));
            return Ok((energy, g));
        }
        start = end;
    }
    Err(Error::Degenerate("no even-parity eigenvector found".into()))
}

/// Free-fermion ground energy of the even sector, `−Σ_{k>0} ε_k`.
pub fn free_fermion_ground_energy(n_sites: usize, lam: f64) -> Result<f64> {
    Ok(-momentum_grid(n_sites)?.iter().map(|&k| dispersion(k, lam)).sum::<f64>())
}

/// Restriction of `H` to the even-parity subspace, in the basis
/// `(|s⟩ + |s̄⟩)/√2` where `s` ranges over states with the last spin up and
/// `s̄` is `s` with every spin flipped.
///
/// Both the initial state and every branch Hamiltonian live in this block,
/// so evolving there is exact and eight times cheaper than the full space.
pub fn even_block(h: &DenseSpinHamiltonian) -> DMatrix<f64> {
    let half = h.dim() / 2;
    let mask = h.dim() - 1;
    let m = &h.matrix;
    DMatrix::from_fn(half, half, |a, b| {
        0.5 * (m[(a, b)] + m[(a, b ^ mask)] + m[(a ^ mask, b)] + m[(a ^ mask, b ^ mask)])
    })
}

/// Embeds an even-block vector back into the full `2^N` space.
pub fn embed_even(v: &DVector<f64>) -> DVector<f64> {
    let half = v.len();
    let mask = 2 * half - 1;
    DVector::from_fn(2 * half, |s, _| {
        let a = if s < half { s } else { s ^ mask };
        v[a] * std::f64::consts::FRAC_1_SQRT_2
    })
}

fn diagonalize_matrix(m: DMatrix<f64>) -> Eigensystem {
    let dim = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Eigensystem {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]),
    }
}

/// Ground state of the even block, in block coordinates.
fn even_ground_state(n_sites: usize, lam: f64) -> Result<(f64, DVector<f64>)> {
    let eig = diagonalize_matrix(even_block(&build_dense(n_sites, lam)?));
    let tol = CLUSTER_TOL * eig.values[0].abs().max(1.0);
    if eig.values.len() > 1 && eig.values[1] - eig.values[0] <= tol {
        return Err(Error::Degenerate(format!(
            "even-parity ground state of N={n_sites}, lambda={lam} is degenerate"
        )));
    }
    Ok((eig.values[0], eig.vectors.column(0).into_owned()))
}

/// One branch Hamiltonian's even block in its eigenbasis, with the
/// projections of the initial state.
#[derive(Debug, Clone)]
struct BranchEigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    /// `⟨E_i|G⟩`
    overlaps: DVector<f64>,
}

impl BranchEigen {
    fn new(n_sites: usize, lam: f64, g: &DVector<f64>) -> Result<Self> {
        let eig = diagonalize_matrix(even_block(&build_dense(n_sites, lam)?));
        let overlaps = eig.vectors.tr_mul(g);
        Ok(Self {
            values: eig.values,
            vectors: eig.vectors,
            overlaps,
        })
    }
}

/// Dense evaluator of `⟨G|e^{iH_n t}e^{−iH_{n−1}t}|G⟩` for one branch pair.
#[derive(Debug, Clone)]
pub struct DecoherenceOracle {
    upper: BranchEigen,
    lower: BranchEigen,
    ground: DVector<f64>,
}

impl DecoherenceOracle {
    pub fn new(params: &ChainParams, n_branch: usize) -> Result<Self> {
        params.validate()?;
        if n_branch == 0 {
            return Err(Error::param("decoherence needs branch n >= 1"));
        }
        let (_, ground) = even_ground_state(params.n_sites, params.lambda)?;
        Ok(Self {
            upper: BranchEigen::new(params.n_sites, params.branch_lambda(n_branch), &ground)?,
            lower: BranchEigen::new(params.n_sites, params.branch_lambda(n_branch - 1), &ground)?,
            ground,
        })
    }

    /// Initial state `|G⟩` in the full `2^N` space.
    pub fn ground(&self) -> DVector<f64> {
        embed_even(&self.ground)
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let evolve = |b: &BranchEigen| -> (DVector<f64>, DVector<f64>) {
            let re = DVector::from_fn(b.values.len(), |i, _| (b.values[i] * t).cos() * b.overlaps[i]);
            let im = DVector::from_fn(b.values.len(), |i, _| -(b.values[i] * t).sin() * b.overlaps[i]);
            (&b.vectors * re, &b.vectors * im)
        };
        // |u⟩ = e^{−iH_{n−1}t}|G⟩ and |w⟩ = e^{−iH_n t}|G⟩, so D = ⟨w|u⟩
        let (u_re, u_im) = evolve(&self.lower);
        let (w_re, w_im) = evolve(&self.upper);
        Complex64::new(w_re.dot(&u_re) + w_im.dot(&u_im), w_re.dot(&u_im) - w_im.dot(&u_re))
    }
}

pub fn oracle_decoherence(n_sites: usize, params: &ChainParams, n_branch: usize, t: f64) -> Result<Complex64> {
    let p = params.with_n_sites(n_sites);
    Ok(DecoherenceOracle::new(&p, n_branch)?.value(t))
}

/// `⟨G_k|e^{iH_n t}e^{−iH_{n−1}t}|G_k⟩` with
/// `H_m = ε_m(s_z cos 2α_m + s_x sin 2α_m)` on `{|G_k⟩, pair state}` and
/// `s_z|G_k⟩ = −|G_k⟩`.
pub fn oracle_mode_factor(eps_n: f64, eps_prev: f64, alpha_n: f64, alpha_prev: f64, t: f64) -> Complex64 {
    let propagate = |eps: f64, alpha: f64, sign: f64| -> [Complex64; 2] {
        let (s, c) = (2.0 * alpha).sin_cos();
        let h = Matrix2::new(-eps * c, eps * s, eps * s, eps * c);
        let eig = SymmetricEigen::new(h);
        // e^{i·sign·H t}|G_k⟩
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for j in 0..2 {
            let v = eig.eigenvectors.column(j);
            let amp = Complex64::cis(sign * eig.eigenvalues[j] * t) * v[0];
            out[0] += amp * v[0];
            out[1] += amp * v[1];
        }
        out
    };
    let u = propagate(eps_prev, alpha_prev, -1.0);
    let w = propagate(eps_n, alpha_n, -1.0);
    w[0].conj() * u[0] + w[1].conj() * u[1]
}

/// `S(ω) = Σ_n n|c_n|² Σ_{ii'} ⟨G|E_i^(n)⟩⟨E_i^(n)|E_{i'}^(n−1)⟩⟨E_{i'}^(n−1)|G⟩
/// L(ω, E_i^(n) − E_{i'}^(n−1), Γ)`.
pub fn oracle_spectrum(n_sites: usize, params: &ChainParams, state: &ProbeState, freq_grid: &[f64]) -> Result<Spectrum> {
    if n_sites > MAX_SPECTRUM_SITES {
        return Err(Error::capacity(format!(
            "eigenvector-overlap spectrum supports at most {MAX_SPECTRUM_SITES} sites, got {n_sites}"
        )));
    }
    let params = params.with_n_sites(n_sites);
    params.validate()?;
    let gamma = params.gamma_over_b;
    if !(gamma > 0.0) {
        return Err(Error::param("Lorentzian spectrum needs gamma_over_b > 0"));
    }
    let weights = state.branch_weights();
    let mut lines = Vec::new();
    if !weights.is_empty() {
        let (_, ground) = even_ground_state(n_sites, params.lambda)?;
        let top = state.highest_branch();
        let levels = (0..=top)
            .map(|n| BranchEigen::new(n_sites, params.branch_lambda(n), &ground))
            .collect::<Result<Vec<_>>>()?;
        for (n, w) in weights {
            let (up, lo) = (&levels[n], &levels[n - 1]);
            let rows: Vec<usize> = (0..up.values.len()).filter(|&i| up.overlaps[i].abs() > OVERLAP_FLOOR).collect();
            let cols: Vec<usize> = (0..lo.values.len()).filter(|&j| lo.overlaps[j].abs() > OVERLAP_FLOOR).collect();
            for &i in &rows {
                let vi = up.vectors.column(i);
                for &j in &cols {
                    let p = w * up.overlaps[i] * vi.dot(&lo.vectors.column(j)) * lo.overlaps[j];
                    if p.abs() > OVERLAP_FLOOR {
                        lines.push(crate::decoherence::SpectralLine {
                            center: up.values[i] - lo.values[j],
                            weight: p,
                        });
                    }
                }
            }
        }
    }
    let values = freq_grid
        .iter()
        .map(|&om| lines.iter().map(|l| l.weight * lorentzian(om, l.center, gamma)).sum())
        .collect();
    Ok(Spectrum {
        frequencies: freq_grid.to_vec(),
        values,
        imag_residue: 0.0,
        lines: Some(lines),
    })
}

/// Relative L2 distance `‖a − b‖/‖b‖`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Parameters of the oracle comparison suite.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSuite {
    pub n_sites: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub g_over_b: Vec<f64>,
    pub gamma_over_b: f64,
    /// Upper branches `n` of the compared `D_{n,n−1}`.
    pub branches: Vec<usize>,
    pub n_times: usize,
    pub t_max: f64,
    pub tolerance: f64,
    /// Relative L2 tolerance for the spectrum comparison.
    pub spectrum_tolerance: f64,
}

impl Default for OracleSuite {
    fn default() -> Self {
        Self {
            n_sites: vec![2, 4, 6, 8],
            lambdas: vec![0.5, 1.0, 2.0],
            g_over_b: vec![0.05, 0.1],
            gamma_over_b: 0.05,
            branches: vec![1, 2],
            n_times: 50,
            t_max: 20.0,
            tolerance: 1e-8,
            spectrum_tolerance: 1e-6,
        }
    }
}

impl OracleSuite {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_sites.is_empty() {
            v.push("n_sites: must not be empty".to_string());
        }
        for (i, &n) in self.n_sites.iter().enumerate() {
            if n < 2 || n % 2 != 0 {
                v.push(format!("n_sites[{i}]: must be an even integer >= 2, got {n}"));
            }
        }
        for (i, x) in self.lambdas.iter().enumerate() {
            if !x.is_finite() {
                v.push(format!("lambdas[{i}]: must be finite"));
            }
        }
        for (i, &g) in self.g_over_b.iter().enumerate() {
            if !(g.is_finite() && g >= 0.0) {
                v.push(format!("g_over_b[{i}]: must be finite and >= 0, got {g}"));
            }
        }
        if !(self.gamma_over_b.is_finite() && self.gamma_over_b > 0.0) {
            v.push(format!("gamma_over_b: must be > 0, got {}", self.gamma_over_b));
        }
        if self.branches.is_empty() || self.branches.contains(&0) {
            v.push("branches: must list branches n >= 1".to_string());
        }
        if self.n_times == 0 {
            v.push("n_times: must be >= 1".to_string());
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            v.push(format!("t_max: must be > 0, got {}", self.t_max));
        }
        for (name, tol) in [("tolerance", self.tolerance), ("spectrum_tolerance", self.spectrum_tolerance)] {
            if !(tol.is_finite() && tol > 0.0) {
                v.push(format!("{name}: must be > 0, got {tol}"));
            }
        }
        v
    }

    /// Checks sizes against the dense limits before any work starts.
    pub fn check_capacity(&self) -> Result<()> {
        if let Some(&n) = self.n_sites.iter().find(|&&n| n > MAX_DENSE_SITES) {
            return Err(Error::capacity(format!(
                "oracle suite requests N = {n}; the dense oracle supports at most {MAX_DENSE_SITES} sites"
            )));
        }
        Ok(())
    }

    /// Deterministic low-discrepancy sample times in `[0, t_max]`.
    pub fn times(&self) -> Vec<f64> {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        (0..self.n_times)
            .map(|j| self.t_max * ((j as f64 + 0.5) * phi).fract())
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCase {
    pub n_sites: usize,
    pub lambda: f64,
    pub g_over_b: f64,
    /// `max |D_product − D_dense|` over branches and times.
    pub decoherence: f64,
    /// `max |d_k − d_k^{2×2}|` over modes, branches and times.
    pub mode_factor: f64,
    /// `|E_dense − E_free|` for the uncoupled chain.
    pub ground_energy: f64,
    /// Relative L2 distance between the overlap and line spectra; absent
    /// above the overlap-spectrum size limit.
    pub spectrum: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub suite: OracleSuite,
    pub cases: Vec<OracleCase>,
    pub max_decoherence: f64,
    pub max_mode_factor: f64,
    pub max_ground_energy: f64,
    pub max_spectrum: f64,
    pub passed: bool,
}

/// Runs every comparison of the suite. Errors only on invalid or oversized
/// input; tolerance violations are reported through `passed`.
pub fn run_suite(suite: &OracleSuite) -> Result<OracleReport> {
    let v = suite.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    suite.check_capacity()?;
    let times = suite.times();
    let top = *suite.branches.iter().max().unwrap();
    let one = Complex64::new(1.0, 0.0);
    let mut weights = vec![Complex64::new(0.0, 0.0); top + 1];
    for &n in &suite.branches {
        weights[n] = one;
    }
    let probe = fock_superposition(&weights)?;
    let mut cases = Vec::new();
    for &n_sites in &suite.n_sites {
        for &lam in &suite.lambdas {
            for &g in &suite.g_over_b {
                let params = ChainParams::new(n_sites, lam, g, suite.gamma_over_b)?;
                let table = build_mode_table(&params, top)?;
                let mut dec: f64 = 0.0;
                let mut modes: f64 = 0.0;
                for &n in &suite.branches {
                    let oracle = DecoherenceOracle::new(&params, n)?;
                    let pair = BranchPair::adjacent(&table, n)?;
                    let (up, lo) = (table.branch(n)?, table.branch(n - 1)?);
                    for &t in &times {
                        dec = dec.max((pair.factor(t) - oracle.value(t)).norm());
                        for k in 0..table.n_modes() {
                            let c = mode_coefficients(up.alpha[k], lo.alpha[k]);
                            let fast = mode_factor(&c, up.epsilon[k], lo.epsilon[k], t);
                            let slow = oracle_mode_factor(up.epsilon[k], lo.epsilon[k], up.alpha[k], lo.alpha[k], t);
                            modes = modes.max((fast - slow).norm());
                        }
                    }
                }
                let h0 = build_dense(n_sites, lam)?;
                let (e0, _) = ground_state(&h0, &diagonalize(&h0))?;
                let energy = (e0 - free_fermion_ground_energy(n_sites, lam)?).abs();
                let spectrum = if n_sites <= MAX_SPECTRUM_SITES && n_sites / 2 <= crate::decoherence::MAX_ENUMERATED_MODES {
                    let freqs = oracle_frequency_grid(&params, &table, &probe);
                    let fast = spectrum_analytic(&params, &table, &probe, &freqs, n_sites / 2, 0.0)?;
                    let slow = oracle_spectrum(n_sites, &params, &probe, &freqs)?;
                    Some(relative_l2(&fast.values, &slow.values))
                } else {
                    None
                };
                let passed = dec < suite.tolerance
                    && modes < suite.tolerance
                    && energy < suite.tolerance
                    && spectrum.map_or(true, |s| s < suite.spectrum_tolerance);
                cases.push(OracleCase {
                    n_sites,
                    lambda: lam,
                    g_over_b: g,
                    decoherence: dec,
                    mode_factor: modes,
                    ground_energy: energy,
                    spectrum,
                    passed,
                });
            }
        }
    }
    let max = |f: fn(&OracleCase) -> f64| cases.iter().map(f).fold(0.0, f64::max);
    Ok(OracleReport {
        suite: suite.clone(),
        max_decoherence: max(|c| c.decoherence),
        max_mode_factor: max(|c| c.mode_factor),
        max_ground_energy: max(|c| c.ground_energy),
        max_spectrum: max(|c| c.spectrum.unwrap_or(0.0)),
        passed: cases.iter().all(|c| c.passed),
        cases,
    })
}

/// Frequency grid spanning every line of the probe's branch pairs with
/// `20Γ` margins, resolved at `Γ/8`.
pub fn oracle_frequency_grid(params: &ChainParams, table: &crate::tfim::ModeTable, state: &ProbeState) -> Vec<f64> {
    let gamma = params.gamma_over_b;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (n, _) in state.branch_weights() {
        if let Ok(pair) = BranchPair::adjacent(table, n) {
            let reach: f64 = pair.modes.iter().map(|m| m.eps_upper + m.eps_lower).sum();
            lo = lo.min(-reach);
            hi = hi.max(reach);
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 0.0;
    }
    let (lo, hi) = (lo - 20.0 * gamma, hi + 20.0 * gamma);
    let step = gamma / 8.0;
    let count = ((hi - lo) / step).ceil() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// The two probe states used throughout: `(|0⟩+|1⟩)/√2` and the coherent
/// state `|α=1⟩` truncated at `tail_tol = 1e-12`.
pub fn reference_probes() -> Result<[ProbeState; 2]> {
    let one = Complex64::new(1.0, 0.0);
    Ok([fock_superposition(&[one, one])?, coherent_state(one, 1e-12)?])
}
