//! Decoherence factor `D_{n,n−1}(t) = ⟨G|e^{iH_n t} e^{−iH_{n−1} t}|G⟩`.
//!
//! Each `(k, −k)` pair evolves as an independent pseudo-spin, so the factor
//! is a product of per-mode factors
//!
//! ```text
//! d_k(t) = Σ_{a,b=±} c_{ab,k} · exp(i(a·ε_nk + b·ε_{n−1,k})·t)
//! ```
//!
//! where the label `(a, b)` of each coefficient carries the phase sign of
//! the respective branch. The pairing was fixed against the 2×2 matrix
//! exponential in [`crate::oracle::oracle_mode_factor`]. Expanding the
//! product gives the exact line decomposition used for small chains.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tfim::ModeTable;

/// Products whose modulus falls below this are reported as exactly zero.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Hard limit on `N/2` for exhaustive line enumeration (`4^14` lines).
pub const MAX_ENUMERATED_MODES: usize = 14;

/// Default magnitude below which enumerated lines are pruned.
pub const DEFAULT_LINE_FLOOR: f64 = 1e-15;

/// Weights of the four pseudo-spin transition channels of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCoefficients {
    pub c_pp: f64,
    pub c_pm: f64,
    pub c_mp: f64,
    pub c_mm: f64,
}

impl ModeCoefficients {
    pub fn sum(&self) -> f64 {
        self.c_pp + self.c_pm + self.c_mp + self.c_mm
    }

    /// Coefficients in `(++, +−, −+, −−)` order.
    pub fn to_array(&self) -> [f64; 4] {
        [self.c_pp, self.c_pm, self.c_mp, self.c_mm]
    }
}

/// Sign pairs `(a, b)` in the order of [`ModeCoefficients::to_array`].
pub const CHANNEL_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

pub fn mode_coefficients(alpha_n: f64, alpha_prev: f64) -> ModeCoefficients {
    let (sn, cn) = alpha_n.sin_cos();
    let (sp, cp) = alpha_prev.sin_cos();
    let (sd, cd) = (alpha_prev - alpha_n).sin_cos();
    ModeCoefficients {
        c_pp: -sn * cp * sd,
        c_pm: sn * sp * cd,
        c_mp: cn * cp * cd,
        c_mm: cn * sp * sd,
    }
}

/// `d_k` given the branch phases `e^{iε_n t}` and `e^{iε_{n−1} t}`.
#[inline]
pub(crate) fn combine(c: &ModeCoefficients, phase_n: Complex64, phase_prev: Complex64) -> Complex64 {
    let both = phase_n * phase_prev;
    let cross = phase_n * phase_prev.conj();
    both * c.c_pp + cross * c.c_pm + cross.conj() * c.c_mp + both.conj() * c.c_mm
}

/// `e^{ix}` via a single `sin_cos`.
#[inline]
pub(crate) fn phase(x: f64) -> Complex64 {
    let (s, c) = x.sin_cos();
    Complex64::new(c, s)
}

pub fn mode_factor(coeffs: &ModeCoefficients, eps_n: f64, eps_prev: f64, t: f64) -> Complex64 {
    combine(coeffs, phase(eps_n * t), phase(eps_prev * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMode {
    pub k: f64,
    pub eps_upper: f64,
    pub eps_lower: f64,
    pub coeffs: ModeCoefficients,
}

impl PairMode {
    fn channel_frequencies(&self) -> [f64; 4] {
        CHANNEL_SIGNS.map(|(a, b)| a * self.eps_upper + b * self.eps_lower)
    }
}

/// Per-mode data of `⟨G|e^{iH_upper t} e^{−iH_lower t}|G⟩` for two branches
/// of a mode table.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPair {
    pub upper: usize,
    pub lower: usize,
    pub modes: Vec<PairMode>,
}

impl BranchPair {
    pub fn new(table: &ModeTable, upper: usize, lower: usize) -> Result<Self> {
        let hi = table.branch(upper)?;
        let lo = table.branch(lower)?;
        let modes = table
            .momenta()
            .iter()
            .enumerate()
            .map(|(i, &k)| PairMode {
                k,
                eps_upper: hi.epsilon[i],
                eps_lower: lo.epsilon[i],
                coeffs: mode_coefficients(hi.alpha[i], lo.alpha[i]),
            })
            .collect();
        Ok(Self {
            upper,
            lower,
            modes,
        })
    }

    /// The pair `(n, n−1)` probed by the resonator's `n`-photon component.
    pub fn adjacent(table: &ModeTable, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("decoherence factor needs branch n >= 1"));
        }
        Self::new(table, n, n - 1)
    }

    /// Product of mode factors, accumulated in ascending `k`.
    pub fn factor(&self, t: f64) -> Complex64 {
        let d = self
            .modes
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, m| {
                acc * mode_factor(&m.coeffs, m.eps_upper, m.eps_lower, t)
            });
        clamp_underflow(d)
    }

    /// Weighted mean line frequency `Σ_lines F·Ω`, which factorizes into a
    /// sum of per-mode means because every mode's weights sum to one.
    pub fn mean_frequency(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let w = m.coeffs.to_array();
                m.channel_frequencies()
                    .iter()
                    .zip(w)
                    .map(|(om, c)| c * om)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Spread of the line distribution about its mean, using `|c|` as the
    /// per-mode weights: `√(Σ_k Σ_ab |c_ab|(Ω_ab − m_k)²)`.
    pub fn spread(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let w = m.coeffs.to_array();
                let om = m.channel_frequencies();
                let mean: f64 = w.iter().zip(&om).map(|(c, o)| c * o).sum();
                w.iter()
                    .zip(&om)
                    .map(|(c, o)| c.abs() * (o - mean) * (o - mean))
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Expands the product into its `4^(N/2)` Lorentzian lines.
    ///
    /// Subtrees whose partial weight already lies below `floor` are dropped;
    /// because every later mode's coefficients sum to one, the signed mass
    /// of a dropped subtree equals its partial weight and is accounted
    /// exactly in [`LineSet::pruned_mass`].
    pub fn lines(&self, max_modes: usize, floor: f64) -> Result<LineSet> {
        let cap = max_modes.min(MAX_ENUMERATED_MODES);
        if self.modes.len() > cap {
            return Err(Error::capacity(format!(
                "line enumeration over {} modes exceeds the limit of {cap}; use the FFT spectrum path",
                self.modes.len()
            )));
        }
        let mut set = LineSet {
            lines: Vec::new(),
            pruned_mass: 0.0,
            pruned_count: 0,
        };
        self.expand(0, 0.0, 1.0, floor, &mut set);
        Ok(set)
    }

    fn expand(&self, depth: usize, center: f64, weight: f64, floor: f64, out: &mut LineSet) {
        if weight.abs() < floor {
            out.pruned_mass += weight;
            out.pruned_count += 4u64.pow((self.modes.len() - depth) as u32);
            return;
        }
        let Some(mode) = self.modes.get(depth) else {
            out.lines.push(SpectralLine { center, weight });
            return;
        };
        for (c, om) in mode.coeffs.to_array().into_iter().zip(mode.channel_frequencies()) {
            self.expand(depth + 1, center + om, weight * c, floor, out);
        }
    }
}

pub(crate) fn clamp_underflow(d: Complex64) -> Complex64 {
    if d.norm() < UNDERFLOW_FLOOR {
        Complex64::new(0.0, 0.0)
    } else {
        d
    }
}

/// `D_{n,n−1}(t)` from the per-mode product.
pub fn decoherence_factor(table: &ModeTable, n: usize, t: f64) -> Result<Complex64> {
    Ok(BranchPair::adjacent(table, n)?.factor(t))
}

/// One Lorentzian component: center `Ω` (units of `B`) and signed weight `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralLine {
    pub center: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSet {
    pub lines: Vec<SpectralLine>,
    /// Signed weight of everything dropped below the floor.
    pub pruned_mass: f64,
    pub pruned_count: u64,
}

impl LineSet {
    pub fn retained_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }

    /// `Σ F·e^{iΩt}` over the retained lines.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.lines
            .iter()
            .map(|l| Complex64::cis(l.center * t) * l.weight)
            .sum()
    }
}

/// All lines of `D_{n,n−1}(ω)`; errors when `N/2` exceeds `max_modes`.
pub fn enumerate_lines(table: &ModeTable, n: usize, max_modes: usize, floor: f64) -> Result<LineSet> {
    BranchPair::adjacent(table, n)?.lines(max_modes, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChainParams;
    use crate::tfim::build_mode_table;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn equal_angles_leave_only_diagonal_channels() {
        let a = 0.37;
        let c = mode_coefficients(a, a);
        assert_eq!(c.c_pp, 0.0);
        assert_eq!(c.c_mm, 0.0);
        assert!((c.c_pm - a.sin().powi(2)).abs() < 1e-15);
        assert!((c.c_mp - a.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_rotation_selects_minus_minus() {
        let c = mode_coefficients(0.0, PI / 2.0);
        let a = c.to_array();
        let expected = [0.0, 0.0, 0.0, 1.0];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn coefficient_sum_rule_over_many_pairs() {
        // c_pp + c_mm = sin²Δ and c_pm + c_mp = cos²Δ; checked on a
        // deterministic low-discrepancy set of 10⁴ angle pairs
        let golden = 0.618_033_988_749_895_f64;
        for i in 0..10_000 {
            let a = ((i as f64 * golden).fract() - 0.5) * 2.0 * PI;
            let b = ((i as f64 * golden * golden).fract() - 0.5) * 2.0 * PI;
            let c = mode_coefficients(a, b);
            let d = b - a;
            assert!((c.sum() - 1.0).abs() < 1e-12);
            assert!((c.c_pp + c.c_mm - d.sin().powi(2)).abs() < 1e-12);
            assert!((c.c_pm + c.c_mp - d.cos().powi(2)).abs() < 1e-12);
            assert!(c.to_array().iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn mode_factor_starts_at_one() {
        let c = mode_coefficients(0.2, -0.4);
        let d = mode_factor(&c, 1.3, 2.1, 0.0);
        assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identical_branches_give_unit_modulus() {
        let c = mode_coefficients(0.3, 0.3);
        for t in [0.1, 1.0, 17.0, 300.0] {
            assert!((mode_factor(&c, 1.7, 1.7, t).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn uncoupled_chain_never_decoheres() {
        let p = ChainParams::new(40, 1.0, 0.0, 0.01).unwrap();
        let t = build_mode_table(&p, 3).unwrap();
        for time in [0.0, 0.5, 10.0, 1e3] {
            for n in 1..=3 {
                let d = decoherence_factor(&t, n, time).unwrap();
                assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn branch_zero_is_rejected() {
        let p = ChainParams::new(4, 1.0, 0.1, 0.01).unwrap();
        let t = build_mode_table(&p, 2).unwrap();
        assert!(decoherence_factor(&t, 0, 1.0).is_err());
        assert!(matches!(decoherence_factor(&t, 3, 1.0), Err(Error::MissingBranch(3))));
    }

    #[test]
    fn underflow_clamps_to_zero() {
        assert_eq!(clamp_underflow(Complex64::new(1e-301, 0.0)), Complex64::new(0.0, 0.0));
        let small = Complex64::new(1e-299, 0.0);
        assert_eq!(clamp_underflow(small), small);
    }

    #[test]
    fn far_field_factor_stays_near_one() {
        let p = ChainParams::new(1000, 100.0, 0.08125, 0.0039).unwrap();
        let t = build_mode_table(&p, 1).unwrap();
        let pair = BranchPair::adjacent(&t, 1).unwrap();
        for i in 0..=200 {
            assert!(pair.factor(i as f64 * 0.5).norm() > 0.99);
        }
    }

    #[test]
    fn two_site_chain_has_four_lines() {
        let p = ChainParams::new(2, 1.0, 0.1, 0.01).unwrap();
        let t = build_mode_table(&p, 1).unwrap();
        let set = enumerate_lines(&t, 1, 14, 0.0).unwrap();
        assert_eq!(set.lines.len(), 4);
        let pair = BranchPair::adjacent(&t, 1).unwrap();
        let m = pair.modes[0];
        for ((line, c), (a, b)) in set.lines.iter().zip(m.coeffs.to_array()).zip(CHANNEL_SIGNS) {
            assert_eq!(line.weight, c);
            assert_eq!(line.center, a * m.eps_upper + b * m.eps_lower);
        }
    }

    #[test]
    fn enumeration_respects_capacity() {
        let p = ChainParams::new(10, 1.0, 0.1, 0.01).unwrap();
        let t = build_mode_table(&p, 1).unwrap();
        assert!(matches!(enumerate_lines(&t, 1, 4, 0.0), Err(Error::Capacity(_))));
        let p = ChainParams::new(30, 1.0, 0.1, 0.01).unwrap();
        let t = build_mode_table(&p, 1).unwrap();
        assert!(matches!(enumerate_lines(&t, 1, 20, 0.0), Err(Error::Capacity(_))));
    }

    #[test]
    fn pruned_mass_is_accounted() {
        let p = ChainParams::new(12, 0.9, 0.1, 0.01).unwrap();
        let t = build_mode_table(&p, 2).unwrap();
        let set = enumerate_lines(&t, 2, 14, 1e-4).unwrap();
        assert!(set.pruned_count > 0);
        assert!((set.retained_weight() + set.pruned_mass - 1.0).abs() < 1e-12);
        let full = enumerate_lines(&t, 2, 14, 0.0).unwrap();
        assert_eq!(full.lines.len(), 4usize.pow(6));
        assert_eq!(set.lines.len() as u64 + set.pruned_count, 4u64.pow(6));
    }

    #[test]
    fn mean_frequency_matches_line_average() {
        let p = ChainParams::new(8, 1.3, 0.07, 0.01).unwrap();
        let t = build_mode_table(&p, 2).unwrap();
        let pair = BranchPair::adjacent(&t, 2).unwrap();
        let set = pair.lines(14, 0.0).unwrap();
        let mean: f64 = set.lines.iter().map(|l| l.weight * l.center).sum();
        assert!((mean - pair.mean_frequency()).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn line_sum_equals_product(half in 1usize..=4, lam in 0.0..3.0f64, g in 0.0..0.3f64,
                                   n in 1usize..4, t in -30.0..30.0f64) {
            let p = ChainParams::new(2 * half, lam, g, 0.01).unwrap();
            let table = build_mode_table(&p, n).unwrap();
            let set = enumerate_lines(&table, n, 14, 0.0).unwrap();
            prop_assert!((set.retained_weight() - 1.0).abs() < 1e-10);
            let direct = decoherence_factor(&table, n, t).unwrap();
            prop_assert!((set.evaluate(t) - direct).norm() < 1e-10);
        }

        #[test]
        fn factor_is_bounded_and_hermitian(half in 1usize..60, lam in 0.0..3.0f64, g in 0.0..0.3f64,
                                           n in 1usize..4, t in 0.0..50.0f64) {
            let p = ChainParams::new(2 * half, lam, g, 0.01).unwrap();
            let table = build_mode_table(&p, n).unwrap();
            let fwd = BranchPair::new(&table, n, n - 1).unwrap();
            let rev = BranchPair::new(&table, n - 1, n).unwrap();
            let d = fwd.factor(t);
            prop_assert!(d.norm() <= 1.0 + 1e-10 * half as f64);
            prop_assert!((fwd.factor(-t) - d.conj()).norm() < 1e-12);
            prop_assert!((rev.factor(t) - d.conj()).norm() < 1e-12);
            prop_assert!((fwd.factor(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
