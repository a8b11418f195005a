//! Resonator initial state in the Fock basis.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeState {
    amplitudes: Vec<Complex64>,
    truncation_error: f64,
}

impl ProbeState {
    /// Amplitudes `c_0 … c_{n_max}`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Probability carried by the discarded Fock tail.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    pub fn n_max(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn mean_photon_number(&self) -> f64 {
        mean_photon_number(self)
    }

    /// Non-zero branch weights `(n, n|c_n|²)`, `n ≥ 1`, in increasing `n`.
    pub fn branch_weights(&self) -> Vec<(usize, f64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| (n, n as f64 * c.norm_sqr()))
            .filter(|&(_, w)| w > 0.0)
            .collect()
    }

    /// Highest photon number with non-zero weight, or 0 for the vacuum.
    pub fn highest_branch(&self) -> usize {
        self.branch_weights().last().map_or(0, |&(n, _)| n)
    }

    /// Same state with every amplitude multiplied by `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let phase = Complex64::cis(phi);
        Self {
            amplitudes: self.amplitudes.iter().map(|c| c * phase).collect(),
            truncation_error: self.truncation_error,
        }
    }
}

/// Normalized superposition `Σ c_n |n⟩` of the given coefficients.
pub fn fock_superposition(coeffs: &[Complex64]) -> Result<ProbeState> {
    if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::param("Fock coefficients must be finite"));
    }
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate(
            "Fock superposition needs at least one non-zero coefficient".into(),
        ));
    }
    let mut amplitudes: Vec<Complex64> = coeffs.iter().map(|c| c / norm).collect();
    while amplitudes.len() > 1 && amplitudes.last() == Some(&Complex64::new(0.0, 0.0)) {
        amplitudes.pop();
    }
    Ok(ProbeState {
        amplitudes,
        truncation_error: 0.0,
    })
}

/// Coherent state `|α⟩`, truncated at the smallest `n_max` whose
/// photon-number-weighted tail `Σ_{n>n_max} n|c_n|²` is below `tail_tol`.
///
/// Amplitudes come from the recurrence `c_{n+1} = c_n·α/√(n+1)`; tails are
/// summed from the far end so they never suffer cancellation against the
/// total.
pub fn coherent_state(alpha: Complex64, tail_tol: f64) -> Result<ProbeState> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::param(format!("tail_tol must lie in (0, 1), got {tail_tol}")));
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::param("coherent amplitude must be finite"));
    }
    let mean = alpha.norm_sqr();
    let mut amps = vec![Complex64::new((-mean / 2.0).exp(), 0.0)];
    if amps[0].re == 0.0 {
        return Err(Error::capacity(format!(
            "|alpha|^2 = {mean} underflows the vacuum amplitude"
        )));
    }
    // extend well past the mean until the remaining tail is below 1e-20
    loop {
        let n = amps.len() - 1;
        let next = amps[n] * alpha / ((n + 1) as f64).sqrt();
        amps.push(next);
        let beyond_peak = (n + 1) as f64 > mean + 1.0;
        if beyond_peak && ((n + 1) as f64 * next.norm_sqr() < 1e-22 || next.norm_sqr() == 0.0) {
            break;
        }
    }
    // weighted and plain suffix sums, accumulated from the far end
    let len = amps.len();
    let mut weighted_tail = vec![0.0; len + 1];
    let mut plain_tail = vec![0.0; len + 1];
    for n in (0..len).rev() {
        weighted_tail[n] = weighted_tail[n + 1] + n as f64 * amps[n].norm_sqr();
        plain_tail[n] = plain_tail[n + 1] + amps[n].norm_sqr();
    }
    let n_max = (0..len)
        .find(|&m| weighted_tail[m + 1] < tail_tol)
        .unwrap_or(len - 1);
    amps.truncate(n_max + 1);
    Ok(ProbeState {
        amplitudes: amps,
        truncation_error: plain_tail[n_max + 1],
    })
}

pub fn mean_photon_number(s: &ProbeState) -> f64 {
    s.branch_weights().iter().map(|&(_, w)| w).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn equal_superposition_of_vacuum_and_one_photon() {
        let s = fock_superposition(&[c(1.0), c(1.0)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - h).abs() < 1e-15);
        assert_eq!(s.truncation_error(), 0.0);
        assert!((s.mean_photon_number() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vacuum_has_no_branches() {
        let s = fock_superposition(&[c(1.0)]).unwrap();
        assert!(s.branch_weights().is_empty());
        assert_eq!(s.mean_photon_number(), 0.0);
        assert_eq!(s.highest_branch(), 0);
    }

    #[test]
    fn pure_two_photon_state() {
        let s = fock_superposition(&[c(0.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(s.branch_weights(), vec![(2, 2.0)]);
    }

    #[test]
    fn trailing_zeros_are_dropped() {
        let s = fock_superposition(&[c(1.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(s.n_max(), 1);
    }

    #[test]
    fn all_zero_is_degenerate() {
        assert!(matches!(
            fock_superposition(&[c(0.0), c(0.0)]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(fock_superposition(&[]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn coherent_vacuum() {
        let s = coherent_state(c(0.0), 1e-12).unwrap();
        assert_eq!(s.n_max(), 0);
        assert_eq!(s.mean_photon_number(), 0.0);
    }

    #[test]
    fn coherent_alpha_one_cutoff() {
        // independent Poisson tail: Σ_{n>m} n e^{-1}/n! = e^{-1} Σ_{j>=m} 1/j!
        let tail = |m: usize| -> f64 {
            let mut fact = (1..=m).map(|x| x as f64).product::<f64>();
            let mut sum = 0.0;
            for j in m..60 {
                if j > m {
                    fact *= j as f64;
                }
                sum += 1.0 / fact;
            }
            (-1.0f64).exp() * sum
        };
        let expected = (0..40).find(|&m| tail(m) < 1e-12).unwrap();
        assert_eq!(expected, 15);
        let s = coherent_state(c(1.0), 1e-12).unwrap();
        assert_eq!(s.n_max(), 15);
        assert!((s.mean_photon_number() - 1.0).abs() < 1e-12);
        let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((norm + s.truncation_error() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(coherent_state(c(1.0), 0.0).is_err());
        assert!(coherent_state(c(1.0), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn coherent_state_invariants(re in -3.0..3.0f64, im in -3.0..3.0f64, exp in 3.0..14.0f64) {
            let alpha = Complex64::new(re, im);
            let tol = 10f64.powf(-exp);
            let s = coherent_state(alpha, tol).unwrap();
            let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((norm + s.truncation_error() - 1.0).abs() < 1e-12);
            prop_assert!((s.mean_photon_number() - alpha.norm_sqr()).abs() <= tol + 1e-12);
            for (n, pair) in s.amplitudes().windows(2).enumerate() {
                let predicted = pair[0] * alpha / ((n + 1) as f64).sqrt();
                prop_assert!((pair[1] - predicted).norm() <= 1e-13 * pair[1].norm().max(1e-300));
            }
        }

        #[test]
        fn fock_normalization(coeffs in proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..8)) {
            let v: Vec<Complex64> = coeffs.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            prop_assume!(v.iter().any(|z| z.norm() > 1e-3));
            let s = fock_superposition(&v).unwrap();
            let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            let phased = s.with_global_phase(0.7);
            prop_assert!((phased.mean_photon_number() - s.mean_photon_number()).abs() < 1e-14);
        }
    }
}
