//! Dimensionless chain parameters and the mapping from circuit quantities.
//!
//! Every energy downstream of this module is measured in units of the
//! nearest-neighbour Ising coupling `B`, every time in units of `1/B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One simulation instance: `N` qubits, transverse-field ratio `λ = B_x/B`,
/// probe coupling `g/B` and resonator decay `Γ/B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub n_sites: usize,
    pub lambda: f64,
    pub g_over_b: f64,
    pub gamma_over_b: f64,
}

impl ChainParams {
    pub fn new(n_sites: usize, lambda: f64, g_over_b: f64, gamma_over_b: f64) -> Result<Self> {
        let params = Self {
            n_sites,
            lambda,
            g_over_b,
            gamma_over_b,
        };
        params.validate()?;
        Ok(params)
    }

    /// Returns every violated invariant, each prefixed with its field name.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            out.push(format!(
                "n_sites: must be an even integer >= 2, got {}",
                self.n_sites
            ));
        }
        for (name, value) in [
            ("lambda", self.lambda),
            ("g_over_b", self.g_over_b),
            ("gamma_over_b", self.gamma_over_b),
        ] {
            if !value.is_finite() || value < 0.0 {
                out.push(format!("{name}: must be finite and non-negative, got {value}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().as_slice() {
            [] => Ok(()),
            v => Err(Error::Parameter(v.join("; "))),
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    pub fn with_n_sites(&self, n_sites: usize) -> Self {
        Self { n_sites, ..*self }
    }

    /// Transverse field seen by the chain while the resonator holds `n`
    /// photons.
    pub fn branch_lambda(&self, n: usize) -> f64 {
        branch_lambda(self, n)
    }
}

/// `λ_n = λ − (2n+1)·g/B`. Negative values are legitimate.
pub fn branch_lambda(params: &ChainParams, n: usize) -> f64 {
    params.lambda - (2 * n + 1) as f64 * params.g_over_b
}

const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
const PLANCK: f64 = 6.626_070_15e-34;
const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

/// Nearest-neighbour coupling quoted alongside the reference capacitances
/// (600 aF total, 30 aF mutual), in GHz.
pub const QUOTED_B_GHZ: f64 = 1.6;

/// Below this ratio of resonator frequency to chain energy scale the
/// rotating-wave approximation is flagged.
const RWA_MARGIN: f64 = 10.0;

/// Laboratory description of the qubit array and resonator.
///
/// Units: `e_j`, `omega` (ω/2π) and `gamma` in GHz; capacitances in aF;
/// `tlr_length` in cm; `squid_area` in μm²; `distance` in μm;
/// `inductance_per_length` in H/m; `flux_bias` in units of Φ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub n_sites: usize,
    pub e_j: f64,
    pub c_sigma: f64,
    pub c_m: f64,
    pub tlr_length: f64,
    pub squid_area: f64,
    pub distance: f64,
    pub inductance_per_length: f64,
    pub omega: f64,
    pub flux_bias: f64,
    pub gamma: f64,
    /// Use this dimensionless flux amplitude instead of evaluating it from
    /// the resonator geometry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

/// Intermediate quantities of [`derive_chain_params`], all energies in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedReport {
    pub b_ghz: f64,
    pub b_quoted_ghz: f64,
    /// `b_ghz / b_quoted_ghz`; about 2 for the reference capacitances.
    pub b_ratio_to_quoted: f64,
    pub b_x_ghz: f64,
    pub eta: f64,
    pub eta_from_geometry: bool,
    pub g_ghz: f64,
    pub gamma_ghz: f64,
    pub lambda: f64,
    pub g_over_b: f64,
    pub gamma_over_b: f64,
    pub warnings: Vec<String>,
}

/// Dimensionless amplitude of the resonator flux threading one SQUID, as a
/// phase `π·Φ/Φ₀`.
pub fn flux_amplitude(p: &PhysicalParams) -> f64 {
    let area = p.squid_area * 1e-12;
    let distance = p.distance * 1e-6;
    let length = p.tlr_length * 1e-2;
    let omega = 2.0 * std::f64::consts::PI * p.omega * 1e9;
    let flux = (area / distance) * (HBAR * p.inductance_per_length * omega / length).sqrt();
    std::f64::consts::PI * flux / FLUX_QUANTUM
}

pub fn derive_chain_params(p: &PhysicalParams) -> Result<(ChainParams, DerivedReport)> {
    let positive = [
        ("e_j", p.e_j),
        ("c_sigma", p.c_sigma),
        ("c_m", p.c_m),
        ("tlr_length", p.tlr_length),
        ("squid_area", p.squid_area),
        ("distance", p.distance),
        ("inductance_per_length", p.inductance_per_length),
        ("omega", p.omega),
        ("gamma", p.gamma),
    ];
    let mut bad: Vec<String> = positive
        .iter()
        .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
        .map(|(name, v)| format!("{name} must be positive, got {v}"))
        .collect();
    if !(0.0..=0.5).contains(&p.flux_bias) {
        bad.push(format!("flux_bias must lie in [0, 1/2], got {}", p.flux_bias));
    }
    if let Some(eta) = p.eta {
        if !(eta.is_finite() && eta >= 0.0) {
            bad.push(format!("eta must be finite and non-negative, got {eta}"));
        }
    }
    if !bad.is_empty() {
        return Err(Error::Parameter(bad.join("; ")));
    }
    if p.c_m >= p.c_sigma {
        return Err(Error::Validity(format!(
            "nearest-neighbour truncation needs c_m < c_sigma, got c_m={} aF, c_sigma={} aF",
            p.c_m, p.c_sigma
        )));
    }

    let c_m = p.c_m * 1e-18;
    let c_sigma = p.c_sigma * 1e-18;
    let b_ghz = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * c_m / (c_sigma * c_sigma) / PLANCK / 1e9;
    let b_x_ghz = p.e_j * (std::f64::consts::PI * p.flux_bias).cos() / 2.0;
    // cos(π/2) is 6e-17, not zero
    let b_x_ghz = if b_x_ghz.abs() < 1e-15 * p.e_j { 0.0 } else { b_x_ghz };
    let (eta, eta_from_geometry) = match p.eta {
        Some(eta) => (eta, false),
        None => (flux_amplitude(p), true),
    };
    let g_ghz = eta * p.e_j;

    let mut warnings = Vec::new();
    let scale = b_ghz.max(b_x_ghz);
    if p.omega < RWA_MARGIN * scale {
        warnings.push(format!(
            "rotating-wave regime is marginal: omega={} GHz is less than {}x max(B, B_x)={} GHz",
            p.omega, RWA_MARGIN, scale
        ));
    }

    let chain = ChainParams::new(p.n_sites, b_x_ghz / b_ghz, g_ghz / b_ghz, p.gamma / b_ghz)?;
    let report = DerivedReport {
        b_ghz,
        b_quoted_ghz: QUOTED_B_GHZ,
        b_ratio_to_quoted: b_ghz / QUOTED_B_GHZ,
        b_x_ghz,
        eta,
        eta_from_geometry,
        g_ghz,
        gamma_ghz: p.gamma,
        lambda: chain.lambda,
        g_over_b: chain.g_over_b,
        gamma_over_b: chain.gamma_over_b,
        warnings,
    };
    Ok((chain, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> PhysicalParams {
        PhysicalParams {
            n_sites: 500,
            e_j: 13.0,
            c_sigma: 600.0,
            c_m: 30.0,
            tlr_length: 1.0,
            squid_area: 10.0,
            distance: 1.0,
            inductance_per_length: 4e-7,
            omega: 120.0,
            flux_bias: 0.3,
            gamma: 0.0063,
            eta: Some(0.01),
        }
    }

    #[test]
    fn coupling_from_quoted_eta() {
        let (_, report) = derive_chain_params(&reference()).unwrap();
        assert!((report.g_ghz - 0.13).abs() < 1e-12);
        assert!(!report.eta_from_geometry);
    }

    #[test]
    fn half_flux_quantum_switches_off_transverse_field() {
        let p = PhysicalParams {
            flux_bias: 0.5,
            ..reference()
        };
        let (chain, report) = derive_chain_params(&p).unwrap();
        assert_eq!(report.b_x_ghz, 0.0);
        assert_eq!(chain.lambda, 0.0);
    }

    #[test]
    fn coulomb_scale_is_evaluated_as_printed() {
        // e²C_m/C_Σ² converted to GHz, computed independently here
        let e = 1.602_176_634e-19_f64;
        let h = 6.626_070_15e-34_f64;
        let expected = e * e * 30e-18 / (600e-18 * 600e-18) / h / 1e9;
        let (_, report) = derive_chain_params(&reference()).unwrap();
        assert!((report.b_ghz - expected).abs() < 1e-12 * expected);
        assert!((report.b_ghz - 3.2284).abs() < 1e-3);
        assert!((report.b_ratio_to_quoted - expected / 1.6).abs() < 1e-12);
    }

    #[test]
    fn geometry_eta_is_used_without_override() {
        let p = PhysicalParams {
            eta: None,
            ..reference()
        };
        let (_, report) = derive_chain_params(&p).unwrap();
        assert!(report.eta_from_geometry);
        assert!(report.eta > 0.0 && report.eta < 1.0);
        assert_eq!(report.eta, flux_amplitude(&p));
    }

    #[test]
    fn rejects_bad_physical_inputs() {
        let p = PhysicalParams {
            e_j: -1.0,
            ..reference()
        };
        assert!(matches!(derive_chain_params(&p), Err(Error::Parameter(_))));
        let p = PhysicalParams {
            c_m: 600.0,
            ..reference()
        };
        assert!(matches!(derive_chain_params(&p), Err(Error::Validity(_))));
        let p = PhysicalParams {
            flux_bias: 0.7,
            ..reference()
        };
        assert!(matches!(derive_chain_params(&p), Err(Error::Parameter(_))));
    }

    #[test]
    fn warns_outside_rotating_wave_regime() {
        let p = PhysicalParams {
            omega: 5.0,
            ..reference()
        };
        let (_, report) = derive_chain_params(&p).unwrap();
        assert_eq!(report.warnings.len(), 1);
        let (_, report) = derive_chain_params(&reference()).unwrap();
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn branch_lambda_examples() {
        let p = ChainParams::new(8, 1.0, 0.0, 0.01).unwrap();
        assert_eq!(branch_lambda(&p, 7), 1.0);
        let p = ChainParams::new(8, 1.0, 0.08125, 0.01).unwrap();
        assert!((branch_lambda(&p, 0) - 0.91875).abs() < 1e-15);
    }

    #[test]
    fn chain_params_invariants() {
        assert!(ChainParams::new(3, 1.0, 0.1, 0.1).is_err());
        assert!(ChainParams::new(0, 1.0, 0.1, 0.1).is_err());
        assert!(ChainParams::new(4, -1.0, 0.1, 0.1).is_err());
        assert!(ChainParams::new(4, 1.0, f64::NAN, 0.1).is_err());
        let err = ChainParams {
            n_sites: 5,
            lambda: -1.0,
            g_over_b: 0.0,
            gamma_over_b: 0.0,
        }
        .violations();
        assert_eq!(err.len(), 2);
    }

    proptest! {
        #[test]
        fn branch_lambda_is_affine(lam in 0.0..10.0f64, g in 0.0..1.0f64, n in 1usize..50) {
            let p = ChainParams::new(4, lam, g, 0.1).unwrap();
            let step = branch_lambda(&p, n) - branch_lambda(&p, n - 1);
            prop_assert!((step + 2.0 * g).abs() < 1e-12 * (1.0 + lam + g * n as f64));
        }

        #[test]
        fn lambda_over_coupling_is_josephson_scale_free(scale in 0.1..10.0f64, flux in 0.0..0.45f64) {
            let base = PhysicalParams { flux_bias: flux, ..reference() };
            let scaled = PhysicalParams { e_j: base.e_j * scale, ..base.clone() };
            let (a, _) = derive_chain_params(&base).unwrap();
            let (b, _) = derive_chain_params(&scaled).unwrap();
            prop_assert!((b.g_over_b - scale * a.g_over_b).abs() < 1e-12 * b.g_over_b);
            let ra = a.lambda / a.g_over_b;
            let rb = b.lambda / b.g_over_b;
            prop_assert!((ra - rb).abs() <= 1e-12 * ra.abs().max(1.0));
        }
    }
}
