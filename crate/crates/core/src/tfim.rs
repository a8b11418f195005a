//! Free-fermion solution of the periodic Ising chain in a transverse field.
//!
//! The chain is solved in the even fermion-parity sector, where the
//! Jordan-Wigner fermions obey antiperiodic boundary conditions and the
//! momenta are `k_m = (2m+1)π/N`. Only `k > 0` is stored; each entry stands
//! for the `(k, −k)` pair.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ChainParams;

/// Positive momenta `(2m+1)π/N`, `m = 0 … N/2−1`, in increasing order.
pub fn momentum_grid(n_sites: usize) -> Result<Vec<f64>> {
    if n_sites < 2 || n_sites % 2 != 0 {
        return Err(Error::param(format!(
            "n_sites must be an even integer >= 2, got {n_sites}"
        )));
    }
    let n = n_sites as f64;
    Ok((0..n_sites / 2)
        .map(|m| (2 * m + 1) as f64 * std::f64::consts::PI / n)
        .collect())
}

/// Quasiparticle energy `ε_k(λ) = 2√(1 + λ² − 2λ cos k)` in units of `B`.
///
/// Evaluated as `2·hypot(λ − cos k, sin k)`, which avoids the cancellation
/// of the expanded radicand near the gap closing at `λ = 1, k → 0`.
pub fn dispersion(k: f64, lam: f64) -> f64 {
    2.0 * (lam - k.cos()).hypot(k.sin())
}

/// Bogoliubov angle with `tan θ_k = sin k / (λ − cos k)`, taken from the
/// two-argument arctangent so that `θ_k ∈ [0, π]` varies continuously in λ.
pub fn bogoliubov_angle(k: f64, lam: f64) -> f64 {
    k.sin().atan2(lam - k.cos())
}

/// Single-particle data for one photon-number branch `H_n = ĥ(λ_n)`.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub n: usize,
    pub lambda: f64,
    pub epsilon: Vec<f64>,
    pub theta: Vec<f64>,
    /// Pseudo-spin mixing angle `α_nk = (θ_nk − θ_k(λ))/2`, measured against
    /// the uncoupled chain whose ground state is the initial state.
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeTable {
    n_sites: usize,
    lambda: f64,
    momenta: Vec<f64>,
    theta_ref: Vec<f64>,
    branches: Vec<Branch>,
}

impl ModeTable {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Transverse field of the uncoupled chain.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn n_modes(&self) -> usize {
        self.momenta.len()
    }

    /// `θ_k(λ)` of the uncoupled chain.
    pub fn reference_theta(&self) -> &[f64] {
        &self.theta_ref
    }

    /// Highest photon number covered by the table.
    pub fn n_max(&self) -> usize {
        self.branches.len() - 1
    }

    pub fn branch(&self, n: usize) -> Result<&Branch> {
        self.branches.get(n).ok_or(Error::MissingBranch(n))
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }
}

/// Tabulates `ε_nk`, `θ_nk` and `α_nk` for branches `n = 0 … n_max`.
pub fn build_mode_table(params: &ChainParams, n_max: usize) -> Result<ModeTable> {
    params.validate()?;
    if n_max < 1 {
        return Err(Error::param("mode table needs n_max >= 1"));
    }
    let momenta = momentum_grid(params.n_sites)?;
    let theta_ref: Vec<f64> = momenta
        .iter()
        .map(|&k| bogoliubov_angle(k, params.lambda))
        .collect();
    let branches = (0..=n_max)
        .map(|n| {
            let lambda = params.branch_lambda(n);
            let epsilon = momenta.iter().map(|&k| dispersion(k, lambda)).collect();
            let theta: Vec<f64> = momenta
                .iter()
                .map(|&k| bogoliubov_angle(k, lambda))
                .collect();
            let alpha = theta
                .iter()
                .zip(&theta_ref)
                .map(|(t, t0)| 0.5 * (t - t0))
                .collect();
            Branch {
                n,
                lambda,
                epsilon,
                theta,
                alpha,
            }
        })
        .collect();
    Ok(ModeTable {
        n_sites: params.n_sites,
        lambda: params.lambda,
        momenta,
        theta_ref,
        branches,
    })
}
