//! Exact simulation of a transmission-line-resonator probe coupled to a
//! transverse-field Ising chain.
//!
//! The chain is solved as free fermions ([`tfim`]); each resonator photon
//! number `n` shifts the transverse field, and the resonator's first-order
//! correlation function is a weighted sum of Loschmidt-echo overlaps
//! between neighbouring branches ([`decoherence`]). The [`spectrum`] module
//! assembles `S(t)` and `S(ω)` and measures how broad the spectrum is; the
//! [`oracle`] module re-derives the same quantities by dense exact
//! diagonalization for small chains.

pub mod cli;
pub mod decoherence;
pub mod error;
pub mod model;
pub mod oracle;
pub mod probe;
pub mod spectrum;
pub mod tfim;

pub use decoherence::{decoherence_factor, enumerate_lines, mode_coefficients, mode_factor, BranchPair, LineSet, ModeCoefficients, SpectralLine};
pub use error::{Error, Result};
pub use model::{derive_chain_params, ChainParams, DerivedReport, PhysicalParams};
pub use probe::{coherent_state, fock_superposition, mean_photon_number, ProbeState};
pub use spectrum::{
    auto_time_grid, broadening_metrics, correlation_series, decay_time, dominant_peak, far_field_check, spectrum_analytic,
    spectrum_fft, BroadeningMetrics, CorrelationSeries, Correlator, FarFieldReport, PeakReport, Spectrum, TimeGrid,
};
pub use tfim::{bogoliubov_angle, build_mode_table, dispersion, momentum_grid, ModeTable};
