//! Numerical pipeline for products of random 4×4 symplectic transfer matrices.
//!
//! The crate builds the closed-form transfer matrices of a two-channel
//! Schrödinger cell with Bernoulli-type couplings, finds integer powers that
//! bring them near the identity (simultaneous Diophantine approximation),
//! takes closed-form matrix logarithms, certifies that the logarithms span
//! the full 10-dimensional Lie algebra 𝔰𝔭₂(ℝ), scans an energy interval for
//! the discrete set where the certificate degenerates, and estimates the
//! Lyapunov spectrum of the i.i.d. matrix cocycle by QR reorthogonalization
//! with an independent exterior-power cross-estimator.
//!
//! `no_std`-compatible (with `alloc`) when built without the default `std`
//! feature; float math is then provided by `libm` through `num-traits`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diophantine;
pub mod liealgebra;
pub mod linalg;
pub mod lyapunov;
pub mod transfer;

/// Errors shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Error {
    /// `matrix_log_series` input is outside the convergence disc ‖A−I‖ < 1.
    NormTooLarge,
    /// Energy at or below the top eigenvalue of a potential cell; the radii
    /// √(E−λ) would leave the real axis.
    EnergyBelowSpectrum,
    /// The near-identity power search hit its bound without a qualifying
    /// witness (delta too small for the given cap).
    SearchExhausted,
    /// m·r_l mod 2π is within 0.1 of π: the principal-log branch cut.
    BranchCut,
    /// |θ_l| ≥ π/2: the rounding witness is too coarse for the closed-form
    /// logarithm; the caller must improve the Diophantine witness.
    FloorParity,
    /// Combinators received logarithms computed at different energies.
    MixedEnergy,
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let msg = match self {
            Error::NormTooLarge => "matrix is outside the log-series convergence disc",
            Error::EnergyBelowSpectrum => "energy is not above the potential spectrum",
            Error::SearchExhausted => "near-identity power search exhausted its bound",
            Error::BranchCut => "power lands on the logarithm branch cut",
            Error::FloorParity => "residual angle too large for the closed-form logarithm",
            Error::MixedEnergy => "logarithms were computed at different energies",
        };
        f.write_str(msg)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
