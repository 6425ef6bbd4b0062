//! Coherent-state algebra and single-photon optomechanical evolution.
//!
//! With one photon in the cavity the mechanical mode, starting from its
//! ground state, follows a closed orbit
//!
//! ```text
//! |ψ(t)⟩ = e^{iφ(t)} |α(t)⟩,   α(t) = κ(1 − e^{−iω_m t}),   φ(t) = κ²(ω_m t − sin ω_m t)
//! ```
//!
//! [`fock`] holds an independent number-basis propagator for the same
//! Hamiltonian, used to check these expressions.

pub mod fock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::tolerances::WEAK_COUPLING_ALPHA;

pub use fock::{evolve_fock_oracle, fidelity, fock_expand, FockPropagator, FockVector};

/// Complex amplitude used throughout the state algebra.
pub type ComplexAmplitude = Complex64;

/// Single-photon coupling of a mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// κ = g/ω_m
    pub kappa: f64,
    /// mechanical angular frequency, rad/s
    pub omega_m: f64,
}

impl CouplingParams {
    pub fn new(kappa: f64, omega_m: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return domain(format!("kappa must be finite and non-negative, got {kappa}"));
        }
        if !(omega_m > 0.0 && omega_m.is_finite()) {
            return domain(format!("omega_m must be positive, got {omega_m}"));
        }
        Ok(Self { kappa, omega_m })
    }

    /// Mechanical period 2π/ω_m in seconds.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_m
    }
}

/// A coherent state carrying an accumulated phase, `e^{i·phase}|alpha⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel {
    alpha: Complex64,
    phase: f64,
}

impl CoherentLabel {
    /// Builds a label inside the weak-coupling regime, rejecting |α| ≥ 1.
    pub fn new(alpha: Complex64, phase: f64) -> Result<Self> {
        if !(alpha.norm() < WEAK_COUPLING_ALPHA) {
            return domain(format!(
                "|alpha| = {} violates the weak-coupling guard |alpha| < {WEAK_COUPLING_ALPHA}",
                alpha.norm()
            ));
        }
        Ok(Self { alpha, phase })
    }

    /// Builds a label without the weak-coupling guard. Useful for plain
    /// coherent-state algebra outside the protocol.
    pub fn new_unchecked(alpha: Complex64, phase: f64) -> Self {
        Self { alpha, phase }
    }

    pub fn vacuum() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            phase: 0.0,
        }
    }

    /// Mechanical state after the photon has spent time `t` in the cavity.
    pub fn evolved(params: &CouplingParams, t: f64) -> Result<Self> {
        Self::new(displacement_at(params, t)?, kerr_phase_at(params, t)?)
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn is_vacuum(&self) -> bool {
        self.alpha == Complex64::new(0.0, 0.0) && self.phase == 0.0
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and non-negative, got {t}"));
    }
    Ok(())
}

/// α(t) = κ(1 − e^{−iω_m t}).
pub fn displacement_at(params: &CouplingParams, t: f64) -> Result<Complex64> {
    check_time(t)?;
    let theta = params.omega_m * t;
    Ok(params.kappa * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -theta)))
}

/// φ(t) = κ²(ω_m t − sin ω_m t).
pub fn kerr_phase_at(params: &CouplingParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let theta = params.omega_m * t;
    Ok(params.kappa * params.kappa * (theta - theta.sin()))
}

/// Inner product ⟨b|a⟩ of two phased coherent states,
/// `e^{i(φ_a − φ_b)} exp(−|α_a|²/2 − |α_b|²/2 + α_b* α_a)`.
pub fn coherent_overlap(a: &CoherentLabel, b: &CoherentLabel) -> Complex64 {
    let exponent = -0.5 * a.alpha.norm_sqr() - 0.5 * b.alpha.norm_sqr() + b.alpha.conj() * a.alpha;
    Complex64::from_polar(1.0, a.phase - b.phase) * exponent.exp()
}
