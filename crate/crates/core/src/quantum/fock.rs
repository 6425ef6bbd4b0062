//! Truncated number-basis representation of the mechanical mode.
//!
//! [`FockPropagator`] evolves the ground state under
//! `H/ħ = ω_m c†c − g(c + c†)` (the single-photon sector with the optical
//! energy dropped as a global phase) by diagonalising the truncated
//! Hamiltonian once and exponentiating its spectrum for every requested time.
//! It shares no code with the analytic expressions in the parent module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{CoherentLabel, CouplingParams};
use crate::error::{domain, Error, Result};
use crate::tolerances::TRUNCATION_LEAKAGE;

/// Number-basis coefficients c_0..=c_N.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
    leakage: f64,
}

impl FockVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return domain("a Fock vector needs at least one amplitude");
        }
        Ok(Self {
            amplitudes,
            leakage: 0.0,
        })
    }

    /// The number state |n⟩ in a basis truncated at `n_trunc`.
    pub fn number_state(n: usize, n_trunc: usize) -> Result<Self> {
        if n > n_trunc {
            return domain(format!("level {n} outside truncation {n_trunc}"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_trunc + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            leakage: 0.0,
        })
    }

    pub fn vacuum(n_trunc: usize) -> Self {
        Self::number_state(0, n_trunc).expect("level 0 always fits")
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_trunc(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Probability estimated to lie outside the truncated basis. For
    /// [`fock_expand`] this is the exact tail sum; for propagated states it
    /// is the population of the highest retained level.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                left: self.amplitudes.len(),
                right: other.amplitudes.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &FockVector, b: &FockVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Expand `e^{iφ}|α⟩` in the number basis up to `n_trunc`, with
/// `c_n = e^{iφ} e^{−|α|²/2} αⁿ/√(n!)`.
pub fn fock_expand(label: &CoherentLabel, n_trunc: usize) -> FockVector {
    let alpha = label.alpha();
    let mut amplitudes = Vec::with_capacity(n_trunc + 1);
    let mut c = Complex64::from_polar((-0.5 * alpha.norm_sqr()).exp(), label.phase());
    amplitudes.push(c);
    for n in 1..=n_trunc {
        c = c * alpha / (n as f64).sqrt();
        amplitudes.push(c);
    }

    // tail e^{−|α|²} Σ_{n>N} |α|^{2n}/n!, summed term by term
    let x = alpha.norm_sqr();
    let mut term = amplitudes[n_trunc].norm_sqr();
    let mut leakage = 0.0;
    let mut n = n_trunc;
    loop {
        n += 1;
        term *= x / n as f64;
        leakage += term;
        if term <= leakage * f64::EPSILON || term < f64::MIN_POSITIVE {
            break;
        }
    }

    FockVector {
        amplitudes,
        leakage,
    }
}

/// Spectral propagator for one (κ, n_trunc) pair, reusable across times.
#[derive(Debug, Clone)]
pub struct FockPropagator {
    params: CouplingParams,
    /// eigenvalues of H/(ħω_m)
    energies: DVector<f64>,
    /// columns are eigenvectors
    modes: DMatrix<f64>,
}

impl FockPropagator {
    pub fn new(params: CouplingParams, n_trunc: usize) -> Result<Self> {
        if n_trunc == 0 {
            return domain("n_trunc must be at least 1 to audit truncation leakage");
        }
        let dim = n_trunc + 1;
        // H/(ħω_m) = c†c − κ(c + c†), real symmetric tridiagonal
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..dim {
            h[(n, n)] = n as f64;
            if n + 1 < dim {
                let off = -params.kappa * ((n + 1) as f64).sqrt();
                h[(n, n + 1)] = off;
                h[(n + 1, n)] = off;
            }
        }
        let eig = SymmetricEigen::new(h);
        Ok(Self {
            params,
            energies: eig.eigenvalues,
            modes: eig.eigenvectors,
        })
    }

    pub fn n_trunc(&self) -> usize {
        self.energies.len() - 1
    }

    /// Evolve an arbitrary initial vector for time `t`.
    pub fn evolve(&self, initial: &FockVector, t: f64) -> Result<FockVector> {
        if !(t >= 0.0 && t.is_finite()) {
            return domain(format!("time must be finite and non-negative, got {t}"));
        }
        let dim = self.energies.len();
        if initial.amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                left: initial.amplitudes.len(),
                right: dim,
            });
        }
        let theta = self.params.omega_m * t;

        // project onto eigenbasis, apply phases, project back
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
        for (k, coeff) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                acc += self.modes[(n, k)] * initial.amplitudes[n];
            }
            *coeff = acc * Complex64::from_polar(1.0, -self.energies[k] * theta);
        }
        let amplitudes: Vec<Complex64> = (0..dim)
            .map(|n| (0..dim).map(|k| self.modes[(n, k)] * coeffs[k]).sum())
            .collect();

        let leakage = amplitudes[dim - 1].norm_sqr();
        if leakage > TRUNCATION_LEAKAGE {
            return Err(Error::Truncation {
                leakage,
                threshold: TRUNCATION_LEAKAGE,
                n_trunc: dim - 1,
            });
        }
        Ok(FockVector {
            amplitudes,
            leakage,
        })
    }

    /// Evolve the mechanical ground state for time `t`.
    pub fn evolve_ground(&self, t: f64) -> Result<FockVector> {
        self.evolve(&FockVector::vacuum(self.n_trunc()), t)
    }
}

/// Evolve the mechanical ground state by exact exponentiation of the
/// truncated Hamiltonian.
pub fn evolve_fock_oracle(params: &CouplingParams, t: f64, n_trunc: usize) -> Result<FockVector> {
    FockPropagator::new(*params, n_trunc)?.evolve_ground(t)
}
