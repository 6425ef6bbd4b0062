//! Beam-splitter algebra for the inner Mach-Zehnder (dark-port postselection)
//! and the outer time-bin interferometer.
//!
//! States live in the single-photon sector: every term has exactly one
//! occupied optical mode, a complex weight and a mechanical state. The Kerr
//! phase and the vacuum-overlap factor e^{−|α|²/2} are carried exactly
//! throughout; the familiar small-α expressions are their leading order.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quantum::{coherent_overlap, fock_expand, CoherentLabel, CouplingParams, FockVector};
use crate::tolerances::{JOINT_NORM, PROTOCOL_KAPPA_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpticalMode {
    CavityA,
    CavityB,
    /// bright output of the inner interferometer
    InnerBright,
    /// dark output of the inner interferometer
    InnerDark,
    Delay1,
    Delay2,
    ShortPath,
    DetectorD1,
    DetectorD2,
}

/// Mechanical part of a joint-state term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MechState {
    Coherent(CoherentLabel),
    /// number state |n⟩
    Number(u32),
}

impl MechState {
    pub fn vacuum() -> Self {
        MechState::Coherent(CoherentLabel::vacuum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTerm {
    pub mode: OpticalMode,
    pub weight: Complex64,
    pub mech: MechState,
}

/// Photon ⊗ mechanics state as a list of single-photon terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    terms: Vec<JointTerm>,
    normalized: bool,
}

impl JointState {
    /// Canonicalises `terms` (merging equal `(mode, mech)` pairs and dropping
    /// zero weights). With `normalized` set, Σ|w|² must be 1 within
    /// [`JOINT_NORM`].
    pub fn new(terms: Vec<JointTerm>, normalized: bool) -> Result<Self> {
        let mut merged: Vec<JointTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if !(t.weight.re.is_finite() && t.weight.im.is_finite()) {
                return Err(Error::MalformedState("non-finite weight".into()));
            }
            match merged.iter_mut().find(|m| m.mode == t.mode && m.mech == t.mech) {
                Some(m) => m.weight += t.weight,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.weight.norm_sqr() > 0.0);

        let state = Self {
            terms: merged,
            normalized,
        };
        if normalized && (state.weight_norm_sqr() - 1.0).abs() > JOINT_NORM {
            return Err(Error::MalformedState(format!(
                "state flagged normalized but Σ|w|² = {}",
                state.weight_norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn terms(&self) -> &[JointTerm] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn weight_norm_sqr(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.norm_sqr()).sum()
    }

    pub fn terms_in(&self, mode: OpticalMode) -> impl Iterator<Item = &JointTerm> {
        self.terms.iter().filter(move |t| t.mode == mode)
    }

    /// Apply a balanced beam splitter mixing `inputs.0`, `inputs.1` into
    /// `outputs.0 = (a + b)/√2`, `outputs.1 = (a − b)/√2`. Terms in other
    /// modes pass through.
    pub fn beam_splitter(
        &self,
        inputs: (OpticalMode, OpticalMode),
        outputs: (OpticalMode, OpticalMode),
    ) -> Result<JointState> {
        let mut out = Vec::with_capacity(self.terms.len() * 2);
        for t in &self.terms {
            let w = t.weight * FRAC_1_SQRT_2;
            if t.mode == inputs.0 {
                out.push(JointTerm { mode: outputs.0, weight: w, mech: t.mech });
                out.push(JointTerm { mode: outputs.1, weight: w, mech: t.mech });
            } else if t.mode == inputs.1 {
                out.push(JointTerm { mode: outputs.0, weight: w, mech: t.mech });
                out.push(JointTerm { mode: outputs.1, weight: -w, mech: t.mech });
            } else {
                out.push(*t);
            }
        }
        JointState::new(out, false)
    }
}

/// Unnormalised superposition Σ wᵢ e^{iφᵢ}|αᵢ⟩ of the mechanical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalSuperposition {
    pub terms: Vec<(Complex64, CoherentLabel)>,
}

impl MechanicalSuperposition {
    /// ‖Σ wᵢ|aᵢ⟩‖² evaluated with coherent-state overlaps.
    pub fn norm_sqr(&self) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (wi, ai) in &self.terms {
            for (wj, aj) in &self.terms {
                // conj(wi) wj ⟨ai|aj⟩
                acc += wi.conj() * wj * coherent_overlap(aj, ai);
            }
        }
        acc.re
    }

    pub fn to_fock(&self, n_trunc: usize) -> FockVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); n_trunc + 1];
        for (w, label) in &self.terms {
            for (a, c) in amps.iter_mut().zip(fock_expand(label, n_trunc).amplitudes()) {
                *a += w * c;
            }
        }
        FockVector::from_amplitudes(amps).expect("n_trunc + 1 > 0")
    }
}

/// Result of a dark-port click on the inner interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct Postselection {
    /// (e^{iφ}|α⟩ − |0⟩)/2, unnormalised
    pub branch: MechanicalSuperposition,
    pub p_success: f64,
}

/// ½(1 − e^{−|α|²/2} cos φ), the exact dark-port probability.
pub fn postselection_probability(alpha: Complex64, phase: f64) -> f64 {
    // 1 − e^{−x} cos φ = −expm1(−x) cos φ + 2 sin²(φ/2), free of cancellation at small α
    let s = (0.5 * phase).sin();
    0.5 * (-(-0.5 * alpha.norm_sqr()).exp_m1() * phase.cos() + 2.0 * s * s)
}

/// Exact dark-port probability for a photon that spent `t_c` in cavity A.
pub fn postselection_probability_at(params: &CouplingParams, t_c: f64) -> Result<f64> {
    let label = CoherentLabel::evolved(params, t_c)?;
    Ok(postselection_probability(label.alpha(), label.phase()))
}

fn check_protocol_kappa(params: &CouplingParams) -> Result<()> {
    if params.kappa >= PROTOCOL_KAPPA_MAX {
        return domain(format!(
            "kappa = {} outside the weak-coupling guard kappa < {PROTOCOL_KAPPA_MAX}",
            params.kappa
        ));
    }
    Ok(())
}

/// Joint state after the first beam splitter and a residence time `t_c`:
/// `(|A⟩ e^{iφ}|α(t_c)⟩ + |B⟩|0⟩)/√2`.
pub fn state_after_interaction(params: &CouplingParams, t_c: f64) -> Result<JointState> {
    check_protocol_kappa(params)?;
    let label = CoherentLabel::evolved(params, t_c)?;
    let w = Complex64::new(FRAC_1_SQRT_2, 0.0);
    JointState::new(
        vec![
            JointTerm { mode: OpticalMode::CavityA, weight: w, mech: MechState::Coherent(label) },
            JointTerm { mode: OpticalMode::CavityB, weight: w, mech: MechState::vacuum() },
        ],
        true,
    )
}

/// Project the inner interferometer onto its dark port,
/// `ψ_f = (|1,0⟩ − |0,1⟩)/√2`.
pub fn dark_port_postselect(state: &JointState) -> Result<Postselection> {
    let pick = |mode: OpticalMode| -> Result<(Complex64, CoherentLabel)> {
        let mut it = state.terms_in(mode);
        match (it.next(), it.next()) {
            (Some(JointTerm { weight, mech: MechState::Coherent(label), .. }), None) => Ok((*weight, *label)),
            _ => Err(Error::MalformedState(format!(
                "expected exactly one coherent term in {mode:?}"
            ))),
        }
    };
    if state.terms().len() != 2 {
        return Err(Error::MalformedState(format!(
            "expected two terms (cavity A and B), found {}",
            state.terms().len()
        )));
    }
    let (wa, la) = pick(OpticalMode::CavityA)?;
    let (wb, lb) = pick(OpticalMode::CavityB)?;

    let mixed = state.beam_splitter(
        (OpticalMode::CavityA, OpticalMode::CavityB),
        (OpticalMode::InnerBright, OpticalMode::InnerDark),
    )?;
    let mut terms: Vec<(Complex64, CoherentLabel)> = mixed
        .terms_in(OpticalMode::InnerDark)
        .map(|t| match t.mech {
            MechState::Coherent(l) => (t.weight, l),
            MechState::Number(_) => unreachable!("inputs are coherent"),
        })
        .collect();
    if terms.is_empty() {
        // perfect cancellation; keep the two-term shape with the labels
        terms = vec![(Complex64::new(0.0, 0.0), la), (Complex64::new(0.0, 0.0), lb)];
    }
    let branch = MechanicalSuperposition { terms };
    let p_success = dark_norm_sqr(wa, &la, wb, &lb);
    Ok(Postselection { branch, p_success })
}

/// ‖(w_a|a⟩ − w_b|b⟩)/√2‖² written as
/// ½[(|w_a| − |w_b|)² + 2|w_a||w_b|(1 − Re(e^{iψ}⟨b|a⟩))], ψ = arg(w_b* w_a),
/// with 1 − Re(·) evaluated without cancellation.
fn dark_norm_sqr(wa: Complex64, la: &CoherentLabel, wb: Complex64, lb: &CoherentLabel) -> f64 {
    let (ma, mb) = (wa.norm(), wb.norm());
    if ma == 0.0 || mb == 0.0 {
        return 0.5 * (ma * ma + mb * mb);
    }
    let psi = (wb.conj() * wa).arg();
    let exponent = -0.5 * la.alpha().norm_sqr() - 0.5 * lb.alpha().norm_sqr() + lb.alpha().conj() * la.alpha();
    let theta = psi + la.phase() - lb.phase() + exponent.im;
    let half = (0.5 * theta).sin();
    let one_minus_re = -exponent.re.exp_m1() * theta.cos() + 2.0 * half * half;
    0.5 * ((ma - mb).powi(2) + 2.0 * ma * mb * one_minus_re)
}

/// Entangled state after the early component has passed the inner
/// interferometer: a large delay-1 term with the mechanics in |0⟩ and the
/// one-phonon part of the postselected branch in delay-2,
/// `(α/2)e^{iφ}e^{−|α|²/2}/√2`.
pub fn timebin_state_after_early_pass(params: &CouplingParams, t_c: f64) -> Result<JointState> {
    check_protocol_kappa(params)?;
    let label = CoherentLabel::evolved(params, t_c)?;
    let one_phonon = label.alpha()
        * 0.5
        * Complex64::from_polar((-0.5 * label.alpha().norm_sqr()).exp(), label.phase());
    JointState::new(
        vec![
            JointTerm {
                mode: OpticalMode::Delay1,
                weight: Complex64::new(FRAC_1_SQRT_2, 0.0),
                mech: MechState::vacuum(),
            },
            JointTerm {
                mode: OpticalMode::Delay2,
                weight: one_phonon * FRAC_1_SQRT_2,
                mech: MechState::Number(1),
            },
        ],
        false,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoherenceForm {
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceSpec {
    /// 1/e coherence time, s
    pub tau_dec: f64,
    pub form: DecoherenceForm,
}

impl DecoherenceSpec {
    pub fn exponential(tau_dec: f64) -> Result<Self> {
        if !(tau_dec > 0.0) {
            return domain(format!("tau_dec must be positive, got {tau_dec}"));
        }
        Ok(Self {
            tau_dec,
            form: DecoherenceForm::Exponential,
        })
    }

    /// Surviving off-diagonal factor after a delay `tau_d`.
    pub fn coherence(&self, tau_d: f64) -> Result<f64> {
        if !(tau_d >= 0.0) {
            return domain(format!("tau_d must be non-negative, got {tau_d}"));
        }
        Ok(match self.form {
            DecoherenceForm::Exponential => (-tau_d / self.tau_dec).exp(),
        })
    }
}

/// Decoherence leaves the term weights alone and returns the factor that
/// multiplies every cross term between distinct mechanical labels.
pub fn apply_decoherence(state: &JointState, spec: &DecoherenceSpec, tau_d: f64) -> Result<(JointState, f64)> {
    let d = spec.coherence(tau_d)?;
    Ok((state.clone(), d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeOutcome {
    pub p_d1: f64,
    pub p_d2: f64,
    /// fringe contrast over a full phase sweep at these settings
    pub visibility: f64,
}

/// B = 2√(s_e s_l)/(s_e + s_l); 1 for balanced arms.
pub fn balance_factor(survival_early: f64, survival_late: f64) -> f64 {
    let sum = survival_early + survival_late;
    if sum <= 0.0 {
        return 0.0;
    }
    2.0 * (survival_early * survival_late).sqrt() / sum
}

fn check_probability(name: &str, p: f64, closed_top: bool) -> Result<()> {
    let ok = p >= 0.0 && if closed_top { p <= 1.0 } else { p < 1.0 };
    if !ok {
        return domain(format!("{name} = {p} out of range"));
    }
    Ok(())
}

/// Detection probabilities at the two outer detectors for a photon that
/// spent `t_c` in the cavity, with variable phase `phase` on the early arm.
///
/// Each arm carries amplitude 1/√2 times the postselected branch, attenuated
/// by its survival probability; the cross term is scaled by `coherence`.
pub fn final_fringe(
    params: &CouplingParams,
    t_c: f64,
    phase: f64,
    coherence: f64,
    loss_early: f64,
    loss_late: f64,
) -> Result<FringeOutcome> {
    check_probability("coherence", coherence, true)?;
    check_probability("loss_early", loss_early, false)?;
    check_probability("loss_late", loss_late, false)?;
    check_protocol_kappa(params)?;

    let p_success = postselection_probability_at(params, t_c)?;
    let s_e = 1.0 - loss_early;
    let s_l = 1.0 - loss_late;
    let b = balance_factor(s_e, s_l);
    let w = p_success * 0.5 * (s_e + s_l);
    let contrast = b * coherence;
    let fringe = contrast * phase.cos();
    Ok(FringeOutcome {
        p_d1: 0.5 * w * (1.0 + fringe),
        p_d2: 0.5 * w * (1.0 - fringe),
        visibility: contrast,
    })
}

/// Evaluate [`final_fringe`] at each phase and measure the D1 contrast
/// (max − min)/(max + min) directly from the sweep.
pub fn fringe_sweep(
    params: &CouplingParams,
    t_c: f64,
    phases: &[f64],
    coherence: f64,
    loss_early: f64,
    loss_late: f64,
) -> Result<(Vec<FringeOutcome>, f64)> {
    if phases.is_empty() {
        return domain("phase sweep needs at least one phase");
    }
    let outcomes = phases
        .iter()
        .map(|&ph| final_fringe(params, t_c, ph, coherence, loss_early, loss_late))
        .collect::<Result<Vec<_>>>()?;
    let max = outcomes.iter().map(|o| o.p_d1).fold(f64::NEG_INFINITY, f64::max);
    let min = outcomes.iter().map(|o| o.p_d1).fold(f64::INFINITY, f64::min);
    let vis = if max + min > 0.0 { (max - min) / (max + min) } else { 0.0 };
    Ok((outcomes, vis))
}

/// Visibility versus delay for a fixed pair of branch losses.
pub fn sweep_visibility(
    params: &CouplingParams,
    t_c: f64,
    spec: &DecoherenceSpec,
    tau_d_grid: &[f64],
    loss_early: f64,
    loss_late: f64,
) -> Result<Vec<(f64, f64)>> {
    if tau_d_grid.is_empty() {
        return domain("delay grid must be non-empty");
    }
    if tau_d_grid.windows(2).any(|w| w[1] < w[0]) {
        return domain("delay grid must be ascending");
    }
    tau_d_grid
        .iter()
        .map(|&tau_d| {
            let d = spec.coherence(tau_d)?;
            let f = final_fringe(params, t_c, 0.0, d, loss_early, loss_late)?;
            Ok((tau_d, f.visibility))
        })
        .collect()
}
