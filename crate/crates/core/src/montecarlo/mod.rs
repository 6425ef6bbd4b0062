//! Seeded Monte Carlo of complete experimental runs.
//!
//! Every injected photon is an independent trial. Its random numbers come
//! from a ChaCha8 stream selected by the trial index, so a run is a pure
//! function of (configuration, seed) no matter how trials are scheduled
//! across threads. Per trial: draw the cavity residence time, draw the
//! detection outcome from the exact fringe probabilities, add detector
//! jitter, and superimpose Poisson dark counts in the 1/Γ_c window that
//! opens at τ_d.

mod estimate;
pub mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrival::ArrivalHistogram;
use crate::device::{delay_line_survival, derive, DelayLineSpec, DerivedDevice, DeviceParams};
use crate::error::{Error, Result};
use crate::interferometer::{final_fringe, DecoherenceSpec};
use crate::tolerances::{INJECTION_RATE_MAX_GAMMA, PROTOCOL_KAPPA_MAX};

pub use estimate::{
    arrival_oscillation_check, data_collection_estimate, estimate_visibility, CollectionEstimate, LimitingFactor,
    OscillationReport, VisibilityEstimate, MIN_OSCILLATION_COUNTS,
};

/// Trials handled by one parallel work item.
const CHUNK: u64 = 4096;

pub const DEFAULT_DETECTOR_JITTER: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub device: DeviceParams,
    pub decoherence: DecoherenceSpec,
    /// delay of each outer-interferometer arm, s
    pub tau_d: f64,
    pub delay_line: DelayLineSpec,
    pub phase_settings: Vec<f64>,
    /// photons per second; `None` means Γ_c/10
    pub injection_rate: Option<f64>,
    /// total dark-count rate of both detectors, 1/s
    pub dark_rate: f64,
    /// Gaussian timing jitter (1σ), s
    pub detector_jitter: f64,
    pub detector_efficiency: f64,
    pub n_photons: u64,
    pub seed: u64,
    /// replaces the derived κ
    pub kappa_override: Option<f64>,
    /// replaces Γ_c so that ω_m/Γ_c takes this value
    pub sideband_ratio_override: Option<f64>,
}

impl ExperimentConfig {
    /// Lossless, dark-count-free run with eight equally spaced phases.
    pub fn new(device: DeviceParams, decoherence: DecoherenceSpec) -> Self {
        Self {
            device,
            decoherence,
            tau_d: 0.0,
            delay_line: DelayLineSpec::lossless(),
            phase_settings: equally_spaced_phases(8),
            injection_rate: None,
            dark_rate: 0.0,
            detector_jitter: DEFAULT_DETECTOR_JITTER,
            detector_efficiency: 1.0,
            n_photons: 1_000_000,
            seed: 0,
            kappa_override: None,
            sideband_ratio_override: None,
        }
    }

    /// Checks the invariants and computes the per-run constants.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let cfg = |msg: String| Err(Error::Config(msg));
        let mut device = derive(&self.device)?;
        if let Some(k) = self.kappa_override {
            device = device.with_kappa(k)?;
        }
        if let Some(r) = self.sideband_ratio_override {
            device = device.with_sideband_ratio(r)?;
        }
        if device.kappa >= PROTOCOL_KAPPA_MAX {
            return cfg(format!("kappa = {} outside the weak-coupling regime", device.kappa));
        }
        if self.n_photons == 0 {
            return cfg("n_photons must be at least 1".into());
        }
        if self.phase_settings.is_empty() || self.phase_settings.iter().any(|p| !p.is_finite()) {
            return cfg("phase settings must be non-empty and finite".into());
        }
        let max_rate = INJECTION_RATE_MAX_GAMMA * device.gamma_c;
        let injection_rate = self.injection_rate.unwrap_or(max_rate);
        if !(injection_rate > 0.0 && injection_rate <= max_rate * (1.0 + 1e-12)) {
            return cfg(format!(
                "injection rate {injection_rate} must lie in (0, Γ_c/10 = {max_rate}]"
            ));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return cfg(format!("dark rate must be non-negative, got {}", self.dark_rate));
        }
        if !(self.detector_jitter >= 0.0 && self.detector_jitter.is_finite()) {
            return cfg(format!("jitter must be non-negative, got {}", self.detector_jitter));
        }
        if !(0.0..=1.0).contains(&self.detector_efficiency) {
            return cfg(format!("efficiency must lie in [0, 1], got {}", self.detector_efficiency));
        }
        if !(self.tau_d >= 0.0 && self.tau_d.is_finite()) {
            return cfg(format!("tau_d must be non-negative, got {}", self.tau_d));
        }
        let survival = delay_line_survival(&self.delay_line, self.tau_d)?.survival;
        let coherence = self.decoherence.coherence(self.tau_d)?;
        Ok(ResolvedExperiment {
            device,
            injection_rate,
            survival,
            coherence,
        })
    }
}

pub fn equally_spaced_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect()
}

/// Quantities fixed for a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedExperiment {
    pub device: DerivedDevice,
    pub injection_rate: f64,
    /// survival probability through one delay line
    pub survival: f64,
    /// off-diagonal factor after τ_d
    pub coherence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Signal,
    Dark,
}

/// One detector click. Times are measured from photon injection, so a signal
/// photon with residence time t_c arrives at τ_d + t_c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    #[serde(rename = "arrival_time_s")]
    pub arrival_time: f64,
    pub detector: Detector,
    #[serde(rename = "phase_rad")]
    pub phase: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseHistograms {
    pub phase: f64,
    /// D1 arrivals, binned in t − τ_d
    pub d1: ArrivalHistogram,
    pub d2: ArrivalHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub device: String,
    pub n_photons: u64,
    pub kappa: f64,
    pub gamma_c: f64,
    pub omega_m: f64,
    pub tau_d: f64,
    pub coherence: f64,
    pub survival: f64,
    /// analytic overall postselection probability per photon
    pub expected_success_probability: f64,
    /// detected signal photons
    pub success_count: u64,
    pub dark_count: u64,
    /// all detector clicks
    pub wall_events: u64,
    /// n_photons / injection rate, s
    pub wall_time_s: f64,
    pub histograms: Vec<PhaseHistograms>,
    pub visibility: Option<VisibilityEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<TrialRecord>,
}

struct TrialContext<'a> {
    config: &'a ExperimentConfig,
    run: &'a ResolvedExperiment,
    base_rng: ChaCha8Rng,
    residence: Exp<f64>,
    jitter: Option<Normal<f64>>,
    dark: Option<Poisson<f64>>,
}

impl TrialContext<'_> {
    fn run_trial(&self, index: u64, out: &mut Vec<TrialRecord>) -> Result<()> {
        let mut rng = self.base_rng.clone();
        rng.set_stream(index);

        let phase = self.config.phase_settings[(index % self.config.phase_settings.len() as u64) as usize];
        let tau_d = self.config.tau_d;
        let t_c = self.residence.sample(&mut rng);
        let loss = 1.0 - self.run.survival;
        let fringe = final_fringe(&self.run.device.coupling(), t_c, phase, self.run.coherence, loss, loss)?;
        let eta = self.config.detector_efficiency;
        let u: f64 = rng.random();
        let detector = if u < eta * fringe.p_d1 {
            Some(Detector::D1)
        } else if u < eta * (fringe.p_d1 + fringe.p_d2) {
            Some(Detector::D2)
        } else {
            None
        };
        if let Some(detector) = detector {
            let jitter = self.jitter.map_or(0.0, |n| n.sample(&mut rng));
            out.push(TrialRecord {
                trial_index: index,
                arrival_time: (tau_d + t_c + jitter).max(tau_d),
                detector,
                phase,
                origin: Origin::Signal,
            });
        }

        if let Some(dark) = self.dark {
            let n = dark.sample(&mut rng) as u64;
            let window = 1.0 / self.run.device.gamma_c;
            for _ in 0..n {
                let t = tau_d + window * rng.random::<f64>();
                let detector = if rng.random::<bool>() { Detector::D1 } else { Detector::D2 };
                out.push(TrialRecord {
                    trial_index: index,
                    arrival_time: t,
                    detector,
                    phase,
                    origin: Origin::Dark,
                });
            }
        }
        Ok(())
    }
}

/// Run on the global rayon pool.
pub fn simulate_run(config: &ExperimentConfig) -> Result<RunOutput> {
    let run = config.resolve()?;
    let gamma = run.device.gamma_c;
    let ctx = TrialContext {
        config,
        run: &run,
        base_rng: ChaCha8Rng::seed_from_u64(config.seed),
        residence: Exp::new(gamma).map_err(|e| Error::Config(e.to_string()))?,
        jitter: (config.detector_jitter > 0.0)
            .then(|| Normal::new(0.0, config.detector_jitter))
            .transpose()
            .map_err(|e| Error::Config(e.to_string()))?,
        dark: (config.dark_rate > 0.0)
            .then(|| Poisson::new(config.dark_rate / gamma))
            .transpose()
            .map_err(|e| Error::Config(e.to_string()))?,
    };

    let n_chunks = config.n_photons.div_ceil(CHUNK);
    let chunks: Vec<Vec<TrialRecord>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(config.n_photons);
            let mut out = Vec::new();
            for i in start..end {
                ctx.run_trial(i, &mut out)?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = chunks.into_iter().flatten().collect();

    let summary = summarize(config, &run, &records)?;
    Ok(RunOutput { summary, records })
}

/// Run on a dedicated pool with `threads` workers. Output is identical for
/// every thread count.
pub fn simulate_run_with_threads(config: &ExperimentConfig, threads: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| simulate_run(config))
}

fn summarize(config: &ExperimentConfig, run: &ResolvedExperiment, records: &[TrialRecord]) -> Result<RunSummary> {
    let width = run.device.cavity().default_bin_width();
    let mut histograms = config
        .phase_settings
        .iter()
        .map(|&phase| {
            Ok(PhaseHistograms {
                phase,
                d1: ArrivalHistogram::new(0.0, width, 0)?,
                d2: ArrivalHistogram::new(0.0, width, 0)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n_phases = config.phase_settings.len() as u64;
    let mut success_count = 0;
    let mut dark_count = 0;
    for r in records {
        let h = &mut histograms[(r.trial_index % n_phases) as usize];
        let target = match r.detector {
            Detector::D1 => &mut h.d1,
            Detector::D2 => &mut h.d2,
        };
        target.record(r.arrival_time - config.tau_d)?;
        match r.origin {
            Origin::Signal => success_count += 1,
            Origin::Dark => dark_count += 1,
        }
    }
    Ok(RunSummary {
        seed: config.seed,
        device: config.device.name.clone(),
        n_photons: config.n_photons,
        kappa: run.device.kappa,
        gamma_c: run.device.gamma_c,
        omega_m: run.device.omega_m,
        tau_d: config.tau_d,
        coherence: run.coherence,
        survival: run.survival,
        expected_success_probability: run.device.p_success,
        success_count,
        dark_count,
        wall_events: records.len() as u64,
        wall_time_s: config.n_photons as f64 / run.injection_rate,
        histograms,
        visibility: estimate_visibility(records, &config.phase_settings).ok(),
    })
}
