//! Estimators applied to simulated (or measured) click records.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Detector, ExperimentConfig, TrialRecord};
use crate::arrival::{total_success_probability, CavityParams};
use crate::error::{Error, Result};
use crate::tolerances::BINS_PER_PERIOD;

/// Below this many clicks the periodogram is too noisy to be informative.
pub const MIN_OSCILLATION_COUNTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    /// clipped to [0, 1]
    pub visibility: f64,
    pub standard_error: f64,
    /// phase at which D1 is brightest, rad
    pub phase_offset: f64,
    pub counts: u64,
}

fn estimation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Estimation(msg.into()))
}

/// Fit n_D1(φ) = b1 + a1 cos φ + a2 sin φ and n_D2(φ) = b2 − a1 cos φ − a2 sin φ
/// jointly by least squares, using only detectors that clicked at all, then
/// V = √(a1² + a2²) / mean(b). The standard error uses a Poisson sandwich
/// covariance at the fitted means and the delta method.
pub fn estimate_visibility(records: &[TrialRecord], phase_settings: &[f64]) -> Result<VisibilityEstimate> {
    if records.is_empty() {
        return estimation("no records");
    }
    let mut distinct = phase_settings.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return estimation("need at least two distinct phase settings");
    }
    let n_phase = phase_settings.len();
    let mut counts = vec![[0u64; 2]; n_phase];
    for r in records {
        let j = phase_settings
            .iter()
            .position(|&p| p == r.phase)
            .ok_or_else(|| Error::Estimation(format!("record phase {} is not a configured setting", r.phase)))?;
        counts[j][matches!(r.detector, Detector::D2) as usize] += 1;
    }
    if counts.iter().flatten().filter(|&&c| c > 0).count() < 2 {
        return estimation("all counts fall in a single phase/detector bin");
    }
    let active: Vec<usize> = (0..2).filter(|&k| counts.iter().any(|c| c[k] > 0)).collect();
    let n_off = active.len();
    let cols = n_off + 2;

    let rows = n_off * n_phase;
    let mut x = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DVector::<f64>::zeros(rows);
    for (slot, &k) in active.iter().enumerate() {
        let sign = if k == 0 { 1.0 } else { -1.0 };
        for (j, &phi) in phase_settings.iter().enumerate() {
            let row = slot * n_phase + j;
            x[(row, slot)] = 1.0;
            x[(row, n_off)] = sign * phi.cos();
            x[(row, n_off + 1)] = sign * phi.sin();
            y[row] = counts[j][k] as f64;
        }
    }
    let xtx_inv = (x.transpose() * &x)
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Estimation(e.to_string()))?;
    let beta = &xtx_inv * x.transpose() * &y;
    let fitted = &x * &beta;
    let weights = DMatrix::from_diagonal(&fitted.map(|m| m.max(0.0)));
    let cov = &xtx_inv * x.transpose() * weights * &x * &xtx_inv;

    let base = beta.rows(0, n_off).sum() / n_off as f64;
    let (a1, a2) = (beta[n_off], beta[n_off + 1]);
    if base <= 0.0 {
        return estimation("fitted mean count is not positive");
    }
    let amp = a1.hypot(a2);
    let v = amp / base;
    let mut grad = DVector::<f64>::zeros(cols);
    for i in 0..n_off {
        grad[i] = -v / base / n_off as f64;
    }
    if amp > 0.0 {
        grad[n_off] = a1 / (amp * base);
        grad[n_off + 1] = a2 / (amp * base);
    } else {
        grad[n_off] = std::f64::consts::FRAC_1_SQRT_2 / base;
        grad[n_off + 1] = std::f64::consts::FRAC_1_SQRT_2 / base;
    }
    let var = (grad.transpose() * cov * grad)[(0, 0)];
    Ok(VisibilityEstimate {
        visibility: v.clamp(0.0, 1.0),
        standard_error: var.max(0.0).sqrt(),
        phase_offset: a2.atan2(a1),
        counts: records.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    /// periodogram power at ω_m divided by the expected background power
    pub statistic: f64,
    pub threshold: f64,
    pub detected: bool,
    /// clicks inside the analysis window
    pub counts: u64,
}

/// Tests the arrival-time histogram for modulation at ω_m.
///
/// Times t − τ_d are binned at a twentieth of a mechanical period over
/// [0, 60/Γ_c]. The non-oscillating background (exponential residence plus a
/// flat dark-count box on [0, 1/Γ_c]) is fitted by least squares and removed;
/// the statistic is |Σ r_b e^{iω_m t_b}|² / Σ μ_b, which has unit mean when no
/// oscillation is present.
pub fn arrival_oscillation_check(
    records: &[TrialRecord],
    cavity: &CavityParams,
    tau_d: f64,
    threshold: f64,
) -> Result<OscillationReport> {
    if records.len() < MIN_OSCILLATION_COUNTS {
        return estimation(format!(
            "{} records; at least {MIN_OSCILLATION_COUNTS} are needed",
            records.len()
        ));
    }
    let gamma = cavity.gamma_c;
    let omega = cavity.omega_m;
    let width = cavity.mechanical_period() / BINS_PER_PERIOD as f64;
    let t_max = cavity.t_max();
    let n_bins = (t_max / width).ceil() as usize;

    let mut counts = vec![0.0f64; n_bins];
    for r in records {
        let t = r.arrival_time - tau_d;
        if t >= 0.0 && t < t_max {
            let b = ((t / width) as usize).min(n_bins - 1);
            counts[b] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();

    let box_end = 1.0 / gamma;
    let mut shapes = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let lo = b as f64 * width;
        let hi = lo + width;
        let exp_part = (-gamma * lo).exp() - (-gamma * hi).exp();
        let box_part = gamma * (hi.min(box_end) - lo.min(box_end)).max(0.0);
        shapes.push((exp_part, box_part));
    }
    let mut normal = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for (&(e, u), &n) in shapes.iter().zip(&counts) {
        let s = Vector2::new(e, u);
        normal += s * s.transpose();
        rhs += s * n;
    }
    let coef = normal
        .try_inverse()
        .map(|inv| inv * rhs)
        .unwrap_or_else(|| Vector2::new(total, 0.0));

    let mut z = Complex64::new(0.0, 0.0);
    let mut background = 0.0;
    for (b, (&(e, u), &n)) in shapes.iter().zip(&counts).enumerate() {
        let mu = (coef[0] * e + coef[1] * u).max(0.0);
        let t = (b as f64 + 0.5) * width;
        z += (n - mu) * Complex64::from_polar(1.0, omega * t);
        background += mu;
    }
    if background <= 0.0 {
        return estimation("no clicks inside the analysis window");
    }
    let statistic = z.norm_sqr() / background;
    Ok(OscillationReport {
        statistic,
        threshold,
        detected: statistic > threshold,
        counts: total as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitingFactor {
    SuccessProbability,
    DelaySurvival,
    DetectorEfficiency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionEstimate {
    pub target_events: f64,
    /// wall-clock time to reach the target; `None` when the rate is zero
    pub seconds: Option<f64>,
    pub detected_rate: f64,
    pub injection_rate: f64,
    pub success_probability: f64,
    pub survival: f64,
    pub efficiency: f64,
    /// the smallest of the three per-photon factors
    pub limiting_factor: LimitingFactor,
}

/// Wall-clock time to collect `target_events` postselected clicks.
pub fn data_collection_estimate(config: &ExperimentConfig, target_events: f64) -> Result<CollectionEstimate> {
    if !(target_events > 0.0 && target_events.is_finite()) {
        return Err(Error::Config(format!("target must be positive, got {target_events}")));
    }
    let run = config.resolve()?;
    let p = total_success_probability(&run.device.cavity());
    let eta = config.detector_efficiency;
    let rate = run.injection_rate * p * run.survival * eta;
    let factors = [
        (p, LimitingFactor::SuccessProbability),
        (run.survival, LimitingFactor::DelaySurvival),
        (eta, LimitingFactor::DetectorEfficiency),
    ];
    let limiting_factor = factors
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|f| f.1)
        .unwrap_or(LimitingFactor::SuccessProbability);
    Ok(CollectionEstimate {
        target_events,
        seconds: (rate > 0.0).then(|| target_events / rate),
        detected_rate: rate,
        injection_rate: run.injection_rate,
        success_probability: p,
        survival: run.survival,
        efficiency: eta,
        limiting_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::Origin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn click(i: u64, t: f64, detector: Detector, phase: f64) -> TrialRecord {
        TrialRecord { trial_index: i, arrival_time: t, detector, phase, origin: Origin::Signal }
    }

    fn fringe_records(v: f64, offset: f64, per_phase: usize, rng: &mut ChaCha8Rng) -> (Vec<TrialRecord>, Vec<f64>) {
        let phases = crate::montecarlo::equally_spaced_phases(8);
        let mut out = Vec::new();
        let mut i = 0;
        for &phi in &phases {
            let p1 = 0.5 * (1.0 + v * (phi - offset).cos());
            for _ in 0..per_phase {
                let d = if rng.random::<f64>() < p1 { Detector::D1 } else { Detector::D2 };
                out.push(click(i, 0.0, d, phi));
                i += 1;
            }
        }
        (out, phases)
    }

    #[test]
    fn recovers_known_visibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &v in &[0.9, 0.4, 0.0] {
            let (recs, phases) = fringe_records(v, 0.7, 5000, &mut rng);
            let est = estimate_visibility(&recs, &phases).unwrap();
            assert!((est.visibility - v).abs() < 4.0 * est.standard_error + 1e-3, "{v}: {est:?}");
            assert!(est.standard_error > 0.0 && est.standard_error < 0.05);
            if v > 0.3 {
                assert!((est.phase_offset - 0.7).abs() < 0.05);
            }
        }
    }

    fn exact_counts(per_phase: impl Fn(f64) -> (u64, u64)) -> (Vec<TrialRecord>, Vec<f64>) {
        let phases = crate::montecarlo::equally_spaced_phases(8);
        let mut out = Vec::new();
        for &phi in &phases {
            let (n1, n2) = per_phase(phi);
            out.extend((0..n1).map(|i| click(i, 0.0, Detector::D1, phi)));
            out.extend((0..n2).map(|i| click(i, 0.0, Detector::D2, phi)));
        }
        (out, phases)
    }

    #[test]
    fn full_contrast_on_one_detector() {
        let (recs, phases) = exact_counts(|phi| ((100.0 * (1.0 + phi.cos())).round() as u64, 0));
        let est = estimate_visibility(&recs, &phases).unwrap();
        assert!((est.visibility - 1.0).abs() < 1e-12, "{est:?}");
        assert!(est.phase_offset.abs() < 1e-12);
    }

    #[test]
    fn uniform_counts_have_no_contrast() {
        let (recs, phases) = exact_counts(|_| (50, 50));
        let est = estimate_visibility(&recs, &phases).unwrap();
        assert!(est.visibility < 1e-12);
    }

    #[test]
    fn synthetic_visibility_within_five_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (recs, phases) = fringe_records(0.37, 0.0, 1250, &mut rng);
        let est = estimate_visibility(&recs, &phases).unwrap();
        assert!((est.visibility - 0.37).abs() < 5.0 * est.standard_error, "{est:?}");
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        assert!(estimate_visibility(&[], &[0.0, 1.0]).is_err());
        let one = vec![click(0, 0.0, Detector::D1, 0.0); 10];
        assert!(matches!(estimate_visibility(&one, &[0.0, 1.0]), Err(Error::Estimation(_))));
        assert!(estimate_visibility(&one, &[0.0]).is_err());
        let stray = vec![click(0, 0.0, Detector::D1, 5.0)];
        assert!(estimate_visibility(&stray, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn pure_exponential_shows_no_oscillation() {
        let cavity = CavityParams::new(1.0e5, 3.0e5, 0.1).unwrap();
        let exp = Exp::new(cavity.gamma_c).unwrap();
        let mut detections = 0;
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let recs: Vec<_> = (0..20_000)
                .map(|i| click(i, 1e-6 + exp.sample(&mut rng), Detector::D1, 0.0))
                .collect();
            let rep = arrival_oscillation_check(&recs, &cavity, 1e-6, 5.0).unwrap();
            detections += rep.detected as usize;
        }
        assert!(detections <= 2, "{detections} false detections");
    }

    #[test]
    fn modulated_arrivals_are_detected() {
        let cavity = CavityParams::new(1.0e5, 3.0e5, 0.1).unwrap();
        let exp = Exp::new(cavity.gamma_c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut recs = Vec::new();
        let mut i = 0;
        while recs.len() < 20_000 {
            let t = exp.sample(&mut rng);
            let accept = (0.5 * cavity.omega_m * t).sin().powi(2);
            if rng.random::<f64>() < accept {
                recs.push(click(i, t, Detector::D1, 0.0));
            }
            i += 1;
        }
        let rep = arrival_oscillation_check(&recs, &cavity, 0.0, 5.0).unwrap();
        assert!(rep.detected && rep.statistic > 100.0, "{rep:?}");
    }

    #[test]
    fn oscillation_check_needs_enough_records() {
        let cavity = CavityParams::new(1.0e5, 3.0e5, 0.1).unwrap();
        let recs = vec![click(0, 1e-6, Detector::D1, 0.0); 99];
        assert!(matches!(arrival_oscillation_check(&recs, &cavity, 0.0, 5.0), Err(Error::Estimation(_))));
    }

    #[test]
    fn collection_time_scales_inversely_with_rate() {
        let device = crate::device::find_device(&crate::device::bundled_devices().unwrap(), "proposed-1")
            .unwrap()
            .clone();
        let mut c = ExperimentConfig::new(device, crate::interferometer::DecoherenceSpec::exponential(1.0).unwrap());
        let full = data_collection_estimate(&c, 1e4).unwrap();
        c.detector_efficiency = 0.5;
        let half = data_collection_estimate(&c, 1e4).unwrap();
        assert!((half.seconds.unwrap() / full.seconds.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(full.limiting_factor, LimitingFactor::SuccessProbability);
        c.detector_efficiency = 0.0;
        let none = data_collection_estimate(&c, 1e4).unwrap();
        assert_eq!(none.seconds, None);
        assert_eq!(none.limiting_factor, LimitingFactor::DetectorEfficiency);
    }
}
