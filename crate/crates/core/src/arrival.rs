//! Arrival-time statistics of postselected photons.
//!
//! A photon leaves the cavities after a residence time drawn from
//! Γ_c e^{−Γ_c t}; given that time, the dark port fires with probability
//! κ² sin²(ω_m t/2) to leading order. Their product oscillates at the
//! mechanical frequency and integrates to ½κ²ω_m²/(Γ_c² + ω_m²).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::tolerances::{ARRIVAL_T_MAX_LIFETIMES, BINS_PER_PERIOD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// cavity decay rate, 1/s
    pub gamma_c: f64,
    /// mechanical angular frequency, rad/s
    pub omega_m: f64,
    pub kappa: f64,
}

impl CavityParams {
    pub fn new(gamma_c: f64, omega_m: f64, kappa: f64) -> Result<Self> {
        if !(gamma_c > 0.0 && gamma_c.is_finite()) {
            return domain(format!("gamma_c must be positive, got {gamma_c}"));
        }
        if !(omega_m > 0.0 && omega_m.is_finite()) {
            return domain(format!("omega_m must be positive, got {omega_m}"));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return domain(format!("kappa must be non-negative, got {kappa}"));
        }
        Ok(Self {
            gamma_c,
            omega_m,
            kappa,
        })
    }

    pub fn sideband_ratio(&self) -> f64 {
        self.omega_m / self.gamma_c
    }

    pub fn mechanical_period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_m
    }

    /// Upper time limit used for integrals and curves.
    pub fn t_max(&self) -> f64 {
        ARRIVAL_T_MAX_LIFETIMES / self.gamma_c
    }

    /// 20 bins per mechanical period.
    pub fn default_bin_width(&self) -> f64 {
        self.mechanical_period() / BINS_PER_PERIOD as f64
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and non-negative, got {t}"));
    }
    Ok(())
}

/// Γ_c e^{−Γ_c t}.
pub fn residence_density(p: &CavityParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(p.gamma_c * (-p.gamma_c * t).exp())
}

/// κ² sin²(ω_m t_c/2) = |α(t_c)|²/4.
pub fn postselect_prob_approx(p: &CavityParams, t_c: f64) -> Result<f64> {
    check_time(t_c)?;
    let s = (0.5 * p.omega_m * t_c).sin();
    Ok(p.kappa * p.kappa * s * s)
}

/// ½κ²ω_m²/(Γ_c² + ω_m²).
pub fn total_success_probability(p: &CavityParams) -> f64 {
    let r = p.gamma_c / p.omega_m;
    0.5 * p.kappa * p.kappa / (1.0 + r * r)
}

/// Arrival density of postselected photons; divided by
/// [`total_success_probability`] when `normalized`.
pub fn arrival_density(p: &CavityParams, t: f64, normalized: bool) -> Result<f64> {
    let raw = residence_density(p, t)? * postselect_prob_approx(p, t)?;
    if !normalized {
        return Ok(raw);
    }
    let total = total_success_probability(p);
    if total <= 0.0 {
        return domain("normalised density undefined without coupling (kappa = 0)");
    }
    Ok(raw / total)
}

/// Sample the normalised arrival density on `[0, t_max]` with at least
/// `points_per_period` points per mechanical period and a step no longer
/// than 1/(`points_per_period`·Γ_c).
pub fn density_curve(p: &CavityParams, points_per_period: usize) -> Result<Vec<(f64, f64)>> {
    if points_per_period < BINS_PER_PERIOD {
        return domain(format!(
            "need at least {BINS_PER_PERIOD} points per period, got {points_per_period}"
        ));
    }
    let step = (p.mechanical_period() / points_per_period as f64).min(1.0 / (points_per_period as f64 * p.gamma_c));
    let t_max = p.t_max();
    let n = (t_max / step).ceil() as usize;
    let step = t_max / n as f64;
    (0..=n)
        .map(|k| {
            let t = k as f64 * step;
            Ok((t, arrival_density(p, t, true)?))
        })
        .collect()
}

/// Counts of arrival times in equal-width bins starting at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalHistogram {
    pub t0: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl ArrivalHistogram {
    pub fn new(t0: f64, bin_width: f64, n_bins: usize) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return domain(format!("bin width must be positive, got {bin_width}"));
        }
        if !t0.is_finite() {
            return domain("t0 must be finite");
        }
        Ok(Self {
            t0,
            bin_width,
            counts: vec![0; n_bins],
        })
    }

    /// Index floor((t − t0)/bin_width); `None` before `t0`.
    pub fn bin_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.bin_width;
        (x >= 0.0 && x.is_finite()).then(|| x.floor() as usize)
    }

    /// Adds one count, growing the histogram as needed.
    pub fn record(&mut self, t: f64) -> Result<()> {
        let Some(i) = self.bin_index(t) else {
            return domain(format!("arrival time {t} precedes histogram start {}", self.t0));
        };
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.t0 + (i as f64 + 0.5) * self.bin_width
    }

    /// Merge every `factor` adjacent bins; a short trailing group is kept.
    pub fn rebin(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return domain("rebin factor must be at least 1");
        }
        Ok(Self {
            t0: self.t0,
            bin_width: self.bin_width * factor as f64,
            counts: self.counts.chunks(factor).map(|c| c.iter().sum()).collect(),
        })
    }
}

/// Histogram arrival times in bins of `bin_width` starting at zero.
pub fn bin_arrivals(times: &[f64], bin_width: f64) -> Result<ArrivalHistogram> {
    bin_arrivals_from(times, 0.0, bin_width)
}

pub fn bin_arrivals_from(times: &[f64], t0: f64, bin_width: f64) -> Result<ArrivalHistogram> {
    let mut h = ArrivalHistogram::new(t0, bin_width, 0)?;
    for &t in times {
        h.record(t)?;
    }
    Ok(h)
}
