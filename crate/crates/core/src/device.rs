//! Device parameters, derived optomechanical quantities and feasibility checks.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arrival::{total_success_probability, CavityParams};
use crate::constants::{C, DEFAULT_WAVELENGTH, HBAR, K_B};
use crate::error::{domain, Error, Result};
use crate::quantum::CouplingParams;
use crate::tolerances::{EID_TEMPERATURE_MARGIN, SIDEBAND_RATIO_MIN};

/// Device file shipped with the crate: the two trampoline resonators and the
/// two proposed devices.
pub const BUNDLED_DEVICES_JSON: &str = include_str!("../data/devices.json");

/// Reference (κ, ω_m/Γ_c, T_EID in K) for each bundled device.
pub const REFERENCE_VALUES: [(&str, f64, f64, f64); 4] = [
    ("trampoline-1", 0.000034, 2.0, 0.3),
    ("trampoline-2", 0.0016, 0.09, 0.4),
    ("proposed-1", 0.001, 3.0, 0.3),
    ("proposed-2", 0.005, 3.0, 0.4),
];

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub name: String,
    /// effective mass, kg
    pub mass_kg: f64,
    /// mechanical frequency, Hz
    pub f_m_hz: f64,
    pub cavity_length_m: f64,
    pub finesse: f64,
    pub q_m: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength_m: f64,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass_kg", self.mass_kg),
            ("f_m_hz", self.f_m_hz),
            ("cavity_length_m", self.cavity_length_m),
            ("finesse", self.finesse),
            ("q_m", self.q_m),
            ("wavelength_m", self.wavelength_m),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("device `{}`: {name} must be positive, got {v}", self.name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedDevice {
    pub name: String,
    /// rad/s
    pub omega_m: f64,
    /// zero-point motion, m
    pub x_zp: f64,
    /// single-photon coupling, rad/s
    pub g: f64,
    pub kappa: f64,
    /// cavity decay rate, 1/s
    pub gamma_c: f64,
    pub sideband_ratio: f64,
    /// K
    pub t_eid: f64,
    pub q_m: f64,
    /// overall postselection probability per photon
    pub p_success: f64,
    /// highest tolerable dark-count rate, 1/s
    pub dark_count_bound: f64,
}

impl DerivedDevice {
    pub fn coupling(&self) -> CouplingParams {
        CouplingParams {
            kappa: self.kappa,
            omega_m: self.omega_m,
        }
    }

    /// Replace κ (and g = κω_m), keeping the cavity and mechanics.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return domain(format!("kappa must be non-negative, got {kappa}"));
        }
        let mut d = self.clone();
        d.kappa = kappa;
        d.g = kappa * d.omega_m;
        d.refresh();
        Ok(d)
    }

    /// Replace Γ_c so that ω_m/Γ_c equals `ratio`.
    pub fn with_sideband_ratio(&self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return domain(format!("sideband ratio must be positive, got {ratio}"));
        }
        let mut d = self.clone();
        d.gamma_c = d.omega_m / ratio;
        d.refresh();
        Ok(d)
    }

    fn refresh(&mut self) {
        self.sideband_ratio = self.omega_m / self.gamma_c;
        self.p_success = total_success_probability(&self.cavity());
        self.dark_count_bound = dark_count_bound(self.kappa, self.gamma_c);
    }

    pub fn cavity(&self) -> CavityParams {
        CavityParams {
            gamma_c: self.gamma_c,
            omega_m: self.omega_m,
            kappa: self.kappa,
        }
    }
}

/// Derive coupling, cavity linewidth, decoherence temperature and the
/// postselection figures of merit.
pub fn derive(d: &DeviceParams) -> Result<DerivedDevice> {
    d.validate()?;
    let omega_m = TAU * d.f_m_hz;
    let x_zp = (HBAR / (2.0 * d.mass_kg * omega_m)).sqrt();
    let omega_o = TAU * C / d.wavelength_m;
    let g = omega_o / d.cavity_length_m * x_zp;
    let kappa = g / omega_m;
    let gamma_c = PI * C / (d.cavity_length_m * d.finesse);
    let t_eid = HBAR * omega_m * d.q_m / K_B;
    let cavity = CavityParams::new(gamma_c, omega_m, kappa)?;
    Ok(DerivedDevice {
        name: d.name.clone(),
        omega_m,
        x_zp,
        g,
        kappa,
        gamma_c,
        sideband_ratio: omega_m / gamma_c,
        t_eid,
        q_m: d.q_m,
        p_success: total_success_probability(&cavity),
        dark_count_bound: dark_count_bound(kappa, gamma_c),
    })
}

/// 9κ²Γ_c/20: dark counts in a 1/Γ_c window must stay below the
/// postselection rate of an ω_m = 3Γ_c device.
pub fn dark_count_bound(kappa: f64, gamma_c: f64) -> f64 {
    9.0 * kappa * kappa * gamma_c / 20.0
}

/// Environmentally induced decoherence time ħQ_m/(k_B T).
pub fn eid_time(q_m: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return domain(format!("temperature must be positive, got {temperature}"));
    }
    if !(q_m > 0.0) {
        return domain(format!("q_m must be positive, got {q_m}"));
    }
    Ok(HBAR * q_m / (K_B * temperature))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
    /// factor by which the requirement is met (> 1) or missed (< 1);
    /// `None` when unbounded
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub device: DerivedDevice,
    pub dark_rate: f64,
    pub base_temperature: f64,
    /// ω_m/Γ_c ≥ 3
    pub sideband: Check,
    /// dark rate < 9κ²Γ_c/20
    pub dark_counts: Check,
    /// base temperature ≤ T_EID/10
    pub temperature: Check,
}

impl FeasibilityReport {
    pub fn all_passed(&self) -> bool {
        self.sideband.passed && self.dark_counts.passed && self.temperature.passed
    }
}

pub fn feasibility_report(d: &DerivedDevice, dark_rate: f64, base_temp: f64) -> Result<FeasibilityReport> {
    if !(dark_rate >= 0.0) {
        return domain(format!("dark rate must be non-negative, got {dark_rate}"));
    }
    if !(base_temp > 0.0) {
        return domain(format!("base temperature must be positive, got {base_temp}"));
    }
    let sideband = Check {
        passed: d.sideband_ratio >= SIDEBAND_RATIO_MIN,
        value: d.sideband_ratio,
        limit: SIDEBAND_RATIO_MIN,
        margin: Some(d.sideband_ratio / SIDEBAND_RATIO_MIN),
    };
    let dark_counts = Check {
        passed: dark_rate < d.dark_count_bound,
        value: dark_rate,
        limit: d.dark_count_bound,
        margin: (dark_rate > 0.0).then(|| d.dark_count_bound / dark_rate),
    };
    let t_limit = d.t_eid / EID_TEMPERATURE_MARGIN;
    let temperature = Check {
        passed: base_temp <= t_limit,
        value: base_temp,
        limit: t_limit,
        margin: Some(t_limit / base_temp),
    };
    Ok(FeasibilityReport {
        device: d.clone(),
        dark_rate,
        base_temperature: base_temp,
        sideband,
        dark_counts,
        temperature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayLineKind {
    Fiber,
    Herriott,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayLineSpec {
    pub kind: DelayLineKind,
    pub loss_db_per_km: f64,
    pub refractive_index: f64,
}

impl DelayLineSpec {
    /// Telecom fiber: 0.2 dB/km, n = 1.468.
    pub fn fiber() -> Self {
        Self {
            kind: DelayLineKind::Fiber,
            loss_db_per_km: 0.2,
            refractive_index: 1.468,
        }
    }

    /// Free-space multipass cell with the given effective loss.
    pub fn herriott(loss_db_per_km: f64) -> Self {
        Self {
            kind: DelayLineKind::Herriott,
            loss_db_per_km,
            refractive_index: 1.0,
        }
    }

    /// Lossless free-space delay.
    pub fn lossless() -> Self {
        Self::herriott(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySurvival {
    pub length_m: f64,
    pub survival: f64,
}

pub fn delay_line_survival(spec: &DelayLineSpec, tau_d: f64) -> Result<DelaySurvival> {
    if !(tau_d >= 0.0 && tau_d.is_finite()) {
        return domain(format!("delay must be finite and non-negative, got {tau_d}"));
    }
    if !(spec.loss_db_per_km >= 0.0) || !(spec.refractive_index >= 1.0) {
        return domain("delay line needs loss ≥ 0 dB/km and refractive index ≥ 1");
    }
    let length_m = C * tau_d / spec.refractive_index;
    let loss_db = spec.loss_db_per_km * length_m / 1000.0;
    Ok(DelaySurvival {
        length_m,
        survival: 10f64.powf(-loss_db / 10.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoherenceMechanism {
    Environmental,
    QuantumGravityCollapse,
    Csl,
    GravitationalPenroseDiosiZpm,
    GravitationalPenroseDiosiNuclear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Computed,
    Quoted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceCatalogEntry {
    pub mechanism: DecoherenceMechanism,
    pub device_name: String,
    /// s
    pub tau: f64,
    pub provenance: Provenance,
}

// order-of-magnitude timescales for (proposed-1, proposed-2)
const QUOTED_TIMESCALES: [(DecoherenceMechanism, f64, f64); 4] = [
    (DecoherenceMechanism::QuantumGravityCollapse, 10.0, 1e-3),
    (DecoherenceMechanism::Csl, 1e7, 1e5),
    (DecoherenceMechanism::GravitationalPenroseDiosiZpm, 1e6, 1e4),
    (DecoherenceMechanism::GravitationalPenroseDiosiNuclear, 10e-3, 100e-6),
];

/// Decoherence timescales for one of the proposed devices: the quoted
/// novel-mechanism constants plus the environmental time computed at
/// `temperature`.
pub fn decoherence_catalog(device_name: &str, temperature: f64) -> Result<Vec<DecoherenceCatalogEntry>> {
    let column = match device_name {
        "proposed-1" => 0,
        "proposed-2" => 1,
        other => return Err(Error::UnknownDevice(other.to_string())),
    };
    let device = find_device(&bundled_devices()?, device_name)?.clone();
    let mut entries = vec![DecoherenceCatalogEntry {
        mechanism: DecoherenceMechanism::Environmental,
        device_name: device_name.to_string(),
        tau: eid_time(device.q_m, temperature)?,
        provenance: Provenance::Computed,
    }];
    entries.extend(QUOTED_TIMESCALES.iter().map(|&(mechanism, t1, t2)| DecoherenceCatalogEntry {
        mechanism,
        device_name: device_name.to_string(),
        tau: if column == 0 { t1 } else { t2 },
        provenance: Provenance::Quoted,
    }));
    Ok(entries)
}

pub fn parse_devices(json: &str) -> Result<Vec<DeviceParams>> {
    let devices: Vec<DeviceParams> = serde_json::from_str(json)?;
    for d in &devices {
        d.validate()?;
    }
    Ok(devices)
}

pub fn load_devices(path: impl AsRef<Path>) -> Result<Vec<DeviceParams>> {
    parse_devices(&std::fs::read_to_string(path)?)
}

pub fn bundled_devices() -> Result<Vec<DeviceParams>> {
    parse_devices(BUNDLED_DEVICES_JSON)
}

pub fn find_device<'a>(devices: &'a [DeviceParams], name: &str) -> Result<&'a DeviceParams> {
    devices
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| Error::UnknownDevice(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bundled(name: &str) -> DeviceParams {
        find_device(&bundled_devices().unwrap(), name).unwrap().clone()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn trampoline_one() {
        let d = derive(&bundled("trampoline-1")).unwrap();
        assert!(rel(d.kappa, 3.4e-5) < 0.10, "kappa {}", d.kappa);
        assert!(rel(d.sideband_ratio, 2.0) < 0.05, "ratio {}", d.sideband_ratio);
        assert!(rel(d.t_eid, 0.3) < 0.15, "T_EID {}", d.t_eid);
        assert!(rel(d.x_zp, 9.4e-16) < 0.01, "x_zp {}", d.x_zp);
    }

    #[test]
    fn proposed_two() {
        let d = derive(&bundled("proposed-2")).unwrap();
        assert!(rel(d.kappa, 0.005) < 0.10, "kappa {}", d.kappa);
        assert!(rel(d.sideband_ratio, 3.0) < 0.05);
        assert!(rel(d.t_eid, 0.4) < 0.15);
    }

    #[test]
    fn doubling_cavity_length() {
        let base = bundled("proposed-1");
        let mut long = base.clone();
        long.cavity_length_m *= 2.0;
        let a = derive(&base).unwrap();
        let b = derive(&long).unwrap();
        assert_relative_eq!(b.g, a.g / 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.gamma_c, a.gamma_c / 2.0, max_relative = 1e-14);
        // p_success changes through κ² and the sideband ratio only
        let expected = 0.5 * b.kappa.powi(2) * b.omega_m.powi(2) / (b.gamma_c.powi(2) + b.omega_m.powi(2));
        assert_relative_eq!(b.p_success, expected, max_relative = 1e-14);
    }

    #[test]
    fn overrides_refresh_dependent_fields() {
        let d = derive(&bundled("proposed-1")).unwrap();
        let k = d.with_kappa(0.02).unwrap();
        assert_eq!(k.kappa, 0.02);
        assert_relative_eq!(k.p_success, 0.5 * 0.02f64.powi(2) / (1.0 + (d.gamma_c / d.omega_m).powi(2)), max_relative = 1e-14);
        assert_relative_eq!(k.dark_count_bound, dark_count_bound(0.02, d.gamma_c), max_relative = 1e-15);
        let r = d.with_sideband_ratio(1.0).unwrap();
        assert_relative_eq!(r.gamma_c, d.omega_m, max_relative = 1e-15);
        assert_relative_eq!(r.p_success, 0.25 * d.kappa.powi(2), max_relative = 1e-14);
        assert!(d.with_kappa(-1.0).is_err());
        assert!(d.with_sideband_ratio(0.0).is_err());
    }

    #[test]
    fn derive_rejects_non_positive_inputs() {
        let mut d = bundled("proposed-1");
        d.finesse = 0.0;
        assert!(derive(&d).is_err());
        let mut d = bundled("proposed-1");
        d.mass_kg = -1.0;
        assert!(derive(&d).is_err());
    }

    #[test]
    fn eid_anchors() {
        let t1 = eid_time(2e4, 1e-3).unwrap();
        let t2 = eid_time(2e6, 1e-3).unwrap();
        assert_relative_eq!(t1, 1.53e-4, max_relative = 0.01);
        assert_relative_eq!(t2, 1.53e-2, max_relative = 0.01);
        assert_relative_eq!(eid_time(2e6, 2e-3).unwrap(), t2 / 2.0, max_relative = 1e-15);
        assert!(eid_time(2e6, 0.0).is_err());
    }

    #[test]
    fn proposed_one_is_feasible_with_tes() {
        let d = derive(&bundled("proposed-1")).unwrap();
        let r = feasibility_report(&d, 0.0, 1e-3).unwrap();
        assert!(r.all_passed(), "{r:#?}");
        assert_eq!(r.dark_counts.margin, None);
    }

    #[test]
    fn trampoline_two_is_not_sideband_resolved() {
        let d = derive(&bundled("trampoline-2")).unwrap();
        let r = feasibility_report(&d, 0.0, 1e-3).unwrap();
        assert!(!r.sideband.passed);
        assert!((r.sideband.value - 0.09).abs() < 0.005);
        assert!(!r.all_passed());
    }

    #[test]
    fn dark_rate_at_bound_fails() {
        let d = derive(&bundled("proposed-2")).unwrap();
        let r = feasibility_report(&d, d.dark_count_bound, 1e-3).unwrap();
        assert!(!r.dark_counts.passed);
        let r = feasibility_report(&d, d.dark_count_bound * 0.999, 1e-3).unwrap();
        assert!(r.dark_counts.passed);
    }

    #[test]
    fn delay_line_examples() {
        let s = delay_line_survival(&DelayLineSpec::fiber(), 0.0).unwrap();
        assert_eq!(s.survival, 1.0);
        let s = delay_line_survival(&DelayLineSpec::fiber(), 100e-6).unwrap();
        assert_relative_eq!(s.length_m, 20.4e3, max_relative = 0.01);
        assert_relative_eq!(s.survival, 10f64.powf(-0.409), max_relative = 0.01);
        assert!((s.survival - 0.390).abs() < 0.002);

        let mut lossy = DelayLineSpec::fiber();
        lossy.loss_db_per_km *= 2.0;
        let s2 = delay_line_survival(&lossy, 100e-6).unwrap();
        assert_relative_eq!(s2.survival, s.survival * s.survival, max_relative = 1e-14);
        assert!(delay_line_survival(&DelayLineSpec::fiber(), -1.0).is_err());
        assert_eq!(delay_line_survival(&DelayLineSpec::lossless(), 1.0).unwrap().survival, 1.0);
    }

    #[test]
    fn catalog_entries() {
        let c1 = decoherence_catalog("proposed-1", 1e-3).unwrap();
        assert!(c1.iter().any(|e| e.mechanism == DecoherenceMechanism::QuantumGravityCollapse
            && e.tau == 10.0
            && e.provenance == Provenance::Quoted));
        let env = c1.iter().find(|e| e.mechanism == DecoherenceMechanism::Environmental).unwrap();
        assert_eq!(env.provenance, Provenance::Computed);
        assert_relative_eq!(env.tau, 1.53e-4, max_relative = 0.01);

        let c2 = decoherence_catalog("proposed-2", 1e-3).unwrap();
        assert!(c2
            .iter()
            .any(|e| e.mechanism == DecoherenceMechanism::Csl && e.tau == 1e5 && e.provenance == Provenance::Quoted));
        for e in c1.iter().chain(&c2) {
            assert_eq!(
                e.provenance == Provenance::Computed,
                e.mechanism == DecoherenceMechanism::Environmental
            );
        }
        assert!(matches!(decoherence_catalog("trampoline-1", 1e-3), Err(Error::UnknownDevice(_))));
    }

    #[test]
    fn device_file_schema() {
        let json = r#"[{"name":"x","mass_kg":1e-12,"f_m_hz":3e5,"cavity_length_m":0.005,"finesse":3e5,"q_m":2e4}]"#;
        let d = parse_devices(json).unwrap();
        assert_eq!(d[0].wavelength_m, DEFAULT_WAVELENGTH);
        let json = r#"[{"name":"x","mass_kg":1e-12,"f_m_hz":3e5,"cavity_length_m":0.005,"finesse":3e5,"q_m":2e4,"wavelength_m":1.55e-6}]"#;
        assert_eq!(parse_devices(json).unwrap()[0].wavelength_m, 1.55e-6);
        let bad = r#"[{"name":"x","mass_kg":0,"f_m_hz":3e5,"cavity_length_m":0.005,"finesse":3e5,"q_m":2e4}]"#;
        assert!(parse_devices(bad).is_err());
        assert!(parse_devices("{").is_err());
        assert!(matches!(find_device(&d, "nope"), Err(Error::UnknownDevice(_))));
    }

    proptest! {
        #[test]
        fn kappa_decreases_with_mass(m1 in 1e-13f64..1e-9, m2 in 1e-13f64..1e-9) {
            let mut a = bundled("proposed-1");
            let mut b = a.clone();
            a.mass_kg = m1.min(m2);
            b.mass_kg = m1.max(m2);
            prop_assert!(derive(&a).unwrap().kappa >= derive(&b).unwrap().kappa);
        }

        #[test]
        fn dark_bound_scales_as_kappa_squared(k in 1e-5f64..1e-1, s in 0.1f64..10.0) {
            let g = 6.28e5;
            prop_assert!(((dark_count_bound(s * k, g) / dark_count_bound(k, g)) - s * s).abs() < 1e-12 * s * s);
        }
    }
}
