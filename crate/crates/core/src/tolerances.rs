//! Numerical tolerances shared by the library and its tests.
//!
//! Every threshold that decides pass/fail lives here so the numbers are not
//! scattered through the code.

/// Minimum fidelity between the number-basis propagator and the analytic
/// coherent state.
pub const ORACLE_FIDELITY_FLOOR: f64 = 1.0 - 1e-8;

/// Maximum norm drift of an evolved state vector.
pub const NORM_DRIFT: f64 = 1e-10;

/// Maximum population allowed in the top two levels of a truncated basis.
pub const TRUNCATION_LEAKAGE: f64 = 1e-10;

/// Default size of the truncated mechanical basis (levels 0..=16).
pub const DEFAULT_N_TRUNC: usize = 16;

/// Normalisation window for joint states, |Σ|w|² − 1| ≤ this.
pub const JOINT_NORM: f64 = 1e-10;

/// Agreement between closed-form and matrix-projected dark-port probability.
pub const DARK_PORT_EXACTNESS: f64 = 1e-10;

/// Relative agreement between closed-form and quadrature success probability.
pub const SUCCESS_QUADRATURE_REL: f64 = 1e-9;

/// Unit integral of the normalised arrival density.
pub const DENSITY_NORMALISATION: f64 = 1e-8;

/// Weak-coupling guard: coherent labels built from physics need |α| < 1.
pub const WEAK_COUPLING_ALPHA: f64 = 1.0;

/// Guard on κ for the interferometer protocol (|α| ≤ 2κ < 1).
pub const PROTOCOL_KAPPA_MAX: f64 = 0.5;

/// Upper integration limit for arrival-time quantities, in units of 1/Γ_c.
pub const ARRIVAL_T_MAX_LIFETIMES: f64 = 60.0;

/// Default histogram resolution, bins per mechanical period.
pub const BINS_PER_PERIOD: usize = 20;

/// Operational meaning of T ≪ T_EID: base temperature at most T_EID / 10.
pub const EID_TEMPERATURE_MARGIN: f64 = 10.0;

/// Minimum sideband ratio ω_m/Γ_c for observing the arrival oscillation.
pub const SIDEBAND_RATIO_MIN: f64 = 3.0;

/// Default threshold for the arrival-oscillation statistic.
pub const OSCILLATION_THRESHOLD: f64 = 5.0;

/// Maximum injection rate in units of Γ_c (one photon at a time).
pub const INJECTION_RATE_MAX_GAMMA: f64 = 0.1;
