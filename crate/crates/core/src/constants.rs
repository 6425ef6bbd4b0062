//! Physical constants (CODATA 2018 exact / recommended values, SI units).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Default optical wavelength, m.
pub const DEFAULT_WAVELENGTH: f64 = 1.064e-6;

/// Default base temperature of the cryostat, K.
pub const DEFAULT_BASE_TEMPERATURE: f64 = 1.0e-3;
