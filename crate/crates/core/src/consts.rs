//! Physical constants (CODATA 2018 exact or recommended values).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Cyclic frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn angular(hz: f64) -> f64 {
    TWO_PI * hz
}

/// Angular frequency (rad/s) to cyclic frequency (Hz).
#[inline]
pub fn cyclic(rad_per_s: f64) -> f64 {
    rad_per_s / TWO_PI
}
