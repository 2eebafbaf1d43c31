//! Physical constants (CODATA 2018, exact SI values) and the experimental
//! operating point used throughout the figures.

use std::f64::consts::PI;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Mirror mass, 145 ng.
pub const MASS: f64 = 145e-12;
/// Mechanical frequency, 2π × 947 kHz.
pub const OMEGA_M: f64 = 2.0 * PI * 947e3;
/// Cavity frequency, 2π × 2.82e14 Hz.
pub const OMEGA_C: f64 = 2.0 * PI * 2.82e14;
/// Drive laser frequency, 2π × 5.26e14 Hz.
pub const OMEGA_L: f64 = 2.0 * PI * 5.26e14;
/// Cavity length, 25 mm.
pub const LENGTH: f64 = 25e-3;
/// Drive power, 11 mW.
pub const POWER: f64 = 11e-3;
/// Cavity damping, 2π × 215 kHz.
pub const CAVITY_DAMPING: f64 = 2.0 * PI * 215e3;
/// Mechanical damping, 2π × 140 kHz.
pub const MECHANICAL_DAMPING: f64 = 2.0 * PI * 140e3;
