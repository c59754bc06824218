//! CODATA-2018 physical constants (SI) and atomic-unit conversions.

use std::f64::consts::PI;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Speed of light (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Unified atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Hartree energy (J).
pub const HARTREE: f64 = 4.359_744_722_207_1e-18;
/// Atomic unit of time, ħ/E_h (s).
pub const AU_TIME: f64 = HBAR / HARTREE;
/// Speed of light in atomic units (inverse fine-structure constant).
pub const C_AU: f64 = 137.035_999_084;

pub const TWO_PI: f64 = 2.0 * PI;

/// Mass of a ²²⁹Th ion in kg (nuclear mass number times u).
pub const TH229_MASS: f64 = 229.0 * AMU;
/// Nuclear isomer transition wavelength (m).
pub const TH229_WAVELENGTH: f64 = 148.3821e-9;
/// Default isomer decay rate: 8000 s lifetime.
pub const TH229_DEFAULT_DECAY_RATE: f64 = 1.0 / 8000.0;

/// Converts a cyclic frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts angular frequency in rad/s to a cyclic frequency in Hz.
#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / TWO_PI
}
