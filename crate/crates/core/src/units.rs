//! Unit-tagged scalar quantities as they appear in configuration files.
//!
//! Every physical number in a config is written as `"<value> <unit>"`, for
//! example `"30 uW"` or `"2.04 MHz"`. The unit must belong to the whitelist of
//! the dimension the key expects. Values are converted to SI once at parse
//! time; angular frequencies end up in rad/s, so `"1 kHz"` read as an angular
//! frequency is `2π × 10³ rad/s`, while the same string read as a rate
//! (decay or dephasing) is `10³ s⁻¹`.

use std::f64::consts::PI;
use std::fmt;

use crate::constants::AMU;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Power,
    Length,
    /// Angular frequency, stored in rad/s. Cyclic units are multiplied by 2π.
    AngularFrequency,
    /// Event rate in s⁻¹. `Hz` is accepted as s⁻¹ without a 2π factor.
    Rate,
    Time,
    Mass,
    Angle,
    /// Dimensionless value already expressed in atomic units.
    AtomicUnit,
}

impl Dimension {
    /// Whitelisted units and their SI scale factors.
    pub fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Power => &[("W", 1.0), ("mW", 1e-3), ("uW", 1e-6), ("µW", 1e-6), ("nW", 1e-9)],
            Dimension::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("nm", 1e-9)],
            Dimension::AngularFrequency => &[
                ("rad/s", 1.0),
                ("krad/s", 1e3),
                ("Mrad/s", 1e6),
                ("Hz", 2.0 * PI),
                ("kHz", 2.0 * PI * 1e3),
                ("MHz", 2.0 * PI * 1e6),
            ],
            Dimension::Rate => &[("1/s", 1.0), ("s^-1", 1.0), ("mHz", 1e-3), ("Hz", 1.0), ("kHz", 1e3)],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9)],
            Dimension::Mass => &[("kg", 1.0), ("u", AMU)],
            Dimension::Angle => &[("rad", 1.0), ("deg", PI / 180.0)],
            Dimension::AtomicUnit => &[("au", 1.0), ("a.u.", 1.0)],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Power => "power",
            Dimension::Length => "length",
            Dimension::AngularFrequency => "angular frequency",
            Dimension::Rate => "rate",
            Dimension::Time => "time",
            Dimension::Mass => "mass",
            Dimension::Angle => "angle",
            Dimension::AtomicUnit => "atomic-unit quantity",
        };
        f.write_str(name)
    }
}

/// Parses `"<value> <unit>"` into an SI value of the requested dimension.
/// `key` names the offending field in diagnostics.
pub fn parse_quantity(key: &str, text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let (num, unit) = text
        .split_once(char::is_whitespace)
        .ok_or_else(|| Error::Parse(format!("{key}: missing unit suffix in {text:?} (expected {dim})")))?;
    let unit = unit.trim();
    let value: f64 = num.parse().map_err(|_| Error::Parse(format!("{key}: cannot parse number {num:?}")))?;
    if !value.is_finite() {
        return Err(Error::Parse(format!("{key}: non-finite value")));
    }
    let scale = dim.units().iter().find(|(u, _)| *u == unit).map(|(_, s)| *s).ok_or_else(|| {
        let allowed: Vec<&str> = dim.units().iter().map(|(u, _)| *u).collect();
        Error::Parse(format!("{key}: unit {unit:?} is not a valid {dim} unit (allowed: {})", allowed.join(", ")))
    })?;
    Ok(value * scale)
}
