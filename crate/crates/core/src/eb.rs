//! Electronic-bridge enhancement of the nuclear decay and the resulting
//! state-preparation and readout times.
//!
//! Γ_EB ≈ (ω/c)³ |⟨I_g‖M₁‖I_e⟩|² / ((2I_e+1)(2J_i+1))
//!        · Σ_{J_n} (1/(2J_n+1)) |Σ_{γ_n} D_{in} H_{nf} / (ω_in − ω_N)|²
//!
//! Matrix elements are inputs in atomic units. Frequencies are given in
//! rad/s and converted to atomic units, so the bracket is evaluated entirely
//! in atomic units and the rate is converted to s⁻¹ at the end. Sign
//! conventions of the reduced elements only matter inside a J_n group, where
//! channels interfere; the inputs are taken as signed reals.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::constants::{AU_TIME, C_AU};
use crate::error::{Error, Result};
use crate::units::{parse_quantity, Dimension};

/// Default population transfer that defines "prepared".
pub const DEFAULT_TRANSFER: f64 = 0.99;

/// One intermediate electronic state γ_n J_n.
#[derive(Debug, Clone, PartialEq)]
pub struct EbChannel {
    pub label: String,
    /// J_n; must be a non-negative multiple of 1/2.
    pub j_n: f64,
    /// ⟨γ_i J_i‖D₁‖γ_n J_n⟩ in atomic units.
    pub dipole: f64,
    /// ⟨γ_n J_n‖H_int‖γ_f J_f⟩ in atomic units.
    pub hyperfine: f64,
    /// ω_in − ω_N in rad/s.
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbConfig {
    /// ⟨I_g‖M₁‖I_e⟩ in atomic units.
    pub nuclear_element: f64,
    pub i_e: f64,
    pub j_i: f64,
    /// Photon frequency ω = ε_i − ε_f + ω_N in rad/s.
    pub photon_frequency: f64,
    pub channels: Vec<EbChannel>,
}

fn twice_spin(name: &str, j: f64) -> Result<u32> {
    let two_j = 2.0 * j;
    if !(j >= 0.0) || (two_j - two_j.round()).abs() > 1e-9 {
        return Err(Error::Domain(format!("{name} = {j} is not a non-negative half-integer")));
    }
    Ok(two_j.round() as u32)
}

impl EbConfig {
    pub fn validate(&self) -> Result<()> {
        twice_spin("I_e", self.i_e)?;
        twice_spin("J_i", self.j_i)?;
        if !(self.photon_frequency.is_finite() && self.photon_frequency >= 0.0) {
            return Err(Error::Domain(format!("photon frequency must be non-negative, got {}", self.photon_frequency)));
        }
        for ch in &self.channels {
            twice_spin(&format!("J_n of {}", ch.label), ch.j_n)?;
            if ch.denominator == 0.0 {
                return Err(Error::Resonance { label: ch.label.clone() });
            }
            if ![ch.dipole, ch.hyperfine, ch.denominator].iter().all(|v| v.is_finite()) {
                return Err(Error::Domain(format!("channel {} has non-finite entries", ch.label)));
            }
        }
        Ok(())
    }
}

/// Γ_EB in s⁻¹.
pub fn eb_rate(cfg: &EbConfig) -> Result<f64> {
    cfg.validate()?;
    let mut groups: BTreeMap<u32, f64> = BTreeMap::new();
    for ch in &cfg.channels {
        let denominator_au = ch.denominator * AU_TIME;
        *groups.entry(twice_spin("J_n", ch.j_n)?).or_default() += ch.dipole * ch.hyperfine / denominator_au;
    }
    let channel_sum: f64 = groups.iter().map(|(two_j, amp)| amp * amp / f64::from(two_j + 1)).sum();
    let omega_au = cfg.photon_frequency * AU_TIME;
    let weight = f64::from(twice_spin("I_e", cfg.i_e)? + 1) * f64::from(twice_spin("J_i", cfg.j_i)? + 1);
    let rate_au = (omega_au / C_AU).powi(3) * cfg.nuclear_element.powi(2) / weight * channel_sum;
    Ok(rate_au / AU_TIME)
}

/// Enhancement and the matching preparation/readout time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpamEstimate {
    /// γ = Γ_EB / Γ_ge.
    pub enhancement: f64,
    /// Effective decay rate γΓ_ge in s⁻¹.
    pub effective_rate: f64,
    /// Time to reach the requested transfer, in s.
    pub time: f64,
}

fn check_transfer(transfer: f64) -> Result<f64> {
    if !(transfer > 0.0 && transfer < 1.0) {
        return Err(Error::Domain(format!("transfer fraction must lie in (0, 1), got {transfer}")));
    }
    Ok(-(1.0 - transfer).ln())
}

/// Time for exponential decay at γΓ_ge to transfer `transfer` of the
/// population; ln(100)/(γΓ_ge) for the default 99%.
pub fn spam_time_with(enhancement: f64, decay_rate: f64, transfer: f64) -> Result<SpamEstimate> {
    if !(enhancement > 0.0) {
        return Err(Error::Domain(format!("enhancement must be positive, got {enhancement}")));
    }
    if !(decay_rate > 0.0) {
        return Err(Error::Domain(format!("decay rate must be positive, got {decay_rate}")));
    }
    let effective_rate = enhancement * decay_rate;
    Ok(SpamEstimate { enhancement, effective_rate, time: check_transfer(transfer)? / effective_rate })
}

pub fn spam_time(enhancement: f64, decay_rate: f64) -> Result<SpamEstimate> {
    spam_time_with(enhancement, decay_rate, DEFAULT_TRANSFER)
}

/// Enhancement needed to reach `transfer` within `time`.
pub fn required_enhancement(time: f64, decay_rate: f64, transfer: f64) -> Result<f64> {
    if !(time > 0.0 && decay_rate > 0.0) {
        return Err(Error::Domain("target time and decay rate must be positive".into()));
    }
    Ok(check_transfer(transfer)? / (time * decay_rate))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelRecord {
    label: String,
    j_n: f64,
    dipole: String,
    hyperfine: String,
    denominator: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EbFile {
    nuclear_element: String,
    i_e: f64,
    j_i: f64,
    photon_frequency: String,
    #[serde(default)]
    channel: Vec<ChannelRecord>,
}

impl EbConfig {
    /// Reads a TOML channel file. Every dimensional field carries a unit tag:
    /// matrix elements `"<value> au"`, frequencies e.g. `"<value> rad/s"`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: EbFile = toml::from_str(text).map_err(|e| Error::Parse(format!("channel file: {e}")))?;
        let channels = f
            .channel
            .into_iter()
            .map(|c| {
                Ok(EbChannel {
                    dipole: parse_quantity(&format!("{}.dipole", c.label), &c.dipole, Dimension::AtomicUnit)?,
                    hyperfine: parse_quantity(&format!("{}.hyperfine", c.label), &c.hyperfine, Dimension::AtomicUnit)?,
                    denominator: parse_quantity(
                        &format!("{}.denominator", c.label),
                        &c.denominator,
                        Dimension::AngularFrequency,
                    )?,
                    label: c.label,
                    j_n: c.j_n,
                })
            })
            .collect::<Result<_>>()?;
        let cfg = Self {
            nuclear_element: parse_quantity("nuclear_element", &f.nuclear_element, Dimension::AtomicUnit)?,
            i_e: f.i_e,
            j_i: f.j_i,
            photon_frequency: parse_quantity("photon_frequency", &f.photon_frequency, Dimension::AngularFrequency)?,
            channels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Tutorial channel file with made-up values; not physical data.
pub const ILLUSTRATIVE_CHANNELS: &str = include_str!("../data/eb_illustrative.toml");
