//! Run configuration: a single TOML file whose physical numbers are all
//! unit-tagged strings (see `thq_core::units`). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;
use thq_core::constants::{TH229_DEFAULT_DECAY_RATE, TH229_MASS, TH229_WAVELENGTH};
use thq_core::lindblad::NoiseModel;
use thq_core::physics::{LaserConfig, NuclearTransition, TrapConfig};
use thq_core::units::{parse_quantity, Dimension};
use thq_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Modes,
    Rabi,
    Ramsey,
    T1t2Scan,
    OptimizePulse,
    SimulateGate,
    RobustnessScan,
    Metrics,
    Eb,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Modes => "modes",
            Self::Rabi => "rabi",
            Self::Ramsey => "ramsey",
            Self::T1t2Scan => "t1t2-scan",
            Self::OptimizePulse => "optimize-pulse",
            Self::SimulateGate => "simulate-gate",
            Self::RobustnessScan => "robustness-scan",
            Self::Metrics => "metrics",
            Self::Eb => "eb",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: OneOrMany<ExperimentKind>,
    #[serde(default)]
    seed: u64,
    output: Option<PathBuf>,
    trap: Option<RawTrap>,
    modes: Option<RawModes>,
    #[serde(default)]
    transition: RawTransition,
    laser: Option<RawLaser>,
    #[serde(default)]
    noise: RawNoise,
    rabi: Option<RawRabi>,
    ramsey: Option<RawRamsey>,
    #[serde(default)]
    t1t2: RawT1t2,
    #[serde(default)]
    setting: Vec<RawSetting>,
    #[serde(default)]
    gate: RawGate,
    scan: Option<RawScan>,
    metrics: Option<RawMetrics>,
    eb: Option<RawEb>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    ion_mass: Option<String>,
    charge_number: u32,
    axial_frequency: String,
    #[serde(default = "two")]
    ions: usize,
    /// Angle between the laser wavevector and the trap axis.
    laser_angle: Option<String>,
}

fn two() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModes {
    frequencies: Vec<String>,
    lamb_dicke: Vec<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    decay_rate: Option<String>,
    wavelength: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaser {
    power: Option<String>,
    beam_waist: Option<String>,
    detuning: Option<OneOrMany<String>>,
    drift: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    decay_rate: Option<OneOrMany<String>>,
    dephasing: Option<OneOrMany<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRabi {
    rabi_frequency: Option<String>,
    detuning: Option<String>,
    duration: String,
    #[serde(default = "default_samples")]
    samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRamsey {
    detuning: String,
    duration: String,
    #[serde(default = "default_samples")]
    samples: usize,
}

fn default_samples() -> usize {
    401
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawT1t2 {
    #[serde(default = "default_decay_lengths")]
    decay_lengths: f64,
    #[serde(default = "default_fringes")]
    fringes: f64,
    #[serde(default = "default_scan_samples")]
    samples: usize,
}

impl Default for RawT1t2 {
    fn default() -> Self {
        Self { decay_lengths: default_decay_lengths(), fringes: default_fringes(), samples: default_scan_samples() }
    }
}

fn default_decay_lengths() -> f64 {
    3.0
}
fn default_fringes() -> f64 {
    15.0
}
fn default_scan_samples() -> usize {
    601
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSetting {
    label: String,
    duration: String,
    amplitude_max: String,
    amplitude_min: Option<String>,
    #[serde(default = "default_segments")]
    segments: usize,
    #[serde(default = "default_cutoff")]
    fock_cutoff: usize,
    #[serde(default = "default_restarts")]
    restarts: usize,
    pulse_file: Option<PathBuf>,
}

fn default_segments() -> usize {
    40
}
fn default_cutoff() -> usize {
    3
}
fn default_restarts() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    #[serde(default = "default_gate_samples")]
    samples: usize,
    #[serde(default = "default_phase_per_step")]
    phase_per_step: f64,
    #[serde(default = "default_truncation_tol")]
    truncation_tol: f64,
}

impl Default for RawGate {
    fn default() -> Self {
        Self {
            samples: default_gate_samples(),
            phase_per_step: default_phase_per_step(),
            truncation_tol: default_truncation_tol(),
        }
    }
}

fn default_gate_samples() -> usize {
    101
}
fn default_phase_per_step() -> f64 {
    0.5
}
fn default_truncation_tol() -> f64 {
    1e-4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    drift_min: String,
    drift_max: String,
    drift_step: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetrics {
    werner: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEb {
    channels: String,
    #[serde(default = "default_transfer")]
    transfer: f64,
    target_time: Option<String>,
}

fn default_transfer() -> f64 {
    thq_core::eb::DEFAULT_TRANSFER
}

/// Where the trap modes come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeSource {
    Trap { trap: TrapConfig, projection: f64 },
    Explicit { frequencies: Vec<f64>, lamb_dicke: DMatrix<f64> },
}

/// One gate setting: duration, amplitude bounds and Hilbert-space size.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSetting {
    pub label: String,
    pub duration: f64,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub segments: usize,
    pub fock_cutoff: usize,
    pub restarts: usize,
    pub pulse_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiSection {
    /// Ω in rad/s; derived from the laser when absent.
    pub rabi_frequency: Option<f64>,
    pub detuning: f64,
    pub duration: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseySection {
    pub detuning: f64,
    pub duration: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct T1t2Section {
    pub decay_lengths: f64,
    pub fringes: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateSection {
    pub samples: usize,
    pub phase_per_step: f64,
    pub truncation_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbSection {
    /// `None` selects the bundled illustrative channel file.
    pub channels: Option<PathBuf>,
    pub transfer: f64,
    pub target_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiments: Vec<ExperimentKind>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub modes: Option<ModeSource>,
    pub transition: NuclearTransition,
    pub laser: Option<LaserConfig>,
    /// Laser detunings Δ (rad/s); gate kinds run one cell per entry.
    pub detunings: Vec<f64>,
    pub decay_rates: Vec<f64>,
    pub dephasing_rates: Vec<f64>,
    pub rabi: Option<RabiSection>,
    pub ramsey: Option<RamseySection>,
    pub t1t2: T1t2Section,
    pub settings: Vec<GateSetting>,
    pub gate: GateSection,
    /// Drift grid (rad/s) for robustness scans.
    pub drifts: Vec<f64>,
    pub werner: Vec<f64>,
    pub eb: Option<EbSection>,
}

fn q(key: &str, text: &str, dim: Dimension) -> Result<f64> {
    parse_quantity(key, text, dim)
}

fn qs(key: &str, texts: Vec<String>, dim: Dimension) -> Result<Vec<f64>> {
    texts.iter().enumerate().map(|(i, t)| q(&format!("{key}[{i}]"), t, dim)).collect()
}

fn resolve_path(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn require_file(key: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Parse(format!("{key}: referenced file {} does not exist", path.display())))
    }
}

impl RunConfig {
    /// Parses config text. Relative file references resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(one_line(&e.to_string())))?;
        let experiments = raw.experiment.into_vec();
        if experiments.is_empty() {
            return Err(Error::Parse("experiment: at least one kind is required".into()));
        }

        let transition = NuclearTransition {
            decay_rate: match &raw.transition.decay_rate {
                Some(t) => q("transition.decay_rate", t, Dimension::Rate)?,
                None => TH229_DEFAULT_DECAY_RATE,
            },
            wavelength: match &raw.transition.wavelength {
                Some(t) => q("transition.wavelength", t, Dimension::Length)?,
                None => TH229_WAVELENGTH,
            },
        };
        transition.validate()?;

        let modes = match (raw.trap, raw.modes) {
            (Some(_), Some(_)) => return Err(Error::Parse("[trap] and [modes] are mutually exclusive".into())),
            (Some(t), None) => {
                let trap = TrapConfig {
                    ion_mass: match &t.ion_mass {
                        Some(m) => q("trap.ion_mass", m, Dimension::Mass)?,
                        None => TH229_MASS,
                    },
                    charge_number: t.charge_number,
                    axial_frequency: q("trap.axial_frequency", &t.axial_frequency, Dimension::AngularFrequency)?,
                    ion_count: t.ions,
                };
                trap.validate()?;
                let angle = match &t.laser_angle {
                    Some(a) => q("trap.laser_angle", a, Dimension::Angle)?,
                    None => 0.0,
                };
                Some(ModeSource::Trap { trap, projection: angle.cos() })
            }
            (None, Some(m)) => {
                let frequencies = qs("modes.frequencies", m.frequencies, Dimension::AngularFrequency)?;
                let rows = m.lamb_dicke.len();
                if rows == 0 || m.lamb_dicke.iter().any(|r| r.len() != frequencies.len()) {
                    return Err(Error::Parse(format!(
                        "modes.lamb_dicke: expected ions x {} matrix",
                        frequencies.len()
                    )));
                }
                let flat: Vec<f64> = m.lamb_dicke.into_iter().flatten().collect();
                Some(ModeSource::Explicit {
                    frequencies,
                    lamb_dicke: DMatrix::from_row_slice(rows, flat.len() / rows, &flat),
                })
            }
            (None, None) => None,
        };

        let (laser, detunings) = match raw.laser {
            Some(l) => {
                let detunings = match l.detuning {
                    Some(d) => qs("laser.detuning", d.into_vec(), Dimension::AngularFrequency)?,
                    None => Vec::new(),
                };
                let cfg = LaserConfig {
                    power: match &l.power {
                        Some(p) => q("laser.power", p, Dimension::Power)?,
                        None => 0.0,
                    },
                    wavelength: transition.wavelength,
                    beam_waist: match &l.beam_waist {
                        Some(w) => q("laser.beam_waist", w, Dimension::Length)?,
                        None => 1.5e-6,
                    },
                    detuning: detunings.first().copied().unwrap_or(0.0),
                    phase_noise_rate: 0.0,
                    drift_offset: match &l.drift {
                        Some(d) => q("laser.drift", d, Dimension::AngularFrequency)?,
                        None => 0.0,
                    },
                };
                cfg.validate()?;
                (Some(cfg), detunings)
            }
            None => (None, Vec::new()),
        };

        let decay_rates = match raw.noise.decay_rate {
            Some(v) => qs("noise.decay_rate", v.into_vec(), Dimension::Rate)?,
            None => vec![transition.decay_rate],
        };
        let dephasing_rates = match raw.noise.dephasing {
            Some(v) => qs("noise.dephasing", v.into_vec(), Dimension::Rate)?,
            None => vec![0.0],
        };
        for &r in decay_rates.iter().chain(&dephasing_rates) {
            NoiseModel::new(r, 0.0)?;
        }

        let rabi = raw
            .rabi
            .map(|r| -> Result<RabiSection> {
                Ok(RabiSection {
                    rabi_frequency: r
                        .rabi_frequency
                        .as_deref()
                        .map(|t| q("rabi.rabi_frequency", t, Dimension::AngularFrequency))
                        .transpose()?,
                    detuning: r
                        .detuning
                        .as_deref()
                        .map(|t| q("rabi.detuning", t, Dimension::AngularFrequency))
                        .transpose()?
                        .unwrap_or(0.0),
                    duration: q("rabi.duration", &r.duration, Dimension::Time)?,
                    samples: r.samples,
                })
            })
            .transpose()?;
        let ramsey = raw
            .ramsey
            .map(|r| -> Result<RamseySection> {
                Ok(RamseySection {
                    detuning: q("ramsey.detuning", &r.detuning, Dimension::AngularFrequency)?,
                    duration: q("ramsey.duration", &r.duration, Dimension::Time)?,
                    samples: r.samples,
                })
            })
            .transpose()?;
        let t1t2 =
            T1t2Section { decay_lengths: raw.t1t2.decay_lengths, fringes: raw.t1t2.fringes, samples: raw.t1t2.samples };
        if !(t1t2.decay_lengths > 0.0 && t1t2.fringes > 0.0) || t1t2.samples < 3 {
            return Err(Error::Domain("t1t2: decay_lengths and fringes must be > 0, samples >= 3".into()));
        }

        let mut settings = Vec::with_capacity(raw.setting.len());
        for (i, s) in raw.setting.into_iter().enumerate() {
            let key = format!("setting[{i}]");
            let pulse_file = s.pulse_file.map(|p| resolve_path(base, p));
            if let Some(p) = &pulse_file {
                require_file(&format!("{key}.pulse_file"), p)?;
            }
            if s.label.is_empty() || !s.label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(Error::Parse(format!("{key}.label: use ASCII letters, digits, '-', '_' or '.'")));
            }
            settings.push(GateSetting {
                duration: q(&format!("{key}.duration"), &s.duration, Dimension::Time)?,
                amplitude_max: q(&format!("{key}.amplitude_max"), &s.amplitude_max, Dimension::AngularFrequency)?,
                amplitude_min: match &s.amplitude_min {
                    Some(t) => q(&format!("{key}.amplitude_min"), t, Dimension::AngularFrequency)?,
                    None => 0.0,
                },
                label: s.label,
                segments: s.segments,
                fock_cutoff: s.fock_cutoff,
                restarts: s.restarts,
                pulse_file,
            });
        }
        if settings.iter().enumerate().any(|(i, s)| settings[..i].iter().any(|o| o.label == s.label)) {
            return Err(Error::Parse("setting labels must be unique".into()));
        }

        let gate = GateSection {
            samples: raw.gate.samples,
            phase_per_step: raw.gate.phase_per_step,
            truncation_tol: raw.gate.truncation_tol,
        };
        if gate.samples < 2 || !(gate.phase_per_step > 0.0) || !(gate.truncation_tol > 0.0) {
            return Err(Error::Domain("gate: samples >= 2, phase_per_step > 0 and truncation_tol > 0 required".into()));
        }

        let drifts = match raw.scan {
            Some(s) => drift_grid(
                q("scan.drift_min", &s.drift_min, Dimension::AngularFrequency)?,
                q("scan.drift_max", &s.drift_max, Dimension::AngularFrequency)?,
                q("scan.drift_step", &s.drift_step, Dimension::AngularFrequency)?,
            )?,
            None => Vec::new(),
        };

        let werner = raw.metrics.map(|m| m.werner).unwrap_or_default();
        if werner.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain("metrics.werner: mixing parameters must lie in [0, 1]".into()));
        }

        let eb = raw
            .eb
            .map(|e| -> Result<EbSection> {
                let channels = if e.channels == "illustrative" {
                    None
                } else {
                    let p = resolve_path(base, PathBuf::from(&e.channels));
                    require_file("eb.channels", &p)?;
                    Some(p)
                };
                Ok(EbSection {
                    channels,
                    transfer: e.transfer,
                    target_time: e
                        .target_time
                        .as_deref()
                        .map(|t| q("eb.target_time", t, Dimension::Time))
                        .transpose()?,
                })
            })
            .transpose()?;

        let cfg = Self {
            experiments,
            seed: raw.seed,
            output: raw.output.map(|p| resolve_path(base, p)),
            modes,
            transition,
            laser,
            detunings,
            decay_rates,
            dephasing_rates,
            rabi,
            ramsey,
            t1t2,
            settings,
            gate,
            drifts,
            werner,
            eb,
        };
        cfg.check_sections()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Each experiment kind names the sections it needs.
    fn check_sections(&self) -> Result<()> {
        let missing =
            |kind: ExperimentKind, what: &str| Error::Parse(format!("experiment {}: missing {what}", kind.name()));
        for &kind in &self.experiments {
            match kind {
                ExperimentKind::Modes => {
                    if self.modes.is_none() {
                        return Err(missing(kind, "[trap] or [modes]"));
                    }
                }
                ExperimentKind::Rabi => {
                    let r = self.rabi.as_ref().ok_or_else(|| missing(kind, "[rabi]"))?;
                    if r.rabi_frequency.is_none() && self.laser.is_none() {
                        return Err(missing(kind, "rabi.rabi_frequency or [laser]"));
                    }
                }
                ExperimentKind::Ramsey => {
                    self.ramsey.as_ref().ok_or_else(|| missing(kind, "[ramsey]"))?;
                }
                ExperimentKind::T1t2Scan | ExperimentKind::Eb => {
                    if kind == ExperimentKind::Eb && self.eb.is_none() {
                        return Err(missing(kind, "[eb]"));
                    }
                }
                ExperimentKind::OptimizePulse | ExperimentKind::SimulateGate | ExperimentKind::RobustnessScan => {
                    if self.modes.is_none() {
                        return Err(missing(kind, "[trap] or [modes]"));
                    }
                    if self.detunings.is_empty() {
                        return Err(missing(kind, "laser.detuning"));
                    }
                    if self.settings.is_empty() {
                        return Err(missing(kind, "[[setting]]"));
                    }
                    if kind == ExperimentKind::RobustnessScan && self.drifts.is_empty() {
                        return Err(missing(kind, "[scan]"));
                    }
                }
                ExperimentKind::Metrics => {
                    if self.werner.is_empty() {
                        return Err(missing(kind, "metrics.werner"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn drift_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= min) {
        return Err(Error::Domain("scan: need drift_step > 0 and drift_max >= drift_min".into()));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(Error::Domain(format!("scan: {} drift points is too many", n + 1)));
    }
    Ok((0..=n).map(|i| min + step * i as f64).collect())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "simulate-gate"
[modes]
frequencies = ["1.2 MHz", "2.08 MHz"]
lamb_dicke = [[0.1285, 0.0976], [0.1285, -0.0976]]
[laser]
detuning = ["2.0 MHz", "2.04 MHz"]
[noise]
dephasing = ["1 Hz", "10 Hz"]
[[setting]]
label = "low"
duration = "100 ms"
amplitude_max = "10 kHz"
"#;

    #[test]
    fn parses_lists_and_units() {
        let cfg = RunConfig::parse(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.experiments, vec![ExperimentKind::SimulateGate]);
        assert_eq!(cfg.detunings.len(), 2);
        assert!((cfg.detunings[1] - 2.0 * std::f64::consts::PI * 2.04e6).abs() < 1e-6);
        assert_eq!(cfg.dephasing_rates, vec![1.0, 10.0]);
        assert_eq!(cfg.settings[0].duration, 0.1);
        assert_eq!(cfg.settings[0].fock_cutoff, 3);
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let text = MINIMAL.replace("[noise]", "[noise]\ncolour = 3");
        assert!(matches!(RunConfig::parse(&text, Path::new(".")), Err(Error::Parse(_))));
    }

    #[test]
    fn bad_unit_names_the_key() {
        let text = MINIMAL.replace("\"100 ms\"", "\"100 parsecs\"");
        let err = RunConfig::parse(&text, Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("setting[0].duration"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = MINIMAL.replace("\"100 ms\"", "\"100 Hz\"");
        assert!(RunConfig::parse(&text, Path::new(".")).is_err());
    }

    #[test]
    fn missing_section_for_kind() {
        let text = MINIMAL.replace("simulate-gate", "robustness-scan");
        let err = RunConfig::parse(&text, Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("[scan]"), "{err}");
    }

    #[test]
    fn drift_grid_includes_both_ends() {
        let g = drift_grid(-2.0, 2.0, 0.5).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[8], 2.0);
    }
}
