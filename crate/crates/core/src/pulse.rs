//! Piecewise-constant drive sequences and their on-disk format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed mismatch between Σ durations and τ, and between ion boundaries.
pub const DURATION_TOL: f64 = 1e-12;

/// One constant piece of the drive on a single ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSegment {
    /// V_ge in rad/s (half the Rabi frequency).
    pub amplitude: f64,
    pub phase: f64,
    pub duration: f64,
}

/// Per-ion segment lists on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    durations: Vec<f64>,
    amplitudes: Vec<Vec<f64>>,
    phases: Vec<Vec<f64>>,
}

impl PulseSequence {
    /// Builds a sequence from per-ion segments. Every ion must use the same
    /// segment durations.
    pub fn new(ions: Vec<Vec<PulseSegment>>) -> Result<Self> {
        let first = ions.first().ok_or_else(|| Error::Config("pulse has no ions".into()))?;
        if first.is_empty() {
            return Err(Error::Config("pulse has no segments".into()));
        }
        let durations: Vec<f64> = first.iter().map(|s| s.duration).collect();
        for (j, ion) in ions.iter().enumerate() {
            if ion.len() != durations.len() {
                return Err(Error::Shape { expected: durations.len(), got: ion.len() });
            }
            for (k, s) in ion.iter().enumerate() {
                if (s.duration - durations[k]).abs() > DURATION_TOL {
                    return Err(Error::Config(format!("ion {j} segment {k} boundary differs from ion 0")));
                }
            }
        }
        let amplitudes = ions.iter().map(|ion| ion.iter().map(|s| s.amplitude).collect()).collect();
        let phases = ions.iter().map(|ion| ion.iter().map(|s| s.phase).collect()).collect();
        Self::from_parts(durations, amplitudes, phases)
    }

    /// Builds a sequence from a shared duration list and per-ion amplitude
    /// and phase lists.
    pub fn from_parts(durations: Vec<f64>, amplitudes: Vec<Vec<f64>>, phases: Vec<Vec<f64>>) -> Result<Self> {
        if durations.is_empty() || amplitudes.is_empty() {
            return Err(Error::Config("pulse needs at least one ion and one segment".into()));
        }
        if phases.len() != amplitudes.len() {
            return Err(Error::Shape { expected: amplitudes.len(), got: phases.len() });
        }
        if let Some(d) = durations.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::Domain(format!("segment duration must be positive and finite, got {d}")));
        }
        for row in amplitudes.iter().chain(&phases) {
            if row.len() != durations.len() {
                return Err(Error::Shape { expected: durations.len(), got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("pulse amplitude or phase is not finite".into()));
            }
        }
        Ok(Self { durations, amplitudes, phases })
    }

    /// Equal-length segments covering [0, tau].
    pub fn uniform(tau: f64, amplitudes: Vec<Vec<f64>>, phases: Vec<Vec<f64>>) -> Result<Self> {
        let k = amplitudes.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::Config("pulse needs at least one segment".into()));
        }
        Self::from_parts(vec![tau / k as f64; k], amplitudes, phases)
    }

    pub fn zero(ion_count: usize, segments: usize, tau: f64) -> Result<Self> {
        Self::uniform(tau, vec![vec![0.0; segments]; ion_count], vec![vec![0.0; segments]; ion_count])
    }

    pub fn ion_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn segment_count(&self) -> usize {
        self.durations.len()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn amplitudes(&self, ion: usize) -> &[f64] {
        &self.amplitudes[ion]
    }

    pub fn phases(&self, ion: usize) -> &[f64] {
        &self.phases[ion]
    }

    pub fn segment(&self, ion: usize, k: usize) -> PulseSegment {
        PulseSegment { amplitude: self.amplitudes[ion][k], phase: self.phases[ion][k], duration: self.durations[k] }
    }

    /// Total duration τ.
    pub fn duration(&self) -> f64 {
        self.durations.iter().sum()
    }

    /// Segment start times followed by τ.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.durations.len() + 1);
        let mut t = 0.0;
        out.push(t);
        for d in &self.durations {
            t += d;
            out.push(t);
        }
        out
    }

    /// Index of the segment containing t (the last one for t ≥ τ).
    pub fn segment_at(&self, t: f64) -> usize {
        let mut acc = 0.0;
        for (k, d) in self.durations.iter().enumerate() {
            acc += d;
            if t < acc {
                return k;
            }
        }
        self.durations.len() - 1
    }

    /// Checks the sum of durations against an expected τ.
    pub fn check_duration(&self, tau: f64) -> Result<()> {
        let total = self.duration();
        if (total - tau).abs() > DURATION_TOL {
            return Err(Error::Config(format!("segment durations sum to {total} s, expected {tau} s")));
        }
        Ok(())
    }

    pub fn check_amplitude_bounds(&self, min: f64, max: f64) -> Result<()> {
        for (j, row) in self.amplitudes.iter().enumerate() {
            if let Some(v) = row.iter().find(|v| **v < min || **v > max) {
                return Err(Error::Domain(format!("ion {j} amplitude {v} outside [{min}, {max}] rad/s")));
            }
        }
        Ok(())
    }

    /// Same grid and phases with every amplitude multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let amplitudes = self.amplitudes.iter().map(|r| r.iter().map(|v| v * s).collect()).collect();
        Self { durations: self.durations.clone(), amplitudes, phases: self.phases.clone() }
    }

    /// Swaps the drive of the first two ions.
    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        if out.ion_count() >= 2 {
            out.amplitudes.swap(0, 1);
            out.phases.swap(0, 1);
        }
        out
    }
}

/// Context stored alongside a pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseHeader {
    pub tau_s: f64,
    pub detuning_rad_s: f64,
    pub mode_frequencies_rad_s: Vec<f64>,
    /// Rows are ions, columns are modes.
    pub lamb_dicke: Vec<Vec<f64>>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IonRecord {
    /// (duration_s, rabi_amplitude_rad_s, phase_rad) per segment.
    segments: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseFileRepr {
    header: PulseHeader,
    ion: Vec<IonRecord>,
}

/// A pulse together with its header, as written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseFile {
    pub header: PulseHeader,
    pub pulse: PulseSequence,
}

impl PulseFile {
    pub fn to_toml(&self) -> Result<String> {
        if self.header.seed.is_some_and(|s| s > i64::MAX as u64) {
            return Err(Error::Config("seed must be below 2^63 to be stored".into()));
        }
        let ion = (0..self.pulse.ion_count())
            .map(|j| IonRecord {
                segments: (0..self.pulse.segment_count())
                    .map(|k| {
                        let s = self.pulse.segment(j, k);
                        [s.duration, s.amplitude, s.phase]
                    })
                    .collect(),
            })
            .collect();
        toml::to_string(&PulseFileRepr { header: self.header.clone(), ion })
            .map_err(|e| Error::Parse(format!("cannot serialise pulse: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let repr: PulseFileRepr = toml::from_str(text).map_err(|e| Error::Parse(format!("pulse file: {e}")))?;
        let ions = repr
            .ion
            .into_iter()
            .map(|r| {
                r.segments
                    .into_iter()
                    .map(|[duration, amplitude, phase]| PulseSegment { amplitude, phase, duration })
                    .collect()
            })
            .collect();
        let pulse = PulseSequence::new(ions)?;
        pulse.check_duration(repr.header.tau_s)?;
        if repr.header.lamb_dicke.len() != pulse.ion_count() {
            return Err(Error::Shape { expected: pulse.ion_count(), got: repr.header.lamb_dicke.len() });
        }
        let modes = repr.header.mode_frequencies_rad_s.len();
        if let Some(row) = repr.header.lamb_dicke.iter().find(|r| r.len() != modes) {
            return Err(Error::Shape { expected: modes, got: row.len() });
        }
        Ok(Self { header: repr.header, pulse })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(tau: f64, seed: Option<u64>) -> PulseHeader {
        PulseHeader {
            tau_s: tau,
            detuning_rad_s: 1.2817e7,
            mode_frequencies_rad_s: vec![7.5398e6, 1.3069e7],
            lamb_dicke: vec![vec![0.1285, 0.0976], vec![0.1285, -0.0976]],
            seed,
        }
    }

    #[test]
    fn rejects_mismatched_grids() {
        let seg = |d| PulseSegment { amplitude: 1.0, phase: 0.0, duration: d };
        assert!(PulseSequence::new(vec![vec![seg(1.0), seg(1.0)], vec![seg(1.0), seg(1.5)]]).is_err());
        assert!(PulseSequence::new(vec![vec![seg(1.0)], vec![seg(1.0), seg(1.0)]]).is_err());
        assert!(PulseSequence::new(vec![vec![seg(-1.0)]]).is_err());
        assert!(PulseSequence::new(vec![vec![seg(1.0)], vec![seg(1.0)]]).is_ok());
    }

    #[test]
    fn uniform_grid_sums_to_tau() {
        let p = PulseSequence::zero(2, 40, 0.1).unwrap();
        assert!(p.check_duration(0.1).is_ok());
        assert_eq!(p.boundaries().len(), 41);
        assert_eq!(p.segment_at(0.0), 0);
        assert_eq!(p.segment_at(0.1), 39);
        assert_eq!(p.segment_at(0.0026), 1);
    }

    #[test]
    fn rejects_file_with_wrong_tau() {
        let p = PulseSequence::zero(2, 4, 1.0).unwrap();
        let text = PulseFile { header: header(1.0, None), pulse: p }.to_toml().unwrap();
        let broken = text.replace("tau_s = 1.0", "tau_s = 2.0");
        assert!(PulseFile::from_toml(&broken).is_err());
    }

    proptest! {
        #[test]
        fn toml_round_trip_is_bit_exact(
            amps in prop::collection::vec(-1e6f64..1e6, 80),
            phases in prop::collection::vec(-10f64..10.0, 80),
            tau in 1e-4f64..1.0,
            seed in prop::option::of(0u64..(i64::MAX as u64)),
        ) {
            let pulse = PulseSequence::uniform(
                tau,
                vec![amps[..40].to_vec(), amps[40..].to_vec()],
                vec![phases[..40].to_vec(), phases[40..].to_vec()],
            ).unwrap();
            let file = PulseFile { header: header(pulse.duration(), seed), pulse };
            let back = PulseFile::from_toml(&file.to_toml().unwrap()).unwrap();
            for j in 0..2 {
                for k in 0..40 {
                    let (a, b) = (file.pulse.segment(j, k), back.pulse.segment(j, k));
                    prop_assert_eq!(a.amplitude.to_bits(), b.amplitude.to_bits());
                    prop_assert_eq!(a.phase.to_bits(), b.phase.to_bits());
                    prop_assert_eq!(a.duration.to_bits(), b.duration.to_bits());
                }
            }
            prop_assert_eq!(back, file);
        }
    }
}
