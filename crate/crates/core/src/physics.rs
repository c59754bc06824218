//! Drive and trap quantities derived from laser and trap configuration.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constants::{C_LIGHT, EPSILON_0, E_CHARGE, HBAR, TWO_PI};
use crate::error::{Error, Result};

/// Driving laser. All frequencies in rad/s, lengths in m, power in W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig {
    pub power: f64,
    pub wavelength: f64,
    pub beam_waist: f64,
    pub detuning: f64,
    pub phase_noise_rate: f64,
    pub drift_offset: f64,
}

impl LaserConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.power >= 0.0) {
            return Err(Error::Config(format!("laser power must be >= 0, got {}", self.power)));
        }
        if !(self.beam_waist > 0.0) {
            return Err(Error::Config(format!("beam waist must be > 0, got {}", self.beam_waist)));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Config(format!("wavelength must be > 0, got {}", self.wavelength)));
        }
        if !(self.phase_noise_rate >= 0.0) {
            return Err(Error::Config("phase noise rate must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub ion_mass: f64,
    pub charge_number: u32,
    pub axial_frequency: f64,
    pub ion_count: usize,
}

impl TrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ion_mass > 0.0) {
            return Err(Error::Config("ion mass must be > 0".into()));
        }
        if self.charge_number < 1 {
            return Err(Error::Config("charge number must be >= 1".into()));
        }
        if !(self.axial_frequency > 0.0) {
            return Err(Error::Config("axial frequency must be > 0".into()));
        }
        if self.ion_count < 1 {
            return Err(Error::Config("ion count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuclearTransition {
    /// Isomer radiative decay rate Γ_ge (1/s).
    pub decay_rate: f64,
    /// Transition wavelength (m).
    pub wavelength: f64,
}

impl NuclearTransition {
    pub fn validate(&self) -> Result<()> {
        // Γ_ge = 0 is tolerated for limit checks; negative is not.
        if !(self.decay_rate >= 0.0) {
            return Err(Error::Config("decay rate must be >= 0".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Config("transition wavelength must be > 0".into()));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        TWO_PI / self.wavelength
    }
}

/// Collective motional modes of the ion chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapModes {
    /// Mode angular frequencies ω_p, ascending.
    pub frequencies: Vec<f64>,
    /// Normalized eigenvectors, ions × modes.
    pub eigenvectors: DMatrix<f64>,
    /// Zero-point mode amplitudes b_{j,p} = v_{j,p}·√(ħ/(2 m ω_p)), in m.
    pub mode_vectors: DMatrix<f64>,
    /// Lamb–Dicke matrix η_{j,p}, ions × modes.
    pub lamb_dicke: DMatrix<f64>,
}

impl TrapModes {
    /// Builds modes directly from frequencies and a Lamb–Dicke matrix, for
    /// configurations that specify η rather than trap geometry.
    pub fn from_lamb_dicke(frequencies: Vec<f64>, lamb_dicke: DMatrix<f64>) -> Result<Self> {
        if lamb_dicke.ncols() != frequencies.len() {
            return Err(Error::Shape { expected: frequencies.len(), got: lamb_dicke.ncols() });
        }
        if lamb_dicke.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("Lamb-Dicke matrix has non-finite entries".into()));
        }
        let n = lamb_dicke.nrows();
        Ok(Self {
            eigenvectors: DMatrix::zeros(n, frequencies.len()),
            mode_vectors: DMatrix::zeros(n, frequencies.len()),
            frequencies,
            lamb_dicke,
        })
    }

    pub fn with_lamb_dicke(mut self, eta: DMatrix<f64>) -> Self {
        self.lamb_dicke = eta;
        self
    }

    pub fn ion_count(&self) -> usize {
        self.lamb_dicke.nrows()
    }

    pub fn mode_count(&self) -> usize {
        self.frequencies.len()
    }
}

/// Peak intensity of a Gaussian beam, P/(π w0²).
pub fn laser_intensity(laser: &LaserConfig) -> Result<f64> {
    if !(laser.beam_waist > 0.0) {
        return Err(Error::Config(format!("beam waist must be > 0, got {}", laser.beam_waist)));
    }
    if !(laser.power >= 0.0) {
        return Err(Error::Config(format!("laser power must be >= 0, got {}", laser.power)));
    }
    Ok(laser.power / (PI * laser.beam_waist * laser.beam_waist))
}

/// Rabi frequency Ω = 2V_ge/ħ of the direct nuclear drive (rad/s).
///
/// Uses V_ge = √(E0² π ε0 ħ Γ_ge / k³) with the peak field E0² = 2I/(ε0 c),
/// which gives Ω² = 8π I Γ_ge / (ħ c k³).
pub fn rabi_frequency(laser: &LaserConfig, nt: &NuclearTransition) -> Result<f64> {
    laser.validate()?;
    nt.validate()?;
    let intensity = laser_intensity(laser)?;
    let k = nt.wavenumber();
    let field_sq = 2.0 * intensity / (EPSILON_0 * C_LIGHT);
    let coupling = (field_sq * PI * EPSILON_0 * HBAR * nt.decay_rate / k.powi(3)).sqrt();
    Ok(2.0 * coupling / HBAR)
}

/// Equilibrium separation of a two-ion crystal (m).
pub fn ion_spacing(trap: &TrapConfig) -> Result<f64> {
    trap.validate()?;
    if trap.ion_count != 2 {
        return Err(Error::Unsupported(format!("ion spacing closed form needs 2 ions, got {}", trap.ion_count)));
    }
    let w = trap.axial_frequency;
    let base = 2.0 * E_CHARGE * E_CHARGE / (4.0 * PI * EPSILON_0 * trap.ion_mass * w * w);
    Ok(base.cbrt() * f64::from(trap.charge_number).powf(2.0 / 3.0))
}

/// Axial normal modes of a two-ion chain.
///
/// The dimensionless Hessian at equilibrium is [[2, −1], [−1, 2]], giving
/// ω = {ω_z, √3 ω_z}. Sign convention: COM = (1,1)/√2, stretch = (1,−1)/√2.
pub fn normal_modes(trap: &TrapConfig) -> Result<TrapModes> {
    trap.validate()?;
    if trap.ion_count != 2 {
        return Err(Error::Unsupported(format!("normal modes implemented for 2 ions, got {}", trap.ion_count)));
    }
    let hessian: DMatrix<f64> = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
    let eig = hessian.symmetric_eigen();
    let mut order: Vec<usize> = (0..2).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut frequencies = Vec::with_capacity(2);
    let mut vectors = DMatrix::zeros(2, 2);
    for (p, &idx) in order.iter().enumerate() {
        frequencies.push(trap.axial_frequency * eig.eigenvalues[idx].sqrt());
        let mut v = eig.eigenvectors.column(idx).into_owned();
        // first component positive
        if v[0] < 0.0 {
            v = -v;
        }
        vectors.set_column(p, &v);
    }

    let mut mode_vectors = vectors.clone();
    for (p, &w) in frequencies.iter().enumerate() {
        let zpf = (HBAR / (2.0 * trap.ion_mass * w)).sqrt();
        mode_vectors.column_mut(p).scale_mut(zpf);
    }

    Ok(TrapModes { frequencies, eigenvectors: vectors, mode_vectors, lamb_dicke: DMatrix::zeros(2, 2) })
}

/// η_{j,p} = k b_{j,p} · projection, where `projection` is the cosine between
/// the laser wavevector and the trap axis.
pub fn lamb_dicke_matrix(modes: &TrapModes, nt: &NuclearTransition, projection: f64) -> DMatrix<f64> {
    modes.mode_vectors.map(|b| nt.wavenumber() * b * projection)
}
