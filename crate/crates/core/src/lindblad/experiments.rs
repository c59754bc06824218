//! Rabi, T1 and Ramsey experiments on a single nuclear qubit.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::single_ion::{
    evolve_single_ion, free_evolution, single_qubit_liouvillian, ExperimentResult, NoiseModel, RkOptions,
};
use crate::density::{CMatrix, DensityMatrix, C64};
use crate::error::{Error, Result};

/// Decay rates below this are reported as T2 = ∞.
pub const T2_RATE_FLOOR: f64 = 1e-6;
/// Maximum RMS residual of ln ρ_ee for an accepted T1 fit.
pub const T1_FIT_RESIDUAL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiConfig {
    pub omega: f64,
    pub detuning: f64,
    pub noise: NoiseModel,
    pub duration: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T1Config {
    pub noise: NoiseModel,
    pub duration: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyConfig {
    /// Free-evolution detuning Δ (rad/s); sets the fringe frequency.
    pub detuning: f64,
    pub noise: NoiseModel,
    pub duration: f64,
    pub samples: usize,
}

fn uniform_grid(duration: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(duration > 0.0) {
        return Err(Error::Config("need duration > 0 and at least 2 samples".into()));
    }
    Ok((0..samples).map(|k| duration * k as f64 / (samples - 1) as f64).collect())
}

fn ground() -> DensityMatrix {
    DensityMatrix::from_ket(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]))
}

fn rotate(rho: &DensityMatrix, u: &CMatrix) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(u * rho.matrix() * u.adjoint())
}

/// Ideal rotation exp(−iθσx/2).
fn x_rotation(theta: f64) -> CMatrix {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = C64::new(0.0, -(theta / 2.0).sin());
    CMatrix::from_row_slice(2, 2, &[c, s, s, c])
}

/// Drives from the ground state and locates the first population maximum.
pub fn rabi_experiment(cfg: &RabiConfig) -> Result<ExperimentResult> {
    let grid = uniform_grid(cfg.duration, cfg.samples)?;
    let (mut res, _) = evolve_single_ion(&ground(), cfg.omega, cfg.detuning, &cfg.noise, &grid, &RkOptions::default())?;
    res.pi_time = Some(first_peak(&res.times, &res.excited)?);
    Ok(res)
}

/// Time of the first local maximum, refined by a parabola through the three
/// samples around it.
fn first_peak(times: &[f64], y: &[f64]) -> Result<f64> {
    let top = y.iter().copied().fold(f64::MIN, f64::max);
    for i in 1..y.len().saturating_sub(1) {
        if y[i] >= y[i - 1] && y[i] > y[i + 1] && y[i] > 0.5 * top {
            let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
            let denom = a - 2.0 * b + c;
            let h = times[i + 1] - times[i];
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            return Ok(times[i] + shift.clamp(-1.0, 1.0) * h);
        }
    }
    Err(Error::Fit("no population peak inside the time grid".into()))
}

/// Log-linear least squares of y = A e^{−rate·t}. Returns (rate, A, rms
/// residual of ln y).
pub fn fit_exponential_decay(times: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = times.iter().zip(y).filter(|(_, &v)| v > 0.0).map(|(&t, &v)| (t, v.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::Fit("fewer than 3 positive samples for exponential fit".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate time grid".into()));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mt;
    let rms = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok((-slope, icpt.exp(), rms))
}

/// Ideal π-pulse to |e⟩, then free decay with the drive off; fits T1.
pub fn t1_experiment(cfg: &T1Config) -> Result<ExperimentResult> {
    let grid = uniform_grid(cfg.duration, cfg.samples)?;
    let excited = rotate(&ground(), &x_rotation(PI));
    let l = single_qubit_liouvillian(0.0, 0.0, &cfg.noise);
    let pops: Vec<f64> = grid.iter().map(|&t| free_evolution(&excited, &l, t).matrix()[(1, 1)].re).collect();
    let (rate, _, rms) = fit_exponential_decay(&grid, &pops)?;
    if rms > T1_FIT_RESIDUAL {
        return Err(Error::Fit(format!("T1 fit residual {rms:.3e} above {T1_FIT_RESIDUAL:.0e}")));
    }
    Ok(ExperimentResult {
        times: grid,
        excited: pops,
        t1: Some(if rate > 0.0 { 1.0 / rate } else { f64::INFINITY }),
        ..Default::default()
    })
}

/// π/2 — free evolution at detuning Δ for T — π/2, reading ρ_ee(T). Pulses
/// are ideal and instantaneous. Fits the fringe frequency and the decay of
/// the fringe envelope.
pub fn ramsey_experiment(cfg: &RamseyConfig) -> Result<ExperimentResult> {
    if cfg.detuning == 0.0 {
        return Err(Error::Config("Ramsey detuning must be non-zero to produce fringes".into()));
    }
    let grid = uniform_grid(cfg.duration, cfg.samples)?;
    let half = x_rotation(PI / 2.0);
    let start = rotate(&ground(), &half);
    let l = single_qubit_liouvillian(0.0, cfg.detuning, &cfg.noise);
    let pops: Vec<f64> =
        grid.iter().map(|&t| rotate(&free_evolution(&start, &l, t), &half).matrix()[(1, 1)].re).collect();

    let target = cfg.detuning.abs();
    let freq = fringe_frequency(&grid, &pops, target)?;
    if ((freq - target) / target).abs() > 0.01 {
        return Err(Error::Fit(format!("fringe frequency {freq:.6e} rad/s inconsistent with detuning {target:.6e}")));
    }
    let rate = envelope_decay_rate(&grid, &pops, freq)?;
    let t2 = if rate < T2_RATE_FLOOR { f64::INFINITY } else { 1.0 / rate };
    Ok(ExperimentResult { times: grid, excited: pops, t2: Some(t2), frequency: Some(freq), ..Default::default() })
}

fn periodogram(times: &[f64], y: &[f64], w: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (&t, &v) in times.iter().zip(y) {
        re += (v - mean) * (w * t).cos();
        im += (v - mean) * (w * t).sin();
    }
    re * re + im * im
}

/// Periodogram peak between 0.5 and 1.5 times `guess`, refined by golden
/// section search.
fn fringe_frequency(times: &[f64], y: &[f64], guess: f64) -> Result<f64> {
    let (lo, hi) = (0.5 * guess, 1.5 * guess);
    let n = 4000;
    let step = (hi - lo) / n as f64;
    let (mut best_w, mut best_p) = (lo, f64::MIN);
    for k in 0..=n {
        let w = lo + k as f64 * step;
        let p = periodogram(times, y, w);
        if p > best_p {
            best_p = p;
            best_w = w;
        }
    }
    if best_p <= 0.0 {
        return Err(Error::Fit("no fringe signal".into()));
    }
    let (mut a, mut b) = ((best_w - step).max(lo), (best_w + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if periodogram(times, y, c) > periodogram(times, y, d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(0.5 * (a + b))
}

/// Fits c + a cos ωt + b sin ωt on consecutive one-period windows and
/// regresses ln √(a²+b²) on the window centres.
fn envelope_decay_rate(times: &[f64], y: &[f64], w: f64) -> Result<f64> {
    let period = 2.0 * PI / w;
    let mut centres = Vec::new();
    let mut amps = Vec::new();
    let mut start = 0;
    while start < times.len() {
        let t0 = times[start];
        let end = times.iter().position(|&t| t >= t0 + period).unwrap_or(times.len());
        if end - start < 5 || times[end - 1] - t0 < 0.9 * period {
            break;
        }
        let mut ata = Matrix3::<f64>::zeros();
        let mut atb = Vector3::<f64>::zeros();
        for k in start..end {
            let row = Vector3::new(1.0, (w * times[k]).cos(), (w * times[k]).sin());
            ata += row * row.transpose();
            atb += row * y[k];
        }
        let sol = ata.lu().solve(&atb).ok_or_else(|| Error::Fit("singular fringe window".into()))?;
        let amp = sol[1].hypot(sol[2]);
        if amp > 1e-9 {
            centres.push(0.5 * (t0 + times[end - 1]));
            amps.push(amp);
        }
        start = end;
    }
    if centres.len() < 3 {
        return Err(Error::Fit("fewer than 3 complete fringe periods in the grid".into()));
    }
    let (rate, _, _) = fit_exponential_decay(&centres, &amps)?;
    Ok(rate.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_rad;

    #[test]
    fn pi_time_from_rabi_frequency() {
        for (f, expected) in [(10e3, 50e-6), (3e3, 1.0 / 6e3)] {
            let omega = hz_to_rad(f);
            let res = rabi_experiment(&RabiConfig {
                omega,
                detuning: 0.0,
                noise: NoiseModel::default(),
                duration: 3.0 * PI / omega,
                samples: 601,
            })
            .unwrap();
            let pt = res.pi_time.unwrap();
            assert!((pt - expected).abs() / expected < 1e-4, "{pt} vs {expected}");
        }
    }

    #[test]
    fn rabi_peak_lowered_by_phase_noise() {
        let omega = hz_to_rad(1e3);
        let run = |gl: f64| {
            let res = rabi_experiment(&RabiConfig {
                omega,
                detuning: 0.0,
                noise: NoiseModel::new(1e-4, gl).unwrap(),
                duration: 2.0 * PI / omega,
                samples: 801,
            })
            .unwrap();
            let idx = res.times.iter().position(|&t| t >= res.pi_time.unwrap()).unwrap();
            res.excited[idx - 1].max(res.excited[idx])
        };
        assert!(run(100.0) < run(0.0));
    }

    #[test]
    fn no_peak_is_a_fit_error() {
        let omega = hz_to_rad(1e3);
        let res = rabi_experiment(&RabiConfig {
            omega,
            detuning: 0.0,
            noise: NoiseModel::default(),
            duration: 0.5 * PI / omega,
            samples: 50,
        });
        assert!(matches!(res, Err(Error::Fit(_))));
    }

    #[test]
    fn closed_ramsey_reports_infinite_t2() {
        let res = ramsey_experiment(&RamseyConfig {
            detuning: hz_to_rad(100.0),
            noise: NoiseModel::default(),
            duration: 0.1,
            samples: 2001,
        })
        .unwrap();
        assert_eq!(res.t2, Some(f64::INFINITY));
        let f = res.frequency.unwrap();
        assert!((f - hz_to_rad(100.0)).abs() / hz_to_rad(100.0) < 0.01);
    }
}
