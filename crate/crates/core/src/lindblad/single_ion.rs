use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::density::{pauli, CMatrix, DensityMatrix, C64};
use crate::error::{Error, Result};

/// Isomer decay Γ_ge and laser phase-noise rate Γ_l, both in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub decay_rate: f64,
    pub dephasing_rate: f64,
}

impl NoiseModel {
    pub fn new(decay_rate: f64, dephasing_rate: f64) -> Result<Self> {
        if !(decay_rate >= 0.0) || !(dephasing_rate >= 0.0) {
            return Err(Error::Config("noise rates must be >= 0".into()));
        }
        Ok(Self { decay_rate, dephasing_rate })
    }

    pub fn is_noiseless(&self) -> bool {
        self.decay_rate == 0.0 && self.dephasing_rate == 0.0
    }

    /// Γ̃ = (Γ_l + Γ_ge)/2, the coherence damping of the Bloch equations.
    pub fn bloch_coherence_rate(&self) -> f64 {
        0.5 * (self.dephasing_rate + self.decay_rate)
    }
}

/// Time series of one experiment, with whichever scalars were fitted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub times: Vec<f64>,
    /// ρ_ee at each time.
    pub excited: Vec<f64>,
    pub pi_time: Option<f64>,
    pub t1: Option<f64>,
    /// `f64::INFINITY` when the fitted decay rate is below the noise floor.
    pub t2: Option<f64>,
    /// Fitted oscillation frequency (rad/s).
    pub frequency: Option<f64>,
}

/// Fixed-step RK4 settings with step-halving refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkOptions {
    /// Steps per 1/f_max; the step is ≤ 1/(steps_per_unit · f_max).
    pub steps_per_unit: f64,
    /// Accept once halving the step moves every population by less than this.
    pub tolerance: f64,
    pub max_refinements: u32,
}

impl Default for RkOptions {
    fn default() -> Self {
        Self { steps_per_unit: 50.0, tolerance: 1e-6, max_refinements: 6 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Bloch {
    ee: f64,
    gg: f64,
    ge: C64,
}

impl Bloch {
    fn axpy(self, h: f64, d: Bloch) -> Bloch {
        Bloch { ee: self.ee + h * d.ee, gg: self.gg + h * d.gg, ge: self.ge + d.ge * h }
    }
}

fn bloch_rhs(s: Bloch, v_ge: C64, detuning: f64, noise: &NoiseModel) -> Bloch {
    let v_eg = v_ge.conj();
    let ge = s.ge;
    let eg = ge.conj();
    let i = C64::i();
    let d_ee = (-i * (v_eg * ge - v_ge * eg)).re - s.ee * noise.decay_rate;
    let gamma_t = noise.bloch_coherence_rate();
    let d_ge = -i * v_ge * (s.ee - s.gg) - (i * detuning + gamma_t) * ge;
    Bloch { ee: d_ee, gg: -d_ee, ge: d_ge }
}

fn rk4_step(s: Bloch, h: f64, v: C64, det: f64, noise: &NoiseModel) -> Bloch {
    let k1 = bloch_rhs(s, v, det, noise);
    let k2 = bloch_rhs(s.axpy(h / 2.0, k1), v, det, noise);
    let k3 = bloch_rhs(s.axpy(h / 2.0, k2), v, det, noise);
    let k4 = bloch_rhs(s.axpy(h, k3), v, det, noise);
    Bloch {
        ee: s.ee + h / 6.0 * (k1.ee + 2.0 * k2.ee + 2.0 * k3.ee + k4.ee),
        gg: s.gg + h / 6.0 * (k1.gg + 2.0 * k2.gg + 2.0 * k3.gg + k4.gg),
        ge: s.ge + (k1.ge + k2.ge * 2.0 + k3.ge * 2.0 + k4.ge) * (h / 6.0),
    }
}

fn integrate(init: Bloch, v: C64, det: f64, noise: &NoiseModel, grid: &[f64], h_max: f64) -> Vec<Bloch> {
    let mut out = Vec::with_capacity(grid.len());
    let mut s = init;
    let mut t = 0.0;
    for &target in grid {
        let span = target - t;
        if span > 0.0 {
            let n = (span / h_max).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                s = rk4_step(s, h, v, det, noise);
            }
        }
        t = target;
        out.push(s);
    }
    out
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("time grid must be finite, non-negative and ascending".into()));
    }
    Ok(())
}

/// Integrates the two-level Bloch equations with V_ge = Ω/2 from `init`
/// (basis |g⟩=0, |e⟩=1), returning ρ_ee and the state at every grid time.
pub fn evolve_single_ion(
    init: &DensityMatrix,
    omega: f64,
    detuning: f64,
    noise: &NoiseModel,
    t_grid: &[f64],
    opts: &RkOptions,
) -> Result<(ExperimentResult, Vec<DensityMatrix>)> {
    if init.dim() != 2 {
        return Err(Error::Shape { expected: 2, got: init.dim() });
    }
    init.check()?;
    check_grid(t_grid)?;
    let m = init.matrix();
    let start = Bloch { ee: m[(1, 1)].re, gg: m[(0, 0)].re, ge: m[(0, 1)] };
    let v = C64::new(omega / 2.0, 0.0);

    let f_max = omega.abs().max(detuning.abs()).max(noise.decay_rate).max(noise.dephasing_rate).max(f64::MIN_POSITIVE);
    let mut h = 1.0 / (opts.steps_per_unit * f_max);
    let mut coarse = integrate(start, v, detuning, noise, t_grid, h);
    let mut converged = false;
    let mut last_diff = f64::INFINITY;
    for _ in 0..=opts.max_refinements {
        h /= 2.0;
        let fine = integrate(start, v, detuning, noise, t_grid, h);
        last_diff =
            coarse.iter().zip(&fine).map(|(a, b)| (a.ee - b.ee).abs().max((a.gg - b.gg).abs())).fold(0.0, f64::max);
        coarse = fine;
        if last_diff < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "RK4 step refinement did not converge: step {h:.3e} s, last change {last_diff:.3e}"
        )));
    }

    let mut states = Vec::with_capacity(t_grid.len());
    for s in &coarse {
        let rho = CMatrix::from_row_slice(2, 2, &[C64::new(s.gg, 0.0), s.ge, s.ge.conj(), C64::new(s.ee, 0.0)]);
        states.push(DensityMatrix::from_matrix_unchecked(rho));
    }
    let result = ExperimentResult {
        times: t_grid.to_vec(),
        excited: coarse.iter().map(|s| s.ee).collect(),
        ..Default::default()
    };
    Ok((result, states))
}

/// Whether Ω ≫ max(Γ_ge/2, Γ_l/2) holds (factor 20), the regime where the
/// damped closed form applies.
pub fn strong_drive_regime(omega: f64, noise: &NoiseModel) -> bool {
    omega.abs() >= 20.0 * 0.5 * noise.decay_rate.max(noise.dephasing_rate)
}

/// ρ_ee(∞) = Γ̃Ω² / (2(Γ_ge(Δ² + Γ̃²) + Γ̃Ω²)).
pub fn steady_state_population(omega: f64, detuning: f64, noise: &NoiseModel) -> f64 {
    let gt = noise.bloch_coherence_rate();
    let num = gt * omega * omega;
    let den = 2.0 * (noise.decay_rate * (detuning * detuning + gt * gt) + gt * omega * omega);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Closed-form damped Rabi population from the ground state.
///
/// ρ_ee(t) = ρ_∞ [1 − e^{−(Γ_ge+Γ̃)t/2} (cos λt + (Γ_ge+Γ̃)/(2λ) sin λt)],
/// λ = |Ω² + Δ² − (Γ̃+Γ_ge)²/4|^{1/2}. Valid for Ω ≫ Γ (see
/// [`strong_drive_regime`]); evaluated regardless.
pub fn analytic_damped_rabi(omega: f64, detuning: f64, noise: &NoiseModel, t: f64) -> f64 {
    let g = noise.decay_rate;
    let gt = noise.bloch_coherence_rate();
    let sum = g + gt;
    let lambda = (omega * omega + detuning * detuning - sum * sum / 4.0).abs().sqrt();
    let closed = noise.is_noiseless();
    let prefactor = if closed { 0.5 } else { steady_state_population(omega, detuning, noise) };
    let sin_term = if lambda > 0.0 { sum / (2.0 * lambda) * (lambda * t).sin() } else { sum / 2.0 * t };
    prefactor * (1.0 - (-0.5 * sum * t).exp() * ((lambda * t).cos() + sin_term))
}

/// Liouvillian of one qubit under H = (Δ/2)σz + (Ω/2)σx with the decay
/// dissipator Γ_ge D[σ−] and phase noise Γ_l(σzρσz − ρ), acting on
/// column-stacked vec(ρ).
pub fn single_qubit_liouvillian(omega: f64, detuning: f64, noise: &NoiseModel) -> CMatrix {
    let h = pauli::z() * C64::new(detuning / 2.0, 0.0) + pauli::x() * C64::new(omega / 2.0, 0.0);
    let id = CMatrix::identity(2, 2);
    let i = C64::i();
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-i);
    let mut add_dissipator = |op: CMatrix, rate: f64| {
        if rate == 0.0 {
            return;
        }
        let ldl = op.adjoint() * &op;
        let term = op.conjugate().kronecker(&op)
            - id.kronecker(&ldl) * C64::new(0.5, 0.0)
            - ldl.transpose().kronecker(&id) * C64::new(0.5, 0.0);
        l += term * C64::new(rate, 0.0);
    };
    add_dissipator(pauli::lower(), noise.decay_rate);
    add_dissipator(pauli::z(), noise.dephasing_rate);
    l
}

/// Exact propagation of a time-independent single-qubit Liouvillian.
pub fn free_evolution(rho: &DensityMatrix, liouvillian: &CMatrix, t: f64) -> DensityMatrix {
    let prop = (liouvillian * C64::new(t, 0.0)).exp();
    let v = DMatrix::from_column_slice(4, 1, rho.matrix().as_slice());
    let out = prop * v;
    DensityMatrix::from_matrix_unchecked(CMatrix::from_column_slice(2, 2, out.as_slice()))
}
