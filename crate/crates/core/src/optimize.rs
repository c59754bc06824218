//! Pulse synthesis: multi-start BFGS on a smooth surrogate of the Magnus
//! cost, followed by minimum-norm Levenberg–Marquardt polishing.

use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::hz_to_rad;
use crate::error::{Error, Result};
use crate::lindblad::{noise_free_qubit_state, GateProblem, NoiseModel};
use crate::magnus::{residuals, summarize, MagnusProblem, MagnusSummary};
use crate::metrics::{bell_target, uhlmann_fidelity};
use crate::pulse::PulseSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub segments: usize,
    /// Gate duration τ in s.
    pub tau: f64,
    /// Bounds on V_ge in rad/s (half the Rabi frequency).
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub restarts: usize,
    pub seed: u64,
    pub cost_tol: f64,
    pub bfgs_iterations: u64,
    pub polish_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            segments: 40,
            tau: 0.1,
            amplitude_min: hz_to_rad(3e3) / 2.0,
            amplitude_max: hz_to_rad(20e3) / 2.0,
            restarts: 8,
            seed: 0,
            cost_tol: 1e-8,
            bfgs_iterations: 200,
            polish_iterations: 200,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 || self.restarts == 0 {
            return Err(Error::Config("segments and restarts must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Domain(format!("gate duration must be positive, got {}", self.tau)));
        }
        if !(0.0 <= self.amplitude_min && self.amplitude_min < self.amplitude_max && self.amplitude_max.is_finite()) {
            return Err(Error::Domain(format!(
                "amplitude bounds must satisfy 0 <= min < max, got [{}, {}]",
                self.amplitude_min, self.amplitude_max
            )));
        }
        if !(self.cost_tol > 0.0) {
            return Err(Error::Config("cost tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a synthesis run, converged or not.
#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub pulse: PulseSequence,
    pub summary: MagnusSummary,
    /// Index of the restart that produced the pulse.
    pub restart: usize,
    /// Final Magnus cost of every restart, in restart order.
    pub restart_costs: Vec<f64>,
    pub converged: bool,
}

/// Maps unconstrained variables z = (u_{j,k}, φ_{j,k}) to pulses with
/// V = V_min + (V_max − V_min)·σ(u).
struct Parametrization<'a> {
    problem: &'a MagnusProblem,
    cfg: &'a OptimizerConfig,
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

impl Parametrization<'_> {
    fn ions(&self) -> usize {
        self.problem.ion_count()
    }

    fn split(&self, z: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (n, k) = (self.ions(), self.cfg.segments);
        let span = self.cfg.amplitude_max - self.cfg.amplitude_min;
        let amps = (0..n)
            .map(|j| z[j * k..(j + 1) * k].iter().map(|&u| self.cfg.amplitude_min + span * sigmoid(u)).collect())
            .collect();
        let phases = (0..n).map(|j| z[(n + j) * k..(n + j + 1) * k].to_vec()).collect();
        (amps, phases)
    }

    fn pulse(&self, z: &[f64]) -> Result<PulseSequence> {
        let (a, p) = self.split(z);
        PulseSequence::uniform(self.cfg.tau, a, p)
    }

    /// Residuals and their Jacobian with respect to z.
    fn residuals(&self, z: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let r = residuals(&self.pulse(z)?, self.problem)?;
        let mut jac = r.jacobian;
        let span = self.cfg.amplitude_max - self.cfg.amplitude_min;
        let amp_cols = self.ions() * self.cfg.segments;
        for (c, &u) in z.iter().enumerate().take(amp_cols) {
            let s = sigmoid(u);
            jac.column_mut(c).scale_mut(span * s * (1.0 - s));
        }
        Ok((r.values, jac))
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let amp_cols = self.ions() * self.cfg.segments;
        (0..2 * amp_cols)
            .map(|c| if c < amp_cols { rng.random_range(-3.0..3.0) } else { rng.random_range(-PI..PI) })
            .collect()
    }
}

/// Surrogate Σ|β|² + (Σθ − θ_target)² = |r|².
struct Surrogate<'a>(Parametrization<'a>);

impl CostFunction for Surrogate<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, z: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (r, _) = self.0.residuals(z).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        Ok(r.norm_squared())
    }
}

impl Gradient for Surrogate<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, z: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let (r, j) = self.0.residuals(z).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        Ok((j.transpose() * r * 2.0).iter().copied().collect())
    }
}

fn bfgs(par: &Parametrization, z0: Vec<f64>, iterations: u64) -> Vec<f64> {
    let dim = z0.len();
    let inv_hessian: Vec<Vec<f64>> =
        (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let solver = BFGS::new(MoreThuenteLineSearch::new());
    let problem = Surrogate(Parametrization { problem: par.problem, cfg: par.cfg });
    let run = Executor::new(problem, solver)
        .configure(|s| s.param(z0.clone()).inv_hessian(inv_hessian).max_iters(iterations).target_cost(0.0))
        .run();
    // Line-search failures end the quasi-Newton stage; polishing continues
    // from wherever it got to.
    match run {
        Ok(res) => res.state.get_best_param().cloned().unwrap_or(z0),
        Err(_) => z0,
    }
}

/// Levenberg–Marquardt with minimum-norm steps Δz = −Jᵀ(JJᵀ + λI)⁻¹r,
/// suited to the underdetermined residual system.
fn polish(par: &Parametrization, mut z: Vec<f64>, iterations: usize, target: f64) -> Vec<f64> {
    let Ok((mut r, mut jac)) = par.residuals(&z) else { return z };
    let mut lambda = 1e-3 * (&jac * jac.transpose()).diagonal().max().max(1e-300);
    for _ in 0..iterations {
        if r.norm_squared() < target {
            break;
        }
        let jjt = &jac * jac.transpose();
        let m = jjt.nrows();
        let Some(y) = (jjt + DMatrix::identity(m, m) * lambda).cholesky().map(|c| c.solve(&r)) else {
            lambda *= 10.0;
            continue;
        };
        let step = jac.transpose() * y;
        let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a - b).collect();
        match par.residuals(&trial) {
            Ok((rt, jt)) if rt.norm_squared() < r.norm_squared() => {
                z = trial;
                r = rt;
                jac = jt;
                lambda = (lambda / 3.0).max(1e-300);
            }
            _ => {
                lambda *= 4.0;
                if !lambda.is_finite() {
                    break;
                }
            }
        }
    }
    z
}

struct Candidate {
    pulse: PulseSequence,
    summary: MagnusSummary,
}

fn run_restart(problem: &MagnusProblem, cfg: &OptimizerConfig, index: usize) -> Result<Candidate> {
    let par = Parametrization { problem, cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let z0 = par.random_start(&mut rng);
    let z1 = bfgs(&par, z0, cfg.bfgs_iterations);
    // |Σθ − target| enters the cost linearly, so drive |r|² well below tol².
    let z2 = polish(&par, z1, cfg.polish_iterations, (0.01 * cfg.cost_tol).powi(2));
    let pulse = par.pulse(&z2)?;
    let summary = summarize(&pulse, problem)?;
    Ok(Candidate { pulse, summary })
}

/// Runs every restart (concurrently) and returns the lowest-cost pulse, ties
/// broken by restart index.
pub fn optimize(problem: &MagnusProblem, cfg: &OptimizerConfig) -> Result<OptimizationReport> {
    cfg.validate()?;
    let candidates: Vec<Candidate> =
        (0..cfg.restarts).into_par_iter().map(|i| run_restart(problem, cfg, i)).collect::<Result<_>>()?;
    let restart_costs: Vec<f64> = candidates.iter().map(|c| c.summary.cost).collect();
    let best = restart_costs.iter().enumerate().fold(0, |b, (i, c)| {
        if *c < restart_costs[b] || restart_costs[b].is_nan() {
            i
        } else {
            b
        }
    });
    let Candidate { pulse, summary } = candidates.into_iter().nth(best).expect("at least one restart");
    let converged = summary.cost <= cfg.cost_tol;
    Ok(OptimizationReport { pulse, summary, restart: best, restart_costs, converged })
}

/// Like [`optimize`] but fails when the cost tolerance is not reached.
pub fn optimize_pulse(problem: &MagnusProblem, cfg: &OptimizerConfig) -> Result<PulseSequence> {
    let report = optimize(problem, cfg)?;
    if !report.converged {
        return Err(Error::Optimization { target: cfg.cost_tol, best: report.summary.cost });
    }
    Ok(report.pulse)
}

/// Bell-state fidelity of the gate at one frequency drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessPoint {
    /// δΔ in rad/s.
    pub drift: f64,
    pub fidelity: f64,
}

/// Noise-free gate fidelity with (|00⟩ + i|11⟩)/√2 for every drift δΔ
/// (Δ → Δ + δΔ). Each point is the exact final state from
/// [`noise_free_qubit_state`], so large off-resonant displacements need no
/// Fock cutoff. Grid points run concurrently; results keep the order of
/// `drifts`.
pub fn robustness_scan(base: &GateProblem, drifts: &[f64]) -> Result<Vec<RobustnessPoint>> {
    let target = bell_target();
    drifts
        .par_iter()
        .map(|&drift| {
            let problem = GateProblem { drift, noise: NoiseModel::default(), initial: None, ..base.clone() };
            let rho = noise_free_qubit_state(&problem)?;
            Ok(RobustnessPoint { drift, fidelity: uhlmann_fidelity(&rho, &target)? })
        })
        .collect()
}

/// Drift interval around δΔ = 0 over which the fidelity stays at or above
/// half way between the curve's minimum and maximum. Edges are linearly
/// interpolated between grid points, or clipped to the grid ends.
pub fn half_maximum_window(curve: &[RobustnessPoint]) -> Result<(f64, f64)> {
    if curve.len() < 2 || curve.windows(2).any(|w| w[1].drift <= w[0].drift) {
        return Err(Error::Config("robustness curve needs at least two points with increasing drift".into()));
    }
    let (lo, hi) =
        curve.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.fidelity), b.max(p.fidelity)));
    let threshold = 0.5 * (lo + hi);
    let centre = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.drift.abs().total_cmp(&b.1.drift.abs()))
        .map(|(i, _)| i)
        .expect("non-empty curve");
    if curve[centre].fidelity < threshold {
        return Ok((curve[centre].drift, curve[centre].drift));
    }
    let crossing = |inside: &RobustnessPoint, outside: &RobustnessPoint| {
        let f = (inside.fidelity - threshold) / (inside.fidelity - outside.fidelity);
        inside.drift + f * (outside.drift - inside.drift)
    };
    let mut upper = curve.last().expect("non-empty").drift;
    for i in centre..curve.len() - 1 {
        if curve[i + 1].fidelity < threshold {
            upper = crossing(&curve[i], &curve[i + 1]);
            break;
        }
    }
    let mut lower = curve[0].drift;
    for i in (1..=centre).rev() {
        if curve[i - 1].fidelity < threshold {
            lower = crossing(&curve[i], &curve[i - 1]);
            break;
        }
    }
    Ok((lower, upper))
}
