//! Second-order Magnus quantities for piecewise-constant Mølmer–Sørensen
//! drives.
//!
//! With f_{j,p}(t) = η_{j,p} V_j(t) e^{i(φ_j(t) + δ_p t)} the propagator is
//! exactly
//!
//! U(τ) = D(−β) · exp(i Σ_{j≠j'} θ_{j,j'} σx^j σx^{j'})
//!
//! where β_{j,p} = ∫₀^τ f_{j,p} dt and
//! θ_{j,j'} = Σ_p ∫∫_{t₂<t₁} Im[f_{j,p}(t₁) f̄_{j',p}(t₂)] dt₂ dt₁.
//! Im β_{j,p} is the sine integral ∫ηV sin(φ + δt) dt.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, DVector};

use crate::density::C64;
use crate::error::{Error, Result};
use crate::physics::TrapModes;
use crate::pulse::PulseSequence;

/// Below this |δT| the segment integrals switch to their Taylor series.
const SERIES_THRESHOLD: f64 = 0.5;
const SERIES_TERMS: usize = 18;

/// Coupling data shared by every Magnus evaluation of a gate.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnusProblem {
    /// η_{j,p}, ions × modes.
    pub lamb_dicke: DMatrix<f64>,
    /// δ_p = Δ − ω_p in rad/s.
    pub detunings: Vec<f64>,
    /// Required Σ_{j≠j'} θ_{j,j'}; π/4 for the maximally entangling gate.
    pub target_phase: f64,
}

impl MagnusProblem {
    pub fn new(lamb_dicke: DMatrix<f64>, detunings: Vec<f64>) -> Result<Self> {
        if lamb_dicke.ncols() != detunings.len() {
            return Err(Error::Shape { expected: detunings.len(), got: lamb_dicke.ncols() });
        }
        if detunings.iter().chain(lamb_dicke.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite coupling or detuning".into()));
        }
        Ok(Self { lamb_dicke, detunings, target_phase: FRAC_PI_4 })
    }

    /// Uses the trap's Lamb–Dicke matrix and δ_p = Δ − ω_p.
    pub fn from_modes(modes: &TrapModes, laser_detuning: f64) -> Result<Self> {
        Self::new(modes.lamb_dicke.clone(), modes.frequencies.iter().map(|w| laser_detuning - w).collect())
    }

    pub fn with_target(mut self, phase: f64) -> Self {
        self.target_phase = phase;
        self
    }

    pub fn ion_count(&self) -> usize {
        self.lamb_dicke.nrows()
    }

    pub fn mode_count(&self) -> usize {
        self.detunings.len()
    }

    fn check(&self, pulse: &PulseSequence) -> Result<()> {
        if pulse.ion_count() != self.ion_count() {
            return Err(Error::Shape { expected: self.ion_count(), got: pulse.ion_count() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnusSummary {
    /// β_{j,p}, ions × modes.
    pub beta: DMatrix<C64>,
    /// θ_{j,j'}, not symmetrized; the diagonal only contributes a global phase.
    pub theta: DMatrix<f64>,
    pub cost: f64,
}

impl MagnusSummary {
    /// Σ_{j≠j'} θ_{j,j'}.
    pub fn geometric_phase(&self) -> f64 {
        off_diagonal_sum(&self.theta)
    }

    /// (θ + θᵀ)/2.
    pub fn symmetrized_theta(&self) -> DMatrix<f64> {
        (&self.theta + self.theta.transpose()) * 0.5
    }
}

fn off_diagonal_sum(m: &DMatrix<f64>) -> f64 {
    m.sum() - m.diagonal().sum()
}

/// (e^{ix} − 1)/(ix).
fn phase_average(x: f64) -> C64 {
    if x.abs() < SERIES_THRESHOLD {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..SERIES_TERMS {
            term *= C64::new(0.0, x) / (n + 1) as f64;
            sum += term;
        }
        sum
    } else {
        (C64::from_polar(1.0, x) - 1.0) / C64::new(0.0, x)
    }
}

/// ∫₀¹∫₀^{s₁} e^{ix(s₁−s₂)} ds₂ ds₁ = i(1 − (e^{ix} − 1)/(ix))/x.
fn ordered_average(x: f64) -> C64 {
    if x.abs() < SERIES_THRESHOLD {
        // Σ_{n≥0} (ix)^n/(n+2)!
        let mut term = C64::new(0.5, 0.0);
        let mut sum = term;
        for n in 1..SERIES_TERMS {
            term *= C64::new(0.0, x) / (n + 2) as f64;
            sum += term;
        }
        sum
    } else {
        C64::new(0.0, 1.0) * (1.0 - phase_average(x)) / x
    }
}

/// c_k = ∫ e^{iδt} dt and w_k = ∫∫_{t₂<t₁} e^{iδ(t₁−t₂)} over each segment.
struct SegmentIntegrals {
    c: Vec<C64>,
    w: Vec<C64>,
}

impl SegmentIntegrals {
    fn new(pulse: &PulseSequence, delta: f64) -> Self {
        let starts = pulse.boundaries();
        let (c, w) = pulse
            .durations()
            .iter()
            .zip(&starts)
            .map(|(&d, &t0)| {
                let x = delta * d;
                (C64::from_polar(d, delta * t0) * phase_average(x), d * d * ordered_average(x))
            })
            .unzip();
        Self { c, w }
    }
}

/// x_{j,k} = η V_{j,k} e^{iφ_{j,k}} for one mode.
fn drive_weights(pulse: &PulseSequence, eta: &[f64]) -> Vec<Vec<C64>> {
    (0..pulse.ion_count())
        .map(|j| {
            pulse.amplitudes(j).iter().zip(pulse.phases(j)).map(|(&v, &phi)| C64::from_polar(eta[j] * v, phi)).collect()
        })
        .collect()
}

fn eta_column(problem: &MagnusProblem, p: usize) -> Vec<f64> {
    problem.lamb_dicke.column(p).iter().copied().collect()
}

/// β_{j,p}(τ), ions × modes.
pub fn magnus_beta(pulse: &PulseSequence, problem: &MagnusProblem) -> Result<DMatrix<C64>> {
    problem.check(pulse)?;
    let mut beta = DMatrix::zeros(problem.ion_count(), problem.mode_count());
    for (p, &delta) in problem.detunings.iter().enumerate() {
        let seg = SegmentIntegrals::new(pulse, delta);
        for (j, xs) in drive_weights(pulse, &eta_column(problem, p)).iter().enumerate() {
            beta[(j, p)] = xs.iter().zip(&seg.c).map(|(x, c)| x * c).sum();
        }
    }
    Ok(beta)
}

/// Complex ordered double integral Z_{j,j'} for one mode; θ is its imaginary part.
fn ordered_pair_integrals(xs: &[Vec<C64>], seg: &SegmentIntegrals) -> DMatrix<C64> {
    let n = xs.len();
    let mut z = DMatrix::zeros(n, n);
    for j in 0..n {
        for jp in 0..n {
            let mut prefix = C64::new(0.0, 0.0);
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..seg.c.len() {
                acc += xs[j][k] * seg.c[k] * prefix.conj() + xs[j][k] * xs[jp][k].conj() * seg.w[k];
                prefix += xs[jp][k] * seg.c[k];
            }
            z[(j, jp)] = acc;
        }
    }
    z
}

/// θ_{j,j'} contributed by each mode separately.
pub fn magnus_theta_per_mode(pulse: &PulseSequence, problem: &MagnusProblem) -> Result<Vec<DMatrix<f64>>> {
    problem.check(pulse)?;
    Ok(problem
        .detunings
        .iter()
        .enumerate()
        .map(|(p, &delta)| {
            let seg = SegmentIntegrals::new(pulse, delta);
            ordered_pair_integrals(&drive_weights(pulse, &eta_column(problem, p)), &seg).map(|z| z.im)
        })
        .collect())
}

/// θ_{j,j'}(τ) summed over modes.
pub fn magnus_theta(pulse: &PulseSequence, problem: &MagnusProblem) -> Result<DMatrix<f64>> {
    let n = problem.ion_count();
    Ok(magnus_theta_per_mode(pulse, problem)?.into_iter().fold(DMatrix::zeros(n, n), |a, b| a + b))
}

/// β, θ and C = Σ_{j,p}|β_{j,p}|² + |Σ_{j≠j'}θ_{j,j'} − θ_target|.
pub fn summarize(pulse: &PulseSequence, problem: &MagnusProblem) -> Result<MagnusSummary> {
    let beta = magnus_beta(pulse, problem)?;
    let theta = magnus_theta(pulse, problem)?;
    let cost = beta.iter().map(|b| b.norm_sqr()).sum::<f64>() + (off_diagonal_sum(&theta) - problem.target_phase).abs();
    Ok(MagnusSummary { beta, theta, cost })
}

pub fn cost(pulse: &PulseSequence, problem: &MagnusProblem) -> Result<f64> {
    Ok(summarize(pulse, problem)?.cost)
}

/// Residual vector r = (Re β, Im β for each (j,p), Σθ − θ_target) and its
/// Jacobian with respect to (V_{j,k} for all j,k; then φ_{j,k}).
#[derive(Debug, Clone)]
pub struct Residuals {
    pub values: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

impl Residuals {
    pub fn amplitude_column(ions: usize, segments: usize, j: usize, k: usize) -> usize {
        debug_assert!(j < ions);
        j * segments + k
    }

    pub fn phase_column(ions: usize, segments: usize, j: usize, k: usize) -> usize {
        ions * segments + j * segments + k
    }
}

pub fn residuals(pulse: &PulseSequence, problem: &MagnusProblem) -> Result<Residuals> {
    problem.check(pulse)?;
    let (n, m, kk) = (problem.ion_count(), problem.mode_count(), pulse.segment_count());
    let rows = 2 * n * m + 1;
    let mut values = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, 2 * n * kk);
    let last = rows - 1;
    let mut phase = -problem.target_phase;

    for (p, &delta) in problem.detunings.iter().enumerate() {
        let eta = eta_column(problem, p);
        let seg = SegmentIntegrals::new(pulse, delta);
        let xs = drive_weights(pulse, &eta);

        // β rows.
        for j in 0..n {
            let (re_row, im_row) = (2 * (j * m + p), 2 * (j * m + p) + 1);
            let mut beta = C64::new(0.0, 0.0);
            for k in 0..kk {
                let term = xs[j][k] * seg.c[k];
                beta += term;
                let d_amp = C64::from_polar(eta[j], pulse.phases(j)[k]) * seg.c[k];
                let d_phase = C64::new(0.0, 1.0) * term;
                let (ca, cp) = (Residuals::amplitude_column(n, kk, j, k), Residuals::phase_column(n, kk, j, k));
                jac[(re_row, ca)] = d_amp.re;
                jac[(im_row, ca)] = d_amp.im;
                jac[(re_row, cp)] = d_phase.re;
                jac[(im_row, cp)] = d_phase.im;
            }
            values[re_row] = beta.re;
            values[im_row] = beta.im;
        }

        // Σ_{j≠j'} Z_{j,j'}: holomorphic derivative A in x_{i,k}, antiholomorphic B.
        let z = ordered_pair_integrals(&xs, &seg);
        phase += off_diagonal_sum(&z.map(|v| v.im));
        // prefix[j][k] = Σ_{l<k} x_{j,l} c_l; suffix[j][k] = Σ_{l>k} x_{j,l} c_l.
        let mut prefix = vec![vec![C64::new(0.0, 0.0); kk]; n];
        let mut suffix = vec![vec![C64::new(0.0, 0.0); kk]; n];
        for j in 0..n {
            for k in 1..kk {
                prefix[j][k] = prefix[j][k - 1] + xs[j][k - 1] * seg.c[k - 1];
            }
            for k in (0..kk.saturating_sub(1)).rev() {
                suffix[j][k] = suffix[j][k + 1] + xs[j][k + 1] * seg.c[k + 1];
            }
        }
        for i in 0..n {
            for k in 0..kk {
                let mut a = C64::new(0.0, 0.0);
                let mut b = C64::new(0.0, 0.0);
                for o in (0..n).filter(|&o| o != i) {
                    a += seg.c[k] * prefix[o][k].conj() + xs[o][k].conj() * seg.w[k];
                    b += seg.c[k].conj() * suffix[o][k] + xs[o][k] * seg.w[k];
                }
                let dx_amp = C64::from_polar(eta[i], pulse.phases(i)[k]);
                let dx_phase = C64::new(0.0, 1.0) * xs[i][k];
                let ca = Residuals::amplitude_column(n, kk, i, k);
                let cp = Residuals::phase_column(n, kk, i, k);
                jac[(last, ca)] += (a * dx_amp + b * dx_amp.conj()).im;
                jac[(last, cp)] += (a * dx_phase + b * dx_phase.conj()).im;
            }
        }
    }
    values[last] = phase;
    Ok(Residuals { values, jacobian: jac })
}
