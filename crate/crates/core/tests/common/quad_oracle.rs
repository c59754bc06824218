//! Independent adaptive-quadrature evaluation of β and θ, used to check the
//! closed forms. Each segment is split into pieces of at most `MAX_PHASE`
//! radians of carrier phase and integrated with Clenshaw–Curtis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use quadrature::clenshaw_curtis::integrate;
use thq_core::magnus::MagnusProblem;
use thq_core::pulse::PulseSequence;

const MAX_PHASE: f64 = 1.0;

fn pieces(a: f64, b: f64, delta: f64) -> Vec<(f64, f64)> {
    let n = (((b - a) * delta.abs()) / MAX_PHASE).ceil().max(1.0) as usize;
    (0..n).map(|i| (a + (b - a) * i as f64 / n as f64, a + (b - a) * (i + 1) as f64 / n as f64)).collect()
}

fn complex_quad(f: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    let re = integrate(|t| f(t).re, a, b, tol).integral;
    let im = integrate(|t| f(t).im, a, b, tol).integral;
    Complex64::new(re, im)
}

/// f(t) = η V e^{i(φ + δt)} on segment k.
fn carrier(eta: f64, v: f64, phi: f64, delta: f64) -> impl Fn(f64) -> Complex64 {
    move |t| Complex64::from_polar(eta * v, phi + delta * t)
}

/// ∫_a^b of ion j's drive for mode p within segment k.
fn seg_integral(pulse: &PulseSequence, eta: f64, delta: f64, j: usize, k: usize, a: f64, b: f64) -> Complex64 {
    let f = carrier(eta, pulse.amplitudes(j)[k], pulse.phases(j)[k], delta);
    let scale = (eta * pulse.amplitudes(j)[k]).abs() * (b - a) + 1e-300;
    pieces(a, b, delta).into_iter().map(|(x, y)| complex_quad(&f, x, y, 1e-14 * scale)).sum()
}

pub fn beta(pulse: &PulseSequence, problem: &MagnusProblem) -> DMatrix<Complex64> {
    let bounds = pulse.boundaries();
    DMatrix::from_fn(problem.ion_count(), problem.mode_count(), |j, p| {
        let eta = problem.lamb_dicke[(j, p)];
        (0..pulse.segment_count())
            .map(|k| seg_integral(pulse, eta, problem.detunings[p], j, k, bounds[k], bounds[k + 1]))
            .sum()
    })
}

/// θ_{j,j'} = Σ_p Im ∫₀^τ f_j(t₁) conj(F_{j'}(t₁)) dt₁ with F the running
/// integral of f_{j'}; the inner integral is itself computed by quadrature.
pub fn theta(pulse: &PulseSequence, problem: &MagnusProblem) -> DMatrix<f64> {
    let n = problem.ion_count();
    let bounds = pulse.boundaries();
    let kk = pulse.segment_count();
    let mut out = DMatrix::zeros(n, n);
    for p in 0..problem.mode_count() {
        let delta = problem.detunings[p];
        for j in 0..n {
            for jp in 0..n {
                let (eta, eta_p) = (problem.lamb_dicke[(j, p)], problem.lamb_dicke[(jp, p)]);
                let mut before = Complex64::new(0.0, 0.0);
                let mut total = Complex64::new(0.0, 0.0);
                for k in 0..kk {
                    let (a, b) = (bounds[k], bounds[k + 1]);
                    let f = carrier(eta, pulse.amplitudes(j)[k], pulse.phases(j)[k], delta);
                    let running = |t: f64| before + seg_integral(pulse, eta_p, delta, jp, k, a, t);
                    let g = |t: f64| f(t) * running(t).conj();
                    let scale = (eta * pulse.amplitudes(j)[k]).abs()
                        * (before.norm() + (eta_p * pulse.amplitudes(jp)[k]).abs() * (b - a))
                        * (b - a)
                        + 1e-300;
                    for (x, y) in pieces(a, b, delta) {
                        total += complex_quad(g, x, y, 1e-13 * scale);
                    }
                    before += seg_integral(pulse, eta_p, delta, jp, k, a, b);
                }
                out[(j, jp)] += total.im;
            }
        }
    }
    out
}
