//! Gate propagation against direct RK4 integration of the interaction-frame
//! master equation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thq_core::density::{pauli, CMatrix, DensityMatrix, HilbertSpace, C64};
use thq_core::lindblad::{evolve_two_ion_gate, GateOptions, GateProblem, NoiseModel};
use thq_core::physics::TrapModes;
use thq_core::pulse::PulseSequence;

fn annihilation(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn embed(qubit_op: &CMatrix, mode_ops: &[CMatrix]) -> CMatrix {
    mode_ops.iter().fold(qubit_op.clone(), |acc, m| acc.kronecker(m))
}

/// H_I(t) = Σ_{j,p} σx^j (g e^{iδ_p t} a_p† + h.c.), g = −iηV e^{iφ}.
fn hamiltonian(problem: &GateProblem, t: f64) -> CMatrix {
    let space = &problem.space;
    let n = space.qubit_count;
    let d = space.dim();
    let k = problem.pulse.segment_at(t);
    let mut h = CMatrix::zeros(d, d);
    for p in 0..space.mode_count() {
        let mut ops: Vec<CMatrix> = space.fock_cutoffs.iter().map(|&c| CMatrix::identity(c + 1, c + 1)).collect();
        ops[p] = annihilation(space.fock_cutoffs[p]);
        let delta = problem.detunings()[p];
        for j in 0..n {
            let seg = problem.pulse.segment(j, k);
            let g = C64::new(0.0, -1.0)
                * C64::from_polar(problem.modes.lamb_dicke[(j, p)] * seg.amplitude, seg.phase + delta * t);
            let a = embed(&pauli::on_site(&pauli::x(), j, n), &ops);
            h += a.adjoint() * g + &a * g.conj();
        }
    }
    h
}

fn lindblad_rhs(problem: &GateProblem, t: f64, rho: &CMatrix) -> CMatrix {
    let space = &problem.space;
    let n = space.qubit_count;
    let h = hamiltonian(problem, t);
    let i = C64::new(0.0, 1.0);
    let mut out = (&h * rho - rho * &h) * (-i);
    let ph: Vec<CMatrix> = space.fock_cutoffs.iter().map(|&c| CMatrix::identity(c + 1, c + 1)).collect();
    for j in 0..n {
        let z = embed(&pauli::on_site(&pauli::z(), j, n), &ph);
        out += (&z * rho * &z - rho) * C64::new(problem.noise.dephasing_rate, 0.0);
        let l = embed(&pauli::on_site(&pauli::lower(), j, n), &ph);
        let ldl = l.adjoint() * &l;
        out += (&l * rho * l.adjoint() - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0))
            * C64::new(problem.noise.decay_rate, 0.0);
    }
    out
}

/// Fixed-step RK4 that never steps across a segment boundary.
fn rk4(problem: &GateProblem, rho0: &CMatrix, t_end: f64, steps_per_segment: usize) -> CMatrix {
    let mut rho = rho0.clone();
    let b = problem.pulse.boundaries();
    for k in 0..problem.pulse.segment_count() {
        let (a, z) = (b[k], b[k + 1].min(t_end));
        if z <= a {
            break;
        }
        let h = (z - a) / steps_per_segment as f64;
        for s in 0..steps_per_segment {
            // Sample the segment interior so the boundary lookup is unambiguous.
            let t = a + s as f64 * h;
            let tm = (t + 0.5 * h).min(z - 1e-3 * h);
            let te = (t + h).min(z - 1e-6 * h);
            let k1 = lindblad_rhs(problem, t.max(a + 1e-6 * h), &rho);
            let k2 = lindblad_rhs(problem, tm, &(&rho + &k1 * C64::new(0.5 * h, 0.0)));
            let k3 = lindblad_rhs(problem, tm, &(&rho + &k2 * C64::new(0.5 * h, 0.0)));
            let k4 = lindblad_rhs(problem, te, &(&rho + &k3 * C64::new(h, 0.0)));
            rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        }
    }
    rho
}

fn random_problem(seed: u64, noise: NoiseModel) -> GateProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 200e-6;
    let vmax = 2.0 * PI * 30e3;
    let amps = (0..2).map(|_| (0..5).map(|_| rng.random_range(0.0..vmax)).collect()).collect();
    let phases = (0..2).map(|_| (0..5).map(|_| rng.random_range(-PI..PI)).collect()).collect();
    let pulse = PulseSequence::uniform(tau, amps, phases).unwrap();
    let eta = DMatrix::from_row_slice(2, 2, &[0.13, 0.10, 0.13, -0.10]);
    let modes = TrapModes::from_lamb_dicke(vec![2.0 * PI * 1.0e6, 2.0 * PI * 1.1e6], eta).unwrap();
    GateProblem {
        pulse,
        modes,
        laser_detuning: 2.0 * PI * 1.06e6,
        drift: 0.0,
        noise,
        space: HilbertSpace::new(2, vec![2, 2]).unwrap(),
        initial: None,
    }
}

fn initial(problem: &GateProblem) -> CMatrix {
    let psi = problem.space.basis_ket(0, &[0, 0]);
    &psi * psi.adjoint()
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn noise_free_gate_matches_rk4() {
    let problem = random_problem(1, NoiseModel::default());
    let tau = problem.pulse.duration();
    let opts = GateOptions { truncation_tol: f64::INFINITY, ..Default::default() };
    let traj = evolve_two_ion_gate(&problem, &[0.5 * tau, tau], &opts).unwrap();
    let reference = rk4(&problem, &initial(&problem), tau, 400);
    let got = traj.last().unwrap().full_state().matrix();
    assert!(max_abs_diff(got, &reference) < 1e-8, "{}", max_abs_diff(got, &reference));
}

#[test]
fn noisy_gate_matches_rk4() {
    let noise = NoiseModel::new(300.0, 500.0).unwrap();
    let problem = random_problem(2, noise);
    let tau = problem.pulse.duration();
    let opts = GateOptions { truncation_tol: f64::INFINITY, phase_per_step: 0.05, ..Default::default() };
    let traj = evolve_two_ion_gate(&problem, &[tau], &opts).unwrap();
    let reference = rk4(&problem, &initial(&problem), tau, 400);
    let got = traj.last().unwrap().full_state();
    got.check().unwrap();
    let diff = max_abs_diff(got.matrix(), &reference);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn resonant_sideband_oscillation() {
    // One ion, one mode at δ = 0, n_max = 1: |e,0⟩ ↔ |g,1⟩ at rate ηV.
    let (eta, v) = (0.1, 2.0 * PI * 10e3);
    let tau = 3.0 * PI / (eta * v);
    let pulse = PulseSequence::uniform(tau, vec![vec![v; 3]], vec![vec![0.0; 3]]).unwrap();
    let modes = TrapModes::from_lamb_dicke(vec![2.0 * PI * 1e6], DMatrix::from_element(1, 1, eta)).unwrap();
    let space = HilbertSpace::new(1, vec![1]).unwrap();
    let start = DensityMatrix::from_ket(&space.basis_ket(1, &[0]));
    let problem = GateProblem {
        pulse,
        modes,
        laser_detuning: 2.0 * PI * 1e6,
        drift: 0.0,
        noise: NoiseModel::default(),
        space: space.clone(),
        initial: Some(start.clone()),
    };
    let grid: Vec<f64> = (0..=60).map(|i| tau * i as f64 / 60.0).collect();
    let opts = GateOptions { truncation_tol: f64::INFINITY, ..Default::default() };
    let traj = evolve_two_ion_gate(&problem, &grid, &opts).unwrap();
    assert_eq!(traj.snapshots.len(), grid.len());
    let g1 = space.phonon_index(&[1]);
    for s in &traj.snapshots {
        let expected = (eta * v * s.time).sin().powi(2);
        assert!((s.full_state().matrix()[(g1, g1)].re - expected).abs() < 1e-10);
    }
    let reference = rk4(&problem, start.matrix(), tau, 3000);
    let got = traj.last().unwrap().full_state().matrix();
    assert!(max_abs_diff(got, &reference) < 1e-8, "{got} {reference}");
}

#[test]
fn truncation_is_reported() {
    let problem = random_problem(3, NoiseModel::default());
    let mut p = problem.clone();
    p.pulse = p.pulse.scaled(30.0);
    p.space = HilbertSpace::new(2, vec![1, 1]).unwrap();
    let err = evolve_two_ion_gate(&p, &[p.pulse.duration()], &GateOptions::default()).unwrap_err();
    assert!(matches!(err, thq_core::Error::Truncation { .. }));
}
