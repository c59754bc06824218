//! Two-ion Mølmer–Sørensen gate propagation with phonon modes.
//!
//! Within a pulse segment the Hamiltonian is time independent in the frame
//! rotating with H₀ = Σ_p δ_p a_p†a_p:
//!
//! H = Σ_p δ_p n_p + Σ_{j,p} σx^j (g_{j,p} a_p† + ḡ_{j,p} a_p),  g = −iηV e^{iφ}.
//!
//! In the σx eigenbasis it is block diagonal, one block per sign pattern s,
//! and each block factorizes over modes with G_p = Σ_j s_j g_{j,p}. Coherent
//! evolution is therefore exact. With noise, each step is split
//! symmetrically as half channel, exact unitary, half channel, where the
//! channels are the exact solutions of the decay and dephasing dissipators.
//! The dissipators act on qubits only and commute with the frame rotation.
//! States handed to observers are in the interaction frame of H₀ and the
//! computational qubit basis.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;

use super::single_ion::NoiseModel;
use crate::density::{CMatrix, CVector, DensityMatrix, HilbertSpace, C64};
use crate::error::{Error, Result};
use crate::metrics::partial_trace_phonons;
use crate::physics::TrapModes;
use crate::pulse::PulseSequence;

/// Everything needed to propagate one gate.
#[derive(Debug, Clone)]
pub struct GateProblem {
    pub pulse: PulseSequence,
    pub modes: TrapModes,
    /// Laser detuning Δ (rad/s); δ_p = Δ + drift − ω_p.
    pub laser_detuning: f64,
    /// Frequency drift δΔ added to Δ (rad/s).
    pub drift: f64,
    pub noise: NoiseModel,
    pub space: HilbertSpace,
    /// Defaults to |00⟩ ⊗ |0…0⟩ when absent.
    pub initial: Option<DensityMatrix>,
}

impl GateProblem {
    pub fn detunings(&self) -> Vec<f64> {
        self.modes.frequencies.iter().map(|w| self.laser_detuning + self.drift - w).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.pulse.ion_count() != self.space.qubit_count {
            return Err(Error::Shape { expected: self.space.qubit_count, got: self.pulse.ion_count() });
        }
        if self.modes.ion_count() != self.space.qubit_count {
            return Err(Error::Shape { expected: self.space.qubit_count, got: self.modes.ion_count() });
        }
        if self.modes.mode_count() != self.space.mode_count() {
            return Err(Error::Shape { expected: self.space.mode_count(), got: self.modes.mode_count() });
        }
        if let Some(rho) = &self.initial {
            if rho.dim() != self.space.dim() {
                return Err(Error::Shape { expected: self.space.dim(), got: rho.dim() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOptions {
    /// Largest carrier phase |δ_p|·h advanced per split step, evaluated for
    /// the slowest mode. Only used when noise is present.
    pub phase_per_step: f64,
    /// Explicit cap on the split step (s); overrides `phase_per_step` when smaller.
    pub max_step: Option<f64>,
    /// Highest tolerated population of any mode's top Fock level.
    pub truncation_tol: f64,
    /// Validate trace, Hermiticity and positivity of every emitted state.
    pub check_invariants: bool,
}

impl Default for GateOptions {
    fn default() -> Self {
        Self { phase_per_step: 0.5, max_step: None, truncation_tol: 1e-4, check_invariants: false }
    }
}

/// State at one grid time.
#[derive(Debug, Clone)]
pub struct GateSnapshot {
    pub time: f64,
    state: DensityMatrix,
    space: HilbertSpace,
}

impl GateSnapshot {
    pub fn full_state(&self) -> &DensityMatrix {
        &self.state
    }

    /// Qubit state with all phonon modes traced out.
    pub fn reduced_state(&self) -> Result<DensityMatrix> {
        partial_trace_phonons(&self.state, &self.space)
    }

    /// Mean phonon number ⟨n_p⟩ of each mode.
    pub fn mean_phonons(&self) -> Vec<f64> {
        self.mode_populations().iter().map(|pops| pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum()).collect()
    }

    /// Probability that mode p is excited, 1 − P(n_p = 0).
    pub fn excitation_probability(&self) -> Vec<f64> {
        self.mode_populations().iter().map(|pops| 1.0 - pops[0]).collect()
    }

    /// Fock-level populations of each mode.
    pub fn mode_populations(&self) -> Vec<Vec<f64>> {
        mode_populations(&self.state.matrix().diagonal().map(|z| z.re), &self.space)
    }
}

fn mode_populations(diag: &DVector<f64>, space: &HilbertSpace) -> Vec<Vec<f64>> {
    let pd = space.phonon_dim();
    let mut out: Vec<Vec<f64>> = space.fock_cutoffs.iter().map(|&n| vec![0.0; n + 1]).collect();
    for (i, p) in diag.iter().enumerate() {
        let ph = i % pd;
        for (m, pops) in out.iter_mut().enumerate() {
            pops[space.fock_level(ph, m)] += p;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct GateTrajectory {
    pub snapshots: Vec<GateSnapshot>,
}

impl GateTrajectory {
    pub fn last(&self) -> Option<&GateSnapshot> {
        self.snapshots.last()
    }
}

/// Annihilation operator truncated at `cutoff`.
fn annihilation(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Eigen-decomposed single-mode block Hamiltonian δ n + G a† + Ḡ a.
struct ModeBlock {
    vectors: CMatrix,
    energies: Vec<f64>,
}

impl ModeBlock {
    fn new(delta: f64, coupling: C64, cutoff: usize) -> Self {
        let a = annihilation(cutoff);
        let mut h = a.adjoint() * coupling + &a * coupling.conj();
        for n in 0..=cutoff {
            h[(n, n)] += C64::new(delta * n as f64, 0.0);
        }
        let eig = h.symmetric_eigen();
        Self { vectors: eig.eigenvectors, energies: eig.eigenvalues.iter().copied().collect() }
    }

    fn propagator(&self, dt: f64) -> CMatrix {
        let phases = CMatrix::from_diagonal(&DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|e| C64::from_polar(1.0, -e * dt)),
        ));
        &self.vectors * phases * self.vectors.adjoint()
    }
}

/// Per-sector eigensystems of one pulse segment.
struct SegmentPropagator {
    /// [sector][mode]
    blocks: Vec<Vec<ModeBlock>>,
}

impl SegmentPropagator {
    fn new(problem: &GateProblem, detunings: &[f64], segment: usize) -> Self {
        let space = &problem.space;
        let n = space.qubit_count;
        let eta = &problem.modes.lamb_dicke;
        let blocks = (0..space.qubit_dim())
            .map(|sector| {
                (0..space.mode_count())
                    .map(|p| {
                        let coupling: C64 = (0..n)
                            .map(|j| {
                                let s = sector_sign(sector, j, n);
                                let seg = problem.pulse.segment(j, segment);
                                // g = −iηV e^{iφ}
                                C64::new(0.0, -s) * C64::from_polar(eta[(j, p)] * seg.amplitude, seg.phase)
                            })
                            .sum();
                        ModeBlock::new(detunings[p], coupling, space.fock_cutoffs[p])
                    })
                    .collect()
            })
            .collect();
        Self { blocks }
    }

    /// Phonon-space propagator of every sector for a step of length dt.
    fn sector_unitaries(&self, dt: f64) -> Vec<CMatrix> {
        self.blocks
            .iter()
            .map(|modes| modes.iter().fold(CMatrix::identity(1, 1), |acc, b| acc.kronecker(&b.propagator(dt))))
            .collect()
    }
}

/// σx eigenvalue of qubit j in x-basis sector index (bit 0 ↔ +1).
fn sector_sign(sector: usize, j: usize, n: usize) -> f64 {
    if (sector >> (n - 1 - j)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Hadamard on every qubit, identity on phonons. Real, symmetric, involutory.
fn to_x_basis(space: &HilbertSpace) -> CMatrix {
    let h = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(-FRAC_1_SQRT_2, 0.0),
        ],
    );
    let q = (0..space.qubit_count).fold(CMatrix::identity(1, 1), |acc, _| acc.kronecker(&h));
    q.kronecker(&CMatrix::identity(space.phonon_dim(), space.phonon_dim()))
}

/// Exact single-step qubit channels, expressed in the x basis.
struct NoiseChannels {
    /// Probability of a σz flip per qubit for the half step.
    flip: f64,
    /// Kraus pair of amplitude damping for the half step, in the x basis.
    damping: Option<[CMatrix; 2]>,
}

impl NoiseChannels {
    fn new(noise: &NoiseModel, dt: f64) -> Self {
        let flip = 0.5 * (1.0 - (-2.0 * noise.dephasing_rate * dt).exp());
        let damping = (noise.decay_rate > 0.0).then(|| {
            let q = 1.0 - (-noise.decay_rate * dt).exp();
            let k0 = CMatrix::from_row_slice(
                2,
                2,
                &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new((1.0 - q).sqrt(), 0.0)],
            );
            let k1 = CMatrix::from_row_slice(
                2,
                2,
                &[C64::new(0.0, 0.0), C64::new(q.sqrt(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            );
            let h = CMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(FRAC_1_SQRT_2, 0.0),
                    C64::new(FRAC_1_SQRT_2, 0.0),
                    C64::new(FRAC_1_SQRT_2, 0.0),
                    C64::new(-FRAC_1_SQRT_2, 0.0),
                ],
            );
            [&h * k0 * &h, &h * k1 * &h]
        });
        Self { flip, damping }
    }

    fn apply(&self, rho: &mut CMatrix, space: &HilbertSpace) {
        let n = space.qubit_count;
        for j in 0..n {
            let q = QubitIndex { bit: 1 << (n - 1 - j), stride: space.phonon_dim() };
            if self.flip > 0.0 {
                // σz is a bit flip of qubit j in the x basis.
                let flipped = CMatrix::from_fn(rho.nrows(), rho.ncols(), |r, c| rho[(q.partner(r), q.partner(c))]);
                *rho = &*rho * C64::new(1.0 - self.flip, 0.0) + flipped * C64::new(self.flip, 0.0);
            }
            if let Some(kraus) = &self.damping {
                let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
                for k in kraus {
                    let left = q.apply_left(rho, k);
                    out += q.apply_left(&left.adjoint(), k).adjoint();
                }
                *rho = out;
            }
        }
    }
}

/// Locates one qubit inside the (qubits, phonons) index layout.
struct QubitIndex {
    bit: usize,
    stride: usize,
}

impl QubitIndex {
    fn is_set(&self, i: usize) -> bool {
        (i / self.stride) & self.bit != 0
    }

    /// Index with this qubit flipped.
    fn partner(&self, i: usize) -> usize {
        if self.is_set(i) {
            i - self.bit * self.stride
        } else {
            i + self.bit * self.stride
        }
    }

    /// (K on this qubit) · m.
    fn apply_left(&self, m: &CMatrix, k: &CMatrix) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
            let (r0, r1) = if self.is_set(r) { (self.partner(r), r) } else { (r, self.partner(r)) };
            let bit = usize::from(self.is_set(r));
            k[(bit, 0)] * m[(r0, c)] + k[(bit, 1)] * m[(r1, c)]
        })
    }
}

/// Everything needed to advance by one split step of fixed length.
struct StepOperators {
    dt: f64,
    unitaries: Vec<CMatrix>,
    adjoints: Vec<CMatrix>,
    half: Option<NoiseChannels>,
    full: Option<NoiseChannels>,
}

impl StepOperators {
    fn new(prop: &SegmentPropagator, noise: &NoiseModel, noisy: bool, dt: f64) -> Self {
        let unitaries = prop.sector_unitaries(dt);
        let adjoints = unitaries.iter().map(|u| u.adjoint()).collect();
        Self {
            dt,
            unitaries,
            adjoints,
            half: noisy.then(|| NoiseChannels::new(noise, 0.5 * dt)),
            full: noisy.then(|| NoiseChannels::new(noise, dt)),
        }
    }
}

enum Working {
    Pure(CVector),
    Mixed(CMatrix),
}

impl Working {
    fn apply_unitaries(&mut self, step: &StepOperators, pd: usize) {
        match self {
            Working::Pure(psi) => {
                for (s, u) in step.unitaries.iter().enumerate() {
                    let block = u * psi.rows(s * pd, pd);
                    psi.rows_mut(s * pd, pd).copy_from(&block);
                }
            }
            Working::Mixed(rho) => {
                for (s, u) in step.unitaries.iter().enumerate() {
                    for (sp, ud) in step.adjoints.iter().enumerate() {
                        let block = u * rho.view((s * pd, sp * pd), (pd, pd)) * ud;
                        rho.view_mut((s * pd, sp * pd), (pd, pd)).copy_from(&block);
                    }
                }
            }
        }
    }

    fn apply_channels(&mut self, channels: &NoiseChannels, space: &HilbertSpace) {
        if let Working::Mixed(rho) = self {
            channels.apply(rho, space);
        }
    }

    fn diagonal(&self) -> DVector<f64> {
        match self {
            Working::Pure(psi) => psi.map(|z| z.norm_sqr()),
            Working::Mixed(rho) => rho.diagonal().map(|z| z.re),
        }
    }
}

/// Propagates the gate and calls `observer` at each time of `t_grid`
/// (sorted, within [0, τ]).
pub fn propagate_gate<F>(problem: &GateProblem, options: &GateOptions, t_grid: &[f64], mut observer: F) -> Result<()>
where
    F: FnMut(GateSnapshot) -> Result<()>,
{
    problem.validate()?;
    let tau = problem.pulse.duration();
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.iter().any(|&t| t < 0.0 || t > tau * (1.0 + 1e-12)) {
        return Err(Error::Config("time grid must be sorted and inside [0, τ]".into()));
    }
    let space = &problem.space;
    let pd = space.phonon_dim();
    let detunings = problem.detunings();
    let w = to_x_basis(space);
    let noisy = !problem.noise.is_noiseless();

    let mut state = match (&problem.initial, noisy) {
        (None, false) => Working::Pure(&w * space.basis_ket(0, &vec![0; space.mode_count()])),
        (None, true) => {
            let psi = space.basis_ket(0, &vec![0; space.mode_count()]);
            Working::Mixed(&w * (&psi * psi.adjoint()) * &w)
        }
        (Some(rho), _) => Working::Mixed(&w * rho.matrix() * &w),
    };

    let max_step = if noisy {
        let slowest = detunings.iter().map(|d| d.abs()).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
        let from_phase = options.phase_per_step / slowest;
        let cap = options.max_step.unwrap_or(f64::INFINITY).min(from_phase);
        if cap.is_finite() {
            cap
        } else {
            tau / 1000.0
        }
    } else {
        f64::INFINITY
    };

    let emit = |state: &Working, t: f64, observer: &mut F| -> Result<()> {
        let x = match state {
            Working::Pure(psi) => psi * psi.adjoint(),
            Working::Mixed(rho) => rho.clone(),
        };
        // Back to the computational basis, then into the H₀ interaction frame.
        let mut m = &w * x * &w;
        let phase: Vec<f64> = (0..space.dim())
            .map(|i| {
                let ph = i % pd;
                (0..space.mode_count()).map(|p| detunings[p] * space.fock_level(ph, p) as f64).sum::<f64>() * t
            })
            .collect();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                m[(r, c)] *= C64::from_polar(1.0, phase[r] - phase[c]);
            }
        }
        let rho = DensityMatrix::from_matrix_unchecked(m);
        if options.check_invariants {
            rho.check()?;
        }
        observer(GateSnapshot { time: t, state: rho, space: space.clone() })
    };

    let check_truncation = |state: &Working| -> Result<()> {
        for (mode, pops) in mode_populations(&state.diagonal(), space).iter().enumerate() {
            let top = *pops.last().expect("at least one level");
            if space.fock_cutoffs[mode] > 0 && top > options.truncation_tol {
                return Err(Error::Truncation { mode, population: top });
            }
        }
        Ok(())
    };

    let boundaries = problem.pulse.boundaries();
    let mut grid = t_grid.iter().copied().peekable();
    let mut t = 0.0;
    while let Some(&tg) = grid.peek() {
        if tg > 0.0 {
            break;
        }
        emit(&state, 0.0, &mut observer)?;
        grid.next();
    }
    for k in 0..problem.pulse.segment_count() {
        let seg_end = if k + 1 == problem.pulse.segment_count() { tau } else { boundaries[k + 1] };
        let prop = SegmentPropagator::new(problem, &detunings, k);
        let mut cached: Option<StepOperators> = None;
        loop {
            let last = k + 1 == problem.pulse.segment_count();
            // Grid times may exceed τ by rounding; they belong to the end.
            let next_grid = grid.peek().copied().filter(|&tg| tg <= seg_end || last);
            let target = next_grid.map_or(seg_end, |tg| tg.min(seg_end));
            let span = target - t;
            if span > 0.0 {
                let steps = (span / max_step).ceil().max(1.0) as usize;
                let dt = span / steps as f64;
                if cached.as_ref().is_none_or(|c| (c.dt - dt).abs() > 1e-15 * dt) {
                    cached = Some(StepOperators::new(&prop, &problem.noise, noisy, dt));
                }
                let step = cached.as_ref().expect("step operators");
                // Strang splitting; adjacent half-step channels merge into
                // one full-step channel because the dissipators commute.
                if let Some(h) = &step.half {
                    state.apply_channels(h, space);
                }
                for i in 0..steps {
                    if i > 0 {
                        if let Some(f) = &step.full {
                            state.apply_channels(f, space);
                        }
                    }
                    state.apply_unitaries(step, pd);
                }
                if let Some(h) = &step.half {
                    state.apply_channels(h, space);
                }
                t = target;
            }
            match next_grid {
                Some(tg) => {
                    check_truncation(&state)?;
                    emit(&state, tg, &mut observer)?;
                    grid.next();
                }
                None => break,
            }
        }
        check_truncation(&state)?;
    }
    Ok(())
}

/// Collects the snapshots of [`propagate_gate`] into a trajectory.
pub fn evolve_two_ion_gate(problem: &GateProblem, t_grid: &[f64], options: &GateOptions) -> Result<GateTrajectory> {
    let mut snapshots = Vec::with_capacity(t_grid.len());
    propagate_gate(problem, options, t_grid, |s| {
        snapshots.push(s);
        Ok(())
    })?;
    Ok(GateTrajectory { snapshots })
}
