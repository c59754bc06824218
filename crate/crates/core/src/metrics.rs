//! Entanglement indicators on two-qubit states: entropy of the one-qubit
//! marginal, Uhlmann fidelity and negativity.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::density::{CMatrix, CVector, DensityMatrix, HilbertSpace, C64, POSITIVITY_TOL};
use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a PSD eigenvalue is treated as zero
/// before taking square roots.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// Two-qubit state with provenance.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub state: DensityMatrix,
    pub time: f64,
    pub source: String,
}

/// One row per output time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSeries {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub negativity: Vec<f64>,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, s: f64, f: f64, n: f64) {
        self.times.push(t);
        self.entropy.push(s);
        self.fidelity.push(f);
        self.negativity.push(n);
    }
}

/// (|00⟩ + i|11⟩)/√2, the state reached from |00⟩ by exp(iπσxσx/4).
pub fn bell_target() -> DensityMatrix {
    let mut psi = CVector::zeros(4);
    psi[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    psi[3] = C64::new(0.0, FRAC_1_SQRT_2);
    DensityMatrix::from_ket(&psi)
}

/// Traces out every phonon mode, leaving the qubit register.
pub fn partial_trace_phonons(full: &DensityMatrix, space: &HilbertSpace) -> Result<DensityMatrix> {
    if full.dim() != space.dim() {
        return Err(Error::Shape { expected: space.dim(), got: full.dim() });
    }
    let q = space.qubit_dim();
    let ph = space.phonon_dim();
    let m = full.matrix();
    let out = CMatrix::from_fn(q, q, |a, b| (0..ph).map(|k| m[(a * ph + k, b * ph + k)]).sum());
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Marginal of the first qubit of a two-qubit state.
pub fn trace_out_second_qubit(rho_ab: &DensityMatrix) -> Result<DensityMatrix> {
    if rho_ab.dim() != 4 {
        return Err(Error::Shape { expected: 4, got: rho_ab.dim() });
    }
    let m = rho_ab.matrix();
    let out = CMatrix::from_fn(2, 2, |a, b| m[(2 * a, 2 * b)] + m[(2 * a + 1, 2 * b + 1)]);
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

fn log2_entropy(eigs: &[f64]) -> f64 {
    eigs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// S = −Tr ρ_A log₂ ρ_A with ρ_A the first-qubit marginal.
pub fn entanglement_entropy(rho_ab: &DensityMatrix) -> Result<f64> {
    let rho_a = trace_out_second_qubit(rho_ab)?;
    Ok(log2_entropy(&rho_a.eigenvalues()))
}

/// Square root of a Hermitian PSD matrix via eigendecomposition, clamping
/// eigenvalues below `EIGEN_CLAMP · λ_max` to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    let floor = EIGEN_CLAMP * lmax.max(f64::MIN_POSITIVE);
    let d = eig.eigenvalues.map(|l| C64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

fn trace_sqrt_psd(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eigs = h.symmetric_eigenvalues();
    let lmax = eigs.iter().fold(0.0_f64, |a, &b| a.max(b));
    let floor = EIGEN_CLAMP * lmax.max(f64::MIN_POSITIVE);
    eigs.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum()
}

/// F = [Tr √(√ρ σ √ρ)]².
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Shape { expected: rho.dim(), got: sigma.dim() });
    }
    for (name, s) in [("rho", rho), ("sigma", sigma)] {
        let min = s.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Domain(format!("{name} is not positive semidefinite (λ_min = {min:.3e})")));
        }
    }
    let sr = psd_sqrt(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let t = trace_sqrt_psd(&inner);
    Ok(t * t)
}

/// Partial transpose on the second qubit of a two-qubit matrix.
pub fn partial_transpose_second(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(4, 4, |r, c| {
        let (a, b) = (r / 2, r % 2);
        let (a2, b2) = (c / 2, c % 2);
        m[(2 * a + b2, 2 * a2 + b)]
    })
}

/// 𝓝 = (‖ρ^{T_B}‖₁ − 1)/2, evaluated as the sum of |eigenvalues| of the
/// Hermitian partial transpose.
pub fn negativity(rho_ab: &DensityMatrix) -> Result<f64> {
    if rho_ab.dim() != 4 {
        return Err(Error::Shape { expected: 4, got: rho_ab.dim() });
    }
    let pt = partial_transpose_second(rho_ab.matrix());
    let h = (&pt + pt.adjoint()) * C64::new(0.5, 0.0);
    let norm1: f64 = h.symmetric_eigenvalues().iter().map(|l| l.abs()).sum();
    Ok(((norm1 - 1.0) / 2.0).max(0.0))
}

/// Entropy, fidelity to `target` and negativity of a two-qubit state.
pub fn all_metrics(rho_ab: &DensityMatrix, target: &DensityMatrix) -> Result<(f64, f64, f64)> {
    Ok((entanglement_entropy(rho_ab)?, uhlmann_fidelity(rho_ab, target)?, negativity(rho_ab)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket(c: &[(usize, C64)], dim: usize) -> CVector {
        let mut v = CVector::zeros(dim);
        for &(i, a) in c {
            v[i] = a;
        }
        v
    }

    fn random_density(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> DensityMatrix {
        let g = CMatrix::from_fn(dim, rank, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(m / tr).unwrap()
    }

    #[test]
    fn bell_values() {
        let bell = bell_target();
        assert_relative_eq!(entanglement_entropy(&bell).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(negativity(&bell).unwrap(), 0.5, epsilon = 1e-9);
        let zero = DensityMatrix::from_ket(&ket(&[(0, C64::new(1.0, 0.0))], 4));
        assert_relative_eq!(uhlmann_fidelity(&zero, &bell).unwrap(), 0.5, epsilon = 1e-9);
        assert_relative_eq!(entanglement_entropy(&zero).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(negativity(&zero).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn schmidt_entropy_at_pi_over_six() {
        let a = std::f64::consts::PI / 6.0;
        let (c2, s2) = (a.cos().powi(2), a.sin().powi(2));
        // c² = 0.75, s² = 0.25 → S = 0.811278124459...
        let expected = -c2 * c2.log2() - s2 * s2.log2();
        assert_relative_eq!(expected, 0.811_278_124_459_132_8, epsilon = 1e-12);
        let rho = DensityMatrix::from_ket(&ket(&[(0, C64::new(a.cos(), 0.0)), (3, C64::new(a.sin(), 0.0))], 4));
        assert_relative_eq!(entanglement_entropy(&rho).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn werner_negativity() {
        let bell = bell_target();
        for p in [0.0, 0.2, 0.5, 0.8, 1.0] {
            let m = bell.matrix() * C64::new(p, 0.0) + CMatrix::identity(4, 4) * C64::new((1.0 - p) / 4.0, 0.0);
            let rho = DensityMatrix::new(m).unwrap();
            let expected = ((3.0 * p - 1.0) / 4.0).max(0.0);
            assert_relative_eq!(negativity(&rho).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn fidelity_identity_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_density(&mut rng, 4, 4);
            let b = random_density(&mut rng, 4, 2);
            assert_relative_eq!(uhlmann_fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-9);
            let fab = uhlmann_fidelity(&a, &b).unwrap();
            let fba = uhlmann_fidelity(&b, &a).unwrap();
            assert!((fab - fba).abs() < 1e-9, "{fab} vs {fba}");
            assert!((0.0..=1.0 + 1e-8).contains(&fab));
        }
    }

    #[test]
    fn fidelity_of_commuting_diagonals_is_classical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let mut q: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
        p.iter_mut().for_each(|x| *x /= sp);
        q.iter_mut().for_each(|x| *x /= sq);
        let diag = |v: &[f64]| {
            DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_iterator(4, v.iter().map(|&x| C64::new(x, 0.0)))))
                .unwrap()
        };
        let classical: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().powi(2);
        assert_relative_eq!(uhlmann_fidelity(&diag(&p), &diag(&q)).unwrap(), classical, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_rejects_non_psd() {
        let bad = DensityMatrix::from_matrix_unchecked(CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(1.2, 0.0),
            C64::new(-0.2, 0.0),
        ])));
        let ok = DensityMatrix::maximally_mixed(2);
        assert!(matches!(uhlmann_fidelity(&bad, &ok), Err(Error::Domain(_))));
        assert!(matches!(uhlmann_fidelity(&ok, &bell_target()), Err(Error::Shape { .. })));
    }

    #[test]
    fn partial_trace_of_product_and_mixed() {
        let space = HilbertSpace::new(2, vec![2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_density(&mut rng, 4, 3);
        let ph = random_density(&mut rng, 3, 3);
        let full = DensityMatrix::new(q.matrix().kronecker(ph.matrix())).unwrap();
        let red = partial_trace_phonons(&full, &space).unwrap();
        assert!((red.matrix() - q.matrix()).norm() < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(space.dim());
        let red = partial_trace_phonons(&mixed, &space).unwrap();
        assert!((red.matrix() - DensityMatrix::maximally_mixed(4).matrix()).norm() < 1e-12);

        let wrong = DensityMatrix::maximally_mixed(5);
        assert!(matches!(partial_trace_phonons(&wrong, &space), Err(Error::Shape { .. })));
    }

    #[test]
    fn reduction_preserves_qubit_observables() {
        let space = HilbertSpace::new(2, vec![2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let full = random_density(&mut rng, space.dim(), space.dim());
        let red = partial_trace_phonons(&full, &space).unwrap();
        assert!((red.trace().re - 1.0).abs() < 1e-10);
        let obs = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.random::<f64>(), rng.random::<f64>()));
        let obs = &obs + obs.adjoint();
        let lifted = obs.kronecker(&CMatrix::identity(space.phonon_dim(), space.phonon_dim()));
        let before = full.expectation(&lifted);
        let after = red.expectation(&obs);
        assert!((before - after).norm() < 1e-10);
    }
}
