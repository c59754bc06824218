//! Density matrices over qubits ⊗ truncated phonon modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Tensor-product layout: qubits first (qubit 0 most significant), then one
/// factor of dimension `n_max + 1` per phonon mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpace {
    pub qubit_count: usize,
    pub fock_cutoffs: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(qubit_count: usize, fock_cutoffs: Vec<usize>) -> Result<Self> {
        if !(1..=2).contains(&qubit_count) {
            return Err(Error::Unsupported(format!("qubit count {qubit_count} (1 or 2 supported)")));
        }
        if fock_cutoffs.len() > 2 {
            return Err(Error::Unsupported(format!("{} phonon modes (at most 2)", fock_cutoffs.len())));
        }
        if fock_cutoffs.iter().any(|&n| n < 1) {
            return Err(Error::Config("Fock cutoff n_max must be >= 1".into()));
        }
        Ok(Self { qubit_count, fock_cutoffs })
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.qubit_count
    }

    pub fn phonon_dim(&self) -> usize {
        self.fock_cutoffs.iter().map(|n| n + 1).product()
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.phonon_dim()
    }

    pub fn mode_count(&self) -> usize {
        self.fock_cutoffs.len()
    }

    /// Fock occupation of `mode` for phonon-space index `ph`.
    pub fn fock_level(&self, ph: usize, mode: usize) -> usize {
        let stride: usize = self.fock_cutoffs[mode + 1..].iter().map(|n| n + 1).product();
        (ph / stride) % (self.fock_cutoffs[mode] + 1)
    }

    /// Phonon-space index for a list of Fock levels.
    pub fn phonon_index(&self, levels: &[usize]) -> usize {
        levels.iter().zip(&self.fock_cutoffs).fold(0, |acc, (&n, &cut)| acc * (cut + 1) + n)
    }

    /// Product state |qubits⟩ ⊗ |vacuum⟩ for a computational basis label.
    pub fn basis_ket(&self, qubit_index: usize, levels: &[usize]) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[qubit_index * self.phonon_dim() + self.phonon_index(levels)] = C64::new(1.0, 0.0);
        v
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Wraps a matrix after checking the density-matrix invariants.
    pub fn new(m: CMatrix) -> Result<Self> {
        let rho = Self(m);
        rho.check()?;
        Ok(rho)
    }

    /// Wraps without validation; used inside propagators that check on output.
    pub fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn from_ket(psi: &CVector) -> Self {
        let n = psi.norm();
        let psi = psi / C64::new(n, 0.0);
        Self(&psi * psi.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (&self.0 * op).trace()
    }

    /// Checks Hermiticity, trace and positivity against the crate tolerances.
    pub fn check(&self) -> Result<()> {
        if !self.0.is_square() {
            return Err(Error::Shape { expected: self.0.nrows(), got: self.0.ncols() });
        }
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::Domain(format!("not Hermitian: max |ρ-ρ†| = {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Domain(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Domain(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// Single-qubit Pauli and ladder matrices in the |g⟩=|0⟩, |e⟩=|1⟩ basis.
pub mod pauli {
    use super::{CMatrix, C64};

    fn m(a: [[C64; 2]; 2]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
    }

    const O: C64 = C64 { re: 0.0, im: 0.0 };
    const I: C64 = C64 { re: 1.0, im: 0.0 };
    const J: C64 = C64 { re: 0.0, im: 1.0 };

    pub fn x() -> CMatrix {
        m([[O, I], [I, O]])
    }
    pub fn y() -> CMatrix {
        m([[O, -J], [J, O]])
    }
    /// σz = |e⟩⟨e| − |g⟩⟨g|.
    pub fn z() -> CMatrix {
        m([[-I, O], [O, I]])
    }
    /// Lowering operator |g⟩⟨e|.
    pub fn lower() -> CMatrix {
        m([[O, I], [O, O]])
    }

    /// Embeds a single-site operator at `site` of `n` qubits.
    pub fn on_site(op: &CMatrix, site: usize, n: usize) -> CMatrix {
        let mut out = CMatrix::identity(1, 1);
        for k in 0..n {
            let f = if k == site { op.clone() } else { CMatrix::identity(2, 2) };
            out = out.kronecker(&f);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_layout() {
        let s = HilbertSpace::new(2, vec![3, 2]).unwrap();
        assert_eq!(s.dim(), 4 * 4 * 3);
        let idx = s.phonon_index(&[2, 1]);
        assert_eq!(s.fock_level(idx, 0), 2);
        assert_eq!(s.fock_level(idx, 1), 1);
        assert!(HilbertSpace::new(3, vec![]).is_err());
        assert!(HilbertSpace::new(1, vec![0]).is_err());
    }

    #[test]
    fn validation_catches_violations() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let mut nonherm = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        nonherm[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(nonherm).is_err());
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(2, 2) * C64::new(0.5, 0.0)).is_ok());
    }

    #[test]
    fn pure_state_purity() {
        let s = HilbertSpace::new(2, vec![1]).unwrap();
        let rho = DensityMatrix::from_ket(&s.basis_ket(3, &[1]));
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        rho.check().unwrap();
    }
}
