//! Closed-form noise-free gate starting from |0…0⟩ and the phonon vacuum.
//!
//! In each σx sector s the drive is linear in a and a† with c-number
//! commutators, so the second-order Magnus expansion is exact:
//! U_s = e^{iΣ s_j s_j' θ_jj'} Π_p D(α_p(s)) with α_p(s) = −Σ_j s_j β_jp.
//! The modes end in coherent states and the reduced qubit state follows from
//! their overlaps, without any Fock truncation.

use super::gate::GateProblem;
use crate::density::{CMatrix, DensityMatrix, C64};
use crate::error::{Error, Result};
use crate::magnus::{magnus_beta, magnus_theta, MagnusProblem};

/// ⟨b|a⟩ for coherent states.
fn coherent_overlap(b: C64, a: C64) -> C64 {
    (b.conj() * a - 0.5 * (a.norm_sqr() + b.norm_sqr())).exp()
}

fn sign(sector: usize, ion: usize, ions: usize) -> f64 {
    if (sector >> (ions - 1 - ion)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Final reduced qubit state of a noise-free gate, in the computational basis.
pub fn noise_free_qubit_state(problem: &GateProblem) -> Result<DensityMatrix> {
    if !problem.noise.is_noiseless() {
        return Err(Error::Unsupported("closed-form gate needs zero decay and dephasing".into()));
    }
    if problem.initial.is_some() {
        return Err(Error::Unsupported("closed-form gate starts from |0…0⟩ and the phonon vacuum".into()));
    }
    let magnus = MagnusProblem::new(problem.modes.lamb_dicke.clone(), problem.detunings())?;
    let beta = magnus_beta(&problem.pulse, &magnus)?;
    let theta = magnus_theta(&problem.pulse, &magnus)?;
    let n = magnus.ion_count();
    let dim = 1usize << n;

    let alphas: Vec<Vec<C64>> = (0..dim)
        .map(|s| (0..magnus.mode_count()).map(|p| -(0..n).map(|j| beta[(j, p)] * sign(s, j, n)).sum::<C64>()).collect())
        .collect();
    let phases: Vec<f64> = (0..dim)
        .map(|s| {
            let mut phi = 0.0;
            for j in 0..n {
                for jp in 0..n {
                    phi += sign(s, j, n) * sign(s, jp, n) * theta[(j, jp)];
                }
            }
            phi
        })
        .collect();

    let weight = 1.0 / dim as f64;
    let rho_x = CMatrix::from_fn(dim, dim, |s, sp| {
        let overlap: C64 = alphas[s].iter().zip(&alphas[sp]).map(|(&a, &b)| coherent_overlap(b, a)).product();
        C64::from_polar(weight, phases[s] - phases[sp]) * overlap
    });

    // Columns of H^{⊗n} are the σx sector kets in the computational basis.
    let h = CMatrix::from_fn(dim, dim, |row, col| {
        let sgn = (row & col).count_ones() % 2;
        C64::new(if sgn == 0 { 1.0 } else { -1.0 } / (dim as f64).sqrt(), 0.0)
    });
    Ok(DensityMatrix::from_matrix_unchecked(&h * rho_x * h.adjoint()))
}
