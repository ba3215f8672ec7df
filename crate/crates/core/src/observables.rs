//! Inversion, reduced densities and von Neumann entropies of a [`JCState`].
//!
//! Writing the state as `|e⟩⊗|E⟩ + |g⟩⊗|G⟩` with field vectors over
//! `m = 0..=n_max+1`, the excited component is `E_m = A_e,m` and the ground
//! component is `G_0 = ground_amp`, `G_m = A_g,m-1`. Both reductions follow
//! from these two vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::JCState;
use crate::error::{Error, Result};

/// Eigenvalues above this (negative) bound are clamped to zero.
pub const EIGEN_CLAMP: f64 = -1e-12;
/// Eigenvalues below this are an error.
pub const EIGEN_REJECT: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomDensity {
    pub rho_ee: f64,
    pub rho_gg: f64,
    pub rho_eg: Complex64,
}

impl AtomDensity {
    pub fn trace(&self) -> f64 {
        self.rho_ee + self.rho_gg
    }

    /// `ρ_ee ρ_gg - |ρ_eg|²`.
    pub fn determinant(&self) -> f64 {
        self.rho_ee * self.rho_gg - self.rho_eg.norm_sqr()
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_gap = (0.25 * (self.rho_ee - self.rho_gg).powi(2) + self.rho_eg.norm_sqr()).sqrt();
        let hi = 0.5 * self.trace() + half_gap;
        let lo = if hi > 0.0 { self.determinant() / hi } else { 0.0 };
        [lo, hi]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDensity {
    pub matrix: DMatrix<Complex64>,
}

impl FieldDensity {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// Hermitian eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn excited_field(state: &JCState) -> impl Iterator<Item = Complex64> + '_ {
    state.pairs.iter().map(|p| p[0]).chain(std::iter::once(Complex64::new(0.0, 0.0)))
}

fn ground_field(state: &JCState) -> impl Iterator<Item = Complex64> + '_ {
    std::iter::once(state.ground_amp).chain(state.pairs.iter().map(|p| p[1]))
}

/// `⟨σ_z⟩ = Σ(|A_e,n|² - |A_g,n|²) - |ground_amp|²`.
pub fn population_inversion(state: &JCState) -> f64 {
    state.pairs.iter().map(|[e, g]| e.norm_sqr() - g.norm_sqr()).sum::<f64>() - state.ground_amp.norm_sqr()
}

pub fn reduced_atom_density(state: &JCState) -> AtomDensity {
    let rho_ee = state.pairs.iter().map(|p| p[0].norm_sqr()).sum();
    let rho_gg = state.ground_amp.norm_sqr() + state.pairs.iter().map(|p| p[1].norm_sqr()).sum::<f64>();
    let rho_eg = excited_field(state).zip(ground_field(state)).map(|(e, g)| e * g.conj()).sum();
    AtomDensity { rho_ee, rho_gg, rho_eg }
}

/// `ρ_f = |E⟩⟨E| + |G⟩⟨G|` on `m = 0..=n_max+1`.
pub fn reduced_field_density(state: &JCState) -> FieldDensity {
    let e = DVector::from_iterator(state.pairs.len() + 1, excited_field(state));
    let g = DVector::from_iterator(state.pairs.len() + 1, ground_field(state));
    FieldDensity { matrix: &e * e.adjoint() + &g * g.adjoint() }
}

/// `-Σ p ln p` over `p = λ/trace`. Dividing by the trace removes the
/// truncation deficit `1 - trace ≈ tail`, which would otherwise show up as
/// a spurious entropy of order `tail` in a pure state.
fn entropy_of(eigenvalues: impl IntoIterator<Item = f64>, trace: f64) -> f64 {
    eigenvalues
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| l / trace)
        .map(|p| if p < 1.0 { -p * p.ln() } else { 0.0 })
        .sum::<f64>()
}

/// `S = -Σ λ ln λ` from the closed-form qubit eigenvalues.
pub fn von_neumann_entropy_qubit(rho: &AtomDensity) -> f64 {
    entropy_of(rho.eigenvalues(), rho.trace())
}

pub fn von_neumann_entropy_dense(rho: &FieldDensity) -> Result<f64> {
    let ev = rho.eigenvalues();
    if let Some(&lowest) = ev.first() {
        if lowest < EIGEN_REJECT {
            return Err(Error::IndefiniteDensity { eigenvalue: lowest });
        }
    }
    Ok(entropy_of(ev.into_iter().map(|l| if (EIGEN_CLAMP..0.0).contains(&l) { 0.0 } else { l }), rho.trace()))
}
