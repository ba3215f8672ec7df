//! Global JC state over the block decomposition and its evolution.
//!
//! A state is the `|g,0⟩` amplitude plus one `(A_e,n, A_g,n)` pair per
//! block. Evolution always starts from the initial state: the fractional
//! propagator has no semigroup property, so `evolve(s, t)` is a map from
//! `s` at time 0 to time `t` and must never be composed step by step.

use libm::lgamma as ln_gamma;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::{BlockIndex, EvolutionBlock, FractionalConfig};
use crate::error::{Error, Result};
use crate::unitarization::{solve_block, BlockSolution, DysonParams};

pub const MAX_N_MAX: usize = 256;
pub const MAX_TAIL_TOL: f64 = 1e-6;

/// Coherent field amplitude `β` and its photon-number truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentSpec {
    pub beta: Complex64,
    pub n_max: usize,
    pub tail_tol: f64,
}

impl CoherentSpec {
    pub fn new(beta: Complex64, n_max: usize, tail_tol: f64) -> Result<Self> {
        let spec = Self { beta, n_max, tail_tol };
        spec.check()?;
        Ok(spec)
    }

    /// Smallest `n_max` whose Poisson tail is below `tail_tol`.
    pub fn auto(beta: Complex64, tail_tol: f64) -> Result<Self> {
        check_tail_tol(tail_tol)?;
        let mean = beta.norm_sqr();
        match (0..=MAX_N_MAX).find(|&n| poisson_tail(mean, n) < tail_tol) {
            Some(n_max) => Ok(Self { beta, n_max, tail_tol }),
            None => Err(Error::TruncationTooSmall {
                n_max: MAX_N_MAX,
                tail: poisson_tail(mean, MAX_N_MAX),
                tail_tol,
            }),
        }
    }

    pub fn tail(&self) -> f64 {
        poisson_tail(self.beta.norm_sqr(), self.n_max)
    }

    fn check(&self) -> Result<()> {
        check_tail_tol(self.tail_tol)?;
        if !(self.beta.re.is_finite() && self.beta.im.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta = {} is not finite", self.beta)));
        }
        if self.n_max > MAX_N_MAX {
            return Err(Error::InvalidConfig(format!("n_max = {} exceeds the cap {MAX_N_MAX}", self.n_max)));
        }
        let tail = self.tail();
        if !(tail < self.tail_tol) {
            return Err(Error::TruncationTooSmall { n_max: self.n_max, tail, tail_tol: self.tail_tol });
        }
        Ok(())
    }
}

fn check_tail_tol(tail_tol: f64) -> Result<()> {
    if tail_tol > 0.0 && tail_tol <= MAX_TAIL_TOL {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("tail_tol = {tail_tol:e} outside (0, 1e-6]")))
    }
}

/// Poisson weight `e^(-m) m^n / n!`.
fn poisson_weight(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * mean.ln() - mean - ln_gamma(n as f64 + 1.0)).exp()
}

/// Upper bound on `Σ_(n > n_max) e^(-m) m^n / n!`.
///
/// Once `m < n_max + 2` the tail terms fall faster than the geometric
/// series with ratio `m/(n_max+2)`; below that the complement of the
/// partial sum is used directly.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    let ratio = mean / (n_max as f64 + 2.0);
    if ratio < 1.0 {
        poisson_weight(mean, n_max + 1) / (1.0 - ratio)
    } else {
        let head: f64 = (0..=n_max).map(|n| poisson_weight(mean, n)).sum();
        (1.0 - head).max(0.0)
    }
}

/// `c_0..c_(n_max)` of `|β⟩`, not renormalized.
pub fn coherent_amplitudes(spec: &CoherentSpec) -> Result<Vec<Complex64>> {
    spec.check()?;
    let mut amps = Vec::with_capacity(spec.n_max + 1);
    let mut c = Complex64::new((-0.5 * spec.beta.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 0..spec.n_max {
        c = c * spec.beta / ((n + 1) as f64).sqrt();
        amps.push(c);
    }
    Ok(amps)
}

/// State vector in the block basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JCState {
    pub ground_amp: Complex64,
    /// `[A_e,n, A_g,n]`: amplitudes of `|e,n⟩` and `|g,n+1⟩`.
    pub pairs: Vec<[Complex64; 2]>,
}

impl JCState {
    pub fn n_max(&self) -> usize {
        self.pairs.len().saturating_sub(1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ground_amp.norm_sqr() + self.pairs.iter().map(|[e, g]| e.norm_sqr() + g.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest componentwise distance to another state of the same size.
    pub fn max_abs_diff(&self, other: &JCState) -> f64 {
        self.pairs
            .iter()
            .zip(&other.pairs)
            .flat_map(|(a, b)| [(a[0] - b[0]).norm(), (a[1] - b[1]).norm()])
            .fold((self.ground_amp - other.ground_amp).norm(), f64::max)
    }
}

/// `|e⟩ ⊗ |β⟩` truncated at `n_max`.
pub fn initial_state(spec: &CoherentSpec) -> Result<JCState> {
    let zero = Complex64::new(0.0, 0.0);
    let pairs = coherent_amplitudes(spec)?.into_iter().map(|c| [c, zero]).collect();
    Ok(JCState { ground_amp: zero, pairs })
}

/// Solutions for blocks `0..n_blocks` at time `t`, computed in parallel.
/// The first failing block in index order is reported.
pub fn block_solutions(
    cfg: &FractionalConfig,
    n_blocks: usize,
    t: f64,
    dyson0: &DysonParams,
) -> Result<Vec<BlockSolution>> {
    let results: Vec<Result<BlockSolution>> = (0..n_blocks)
        .into_par_iter()
        .map(|n| solve_block(cfg, BlockIndex(n), t, dyson0, None).map_err(|e| e.in_block(n)))
        .collect();
    results.into_iter().collect()
}

/// Apply one unitary per block; the ground amplitude is unchanged.
pub fn apply_blocks(state0: &JCState, unitaries: &[EvolutionBlock]) -> JCState {
    debug_assert_eq!(state0.pairs.len(), unitaries.len());
    JCState {
        ground_amp: state0.ground_amp,
        pairs: state0.pairs.iter().zip(unitaries).map(|(v, u)| u.apply(*v)).collect(),
    }
}

/// Evolve `state0` from time 0 to `t`.
pub fn evolve(state0: &JCState, cfg: &FractionalConfig, t: f64, dyson0: &DysonParams) -> Result<JCState> {
    if t == 0.0 {
        dyson0.validate()?;
        return Ok(state0.clone());
    }
    let unitaries: Vec<EvolutionBlock> =
        block_solutions(cfg, state0.pairs.len(), t, dyson0)?.into_iter().map(|s| s.unitary).collect();
    Ok(apply_blocks(state0, &unitaries))
}
