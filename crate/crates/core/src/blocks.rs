//! Resonant Jaynes-Cummings Hamiltonian in its invariant two-dimensional
//! blocks `H_n = span{|e,n⟩, |g,n+1⟩}` and the Mittag-Leffler propagator
//! blocks built from it.
//!
//! Ladder operators never appear as matrices; the block index `n` and the
//! coupling `μ√(n+1)` carry all of their action. The ground state `|g,0⟩`
//! forms a one-dimensional block on which the Hamiltonian vanishes.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mlf::{self, MlError};

/// Order, coupling and units of the fractional Schrödinger equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalConfig {
    pub alpha: f64,
    /// Atom-field coupling `μ_α` (dimensionless).
    pub mu: f64,
    /// Always 1.
    pub hbar_alpha: f64,
    /// Relative tolerance for every Mittag-Leffler evaluation.
    pub ml_tol: f64,
}

impl FractionalConfig {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        Self::with_tolerance(alpha, mu, mlf::DEFAULT_TOL)
    }

    pub fn with_tolerance(alpha: f64, mu: f64, ml_tol: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha = {alpha} outside (0, 1]")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidConfig(format!("mu = {mu} must be positive")));
        }
        if !(mlf::MIN_TOL..=mlf::MAX_TOL).contains(&ml_tol) {
            return Err(Error::InvalidConfig(format!("ml_tol = {ml_tol:e} outside [1e-15, 1e-2]")));
        }
        Ok(Self { alpha, mu, hbar_alpha: 1.0, ml_tol })
    }
}

/// Photon number labelling the block `{|e,n⟩, |g,n+1⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockIndex(pub usize);

/// The pair `(C^(n)_α(t), S^(n)_α(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsPair {
    pub c: Complex64,
    pub s: Complex64,
}

impl CsPair {
    pub const INITIAL: CsPair = CsPair { c: Complex64::new(1.0, 0.0), s: Complex64::new(0.0, 0.0) };
}

/// 2×2 block in the ordered basis `(|e,n⟩, |g,n+1⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionBlock(pub Matrix2<Complex64>);

impl EvolutionBlock {
    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn determinant(&self) -> Complex64 {
        self.0.determinant()
    }

    /// `‖M†M - I‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm()
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]]
    }

    /// Frobenius distance to another block.
    pub fn distance(&self, other: &EvolutionBlock) -> f64 {
        (self.0 - other.0).norm()
    }
}

/// `i^(-α) = e^(-iπα/2)`.
pub fn phase_factor(alpha: f64) -> Complex64 {
    Complex64::from_polar(1.0, -0.5 * PI * alpha)
}

/// `(-1)^(-α) = e^(-iπα)`, the square of [`phase_factor`].
pub fn minus_one_pow(alpha: f64) -> Complex64 {
    Complex64::from_polar(1.0, -PI * alpha)
}

/// `μ^(n) = μ√(n+1)`.
pub fn block_coupling(n: BlockIndex, cfg: &FractionalConfig) -> f64 {
    cfg.mu * ((n.0 + 1) as f64).sqrt()
}

/// Block Hamiltonian `μ^(n)·σ_x` (with `ħ_α = 1`).
pub fn block_hamiltonian(n: BlockIndex, cfg: &FractionalConfig) -> EvolutionBlock {
    let g = Complex64::new(block_coupling(n, cfg), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    EvolutionBlock(Matrix2::new(zero, g, g, zero))
}

/// Propagator on the one-dimensional ground block: always 1.
pub fn ground_propagator(_cfg: &FractionalConfig, _t: f64) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// The Mittag-Leffler argument `i^(-α) μ^(n) t^α`.
pub fn propagator_argument(cfg: &FractionalConfig, n: BlockIndex, t: f64) -> Complex64 {
    let t_alpha = (cfg.alpha * t.ln()).exp();
    phase_factor(cfg.alpha) * block_coupling(n, cfg) * t_alpha
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Ml(MlError::InvalidArgument(format!("time t = {t} must be finite and >= 0"))))
    }
}

/// `C = [E(x) + E(-x)]/2`, `S = [E(x) - E(-x)]/(2 i^(-α))` with
/// `x = i^(-α) μ^(n) t^α`.
pub fn cs_functions(cfg: &FractionalConfig, n: BlockIndex, t: f64) -> Result<CsPair> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(CsPair::INITIAL);
    }
    let x = propagator_argument(cfg, n, t);
    let plus = mlf::mittag_leffler(cfg.alpha, x, cfg.ml_tol)?.value;
    let minus = mlf::mittag_leffler(cfg.alpha, -x, cfg.ml_tol)?.value;
    Ok(CsPair { c: 0.5 * (plus + minus), s: (plus - minus) / (2.0 * phase_factor(cfg.alpha)) })
}

/// `U^(n)_α(t) = [[C, i^(-α) S], [i^(-α) S, C]]`.
pub fn nonunitary_from_cs(cs: &CsPair, alpha: f64) -> EvolutionBlock {
    let off = phase_factor(alpha) * cs.s;
    EvolutionBlock(Matrix2::new(cs.c, off, off, cs.c))
}

pub fn nonunitary_block(cfg: &FractionalConfig, n: BlockIndex, t: f64) -> Result<EvolutionBlock> {
    Ok(nonunitary_from_cs(&cs_functions(cfg, n, t)?, cfg.alpha))
}

/// `D = C² - (-1)^(-α) S²`, the determinant of the non-unitary block.
pub fn block_d(cs: &CsPair, alpha: f64) -> Complex64 {
    cs.c * cs.c - minus_one_pow(alpha) * cs.s * cs.s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn phase_factor_values() {
        assert!(close(phase_factor(1.0), Complex64::new(0.0, -1.0), 1e-16));
        assert!(close(phase_factor(1e-12), Complex64::new(1.0, 0.0), 1e-11));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(phase_factor(0.5), Complex64::new(h, -h), 1e-15));
        for alpha in [0.1, 0.5, 0.9] {
            assert!(close(phase_factor(alpha).powi(2), minus_one_pow(alpha), 1e-15));
        }
    }

    #[test]
    fn coupling_scales_with_root_photon_number() {
        let one = FractionalConfig::new(0.5, 1.0).unwrap();
        let half = FractionalConfig::new(0.5, 0.5).unwrap();
        assert_eq!(block_coupling(BlockIndex(0), &one), 1.0);
        assert_eq!(block_coupling(BlockIndex(3), &one), 2.0);
        assert_eq!(block_coupling(BlockIndex(8), &half), 1.5);
    }

    #[test]
    fn config_validation() {
        assert!(FractionalConfig::new(0.0, 1.0).is_err());
        assert!(FractionalConfig::new(1.2, 1.0).is_err());
        assert!(FractionalConfig::new(0.5, 0.0).is_err());
        assert!(FractionalConfig::with_tolerance(0.5, 1.0, 0.5).is_err());
        assert_eq!(FractionalConfig::new(0.5, 2.0).unwrap().hbar_alpha, 1.0);
    }

    #[test]
    fn initial_time_is_identity() {
        for alpha in [0.3, 0.75, 1.0] {
            let cfg = FractionalConfig::new(alpha, 1.3).unwrap();
            assert_eq!(cs_functions(&cfg, BlockIndex(4), 0.0).unwrap(), CsPair::INITIAL);
            assert_eq!(nonunitary_block(&cfg, BlockIndex(4), 0.0).unwrap(), EvolutionBlock::identity());
            assert_eq!(block_d(&CsPair::INITIAL, alpha), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn negative_time_rejected() {
        let cfg = FractionalConfig::new(0.5, 1.0).unwrap();
        assert!(cs_functions(&cfg, BlockIndex(0), -1.0).is_err());
    }

    #[test]
    fn alpha_one_is_standard_rabi_block() {
        let cfg = FractionalConfig::new(1.0, 1.0).unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let cs = cs_functions(&cfg, BlockIndex(0), t).unwrap();
        assert!(close(cs.c, Complex64::new(0.0, 0.0), 1e-15));
        assert!(close(cs.s, Complex64::new(1.0, 0.0), 1e-15));
        for t in [0.3, 2.0, 11.0] {
            let u = nonunitary_block(&cfg, BlockIndex(0), t).unwrap();
            let expect = Matrix2::new(
                Complex64::new(t.cos(), 0.0),
                Complex64::new(0.0, -t.sin()),
                Complex64::new(0.0, -t.sin()),
                Complex64::new(t.cos(), 0.0),
            );
            assert!((u.0 - expect).norm() < 1e-14);
            assert!(u.unitarity_residual() < 1e-10);
            let d = block_d(&cs_functions(&cfg, BlockIndex(0), t).unwrap(), 1.0);
            assert!(close(d, Complex64::new(1.0, 0.0), 1e-14));
        }
    }

    #[test]
    fn half_order_cs_against_mpmath() {
        // 40-digit mpmath Taylor sums at x = e^{-iπ/4}.
        let cfg = FractionalConfig::new(0.5, 1.0).unwrap();
        let cs = cs_functions(&cfg, BlockIndex(0), 1.0).unwrap();
        let c = Complex64::new(0.540_302_305_868_139_8, -0.841_470_984_807_896_5);
        let s = Complex64::new(0.846_056_786_724_152_9, -0.669_684_259_577_663_6);
        assert!(close(cs.c, c, 1e-12), "{}", cs.c);
        assert!(close(cs.s, s, 1e-12), "{}", cs.s);
        let u = nonunitary_from_cs(&cs, 0.5);
        assert_eq!(u.0[(0, 0)], u.0[(1, 1)]);
        assert_eq!(u.0[(0, 1)], u.0[(1, 0)]);
        let d = Complex64::new(0.717_034_989_008_900_7, -0.641_962_347_989_766_4);
        assert!(close(block_d(&cs, 0.5), d, 1e-12));
        assert!(close(u.determinant(), block_d(&cs, 0.5), 1e-12));
    }

    #[test]
    fn hamiltonian_couples_partner_states() {
        let cfg = FractionalConfig::new(0.8, 0.7).unwrap();
        let n = BlockIndex(5);
        let g = block_coupling(n, &cfg);
        let h = block_hamiltonian(n, &cfg);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(h.apply([one, zero]), [zero, one * g]);
        assert_eq!(h.apply([zero, one]), [one * g, zero]);
        assert_eq!(h.0.trace(), zero);
    }

    #[test]
    fn ground_block_is_static() {
        let cfg = FractionalConfig::new(0.4, 1.0).unwrap();
        for t in [0.0, 1.0, 25.0] {
            assert_eq!(ground_propagator(&cfg, t), Complex64::new(1.0, 0.0));
        }
    }
}
