//! Time-dependent Dyson map per block and the unitary `U(2)` evolution it
//! induces.
//!
//! The map on block `n` is `η = (e^κ/√Λ)·[[χ, λ], [λ*, 1]]` with
//! `χ = Λ + |λ|²`, so `det η = e^(2κ)`. Requiring `u = η(t)·U(t)·η(0)⁻¹`
//! to be unitary fixes `(κ, λ, Λ)` at every `t` from the initial values and
//! the propagator functions `C`, `S` alone ([`dyson_at`]). The unitary
//! block is then assembled directly from `ν±`, `ϖ±` and `δ`
//! ([`unitary_block`]); [`unitary_block_via_conjugation`] forms the matrix
//! product instead and exists to cross-check the first route.
//!
//! Evaluation order is `C, S → ζ±, ξ±, D → (κ, χ, λ, Λ) → ν± → ϖ±`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::blocks::{self, phase_factor, BlockIndex, CsPair, EvolutionBlock, FractionalConfig};
use crate::error::{Error, Result};

/// Below this `|D|` the map is treated as singular.
pub const SINGULAR_D: f64 = 1e-14;
/// Tolerance on `|ϖ₊|² + |ϖ₋|² = 1`.
pub const COEFFICIENT_NORM_TOL: f64 = 1e-10;
/// Condition number of `η(0)` above which a warning is logged.
pub const ETA0_CONDITION_WARN: f64 = 1e8;

/// Parameters `(κ, λ, Λ)` of one block's Dyson map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysonParams {
    pub kappa: f64,
    pub lambda: Complex64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
}

impl DysonParams {
    pub const IDENTITY: DysonParams = DysonParams { kappa: 0.0, lambda: Complex64::new(0.0, 0.0), big_lambda: 1.0 };

    pub fn new(kappa: f64, lambda: Complex64, big_lambda: f64) -> Result<Self> {
        let p = Self { kappa, lambda, big_lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.lambda.re.is_finite() && self.lambda.im.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite Dyson parameters {self:?}")));
        }
        if !(self.big_lambda > 0.0 && self.big_lambda.is_finite()) || self.chi() <= self.lambda.norm_sqr() {
            return Err(Error::MetricCollapse { big_lambda: self.big_lambda });
        }
        Ok(())
    }

    /// `χ = Λ + |λ|²`.
    pub fn chi(&self) -> f64 {
        self.big_lambda + self.lambda.norm_sqr()
    }

    pub fn eta(&self) -> Matrix2<Complex64> {
        let scale = self.kappa.exp() / self.big_lambda.sqrt();
        Matrix2::new(
            Complex64::new(self.chi(), 0.0),
            self.lambda,
            self.lambda.conj(),
            Complex64::new(1.0, 0.0),
        ) * Complex64::new(scale, 0.0)
    }

    /// Closed-form inverse, using `det η = e^(2κ)`.
    pub fn eta_inverse(&self) -> Matrix2<Complex64> {
        let scale = (-self.kappa).exp() / self.big_lambda.sqrt();
        Matrix2::new(
            Complex64::new(1.0, 0.0),
            -self.lambda,
            -self.lambda.conj(),
            Complex64::new(self.chi(), 0.0),
        ) * Complex64::new(scale, 0.0)
    }

    /// 2-norm condition number of `η`.
    pub fn condition_number(&self) -> f64 {
        // Eigenvalues of the Hermitian core [[χ, λ], [λ*, 1]].
        let half_trace = 0.5 * (self.chi() + 1.0);
        let det = self.big_lambda;
        let disc = (half_trace * half_trace - det).max(0.0).sqrt();
        let hi = half_trace + disc;
        hi * hi / det
    }
}

/// `ζ±`, `ξ±` for one block and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaXi {
    pub zeta_plus: Complex64,
    pub zeta_minus: Complex64,
    pub xi_plus: Complex64,
    pub xi_minus: Complex64,
}

pub fn zeta_xi(cs: &CsPair, alpha: f64, dyson0: &DysonParams) -> ZetaXi {
    let p = phase_factor(alpha);
    let (c, s) = (cs.c, cs.s);
    let l0 = dyson0.lambda;
    let chi0 = dyson0.chi();
    ZetaXi {
        zeta_plus: p * s - l0.conj() * c,
        zeta_minus: p * l0 * s - chi0 * c,
        xi_plus: c - p * l0.conj() * s,
        xi_minus: l0 * c - p * chi0 * s,
    }
}

/// Dyson parameters at time `t` fixed by unitarity.
pub fn dyson_at(cs: &CsPair, alpha: f64, dyson0: &DysonParams) -> Result<DysonParams> {
    let d = blocks::block_d(cs, alpha);
    let abs_d = d.norm();
    if !(abs_d >= SINGULAR_D) {
        return Err(Error::SingularD { abs_d });
    }
    let zx = zeta_xi(cs, alpha, dyson0);
    let weight = dyson0.big_lambda * abs_d;
    let denom = zx.xi_plus.norm_sqr() + zx.xi_minus.norm_sqr() + weight;
    let chi = (zx.zeta_plus.norm_sqr() + zx.zeta_minus.norm_sqr() + weight) / denom;
    let lambda = -(zx.xi_plus * zx.zeta_plus.conj() + zx.xi_minus * zx.zeta_minus.conj()) / denom;
    let big_lambda = chi - lambda.norm_sqr();
    if !(big_lambda > 0.0) {
        return Err(Error::MetricCollapse { big_lambda });
    }
    Ok(DysonParams { kappa: dyson0.kappa - 0.5 * abs_d.ln(), lambda, big_lambda })
}

/// Everything entering the explicit `U(2)` form of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub zeta_plus: Complex64,
    pub zeta_minus: Complex64,
    pub xi_plus: Complex64,
    pub xi_minus: Complex64,
    pub d: Complex64,
    /// Phase `δ`; `½·arg D` on the principal branch unless a branch was
    /// chosen with [`coefficient_set_on_branch`].
    pub delta: f64,
    pub nu_plus: Complex64,
    pub nu_minus: Complex64,
    pub varpi_plus: Complex64,
    pub varpi_minus: Complex64,
}

impl CoefficientSet {
    /// `|ϖ₊|² + |ϖ₋|² - 1`.
    pub fn norm_residual(&self) -> f64 {
        (self.varpi_plus.norm_sqr() + self.varpi_minus.norm_sqr() - 1.0).abs()
    }

    /// `u = e^(iδ)·[[ϖ₊, ϖ₋], [-ϖ₋*, ϖ₊*]]`.
    pub fn unitary(&self) -> EvolutionBlock {
        let phase = Complex64::from_polar(1.0, self.delta);
        EvolutionBlock(
            Matrix2::new(
                self.varpi_plus,
                self.varpi_minus,
                -self.varpi_minus.conj(),
                self.varpi_plus.conj(),
            ) * phase,
        )
    }
}

/// Principal `δ = ½·Im ln D`.
pub fn principal_delta(d: Complex64) -> f64 {
    0.5 * d.arg()
}

pub fn coefficient_set(
    cs: &CsPair,
    alpha: f64,
    dyson0: &DysonParams,
    dyson_t: &DysonParams,
) -> Result<CoefficientSet> {
    let delta = principal_delta(blocks::block_d(cs, alpha));
    coefficient_set_on_branch(cs, alpha, dyson0, dyson_t, delta)
}

/// As [`coefficient_set`] with a caller-chosen `δ`; `δ` must equal
/// `½·arg D` modulo `π`.
pub fn coefficient_set_on_branch(
    cs: &CsPair,
    alpha: f64,
    dyson0: &DysonParams,
    dyson_t: &DysonParams,
    delta: f64,
) -> Result<CoefficientSet> {
    let d = blocks::block_d(cs, alpha);
    let zx = zeta_xi(cs, alpha, dyson0);
    let scale = (dyson_t.kappa - dyson0.kappa).exp() / (dyson_t.big_lambda * dyson0.big_lambda).sqrt();
    let lc = dyson_t.lambda.conj();
    let nu_plus = scale * (zx.zeta_plus + lc * zx.xi_plus);
    let nu_minus = -scale * (zx.zeta_minus + lc * zx.xi_minus);
    let phase = Complex64::from_polar(1.0, delta);
    let set = CoefficientSet {
        zeta_plus: zx.zeta_plus,
        zeta_minus: zx.zeta_minus,
        xi_plus: zx.xi_plus,
        xi_minus: zx.xi_minus,
        d,
        delta,
        nu_plus,
        nu_minus,
        varpi_plus: phase * nu_minus.conj(),
        varpi_minus: -phase * nu_plus.conj(),
    };
    let residual = set.norm_residual();
    if !(residual <= COEFFICIENT_NORM_TOL) {
        return Err(Error::UnitarityResidual { residual });
    }
    Ok(set)
}

/// Full per-block solution at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSolution {
    pub cs: CsPair,
    pub dyson: DysonParams,
    pub coefficients: CoefficientSet,
    pub unitary: EvolutionBlock,
}

impl BlockSolution {
    /// Non-unitary block `U(t)` this solution was built from.
    pub fn nonunitary(&self, alpha: f64) -> EvolutionBlock {
        blocks::nonunitary_from_cs(&self.cs, alpha)
    }
}

fn warn_on_conditioning(dyson0: &DysonParams) {
    let cond = dyson0.condition_number();
    if cond > ETA0_CONDITION_WARN {
        log::warn!("eta(0) condition number {cond:.3e} exceeds {ETA0_CONDITION_WARN:.0e}");
    }
}

/// Solve block `n` at time `t`; `delta_branch` overrides the principal `δ`.
pub fn solve_block(
    cfg: &FractionalConfig,
    n: BlockIndex,
    t: f64,
    dyson0: &DysonParams,
    delta_branch: Option<f64>,
) -> Result<BlockSolution> {
    dyson0.validate()?;
    let cs = blocks::cs_functions(cfg, n, t)?;
    let dyson = if t == 0.0 { *dyson0 } else { dyson_at(&cs, cfg.alpha, dyson0)? };
    let delta = delta_branch.unwrap_or_else(|| principal_delta(blocks::block_d(&cs, cfg.alpha)));
    let coefficients = coefficient_set_on_branch(&cs, cfg.alpha, dyson0, &dyson, delta)?;
    Ok(BlockSolution { cs, dyson, coefficients, unitary: coefficients.unitary() })
}

/// Unitary block `u^(n)(t)` in explicit `U(2)` form.
pub fn unitary_block(cfg: &FractionalConfig, n: BlockIndex, t: f64, dyson0: &DysonParams) -> Result<EvolutionBlock> {
    Ok(solve_block(cfg, n, t, dyson0, None)?.unitary)
}

/// `u^(n)(t) = η(t)·U(t)·η(0)⁻¹` as an explicit matrix product.
pub fn unitary_block_via_conjugation(
    cfg: &FractionalConfig,
    n: BlockIndex,
    t: f64,
    dyson0: &DysonParams,
) -> Result<EvolutionBlock> {
    dyson0.validate()?;
    warn_on_conditioning(dyson0);
    let cs = blocks::cs_functions(cfg, n, t)?;
    let dyson = if t == 0.0 { *dyson0 } else { dyson_at(&cs, cfg.alpha, dyson0)? };
    let u = blocks::nonunitary_from_cs(&cs, cfg.alpha);
    Ok(EvolutionBlock(dyson.eta() * u.0 * dyson0.eta_inverse()))
}

/// Metric `Θ = η†η` of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOperator {
    pub theta: Matrix2<Complex64>,
}

impl MetricOperator {
    /// `‖Θ - Θ†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        (self.theta - self.theta.adjoint()).norm()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.theta[(0, 0)].re;
        let d = self.theta[(1, 1)].re;
        let b = self.theta[(0, 1)];
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let hi = mean + radius;
        // Product form keeps the small eigenvalue accurate.
        let det = a * d - b.norm_sqr();
        [det / hi, hi]
    }

    /// `v†Θv`.
    pub fn expectation(&self, v: [Complex64; 2]) -> f64 {
        let w = [
            self.theta[(0, 0)] * v[0] + self.theta[(0, 1)] * v[1],
            self.theta[(1, 0)] * v[0] + self.theta[(1, 1)] * v[1],
        ];
        (v[0].conj() * w[0] + v[1].conj() * w[1]).re
    }
}

pub fn metric_at(dyson: &DysonParams) -> MetricOperator {
    let eta = dyson.eta();
    MetricOperator { theta: eta.adjoint() * eta }
}

/// Keeps `δ(t)` continuous along a block's time grid.
///
/// `arg D` is unwrapped against the previous sample so that `δ` starts at
/// 0 and never jumps by `π`. The unitary block does not depend on the
/// branch (it involves `δ` only through `e^(2iδ) = D/|D|`), but `ϖ±` do.
#[derive(Debug, Clone, Default)]
pub struct DeltaUnwrapper {
    previous_arg: Option<f64>,
}

impl DeltaUnwrapper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the unwrapped `δ` and whether it differs from the principal
    /// value.
    pub fn next(&mut self, d: Complex64) -> (f64, bool) {
        let principal = d.arg();
        let arg = match self.previous_arg {
            None => principal,
            Some(prev) => principal + 2.0 * PI * ((prev - principal) / (2.0 * PI)).round(),
        };
        self.previous_arg = Some(arg);
        (0.5 * arg, arg != principal)
    }
}
