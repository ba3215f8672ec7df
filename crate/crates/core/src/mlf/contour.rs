//! Laplace inversion of `s^(α-1) / (s^α - z)` at unit time.
//!
//! The contour is the parabola `s(u) = m·(1 + iu)²`, `u ∈ ℝ`, which crosses
//! the real axis at `s = m` and opens to the left around the branch cut on
//! the negative real axis. In the `u` variable the integrand is analytic in
//! the strip `-∞ < Im u < 1` apart from the image of the pole
//! `s* = z^(1/α)`; the trapezoidal rule in `u` therefore converges
//! geometrically in `1/h`.
//!
//! Pole bookkeeping: with `w = sqrt(s*/m)` the pole sits at
//! `Im u* = 1 - Re w`. `Re w > 1` puts it to the right of the contour
//! (its residue `exp(s*)/α` is added explicitly), `Re w < 1` to the left
//! (the quadrature already accounts for it). Poles closer than
//! [`POLE_GUARD`] in `Im u` trigger one reshape of the contour.
//!
//! Error model: the quadrature is refined by halving `h` until two
//! successive sums agree to `0.1·tol·|E|`; the rounding floor is
//! `4ε·h·Σ|g(u_k)|`, which grows like `exp(m)`, so `m` is kept at
//! `½·ln(tol/ε)` and lowered if the floor dominates.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::{check_alpha, check_tol, Method, MlError, MlResult};

/// Minimum separation, in `Im u`, between the contour and the pole image.
const POLE_GUARD: f64 = 0.25;
/// Pole depth targeted when the contour is reshaped.
const RESHAPE_DEPTH: f64 = 0.5;
const INITIAL_STEP: f64 = 0.5;
const MAX_HALVINGS: usize = 12;
/// Extra decades of margin for the truncation of the `u` range.
const TRUNCATION_MARGIN: f64 = 15.0;

/// Principal-sheet solution of `s^α = z`, if any (`|arg z| < απ`).
fn principal_pole(alpha: f64, z: Complex64) -> Option<Complex64> {
    let theta = z.arg();
    (theta.abs() < alpha * PI).then(|| Complex64::from_polar(z.norm().powf(1.0 / alpha), theta / alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Placement {
    /// Pole to the right of the contour at depth `Re w - 1`.
    Right,
    /// Pole to the left of the contour (or absent).
    Left,
    TooClose(f64),
}

fn place(pole: Option<Complex64>, m: f64) -> Placement {
    match pole {
        None => Placement::Left,
        Some(s) => {
            let offset = (s / m).sqrt().re - 1.0;
            if offset >= POLE_GUARD {
                Placement::Right
            } else if offset <= -POLE_GUARD {
                Placement::Left
            } else {
                Placement::TooClose(offset.abs())
            }
        }
    }
}

/// Parabola scale putting the pole at the depth [`RESHAPE_DEPTH`].
fn reshape(pole: Complex64) -> f64 {
    let q = pole.sqrt().re;
    (q / (1.0 + RESHAPE_DEPTH)).powi(2)
}

struct Quadrature {
    alpha: f64,
    z: Complex64,
    m: f64,
}

impl Quadrature {
    /// `g(u) = (1/2πi)·e^s·F(s)·s'(u)` with `s'(u) = 2im(1 + iu)`.
    fn integrand(&self, u: f64) -> Complex64 {
        let w = Complex64::new(1.0, u);
        let s = self.m * w * w;
        let s_alpha = (self.alpha * s.ln()).exp();
        let f = s_alpha / (s * (s_alpha - self.z));
        s.exp() * f * w * (self.m / PI)
    }

    fn half_width(&self, tol: f64) -> f64 {
        // |e^s| = exp(m(1 - u²)) must fall below tol·10^-margin.
        (1.0 + (-tol.ln() + TRUNCATION_MARGIN * std::f64::consts::LN_10) / self.m).sqrt()
    }
}

struct Outcome {
    value: Complex64,
    discretization: f64,
    rounding: f64,
}

fn integrate(q: &Quadrature, residue: Complex64, tol: f64) -> Result<Outcome, MlError> {
    let half_width = q.half_width(tol);
    let mut h = INITIAL_STEP;
    let mut count = (half_width / h).ceil() as i64;
    let mut raw = Complex64::new(0.0, 0.0);
    let mut abs_raw = 0.0;
    for k in -count..=count {
        let g = q.integrand(k as f64 * h);
        raw += g;
        abs_raw += g.norm();
    }
    let mut integral = raw * h;

    for _ in 0..MAX_HALVINGS {
        h *= 0.5;
        count *= 2;
        for k in (-count + 1..count).step_by(2) {
            let g = q.integrand(k as f64 * h);
            raw += g;
            abs_raw += g.norm();
        }
        let refined = raw * h;
        let diff = (refined - integral).norm();
        integral = refined;
        if !(integral.re.is_finite() && integral.im.is_finite()) {
            break;
        }
        let value = integral + residue;
        let scale = value.norm().max(f64::MIN_POSITIVE);
        if diff <= 0.1 * tol * scale {
            return Ok(Outcome {
                value,
                discretization: diff / scale,
                rounding: 4.0 * f64::EPSILON * h * abs_raw / scale,
            });
        }
    }
    Err(MlError::NonConvergence {
        method: Method::Contour,
        reason: format!("trapezoidal refinement did not settle (m = {:.3})", q.m),
    })
}

/// Evaluate `E_α(z)` for `α ∈ (0, 1)`, `z ≠ 0`, by parabolic-contour
/// Laplace inversion.
pub fn ml_contour(alpha: f64, z: Complex64, tol: f64) -> Result<MlResult, MlError> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    if alpha >= 1.0 {
        return Err(MlError::InvalidArgument("contour path requires alpha < 1".into()));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Err(MlError::InvalidArgument("contour path requires z != 0".into()));
    }

    let pole = principal_pole(alpha, z);
    let mut m = (0.5 * (tol / f64::EPSILON).ln()).clamp(1.0, 16.0);
    let mut reshaped = false;
    let mut last_err = None;
    // Up to two reductions of m when the rounding floor dominates.
    for _ in 0..3 {
        let placement = match place(pole, m) {
            Placement::TooClose(distance) => {
                let s = pole.expect("only an existing pole can be too close");
                if reshaped {
                    return Err(MlError::PoleTooClose { pole: s, distance });
                }
                reshaped = true;
                m = reshape(s);
                match place(pole, m) {
                    Placement::TooClose(distance) => return Err(MlError::PoleTooClose { pole: s, distance }),
                    p => p,
                }
            }
            p => p,
        };
        let residue = match (placement, pole) {
            (Placement::Right, Some(s)) => {
                if s.re > 709.0 {
                    return Err(MlError::Overflow(s.re));
                }
                s.exp() / alpha
            }
            _ => Complex64::new(0.0, 0.0),
        };

        match integrate(&Quadrature { alpha, z, m }, residue, tol) {
            Ok(out) => {
                let est_error = out.discretization + out.rounding;
                if est_error <= tol {
                    return Ok(MlResult { value: out.value, est_error, method: Method::Contour });
                }
                last_err = Some(MlError::NonConvergence {
                    method: Method::Contour,
                    reason: format!("rounding floor {:.2e} above tolerance at m = {m:.3}", out.rounding),
                });
            }
            Err(e) => last_err = Some(e),
        }
        m *= 0.5;
    }
    Err(last_err.expect("at least one attempt ran"))
}
