use num_complex::Complex64;
use libm::{lgamma as ln_gamma, tgamma as gamma};

use super::{check_alpha, check_tol, Method, MlError, MlResult, SERIES_GUARD_RADIUS, SERIES_TERM_CAP};

/// Neumaier-compensated complex accumulator.
#[derive(Default)]
struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    fn add(&mut self, x: Complex64) {
        self.sum.re = two_sum(self.sum.re, x.re, &mut self.carry.re);
        self.sum.im = two_sum(self.sum.im, x.im, &mut self.carry.im);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

fn two_sum(acc: f64, x: f64, carry: &mut f64) -> f64 {
    let t = acc + x;
    if acc.abs() >= x.abs() {
        *carry += (acc - t) + x;
    } else {
        *carry += (x - t) + acc;
    }
    t
}

/// `z^k / Γ(αk + 1)`, switching to the logarithmic form once `Γ` or `z^k`
/// would leave the double range.
fn term(alpha: f64, z: Complex64, zk: Complex64, k: usize) -> Complex64 {
    let x = alpha * k as f64 + 1.0;
    if x < 170.0 && zk.re.is_finite() && zk.im.is_finite() && zk.norm() < 1e300 {
        zk / gamma(x)
    } else {
        let kf = k as f64;
        let log_mag = kf * z.norm().ln() - ln_gamma(x);
        Complex64::from_polar(log_mag.exp(), kf * z.arg())
    }
}

/// Compensated Taylor summation of `E_α(z)`.
///
/// Stops once two consecutive terms fall below `tol·|partial sum|`. The
/// reported error combines the last term with the rounding floor
/// `ε·Σ|terms|`; if that exceeds `tol` the cancellation is too severe for
/// double precision and `NonConvergence` is returned so the caller can
/// switch to the contour path.
pub fn ml_series(alpha: f64, z: Complex64, tol: f64) -> Result<MlResult, MlError> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    if z.norm() > SERIES_GUARD_RADIUS {
        return Err(MlError::InvalidArgument(format!(
            "|z| = {} exceeds the series guard radius {SERIES_GUARD_RADIUS}",
            z.norm()
        )));
    }

    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut zk = Complex64::new(1.0, 0.0);
    let mut small_run = 0;
    let mut last = 0.0;
    for k in 0..=SERIES_TERM_CAP {
        let t = term(alpha, z, zk, k);
        acc.add(t);
        let mag = t.norm();
        abs_sum += mag;
        last = mag;
        let partial = acc.value().norm();
        if k > 0 && mag <= tol * partial {
            small_run += 1;
            if small_run == 2 {
                let value = acc.value();
                let est_error = (last + 4.0 * f64::EPSILON * abs_sum) / value.norm();
                if est_error > tol {
                    return Err(MlError::NonConvergence {
                        method: Method::Series,
                        reason: format!("cancellation: estimated relative error {est_error:.2e}"),
                    });
                }
                return Ok(MlResult { value, est_error, method: Method::Series });
            }
        } else {
            small_run = 0;
        }
        zk *= z;
    }
    Err(MlError::NonConvergence {
        method: Method::Series,
        reason: format!("term cap {SERIES_TERM_CAP} reached, last term {last:.2e}"),
    })
}
