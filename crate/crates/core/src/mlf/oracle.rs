//! Arbitrary-precision Taylor evaluation of `E_α(z)`.
//!
//! Working precision is `digits + log10(max_k |z^k/Γ(αk+1)|)` plus guard
//! digits, so the cancellation between the largest terms and the result is
//! absorbed. After the sum is formed the actual loss
//! `log10(max term / |result|)` is measured and the sum is redone at a
//! higher precision if the first guess was short. Summation stops on the
//! rigorous tail bound `|t_k|·ρ/(1-ρ)`, where `ρ = |t_k/t_(k-1)|` is
//! non-increasing in `k` because `Γ` is log-convex.

use num_complex::Complex64;
use rug::{ops::Pow, Complex, Float};
use libm::lgamma as ln_gamma;

const GUARD_DIGITS: f64 = 12.0;
const BITS_PER_DIGIT: f64 = std::f64::consts::LOG2_10;

fn bits_for(digits: f64) -> u32 {
    (digits * BITS_PER_DIGIT).ceil() as u32 + 16
}

/// `log10` of the largest Taylor term magnitude.
fn peak_term_log10(alpha: f64, modulus: f64) -> f64 {
    if modulus == 0.0 {
        return 0.0;
    }
    let ln_abs = modulus.ln();
    let mut best = 0.0_f64;
    let mut k = 1_u64;
    loop {
        let lt = k as f64 * ln_abs - ln_gamma(alpha * k as f64 + 1.0);
        best = best.max(lt);
        // Past the peak once αk exceeds |z|^(1/α) and the terms decrease.
        if alpha * k as f64 > modulus.powf(1.0 / alpha) + 2.0 && lt < best {
            break;
        }
        k += 1;
    }
    best / std::f64::consts::LN_10
}

/// `Γ(αk + 1)` for consecutive `k` at a fixed precision.
///
/// When `α = p/q` exactly (true of every binary fraction with small
/// denominator such as 0.25, 0.5, 0.75), `Γ(α(k+q) + 1)` follows from
/// `Γ(αk + 1)` by `p` multiplications; otherwise each value comes from MPFR.
struct GammaTable {
    prec: u32,
    alpha: Float,
    shift: Option<(usize, u32)>,
    values: Vec<Float>,
}

impl GammaTable {
    fn new(alpha: f64, prec: u32) -> Self {
        let shift = (1..=64_u32).find_map(|q| {
            let scaled = alpha * q as f64;
            // Exact: q·α is computed without rounding for these small q
            // whenever the product is an integer that fits the mantissa.
            (scaled.fract() == 0.0 && Float::with_val(128, alpha) * q == scaled)
                .then_some((q as usize, scaled as u32))
        });
        Self { prec, alpha: Float::with_val(64, alpha), shift, values: Vec::new() }
    }

    fn get(&mut self, k: usize) -> &Float {
        while self.values.len() <= k {
            let j = self.values.len();
            let next = match self.shift {
                Some((q, p)) if j >= q => {
                    let x = Float::with_val(self.prec, &self.alpha * (j - q) as u64) + 1u32;
                    let mut g = self.values[j - q].clone();
                    for i in 0..p {
                        g *= Float::with_val(self.prec, &x + i);
                    }
                    g
                }
                _ => (Float::with_val(self.prec, &self.alpha * j as u64) + 1u32).gamma(),
            };
            self.values.push(next);
        }
        &self.values[k]
    }
}

/// Reusable oracle for one `α` at one working precision; caches `Γ(αk+1)`.
pub struct OracleSeries {
    alpha: f64,
    table: GammaTable,
}

impl OracleSeries {
    pub fn new(alpha: f64, prec_bits: u32) -> Self {
        Self { alpha, table: GammaTable::new(alpha, prec_bits) }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn precision(&self) -> u32 {
        self.table.prec
    }

    /// Sum the series until the tail is below `10^-target_digits · |sum|`.
    /// Returns the sum and `log10` of the largest term met.
    pub fn sum(&mut self, z: Complex64, target_digits: f64) -> (Complex, f64) {
        let prec = self.table.prec;
        let zc = Complex::with_val(prec, (z.re, z.im));
        let mut zk = Complex::with_val(prec, 1);
        let mut acc = Complex::with_val(prec, 0);
        let mut peak = Float::with_val(prec, 0);
        let mut prev_abs = Float::with_val(prec, 1);
        let threshold = Float::with_val(prec, 10).pow(-target_digits);
        for k in 0.. {
            let term = Complex::with_val(prec, &zk / self.table.get(k));
            let mag = Float::with_val(prec, term.abs_ref());
            acc += &term;
            if mag > peak {
                peak.clone_from(&mag);
            }
            if k > 0 {
                if mag.is_zero() {
                    break;
                }
                let ratio = Float::with_val(prec, &mag / &prev_abs);
                if ratio < 1 {
                    let tail = Float::with_val(prec, &mag * &ratio) / (Float::with_val(prec, 1) - &ratio);
                    let bound = Float::with_val(prec, acc.abs_ref()) * &threshold;
                    if tail <= bound {
                        break;
                    }
                }
            }
            prev_abs = mag;
            zk *= &zc;
        }
        (acc, peak.log10().to_f64())
    }
}

/// High-precision `E_α(z)`, correct to about `digits` significant digits.
///
/// Slow for large `|z|^(1/α)`: working precision and term count both grow
/// linearly with it.
pub fn ml_oracle(alpha: f64, z: Complex64, digits: u32) -> Complex {
    assert!((20..=200).contains(&digits), "digits = {digits} outside [20, 200]");
    assert!(alpha > 0.0 && alpha <= 1.0, "alpha = {alpha} outside (0, 1]");
    let target = digits as f64;
    let mut work = target + peak_term_log10(alpha, z.norm()).max(0.0) + GUARD_DIGITS;
    loop {
        let mut series = OracleSeries::new(alpha, bits_for(work));
        let (value, peak) = series.sum(z, target + 5.0);
        let magnitude = Float::with_val(64, value.abs_ref()).log10().to_f64();
        let needed = target + (peak - magnitude).max(0.0) + GUARD_DIGITS;
        if needed <= work + 1.0 || !magnitude.is_finite() {
            return value;
        }
        work = needed;
    }
}
