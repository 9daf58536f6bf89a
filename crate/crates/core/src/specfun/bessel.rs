//! Modified Bessel function of the first kind for integer order, and the
//! Bessel-type hypergeometric function `0F1(b; x)` for integer `b`.

use super::gamma::ln_factorial;
use crate::error::{domain, Error, Result};

/// Argument at which the power series hands over to the large-argument
/// expansion, per unit of order.
const ASYMPTOTIC_SWITCH: f64 = 30.0;

/// Largest `x` for which `e^x` is finite.
const EXP_LIMIT: f64 = 709.0;

/// `e^{-x} I_q(x)` for `x ≥ 0`; never overflows.
pub fn bessel_i_scaled(q: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if q == 0 { 1.0 } else { 0.0 };
    }
    if x < ASYMPTOTIC_SWITCH * f64::from(q.max(1)) {
        series_scaled(q, x)
    } else {
        asymptotic_scaled(q, x)
    }
}

/// `Σ_k (x/2)^{2k+q} / (k! (k+q)!)` times `e^{-x}`.
fn series_scaled(q: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = (f64::from(q) * half.ln() - ln_factorial(q) - x).exp();
    let quarter_sq = half * half;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= quarter_sq / (f64::from(k) * f64::from(k + q));
        sum += term;
        // terms peak near k ≈ x/2, stop once past the peak and negligible
        if f64::from(k) > half && term <= 1e-17 * sum {
            return sum;
        }
        if term == 0.0 && sum == 0.0 && f64::from(k) > half {
            return 0.0;
        }
    }
}

/// Hankel expansion `e^{-x} I_q(x) ≈ (2πx)^{-1/2} Σ (-1)^k a_k(q) / x^k`.
fn asymptotic_scaled(q: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(q) * f64::from(q);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200u32 {
        let odd = f64::from(2 * k - 1);
        term *= -(mu - odd * odd) / (8.0 * f64::from(k) * x);
        if term.abs() >= prev || term == 0.0 {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `I_q(x)`; fails with [`Error::Overflow`] when the value is not
/// representable (use [`ln_bessel_i`] or [`bessel_i_scaled`] there).
pub fn bessel_i(q: u32, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return domain(format!("bessel_i requires x >= 0, got {x}"));
    }
    let scaled = bessel_i_scaled(q, x);
    if x > EXP_LIMIT {
        let ln = scaled.ln() + x;
        if ln > EXP_LIMIT {
            return Err(Error::Overflow(format!(
                "I_{q}({x}) = exp({ln:.3}) exceeds f64 range"
            )));
        }
        return Ok(ln.exp());
    }
    Ok(scaled * x.exp())
}

/// `ln I_q(x)`.
pub fn ln_bessel_i(q: u32, x: f64) -> f64 {
    bessel_i_scaled(q, x).ln() + x
}

/// `0F1(b; x) = (b-1)! x^{-(b-1)/2} I_{b-1}(2√x)` for integer `b ≥ 1`.
///
/// Near the origin the defining series is summed directly.
pub fn hyp0f1(b: u32, x: f64) -> Result<f64> {
    if b == 0 {
        return domain("hyp0f1 requires b >= 1");
    }
    if x.is_nan() || x < 0.0 {
        return domain(format!("hyp0f1 requires x >= 0, got {x}"));
    }
    if x <= 1.0 {
        return Ok(hyp0f1_series(b, x));
    }
    let ln = ln_hyp0f1(b, x);
    if ln > EXP_LIMIT {
        return Err(Error::Overflow(format!("0F1({b}; {x}) exceeds f64 range")));
    }
    Ok(ln.exp())
}

/// `ln 0F1(b; x)`.
pub fn ln_hyp0f1(b: u32, x: f64) -> f64 {
    if x <= 1.0 {
        return hyp0f1_series(b, x).ln();
    }
    let order = b - 1;
    let z = 2.0 * x.sqrt();
    ln_factorial(order) - 0.5 * f64::from(order) * x.ln() + ln_bessel_i(order, z)
}

/// `Σ_k x^k / ((b)_k k!)`.
pub(crate) fn hyp0f1_series(b: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0u32;
    loop {
        term *= x / (f64::from(b + k) * f64::from(k + 1));
        sum += term;
        k += 1;
        if term <= 1e-17 * sum && f64::from(k) > x.sqrt() {
            return sum;
        }
    }
}
