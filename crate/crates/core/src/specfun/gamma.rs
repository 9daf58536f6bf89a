//! Integer-order incomplete gamma functions, factorials and the normalized
//! complex multivariate gamma function.
//!
//! The regularized pair `P(n, x)`, `Q(n, x)` is evaluated so that whichever
//! of the two is smaller is summed directly from positive terms; the larger
//! one is then formed as a complement. Both keep full relative accuracy.

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::logdet::SignedLog;

const SERIES_EPS: f64 = 1e-17;

const LN_FACTORIAL_TABLE: usize = 1024;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..LN_FACTORIAL_TABLE as u32)
            .map(|n| {
                if n <= 20 {
                    factorial(n).ln()
                } else {
                    libm::lgamma(f64::from(n) + 1.0)
                }
            })
            .collect()
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: u32) -> f64 {
    match ln_factorial_table().get(n as usize) {
        Some(&v) => v,
        None => libm::lgamma(f64::from(n) + 1.0),
    }
}

/// `n!` as a float; exact through `22!`, infinite beyond `170!`.
pub fn factorial(n: u32) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// `ln Γ(n + 1/2)`, exact in terms of factorials.
pub fn ln_gamma_half_integer(n: u32) -> f64 {
    ln_factorial(2 * n) - f64::from(n) * 4f64.ln() - ln_factorial(n)
        + 0.5 * std::f64::consts::PI.ln()
}

/// Logarithm of the Poisson weight `e^{-y} y^k / k!`.
pub fn ln_poisson(k: u32, y: f64) -> f64 {
    if y == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -y + f64::from(k) * y.ln() - ln_factorial(k)
}

/// Sum `Σ_{j≥0} x^j / ((n+1)(n+2)…(n+j))`, convergent for any `x` but used
/// only for `x < n + 1`.
fn tail_series(n: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = n;
    loop {
        j += 1;
        term *= x / f64::from(j);
        sum += term;
        if term < SERIES_EPS * sum {
            return sum;
        }
    }
}

/// Sum `Σ_{j=0}^{n-1} x^j/j!` expressed relative to its last term, i.e.
/// `1 + (n-1)/x + (n-1)(n-2)/x² + …`. Used for `x ≥ n`.
fn head_series(n: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = n - 1;
    while j > 0 {
        term *= f64::from(j) / x;
        sum += term;
        if term < SERIES_EPS * sum {
            break;
        }
        j -= 1;
    }
    sum
}

/// Regularized upper incomplete gamma `Q(n, x) = Γ(n, x) / (n-1)!` for
/// integer `n ≥ 1` (the Poisson probability `Pr[N_x ≤ n-1]`).
pub fn gamma_q(n: u32, x: f64) -> f64 {
    debug_assert!(n >= 1 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x >= f64::from(n) {
        (ln_poisson(n - 1, x)).exp() * head_series(n, x)
    } else {
        1.0 - gamma_p_series(n, x)
    }
}

/// Regularized lower incomplete gamma `P(n, x) = γ(n, x) / (n-1)!`.
pub fn gamma_p(n: u32, x: f64) -> f64 {
    debug_assert!(n >= 1 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < f64::from(n) {
        gamma_p_series(n, x)
    } else {
        1.0 - (ln_poisson(n - 1, x)).exp() * head_series(n, x)
    }
}

fn gamma_p_series(n: u32, x: f64) -> f64 {
    ln_poisson(n, x).exp() * tail_series(n, x)
}

/// `ln Q(n, x)`, finite even where `Q` underflows.
pub fn ln_gamma_q(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    if x >= f64::from(n) {
        ln_poisson(n - 1, x) + head_series(n, x).ln()
    } else {
        (-gamma_p_series(n, x)).ln_1p()
    }
}

/// `ln P(n, x)`, finite even where `P` underflows.
pub fn ln_gamma_p(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < f64::from(n) {
        ln_poisson(n, x) + tail_series(n, x).ln()
    } else {
        (-(ln_poisson(n - 1, x)).exp() * head_series(n, x)).ln_1p()
    }
}

fn check_args(p: u32, x: f64) -> Result<()> {
    if p == 0 {
        return domain("incomplete gamma order p must be a positive integer");
    }
    if x.is_nan() || x < 0.0 {
        return domain(format!("incomplete gamma argument must be nonnegative, got {x}"));
    }
    Ok(())
}

/// Upper incomplete gamma `Γ(p, x) = (p-1)! e^{-x} Σ_{k<p} x^k/k!`.
pub fn upper_incomplete_gamma(p: u32, x: f64) -> Result<f64> {
    check_args(p, x)?;
    Ok(factorial(p - 1) * gamma_q(p, x))
}

/// Lower incomplete gamma `γ(p, x) = (p-1)! - Γ(p, x)`, evaluated without
/// the subtraction when `x` is small.
pub fn lower_incomplete_gamma(p: u32, x: f64) -> Result<f64> {
    check_args(p, x)?;
    Ok(factorial(p - 1) * gamma_p(p, x))
}

/// Normalized complex multivariate gamma `Γ_s(t) = Π_{i=1}^{s} (t-i)!`, in
/// log form. `Γ_0(t)` is the empty product.
pub fn multivariate_gamma_norm(s: u32, t: u32) -> Result<SignedLog> {
    if t < s {
        return domain(format!("multivariate gamma requires t >= s, got s = {s}, t = {t}"));
    }
    let ln = (1..=s).map(|i| ln_factorial(t - i)).sum();
    Ok(SignedLog::positive(ln))
}

/// `ln C(n, k)` for `k ≤ n`.
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial coefficient as a float, zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
