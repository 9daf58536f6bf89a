//! First-order expansions `f_{φ_k}(x) ≈ a_k x^{d_k}` and
//! `F_{φ_k}(x) ≈ a_k x^{d_k+1}/(d_k+1)` near the origin.
//!
//! For `k > 1`,
//!
//! ```text
//! a_k = s_k t_k Γ_{k−1}(s) Γ_{s_k}(s_k) / Γ_{s_k}(t_k+s_k)
//!       · Π λ_i^{L−s} / (Γ_{s−L}(s−L) Π_{i<j} (λ_i − λ_j)) · |X|
//! ```
//!
//! The λ-power here is `c₃ Π λ_i^{(t−s)/2}`; the sign-flipped exponent
//! `(s−t)/2` disagrees with the `k = 1` coefficient and with the small-`x`
//! behaviour of the exact CDFs, both of which this form reproduces.

use crate::error::{Error, Result};
use crate::logdet::{log_det, SignedLog};
use crate::model::WishartSpec;
use crate::specfun::gamma::{binomial, factorial, ln_factorial, multivariate_gamma_norm};
use crate::specfun::laguerre::laguerre;

use super::MAX_DIMENSION;

/// Leading-order small-argument behaviour of the k-th eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoeffs {
    pub k: usize,
    /// `d_k = (s−k+1)(t−k+1) − 1`.
    pub d: u32,
    /// `ln a_k`.
    pub ln_a: f64,
}

impl AsymptoticCoeffs {
    pub fn a(&self) -> f64 {
        self.ln_a.exp()
    }

    /// Diversity order `d_k + 1`.
    pub fn diversity(&self) -> u32 {
        self.d + 1
    }

    /// `a_k x^{d_k}`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x == 0.0 {
            return if self.d == 0 { self.a() } else { 0.0 };
        }
        (self.ln_a + f64::from(self.d) * x.ln()).exp()
    }

    /// `a_k x^{d_k+1} / (d_k+1)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let e = f64::from(self.d + 1);
        (self.ln_a - e.ln() + e * x.ln()).exp()
    }
}

fn check(spec: &WishartSpec, k: usize) -> Result<()> {
    if k == 0 || k > spec.s() {
        return Err(Error::Domain(format!("eigenvalue index k = {k} outside 1..={}", spec.s())));
    }
    if spec.s() > MAX_DIMENSION {
        return Err(Error::DimensionCap {
            s: spec.s(),
            cap: MAX_DIMENSION,
        });
    }
    Ok(())
}

fn ln_mvg(s: usize, t: usize) -> f64 {
    multivariate_gamma_norm(s as u32, t as u32)
        .expect("arguments ordered by construction")
        .ln_abs
}

/// Coefficients `(d_k, a_k)`; `a_1` uses its closed form
/// `st Γ_s(s)/Γ_s(t+s) e^{−tr Ω}`.
pub fn asymptotic_coeffs(spec: &WishartSpec, k: usize) -> Result<AsymptoticCoeffs> {
    check(spec, k)?;
    let (s, t) = (spec.s(), spec.t());
    let d = ((s - k + 1) * (t - k + 1) - 1) as u32;
    let ln_a = if k == 1 {
        ((s * t) as f64).ln() + ln_mvg(s, s) - ln_mvg(s, t + s) - spec.trace()
    } else {
        let a = general_coefficient(spec, k)?;
        if a.sign <= 0 {
            return Err(Error::NonPositiveCoefficient { k, sign: a.sign });
        }
        a.ln_abs
    };
    Ok(AsymptoticCoeffs { k, d, ln_a })
}

/// The `k > 1` expression, valid for every `k` (at `k = 1` it reduces to
/// the closed form).
pub(crate) fn general_coefficient(spec: &WishartSpec, k: usize) -> Result<SignedLog> {
    check(spec, k)?;
    let (s, t, l) = (spec.s(), spec.t(), spec.rank());
    let lambdas = spec.lambdas();
    let (sk, tk) = (s - k + 1, t - k + 1);

    let mut ln = ((sk * tk) as f64).ln() + ln_mvg(k - 1, s) + ln_mvg(sk, sk) - ln_mvg(sk, tk + sk)
        - ln_mvg(s - l, s - l);
    ln += (l as f64 - s as f64) * lambdas.iter().map(|v| v.ln()).sum::<f64>();
    for i in 0..l {
        for j in i + 1..l {
            ln -= (lambdas[i] - lambdas[j]).ln();
        }
    }
    let x = x_matrix(spec, k);
    let det = log_det(s, &x).det;
    Ok(det * SignedLog::positive(ln))
}

/// The `s × s` matrix `X` (row-major), 1-based `i`, `j` in the comments.
fn x_matrix(spec: &WishartSpec, k: usize) -> Vec<f64> {
    let (s, t, l) = (spec.s(), spec.t(), spec.rank());
    let lambdas = spec.lambdas();
    let mut x = Vec::with_capacity(s * s);
    for i in 1..=s {
        for j in 1..=s {
            let v = match (i < k, j <= l) {
                // L_{s−i}^{(t−s)}(−λ_j)
                (true, true) => laguerre((s - i) as u32, (t - s) as u32, -lambdas[j - 1]),
                // λ_j^{s−i} e^{−λ_j}
                (false, true) => {
                    let lam = lambdas[j - 1];
                    ((s - i) as f64 * lam.ln() - lam).exp()
                }
                // C(t−i, j−i) for j ≥ i
                (true, false) => binomial((t - i) as i64, j as i64 - i as i64),
                // (−1)^{i−j} (s−j)!/(i−j)! for j ≤ i
                (false, false) => {
                    if j <= i {
                        let sign = if (i - j) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * (ln_factorial((s - j) as u32) - ln_factorial((i - j) as u32)).exp()
                    } else {
                        0.0
                    }
                }
            };
            x.push(v);
        }
    }
    debug_assert!(factorial(0) == 1.0);
    x
}

/// `a_k x^{d_k+1}/(d_k+1)`.
pub fn cdf_asymptotic(spec: &WishartSpec, k: usize, x: f64) -> Result<f64> {
    Ok(asymptotic_coeffs(spec, k)?.cdf(x))
}

/// `a_k x^{d_k}`.
pub fn pdf_asymptotic(spec: &WishartSpec, k: usize, x: f64) -> Result<f64> {
    Ok(asymptotic_coeffs(spec, k)?.pdf(x))
}
