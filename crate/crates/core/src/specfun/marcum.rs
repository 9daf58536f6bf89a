//! Generalized Marcum Q-function and the Nuttall Q-function
//! `Q_{p,q}(a, b) = ∫_b^∞ x^p e^{-(x²+a²)/2} I_q(ax) dx`.
//!
//! Both are Poisson mixtures of regularized incomplete gammas. With
//! `λ = a²/2`, `y = b²/2` and `m = (p+q+1)/2`,
//!
//! ```text
//! Q_{p,q}(a,b) = 2^{m-1-q/2} λ^{q/2} Σ_k Pois(k; λ) (m+k-1)!/(k+q)! Q(m+k, y)
//! ```
//!
//! For odd `p + q` with `p > q` the function also satisfies, by parts,
//!
//! ```text
//! Q_{μ,ν} = a Q_{μ-1,ν-1} + (μ-1-ν) Q_{μ-2,ν} + b^{μ-1} e^{-(a²+b²)/2} I_ν(ab)
//! ```
//!
//! (with `I_{-1} = I_1`), which reduces it to `Q_{ν+1,ν} = a^ν Q_{ν+1}(a,b)`
//! and Bessel terms. Every term is positive, so the recursion is stable.

use super::bessel::bessel_i_scaled;
use super::gamma::{gamma_p, gamma_q, ln_factorial, ln_gamma_p, ln_gamma_q, ln_poisson};
use crate::error::{domain, Error, Result};

/// Truncation target for the remaining Poisson mass, relative to the sum.
const TAIL_REL: f64 = 1e-16;

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a.is_finite()) {
        return domain(format!("Q-function requires finite a >= 0, got {a}"));
    }
    if b.is_nan() || b < 0.0 {
        return domain(format!("Q-function requires b >= 0, got {b}"));
    }
    Ok(())
}

/// Generalized Marcum `Q_μ(a, b)`.
pub fn marcum_q(mu: u32, a: f64, b: f64) -> Result<f64> {
    if mu == 0 {
        return domain("Marcum Q order must be >= 1");
    }
    check_ab(a, b)?;
    if b == 0.0 {
        return Ok(1.0);
    }
    if b.is_infinite() {
        return Ok(0.0);
    }
    let lambda = 0.5 * a * a;
    let y = 0.5 * b * b;
    if lambda == 0.0 {
        return Ok(gamma_q(mu, y));
    }

    // Q(μ+k, y) grows with k, so weights far below the Poisson mode are
    // irrelevant next to the mode's contribution.
    let k_lo = (lambda - 20.0 * lambda.sqrt() - 20.0).max(0.0) as u32;
    let mut k = k_lo;
    let mut q_k = gamma_q(mu + k, y);
    let mut sum = 0.0;
    loop {
        sum += ln_poisson(k, lambda).exp() * q_k;
        q_k = (q_k + ln_poisson(mu + k, y).exp()).min(1.0);
        k += 1;
        let kf = f64::from(k);
        if kf > lambda {
            // weights beyond k fall off faster than the ratio λ/(k+1)
            let next = ln_poisson(k, lambda).exp();
            let bound = next / (1.0 - lambda / (kf + 1.0));
            if bound <= TAIL_REL * sum || next == 0.0 {
                break;
            }
        }
    }
    Ok(sum.min(1.0))
}

/// `1 - Q_μ(a, b)`, summed directly so it stays accurate where it is small.
pub fn marcum_p(mu: u32, a: f64, b: f64) -> Result<f64> {
    if mu == 0 {
        return domain("Marcum Q order must be >= 1");
    }
    check_ab(a, b)?;
    if b == 0.0 {
        return Ok(0.0);
    }
    if b.is_infinite() {
        return Ok(1.0);
    }
    let lambda = 0.5 * a * a;
    let y = 0.5 * b * b;
    if lambda == 0.0 {
        return Ok(gamma_p(mu, y));
    }
    // P(μ+k, y) decreases with k: the tail is bounded by P_k times the
    // remaining Poisson mass.
    let mut sum = 0.0;
    let mut k = 0u32;
    loop {
        let ln_p = ln_gamma_p(mu + k, y);
        let ln_w = ln_poisson(k, lambda);
        sum += (ln_w + ln_p).exp();
        let kf = f64::from(k);
        if kf + 1.0 > lambda {
            let bound = (ln_w + ln_p).exp() / (1.0 - lambda / (kf + 2.0));
            if bound <= TAIL_REL * sum || ln_p == f64::NEG_INFINITY {
                break;
            }
        }
        k += 1;
    }
    Ok(sum.min(1.0))
}

fn check_nuttall(p: u32, q: u32, a: f64, b: f64) -> Result<()> {
    if p == 0 {
        return domain("Nuttall Q index p must be >= 1");
    }
    if (p + q) % 2 == 0 {
        return Err(Error::NuttallParity { p, q });
    }
    check_ab(a, b)
}

/// `ln Q_{p,q}(a, b)` from the Poisson-mixture series, summed in log space
/// so neither large `a` nor large `b` overflows or underflows.
pub fn ln_nuttall_q(p: u32, q: u32, a: f64, b: f64) -> Result<f64> {
    check_nuttall(p, q, a, b)?;
    if b.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let m = (p + q + 1) / 2;
    let lambda = 0.5 * a * a;
    let y = 0.5 * b * b;
    let half_q = 0.5 * f64::from(q);
    let ln2 = std::f64::consts::LN_2;
    if lambda == 0.0 {
        if q > 0 {
            return Ok(f64::NEG_INFINITY);
        }
        return Ok(f64::from(m - 1) * ln2 + ln_factorial(m - 1) + ln_gamma_q(m, y));
    }
    let prefactor = (f64::from(m) - 1.0 - half_q) * ln2 + half_q * lambda.ln();

    let mut acc = LogSum::default();
    let mut k = 0u32;
    loop {
        let ln_weight = ln_poisson(k, lambda) + ln_factorial(m + k - 1) - ln_factorial(k + q);
        acc.add(ln_weight + ln_gamma_q(m + k, y));
        // ratio of consecutive weights, decreasing in k
        let kf = f64::from(k);
        let rho = lambda * (f64::from(m) + kf) / ((kf + 1.0) * (kf + f64::from(q) + 1.0));
        if rho < 1.0 {
            let ln_bound = ln_weight + rho.ln() - (-rho).ln_1p();
            if ln_bound <= acc.ln() + TAIL_REL.ln() {
                break;
            }
        }
        k += 1;
    }
    Ok(prefactor + acc.ln())
}

/// `Q_{p,q}(a, b)` from the Poisson-mixture series.
pub fn nuttall_q_series(p: u32, q: u32, a: f64, b: f64) -> Result<f64> {
    let ln = ln_nuttall_q(p, q, a, b)?;
    if ln > 709.0 {
        return Err(Error::Overflow(format!("Q_{{{p},{q}}}({a}, {b}) = exp({ln:.3})")));
    }
    Ok(ln.exp())
}

/// Nuttall `Q_{p,q}(a, b)` for odd `p + q`.
///
/// Uses the closed-form reduction to Marcum and Bessel terms when `p > q`
/// (the case that arises for eigenvalue distributions) and the series
/// otherwise.
pub fn nuttall_q(p: u32, q: u32, a: f64, b: f64) -> Result<f64> {
    check_nuttall(p, q, a, b)?;
    if p < q + 1 {
        return nuttall_q_series(p, q, a, b);
    }
    let table = nuttall_table((p - q - 1) / 2, q, a, b)?;
    let v = table[(p - q - 1) as usize / 2][q as usize];
    if !v.is_finite() {
        return Err(Error::Overflow(format!("Q_{{{p},{q}}}({a}, {b})")));
    }
    Ok(v)
}

/// `T[d][ν] = Q_{ν+2d+1, ν}(a, b)` for `d ≤ d_max` and `ν ≤ max(q, 1)`.
fn nuttall_table(d_max: u32, q: u32, a: f64, b: f64) -> Result<Vec<Vec<f64>>> {
    let nu_max = q.max(1) as usize;
    let mut t = vec![vec![0.0; nu_max + 1]; d_max as usize + 1];
    for nu in 0..=nu_max {
        t[0][nu] = if nu == 0 {
            marcum_q(1, a, b)?
        } else if a == 0.0 {
            0.0
        } else {
            a.powi(nu as i32) * marcum_q(nu as u32 + 1, a, b)?
        };
    }
    let gauss = (-0.5 * (a - b) * (a - b)).exp();
    for d in 1..=d_max as usize {
        let big_d = (2 * d + 1) as f64;
        for nu in 0..=nu_max {
            let mu = nu as i32 + 2 * d as i32 + 1;
            let down = if nu == 0 { t[d - 1][1] } else { t[d][nu - 1] };
            let boundary = if b == 0.0 {
                0.0
            } else {
                b.powi(mu - 1) * gauss * bessel_i_scaled(nu as u32, a * b)
            };
            t[d][nu] = a * down + (big_d - 1.0) * t[d - 1][nu] + boundary;
        }
    }
    Ok(t)
}

/// Streaming `ln Σ exp(x_i)`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSum {
    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    fn ln(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}
