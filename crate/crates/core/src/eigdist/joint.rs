//! Joint density of the ordered eigenvalues, with its normalizing constant
//! written out in full. Kept as an independent oracle for the CDFs, which
//! never use this constant.

use crate::error::{Error, Result};
use crate::logdet::log_det;
use crate::model::WishartSpec;
use crate::specfun::bessel::hyp0f1;
use crate::specfun::gamma::{ln_factorial, multivariate_gamma_norm};

/// `f(φ₁, …, φ_s) = c₁ |Υ| Π_{i<j}(φ_i − φ_j) Π φ_k^{t−s} e^{−φ_k}` for
/// `φ₁ > … > φ_s > 0`. Intended for small `s` (it is an oracle, not a
/// production path).
pub fn joint_pdf(spec: &WishartSpec, phis: &[f64]) -> Result<f64> {
    let (s, t, l) = (spec.s(), spec.t(), spec.rank());
    if phis.len() != s {
        return Err(Error::Dimension(format!("expected {s} eigenvalues, got {}", phis.len())));
    }
    if phis.iter().any(|&p| !(p > 0.0 && p.is_finite())) || phis.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Domain("eigenvalues must be positive and strictly decreasing".into()));
    }
    let lambdas = spec.lambdas();
    let q = (t - s) as u32;

    // c₁ = e^{−tr Ω} ((t−s)!)^{−s} / (Γ_{s−L}(s−L) Π λ_i^{s−L} Π_{i<j} (λ_i − λ_j))
    let mut ln_c1 = -spec.trace() - s as f64 * ln_factorial(q)
        - multivariate_gamma_norm((s - l) as u32, (s - l) as u32)?.ln_abs;
    for i in 0..l {
        ln_c1 -= (s - l) as f64 * lambdas[i].ln();
        for j in i + 1..l {
            ln_c1 -= (lambdas[i] - lambdas[j]).ln();
        }
    }

    let mut upsilon = Vec::with_capacity(s * s);
    for &phi in phis {
        for j in 0..s {
            let v = if j < l {
                hyp0f1(q + 1, lambdas[j] * phi)?
            } else {
                // φ^{s−j} (t−s)!/(t−j)! with 1-based j
                let jj = j + 1;
                ((s - jj) as f64 * phi.ln() + ln_factorial(q) - ln_factorial((t - jj) as u32)).exp()
            };
            upsilon.push(v);
        }
    }
    let det = log_det(s, &upsilon).det;

    let mut ln_rest = 0.0;
    for i in 0..s {
        for j in i + 1..s {
            ln_rest += (phis[i] - phis[j]).ln();
        }
        ln_rest += f64::from(q) * phis[i].ln() - phis[i];
    }
    Ok(f64::from(det.sign) * (ln_c1 + det.ln_abs + ln_rest).exp())
}
