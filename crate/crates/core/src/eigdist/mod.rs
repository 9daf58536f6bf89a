//! Exact marginal distributions of the ordered eigenvalues
//! `φ₁ > … > φ_s` of `S ~ W_s(t, I, Ω)`.
//!
//! * smallest: `F_{φ_s}(x) = 1 − |Ψ(x)| / |Ψ(0)|`
//! * largest: `F_{φ₁}(x) = |Ξ(x)| / |Ψ(0)|`
//! * k-th: `F_{φ_k} = F_{φ_{k−1}} + Σ_A |Θ_A(x)| / |Ψ(0)|`, the sum running
//!   over the `(k−1)`-subsets `A` of rows taken from `Ψ`, the others from `Ξ`.
//!
//! Columns `j ≤ L` hold Nuttall Q-functions. Each is evaluated here through
//! its Poisson-mixture form
//!
//! ```text
//! Ψ_ij(x) ∝ Σ_k Pois(k; λ_j) (t−i+k)!/(k+t−s)! · Q(t−i+1+k, x)
//! Ξ_ij(x) ∝ Σ_k Pois(k; λ_j) (t−i+k)!/(k+t−s)! · P(t−i+1+k, x)
//! ```
//!
//! where `P`, `Q` are the regularized incomplete gammas. One table of
//! `P(n, x)`, `Q(n, x)` per evaluation point serves every entry, and `Ξ`
//! is summed directly rather than as a difference of two Q-functions, so it
//! keeps its relative accuracy in the lower tail. Column factors cancel in
//! every ratio and are kept aside in log form.

mod asymptotic;
mod joint;

pub use asymptotic::{asymptotic_coeffs, cdf_asymptotic, pdf_asymptotic, AsymptoticCoeffs};
pub use joint::joint_pdf;

use crate::error::{Error, Result};
use crate::logdet::{log_det, LogDet, SignedLog};
use crate::model::{spectrum_from_channel, RiceanChannel, WishartSpec};
use crate::specfun::gamma::{gamma_p, ln_factorial, ln_poisson};

/// Largest supported `s`; the k-th eigenvalue sum has at most `C(12, 6)`
/// determinants.
pub const MAX_DIMENSION: usize = 12;

/// Evaluations that lose more decimal digits than this are flagged.
pub const ILL_CONDITIONED_DIGITS: f64 = 6.0;

/// CDF values this close outside `[0, 1]` are clamped; larger excursions are
/// returned as computed.
pub const CLAMP_TOL: f64 = 1e-9;

const WEIGHT_TAIL: f64 = 1e-18;

/// A probability together with an estimate of the decimal digits lost to
/// cancellation, both inside the determinants and between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub digits_lost: f64,
}

impl Evaluation {
    pub fn is_ill_conditioned(&self) -> bool {
        self.digits_lost > ILL_CONDITIONED_DIGITS
    }
}

fn clamp_probability(v: f64) -> f64 {
    if (-CLAMP_TOL..0.0).contains(&v) {
        0.0
    } else if v > 1.0 && v <= 1.0 + CLAMP_TOL {
        1.0
    } else {
        v
    }
}

/// Running sum of determinant ratios with a first-order error budget:
/// a ratio that lost `d` digits contributes `|r|·10^d` units of roundoff.
#[derive(Default)]
struct Accumulator {
    value: f64,
    error: f64,
}

impl Accumulator {
    fn add(&mut self, r: f64, digits_lost: f64) {
        self.value += r;
        self.error += r.abs() * 10f64.powf(digits_lost);
    }

    fn evaluation(&self) -> Evaluation {
        let digits_lost = if self.error == 0.0 {
            0.0
        } else if self.value == 0.0 {
            f64::INFINITY
        } else {
            (self.error / self.value.abs()).log10().max(0.0)
        };
        Evaluation {
            value: clamp_probability(self.value),
            digits_lost,
        }
    }
}

/// Precomputed determinant engine for one Wishart spectrum.
#[derive(Debug, Clone)]
pub struct EigenvalueDistribution {
    spec: WishartSpec,
    /// Poisson weights of each λ-column, divided by their largest value.
    pois: Vec<Vec<f64>>,
    /// `ratio[i][k] = (t−1−i+k)! / (k+t−s)!` for 0-based row `i`.
    ratio: Vec<Vec<f64>>,
    /// `gamma_coef[i][c] = (t+s−2−i−j)! / (t−1−j)!` for 0-based `j = L + c`.
    gamma_coef: Vec<Vec<f64>>,
    /// Log of the factor removed from each column.
    col_ln: Vec<f64>,
    n_max: u32,
    psi0: LogDet,
}

/// Tables of `Q(n, x)` and `P(n, x)` for `n = 1..=n_max` (index `n`).
struct GammaTables {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl GammaTables {
    fn new(n_max: u32, x: f64) -> Self {
        let len = n_max as usize + 1;
        if x == 0.0 {
            return GammaTables {
                q: vec![1.0; len],
                p: vec![0.0; len],
            };
        }
        let pois: Vec<f64> = (0..=n_max).map(|n| ln_poisson(n, x).exp()).collect();
        let mut q = vec![0.0; len];
        let mut p = vec![0.0; len];
        // Q(n+1) = Q(n) + e^{-x}x^n/n!  (upward, all terms positive)
        q[1] = (-x).exp();
        for n in 1..n_max as usize {
            q[n + 1] = (q[n] + pois[n]).min(1.0);
        }
        // P(n) = P(n+1) + e^{-x}x^n/n!  (downward, all terms positive)
        p[n_max as usize] = gamma_p(n_max, x);
        for n in (1..n_max as usize).rev() {
            p[n] = (p[n + 1] + pois[n]).min(1.0);
        }
        GammaTables { q, p }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Tail {
    Upper,
    Lower,
}

impl EigenvalueDistribution {
    pub fn new(spec: WishartSpec) -> Result<Self> {
        let (s, t, l) = (spec.s(), spec.t(), spec.rank());
        if s > MAX_DIMENSION {
            return Err(Error::DimensionCap {
                s,
                cap: MAX_DIMENSION,
            });
        }
        let q = (t - s) as u32;

        let mut pois = Vec::with_capacity(l);
        let mut col_ln = Vec::with_capacity(s);
        let mut k_max = 0u32;
        for &lambda in spec.lambdas() {
            let (w, ln_scale) = poisson_weights(lambda, t as u32, q);
            k_max = k_max.max(w.len() as u32 - 1);
            pois.push(w);
            // undo the normalization and restore λ^{(t−s)/2} so that the
            // column equals the documented entry (the 2-powers cancel)
            col_ln.push(ln_scale + 0.5 * f64::from(q) * lambda.ln());
        }
        let ratio = (0..s)
            .map(|i| {
                (0..=k_max)
                    .map(|k| {
                        let top = t as u32 - 1 - i as u32 + k;
                        (ln_factorial(top) - ln_factorial(k + q)).exp()
                    })
                    .collect()
            })
            .collect();
        let gamma_coef = (0..s)
            .map(|i| {
                (l..s)
                    .map(|j| (ln_factorial((t + s - 2 - i - j) as u32) - ln_factorial((t - 1 - j) as u32)).exp())
                    .collect()
            })
            .collect();
        for j in l..s {
            col_ln.push(ln_factorial((t - 1 - j) as u32));
        }
        let n_max = (t as u32 + k_max).max((t + s) as u32);

        let mut dist = EigenvalueDistribution {
            spec,
            pois,
            ratio,
            gamma_coef,
            col_ln,
            n_max,
            psi0: LogDet {
                det: SignedLog::ONE,
                digits_lost: 0.0,
            },
        };
        let zero = GammaTables::new(n_max, 0.0);
        let psi0 = dist.matrix(&zero, Tail::Upper);
        dist.psi0 = log_det(s, &psi0);
        if dist.psi0.det.is_zero() || !dist.psi0.det.ln_abs.is_finite() {
            return Err(Error::Domain("normalizing determinant |Psi(0)| vanished".into()));
        }
        Ok(dist)
    }

    pub fn from_channel(ch: &RiceanChannel) -> Result<Self> {
        Self::new(spectrum_from_channel(ch)?)
    }

    pub fn spec(&self) -> &WishartSpec {
        &self.spec
    }

    fn entry(&self, tables: &GammaTables, tail: Tail, i: usize, j: usize) -> f64 {
        let g = match tail {
            Tail::Upper => &tables.q,
            Tail::Lower => &tables.p,
        };
        let l = self.spec.rank();
        let m = self.spec.t() - i; // t − i + 1 for 1-based i
        if j < l {
            let w = &self.pois[j];
            let r = &self.ratio[i];
            let g = &g[m..];
            w.iter().zip(r).zip(g).map(|((w, r), g)| w * r * g).sum()
        } else {
            let n = self.spec.t() + self.spec.s() - 1 - i - j;
            self.gamma_coef[i][j - l] * g[n]
        }
    }

    fn matrix(&self, tables: &GammaTables, tail: Tail) -> Vec<f64> {
        let s = self.spec.s();
        let mut a = Vec::with_capacity(s * s);
        for i in 0..s {
            for j in 0..s {
                a.push(self.entry(tables, tail, i, j));
            }
        }
        a
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        let s = self.spec.s();
        if i == 0 || j == 0 || i > s || j > s {
            return Err(Error::Domain(format!("entry ({i}, {j}) outside 1..={s}")));
        }
        Ok(())
    }

    fn check_x(x: f64) -> Result<()> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain(format!("eigenvalue argument must be >= 0, got {x}")));
        }
        Ok(())
    }

    /// Entry `(i, j)` (1-based) of `Ψ(x)`: `2^{(2i−s−t)/2} Q_{s+t−2i+1, t−s}(√(2λ_j), √(2x))`
    /// for `j ≤ L`, `Γ(t+s−i−j+1, x)` otherwise.
    pub fn psi_entry(&self, i: usize, j: usize, x: f64) -> Result<SignedLog> {
        self.check_index(i, j)?;
        Self::check_x(x)?;
        let tables = GammaTables::new(self.n_max, x);
        let v = self.entry(&tables, Tail::Upper, i - 1, j - 1);
        Ok(SignedLog::from_f64(v) * SignedLog::positive(self.col_ln[j - 1]))
    }

    /// Entry `(i, j)` of `Ξ(x) = Ψ(0) − Ψ(x)`, summed without the subtraction.
    pub fn xi_entry(&self, i: usize, j: usize, x: f64) -> Result<SignedLog> {
        self.check_index(i, j)?;
        Self::check_x(x)?;
        let tables = GammaTables::new(self.n_max, x);
        let v = self.entry(&tables, Tail::Lower, i - 1, j - 1);
        Ok(SignedLog::from_f64(v) * SignedLog::positive(self.col_ln[j - 1]))
    }

    /// `ln |Ψ(0)|` with its sign.
    pub fn psi0_det(&self) -> SignedLog {
        let shift: f64 = self.col_ln.iter().sum();
        self.psi0.det * SignedLog::positive(shift)
    }

    fn ratio_to_psi0(&self, d: LogDet) -> (f64, f64) {
        let r = (d.det / self.psi0.det).to_f64();
        // relative errors of numerator and denominator add
        let lost = (10f64.powf(d.digits_lost) + 10f64.powf(self.psi0.digits_lost)).log10();
        (r, lost)
    }

    /// CDF of the smallest eigenvalue, with conditioning information.
    pub fn cdf_min_eval(&self, x: f64) -> Result<Evaluation> {
        Self::check_x(x)?;
        if x == 0.0 {
            return Ok(Evaluation {
                value: 0.0,
                digits_lost: 0.0,
            });
        }
        let tables = GammaTables::new(self.n_max, x);
        let psi = self.matrix(&tables, Tail::Upper);
        let (r, d) = self.ratio_to_psi0(log_det(self.spec.s(), &psi));
        let mut acc = Accumulator::default();
        acc.add(1.0, 0.0);
        acc.add(-r, d);
        Ok(acc.evaluation())
    }

    /// CDF of the largest eigenvalue, with conditioning information.
    pub fn cdf_max_eval(&self, x: f64) -> Result<Evaluation> {
        Self::check_x(x)?;
        if x == 0.0 {
            return Ok(Evaluation {
                value: 0.0,
                digits_lost: 0.0,
            });
        }
        let tables = GammaTables::new(self.n_max, x);
        let xi = self.matrix(&tables, Tail::Lower);
        let (r, d) = self.ratio_to_psi0(log_det(self.spec.s(), &xi));
        let mut acc = Accumulator::default();
        acc.add(r, d);
        Ok(acc.evaluation())
    }

    /// CDFs of `φ₁, …, φ_s` at `x`, each with conditioning information.
    pub fn cdf_all_eval(&self, x: f64) -> Result<Vec<Evaluation>> {
        self.cdf_upto(self.spec.s(), x)
    }

    fn cdf_upto(&self, k_max: usize, x: f64) -> Result<Vec<Evaluation>> {
        Self::check_x(x)?;
        let s = self.spec.s();
        if x == 0.0 {
            return Ok(vec![
                Evaluation {
                    value: 0.0,
                    digits_lost: 0.0
                };
                k_max
            ]);
        }
        let tables = GammaTables::new(self.n_max, x);
        let psi = self.matrix(&tables, Tail::Upper);
        let xi = self.matrix(&tables, Tail::Lower);

        let mut out = Vec::with_capacity(k_max);
        let mut acc = Accumulator::default();
        let (r, d) = self.ratio_to_psi0(log_det(s, &xi));
        acc.add(r, d);
        out.push(acc.evaluation());
        let mut theta = vec![0.0; s * s];
        for k in 2..=k_max {
            // rows in `subset` come from Ψ, the rest from Ξ; natural order
            for subset in Subsets::new(s, k - 1) {
                for i in 0..s {
                    let src = if subset & (1 << i) != 0 { &psi } else { &xi };
                    theta[i * s..(i + 1) * s].copy_from_slice(&src[i * s..(i + 1) * s]);
                }
                let (r, d) = self.ratio_to_psi0(log_det(s, &theta));
                acc.add(r, d);
            }
            out.push(acc.evaluation());
        }
        Ok(out)
    }

    /// CDF of the k-th largest eigenvalue (`1 ≤ k ≤ s`), with conditioning
    /// information.
    pub fn cdf_kth_eval(&self, k: usize, x: f64) -> Result<Evaluation> {
        self.check_k(k)?;
        Ok(*self.cdf_upto(k, x)?.last().expect("k >= 1"))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.spec.s() {
            return Err(Error::Domain(format!(
                "eigenvalue index k = {k} outside 1..={}",
                self.spec.s()
            )));
        }
        Ok(())
    }

    pub fn cdf_min(&self, x: f64) -> Result<f64> {
        Ok(log_conditioning(self.cdf_min_eval(x)?, "cdf_min", x).value)
    }

    pub fn cdf_max(&self, x: f64) -> Result<f64> {
        Ok(log_conditioning(self.cdf_max_eval(x)?, "cdf_max", x).value)
    }

    pub fn cdf_kth(&self, k: usize, x: f64) -> Result<f64> {
        Ok(log_conditioning(self.cdf_kth_eval(k, x)?, "cdf_kth", x).value)
    }

    pub fn cdf_all(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self
            .cdf_all_eval(x)?
            .into_iter()
            .map(|e| log_conditioning(e, "cdf_all", x).value)
            .collect())
    }

    /// Density of `φ_k` by a central difference with step
    /// `h = max(1e−6, 1e−4·x)` (kept inside `x/2` near the origin) and one
    /// Richardson extrapolation.
    pub fn pdf_kth_eval(&self, k: usize, x: f64) -> Result<Evaluation> {
        self.check_k(k)?;
        if !(x > 0.0) {
            return Err(Error::Domain(format!("pdf requires x > 0, got {x}")));
        }
        let h = (1e-4 * x).max(1e-6).min(0.5 * x);
        let mut lost: f64 = 0.0;
        let mut f = |y: f64| -> Result<f64> {
            let e = self.cdf_kth_eval(k, y)?;
            lost = lost.max(e.digits_lost);
            Ok(e.value)
        };
        let d1 = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let d2 = (f(x + 0.5 * h)? - f(x - 0.5 * h)?) / h;
        Ok(Evaluation {
            value: (4.0 * d2 - d1) / 3.0,
            digits_lost: lost,
        })
    }

    pub fn pdf_kth(&self, k: usize, x: f64) -> Result<f64> {
        Ok(self.pdf_kth_eval(k, x)?.value)
    }
}

fn log_conditioning(e: Evaluation, what: &str, x: f64) -> Evaluation {
    if e.is_ill_conditioned() {
        log::debug!("{what}({x:e}) lost {:.1} digits", e.digits_lost);
    }
    e
}

/// Poisson weights `Pois(k; λ)` for `k = 0..=K`, divided by their largest
/// value, with `K` chosen so the neglected mass, weighted by the row factor
/// `(t−1+k)!/(k+q)!`, is below [`WEIGHT_TAIL`] of the total. Returns the
/// weights and the log of the divisor.
fn poisson_weights(lambda: f64, t: u32, q: u32) -> (Vec<f64>, f64) {
    let mode = lambda.floor() as u32;
    let ln_peak = ln_poisson(mode, lambda);
    let mut w = Vec::new();
    let mut total = 0.0;
    let mut k = 0u32;
    loop {
        let v = (ln_poisson(k, lambda) - ln_peak).exp();
        // row-1 factor, the fastest growing over k
        let r = (ln_factorial(t - 1 + k) - ln_factorial(k + q)).exp();
        w.push(v);
        total += v * r;
        let kf = f64::from(k);
        if kf > lambda {
            let rho = lambda * (f64::from(t) + kf) / ((kf + 1.0) * (kf + f64::from(q) + 1.0));
            if rho < 1.0 && v * r * rho / (1.0 - rho) <= WEIGHT_TAIL * total {
                break;
            }
        }
        k += 1;
    }
    (w, ln_peak)
}

/// Bitmasks of the `r`-subsets of `{0, …, n−1}` in increasing order.
struct Subsets {
    next: Option<u32>,
    limit: u32,
}

impl Subsets {
    fn new(n: usize, r: usize) -> Self {
        Subsets {
            next: Some((1u32 << r) - 1),
            limit: 1u32 << n,
        }
    }
}

impl Iterator for Subsets {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        let cur = self.next?;
        if cur >= self.limit {
            self.next = None;
            return None;
        }
        self.next = if cur == 0 {
            None
        } else {
            // Gosper's hack: next integer with the same popcount
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            Some((((r ^ cur) >> 2) / c) | r)
        };
        Some(cur)
    }
}

/// CDF of the k-th largest singular value `ω_k` of `H`:
/// `F_{ω_k}(x) = F_{φ_k}(ε⁻² x²)`.
pub fn singular_value_cdf(ch: &RiceanChannel, k: usize, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("singular value argument must be >= 0, got {x}")));
    }
    let dist = EigenvalueDistribution::from_channel(ch)?;
    let eps = ch.epsilon();
    dist.cdf_kth(k, x * x / (eps * eps))
}
