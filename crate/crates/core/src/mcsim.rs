//! Seeded Monte Carlo oracle for the analytic layers.
//!
//! Samples are drawn in fixed blocks of [`BLOCK`]; block `b` uses the
//! ChaCha8 stream `b` of the run seed, and per-block accumulators are merged
//! in block order. The results are therefore bit-identical for any worker
//! count.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{gram, hermitian_eigenvalues};
use crate::model::RiceanChannel;
use crate::perf::MbConfig;

/// Samples per RNG substream.
pub const BLOCK: usize = 4096;

/// Two-sided 95% normal quantile for the Wilson interval.
const Z95: f64 = 1.959_963_984_540_054;

/// One Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct McRun {
    pub seed: u64,
    pub n_samples: usize,
    pub channel: RiceanChannel,
    /// Worker threads; `0` uses the global rayon pool.
    pub workers: usize,
}

impl McRun {
    pub fn new(channel: RiceanChannel, seed: u64, n_samples: usize) -> Self {
        McRun {
            seed,
            n_samples,
            channel,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Maps each block's sample range to a value, in block order.
    fn map_blocks<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, usize) -> Result<T> + Sync,
    {
        if self.n_samples == 0 {
            return Err(Error::Config("Monte Carlo run needs at least one sample".into()));
        }
        let blocks = self.n_samples.div_ceil(BLOCK);
        let job = |b: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(b as u64);
            let len = BLOCK.min(self.n_samples - b * BLOCK);
            f(&mut rng, len)
        };
        if self.workers == 0 {
            return (0..blocks).into_par_iter().map(job).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))?;
        pool.install(|| (0..blocks).into_par_iter().map(job).collect())
    }

    /// Ordered eigenvalues `φ₁ ≥ … ≥ φ_s ≥ 0` of `ε⁻² H H†`, one vector per
    /// draw, in sample order.
    pub fn eigenvalue_samples(&self) -> Result<Vec<Vec<f64>>> {
        let blocks = self.map_blocks(|rng, len| {
            (0..len)
                .map(|_| normalized_eigenvalues(&self.channel, rng))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(blocks.into_iter().flatten().collect())
    }
}

/// One draw of `H = ε√K H̄ + ε H̃`, `H̃` with i.i.d. `CN(0, 1)` entries.
pub fn sample_channel(ch: &RiceanChannel, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let eps = ch.epsilon();
    normalized_draw(ch, rng) * Complex64::new(eps, 0.0)
}

/// `ε⁻¹ H = √K H̄ + H̃`.
fn normalized_draw(ch: &RiceanChannel, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let root_k = ch.k_factor().sqrt();
    let hbar = ch.hbar();
    DMatrix::from_fn(ch.n(), ch.m(), |i, j| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        hbar[(i, j)] * root_k + Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

fn normalized_eigenvalues(ch: &RiceanChannel, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let g = normalized_draw(ch, rng);
    let mut phi = hermitian_eigenvalues(&gram(&g))?;
    for v in &mut phi {
        *v = v.max(0.0);
    }
    Ok(phi)
}

/// Right-continuous empirical CDF `F_n(x) = #{X_i ≤ x}/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("empirical CDF needs at least one sample".into()));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("NaN in Monte Carlo samples".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of samples `≤ x`.
    pub fn count(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.count(x) as f64 / self.n() as f64
    }

    /// Same distribution under a monotone increasing map of the samples.
    pub fn map_monotone(&self, f: impl Fn(f64) -> f64) -> Self {
        EmpiricalCdf {
            sorted: self.sorted.iter().map(|&v| f(v)).collect(),
        }
    }

    /// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
    pub fn ks_distance<F>(&self, mut cdf: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let n = self.n() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = cdf(x)?;
            d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
        }
        Ok(d)
    }

    /// Two-sample Kolmogorov–Smirnov statistic.
    pub fn ks_two_sample(&self, other: &EmpiricalCdf) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0, 0);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }
}

/// Critical value `c(α)/√n_eff` of the Kolmogorov–Smirnov test at
/// `α = 0.01` (`c = 1.63`).
pub fn ks_critical_001(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Empirical CDFs of `φ₁, …, φ_s`.
pub fn empirical_eig_cdfs(run: &McRun) -> Result<Vec<EmpiricalCdf>> {
    let samples = run.eigenvalue_samples()?;
    let s = run.channel.s();
    (0..s)
        .map(|k| EmpiricalCdf::new(samples.iter().map(|phi| phi[k]).collect()))
        .collect()
}

/// Running mean and sum of squared deviations, merged exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn estimate(&self) -> Estimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        Estimate {
            mean: self.mean,
            std_error: (var / self.n).sqrt(),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Semi-analytic SER estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SerEstimate {
    pub subchannels: Vec<Estimate>,
    pub global: Estimate,
}

/// `Q(x) = ½ erfc(x/√2)`.
fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Averages `α_k Q(√(2β_k γ_k))` over channel draws for each configuration;
/// all configurations share the same draws.
pub fn empirical_ser_grid(run: &McRun, cfgs: &[MbConfig]) -> Result<Vec<SerEstimate>> {
    let s = run.channel.s();
    if let Some(c) = cfgs.iter().find(|c| c.r() > s) {
        return Err(Error::Config(format!("r = {} subchannels exceed s = {s}", c.r())));
    }
    let eps2 = run.channel.epsilon().powi(2);
    let blocks = run.map_blocks(|rng, len| {
        let mut acc: Vec<(Vec<Moments>, Moments)> =
            cfgs.iter().map(|c| (vec![Moments::default(); c.r()], Moments::default())).collect();
        for _ in 0..len {
            let phi = normalized_eigenvalues(&run.channel, rng)?;
            for (cfg, (subs, global)) in cfgs.iter().zip(acc.iter_mut()) {
                let mut sum = 0.0;
                for (k, m) in cfg.modulations().iter().enumerate() {
                    let gamma = eps2 * phi[k] * cfg.powers()[k];
                    let ser = m.alpha * gaussian_q((2.0 * m.beta * gamma).sqrt());
                    subs[k].push(ser);
                    sum += ser;
                }
                global.push(sum / cfg.r() as f64);
            }
        }
        Ok(acc)
    })?;
    let mut total: Vec<(Vec<Moments>, Moments)> =
        cfgs.iter().map(|c| (vec![Moments::default(); c.r()], Moments::default())).collect();
    for block in blocks {
        for ((subs, global), (bsubs, bglobal)) in total.iter_mut().zip(block) {
            for (a, b) in subs.iter_mut().zip(bsubs) {
                *a = a.merge(b);
            }
            *global = global.merge(bglobal);
        }
    }
    Ok(total
        .into_iter()
        .map(|(subs, global)| SerEstimate {
            subchannels: subs.iter().map(Moments::estimate).collect(),
            global: global.estimate(),
        })
        .collect())
}

pub fn empirical_ser(run: &McRun, cfg: &MbConfig) -> Result<SerEstimate> {
    Ok(empirical_ser_grid(run, std::slice::from_ref(cfg))?.remove(0))
}

/// Outage frequency with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub count: usize,
    pub n: usize,
    pub frequency: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl OutageEstimate {
    pub fn from_counts(count: usize, n: usize) -> Self {
        let (lo, hi) = wilson_interval(count, n, Z95);
        OutageEstimate {
            count,
            n,
            frequency: count as f64 / n as f64,
            ci_lo: lo,
            ci_hi: hi,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(count: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if count == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if count as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Fraction of draws with `γ_r = ε² φ_r P/r ≤ γ_th`, for each threshold.
pub fn empirical_outage_grid(run: &McRun, r: usize, total_power: f64, gamma_th: &[f64]) -> Result<Vec<OutageEstimate>> {
    let s = run.channel.s();
    if r == 0 || r > s {
        return Err(Error::Domain(format!("r = {r} outside 1..={s}")));
    }
    if !(total_power > 0.0) {
        return Err(Error::Domain(format!("total power must be positive, got {total_power}")));
    }
    let eps2 = run.channel.epsilon().powi(2);
    let samples = run.eigenvalue_samples()?;
    let cdf = EmpiricalCdf::new(samples.iter().map(|phi| eps2 * phi[r - 1] * total_power / r as f64).collect())?;
    Ok(gamma_th
        .iter()
        .map(|&g| OutageEstimate::from_counts(cdf.count(g), cdf.n()))
        .collect())
}

pub fn empirical_outage(run: &McRun, r: usize, total_power: f64, gamma_th: f64) -> Result<OutageEstimate> {
    Ok(empirical_outage_grid(run, r, total_power, &[gamma_th])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::Modulation;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 * 1e-3).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean - whole.mean).abs() < 1e-14);
        assert!((m.m2 - whole.m2).abs() < 1e-10 * whole.m2);
    }

    #[test]
    fn wilson_interval_edges() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, Z95);
        assert!(lo > 0.95 && hi == 1.0);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn empirical_cdf_steps() {
        let e = EmpiricalCdf::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(1.0), 0.25);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(10.0), 1.0);
        assert!(EmpiricalCdf::new(vec![]).is_err());
        // uniform samples against the uniform law
        let u = EmpiricalCdf::new((0..10).map(|i| (i as f64 + 0.5) / 10.0).collect()).unwrap();
        let d = u.ks_distance(|x| Ok(x.clamp(0.0, 1.0))).unwrap();
        assert!((d - 0.05).abs() < 1e-12);
        assert!(u.ks_two_sample(&u) == 0.0);
    }

    #[test]
    fn zero_threshold_and_huge_threshold() {
        let ch = RiceanChannel::rayleigh(2, 2).unwrap();
        let run = McRun::new(ch, 3, 500);
        let o = empirical_outage_grid(&run, 2, 1.0, &[0.0, 1e12]).unwrap();
        assert_eq!(o[0].count, 0);
        assert_eq!(o[1].count, 500);
    }

    #[test]
    fn deterministic_channel_limit() {
        // K → ∞: the scattered part vanishes after normalization
        let ch = RiceanChannel::from_singulars(2, 3, 1e12, &[2.0, 1.0], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = sample_channel(&ch, &mut rng);
        let diff = (&h - ch.hbar()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-5, "{diff}");
    }

    #[test]
    fn ordered_and_nonnegative() {
        let ch = RiceanChannel::from_singulars(3, 5, 2.0, &[2.9751, 2.2840, 0.9657], 1).unwrap();
        let run = McRun::new(ch, 5, 2000);
        for phi in run.eigenvalue_samples().unwrap() {
            assert!(phi.windows(2).all(|w| w[0] >= w[1]) && phi[2] >= 0.0);
        }
    }

    #[test]
    fn zero_power_limit_gives_half_alpha() {
        let ch = RiceanChannel::rayleigh(2, 2).unwrap();
        let run = McRun::new(ch, 1, 100);
        let m = Modulation::pam(4).unwrap();
        let cfg = MbConfig::uniform(2, 1e-300, m.clone()).unwrap();
        let e = empirical_ser(&run, &cfg).unwrap();
        for sub in &e.subchannels {
            assert!((sub.mean - m.alpha / 2.0).abs() < 1e-12);
        }
    }
}
