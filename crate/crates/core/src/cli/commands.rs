//! The table-producing verbs. Each one walks the curves of an experiment in
//! order, evaluates its grid in parallel and returns the rows in grid order.
//! Point failures become `NaN` cells plus an error record on the
//! diagnostics stream; they never abort the sweep.

use rayon::prelude::*;

use super::config::{db_to_linear, ConfigError, CurveInstance, Experiment, Variable};
use super::table::{Cell, Table};
use super::DIAG;
use crate::eigdist::{asymptotic_coeffs, cdf_asymptotic, EigenvalueDistribution, Evaluation};
use crate::error::Result as LibResult;
use crate::mcsim::{empirical_eig_cdfs, empirical_outage_grid, empirical_ser_grid, EmpiricalCdf, McRun};
use crate::perf::{diversity_order, Exactness, MbSystem};

pub const CDF_COLUMNS: &[&str] = &["curve", "k_db", "k", "x", "analytic_cdf", "mc_cdf"];
pub const SER_COLUMNS: &[&str] = &[
    "curve",
    "k_db",
    "p_db",
    "subchannel",
    "modulation",
    "exactness",
    "exact",
    "high_snr",
    "mc",
    "mc_se",
];
pub const OUTAGE_COLUMNS: &[&str] =
    &["curve", "k_db", "p_db", "gamma_th_db", "exact", "asymptotic", "mc", "ci_lo", "ci_hi"];
pub const COEFFS_COLUMNS: &[&str] = &["curve", "k_db", "k", "d_k", "g_d", "ln_a_k", "g_a"];
pub const MC_COLUMNS: &[&str] = &["curve", "k_db", "k", "x", "mc_cdf"];

/// A finished table and the number of cells that failed to compute.
#[derive(Debug, Clone)]
pub struct Run {
    pub table: Table,
    pub failures: usize,
}

impl Run {
    fn new(columns: &'static [&'static str]) -> Self {
        Run {
            table: Table::new(columns),
            failures: 0,
        }
    }

    /// Turns a result into a cell, logging and counting failures.
    fn cell(&mut self, curve: &CurveInstance, what: &str, at: f64, r: LibResult<f64>) -> Cell {
        match r {
            Ok(v) => Cell::Num(v),
            Err(e) => {
                self.failures += 1;
                log::error!(target: DIAG, curve = curve.label.as_str(), k_db = curve.k_db, quantity = what, at = at, error = e.to_string().as_str(); "computation failed");
                Cell::Failed
            }
        }
    }
}

fn lib(curve: &CurveInstance) -> impl FnOnce(crate::Error) -> ConfigError + '_ {
    move |e| ConfigError::new(curve.field.clone(), e.to_string())
}

fn mc_run(exp: &Experiment, curve: &CurveInstance) -> Option<McRun> {
    let mc = &exp.config.mc;
    (mc.samples > 0).then(|| McRun::new(curve.channel.clone(), mc.seed, mc.samples).with_workers(mc.workers))
}

fn warn_conditioning(curve: &CurveInstance, k: usize, x: f64, e: &Evaluation) {
    if e.is_ill_conditioned() {
        log::warn!(target: DIAG, curve = curve.label.as_str(), k_db = curve.k_db, k = k, x = x, digits_lost = e.digits_lost; "ill-conditioned determinant ratio");
    }
}

/// Empirical CDFs on the sweep's axis, or `None` when Monte Carlo is off.
fn empirical_cdfs(exp: &Experiment, curve: &CurveInstance, run: &mut Run) -> Option<LibResult<Vec<EmpiricalCdf>>> {
    let mc = mc_run(exp, curve)?;
    let eps = curve.channel.epsilon();
    let cdfs = empirical_eig_cdfs(&mc).map(|v| match exp.config.sweep.variable {
        Variable::Eigen => v,
        Variable::Singular => v.iter().map(|c| c.map_monotone(|phi| eps * phi.sqrt())).collect(),
    });
    if let Err(e) = &cdfs {
        run.failures += 1;
        log::error!(target: DIAG, curve = curve.label.as_str(), k_db = curve.k_db, error = e.to_string().as_str(); "Monte Carlo run failed");
    }
    Some(cdfs)
}

fn mc_cell(cdfs: &Option<LibResult<Vec<EmpiricalCdf>>>, k: usize, x: f64) -> Cell {
    match cdfs {
        None => Cell::Missing,
        Some(Err(_)) => Cell::Failed,
        Some(Ok(c)) => Cell::Num(c[k - 1].eval(x)),
    }
}

/// Ordered CDFs on the `x` grid, singular values or eigenvalues.
pub fn cmd_cdf(exp: &Experiment) -> Result<Run, ConfigError> {
    let xs = exp.x_grid()?;
    let mut run = Run::new(CDF_COLUMNS);
    for curve in &exp.curves {
        let dist = EigenvalueDistribution::from_channel(&curve.channel).map_err(lib(curve))?;
        let ks = exp.k_list(curve.channel.s())?;
        let eps2 = curve.channel.epsilon().powi(2);
        let arg = |x: f64| match exp.config.sweep.variable {
            Variable::Singular => x * x / eps2,
            Variable::Eigen => x,
        };
        let points: Vec<(usize, f64)> = ks.iter().flat_map(|&k| xs.iter().map(move |&x| (k, x))).collect();
        let values: Vec<_> = points.par_iter().map(|&(k, x)| dist.cdf_kth_eval(k, arg(x))).collect();
        let cdfs = empirical_cdfs(exp, curve, &mut run);
        for (&(k, x), v) in points.iter().zip(values) {
            if let Ok(e) = &v {
                warn_conditioning(curve, k, x, e);
            }
            let analytic = run.cell(curve, "cdf", x, v.map(|e| e.value));
            let row = vec![
                curve.label.as_str().into(),
                curve.k_db.into(),
                k.into(),
                x.into(),
                analytic,
                mc_cell(&cdfs, k, x),
            ];
            run.table.push(row);
        }
    }
    Ok(run)
}

/// Empirical CDFs only.
pub fn cmd_mc(exp: &Experiment) -> Result<Run, ConfigError> {
    if exp.config.mc.samples == 0 {
        return Err(ConfigError::new("mc.samples", "must be > 0 for the mc verb"));
    }
    let xs = exp.x_grid()?;
    let mut run = Run::new(MC_COLUMNS);
    for curve in &exp.curves {
        let ks = exp.k_list(curve.channel.s())?;
        let cdfs = empirical_cdfs(exp, curve, &mut run);
        for &k in &ks {
            for &x in &xs {
                let row = vec![curve.label.as_str().into(), curve.k_db.into(), k.into(), x.into(), mc_cell(&cdfs, k, x)];
                run.table.push(row);
            }
        }
    }
    Ok(run)
}

/// Subchannel and global SER over the `p_db` grid.
pub fn cmd_ser(exp: &Experiment) -> Result<Run, ConfigError> {
    let p_db = exp.p_db_grid()?;
    let mut run = Run::new(SER_COLUMNS);
    for curve in &exp.curves {
        let system = MbSystem::new(curve.channel.clone()).map_err(lib(curve))?;
        let cfgs = p_db
            .iter()
            .map(|&p| curve.mb_config(db_to_linear(p)))
            .collect::<Result<Vec<_>, _>>()?;
        let r = cfgs[0].r();
        let mods = cfgs[0].modulations().to_vec();
        let uniform = cfgs[0].is_uniform();
        if !uniform {
            log::info!(target: DIAG, curve = curve.label.as_str(); "high-SNR columns omitted for non-uniform power");
        }

        let jobs: Vec<(usize, usize)> = (0..cfgs.len()).flat_map(|i| (1..=r).map(move |k| (i, k))).collect();
        let exact: Vec<_> = jobs.par_iter().map(|&(i, k)| system.ser_subchannel(&cfgs[i], k)).collect();
        let mc = mc_run(exp, curve).map(|m| empirical_ser_grid(&m, &cfgs));
        if let Some(Err(e)) = &mc {
            run.failures += 1;
            log::error!(target: DIAG, curve = curve.label.as_str(), k_db = curve.k_db, error = e.to_string().as_str(); "Monte Carlo run failed");
        }

        let mut exact = exact.into_iter();
        for (i, cfg) in cfgs.iter().enumerate() {
            let p = p_db[i];
            let mut subs = Vec::with_capacity(r);
            for k in 1..=r {
                let e = exact.next().expect("one result per job");
                subs.push(e.as_ref().ok().copied());
                let high = if uniform {
                    run.cell(curve, "ser_high_snr", p, system.ser_high_snr(cfg, k))
                } else {
                    Cell::Missing
                };
                let (mc_mean, mc_se) = match &mc {
                    None => (Cell::Missing, Cell::Missing),
                    Some(Err(_)) => (Cell::Failed, Cell::Failed),
                    Some(Ok(m)) => (m[i].subchannels[k - 1].mean.into(), m[i].subchannels[k - 1].std_error.into()),
                };
                let m = &mods[k - 1];
                let row = vec![
                    curve.label.as_str().into(),
                    curve.k_db.into(),
                    p.into(),
                    k.to_string().into(),
                    m.name.as_str().into(),
                    m.exactness.to_string().into(),
                    run.cell(curve, "ser", p, e),
                    high,
                    mc_mean,
                    mc_se,
                ];
                run.table.push(row);
            }
            let global = match subs.iter().copied().collect::<Option<Vec<f64>>>() {
                Some(v) => Cell::Num(v.iter().sum::<f64>() / r as f64),
                None => Cell::Failed,
            };
            let high = if uniform {
                run.cell(curve, "ser_global_high_snr", p, system.ser_global_high_snr(cfg))
            } else {
                Cell::Missing
            };
            let (mc_mean, mc_se) = match &mc {
                None => (Cell::Missing, Cell::Missing),
                Some(Err(_)) => (Cell::Failed, Cell::Failed),
                Some(Ok(m)) => (m[i].global.mean.into(), m[i].global.std_error.into()),
            };
            let exactness = if mods.iter().all(|m| m.exactness == Exactness::Exact) {
                Exactness::Exact
            } else {
                Exactness::Approximate
            };
            let names: Vec<&str> = mods.iter().map(|m| m.name.as_str()).collect();
            let row = vec![
                curve.label.as_str().into(),
                curve.k_db.into(),
                p.into(),
                "global".into(),
                names.join("+").into(),
                exactness.to_string().into(),
                global,
                high,
                mc_mean,
                mc_se,
            ];
            run.table.push(row);
        }
    }
    Ok(run)
}

/// Outage of the weakest of `r` equal-power subchannels over the threshold
/// grid.
pub fn cmd_outage(exp: &Experiment) -> Result<Run, ConfigError> {
    let (gammas, gammas_db): (Vec<f64>, Vec<f64>) = exp.gamma_th_grid()?.into_iter().unzip();
    let power = exp.outage_power()?;
    let p_db = exp.config.sweep.outage_p_db;
    let mut run = Run::new(OUTAGE_COLUMNS);
    for curve in &exp.curves {
        let system = MbSystem::new(curve.channel.clone()).map_err(lib(curve))?;
        let r = curve.r();
        let kf = curve.channel.k_factor();
        let exact: Vec<_> = gammas.par_iter().map(|&g| system.outage(r, power, g)).collect();
        let asymptotic: Vec<_> = gammas
            .iter()
            .map(|&g| {
                if r == 1 {
                    system.outage_asymptotic(power, g)
                } else {
                    cdf_asymptotic(system.spec(), r, g * (kf + 1.0) * r as f64 / power)
                }
            })
            .collect();
        let mc = mc_run(exp, curve).map(|m| empirical_outage_grid(&m, r, power, &gammas));
        if let Some(Err(e)) = &mc {
            run.failures += 1;
            log::error!(target: DIAG, curve = curve.label.as_str(), k_db = curve.k_db, error = e.to_string().as_str(); "Monte Carlo run failed");
        }
        for (i, (e, a)) in exact.into_iter().zip(asymptotic).enumerate() {
            let g_db = gammas_db[i];
            let (m, lo, hi) = match &mc {
                None => (Cell::Missing, Cell::Missing, Cell::Missing),
                Some(Err(_)) => (Cell::Failed, Cell::Failed, Cell::Failed),
                Some(Ok(v)) => (v[i].frequency.into(), v[i].ci_lo.into(), v[i].ci_hi.into()),
            };
            let row = vec![
                curve.label.as_str().into(),
                curve.k_db.into(),
                p_db.into(),
                g_db.into(),
                run.cell(curve, "outage", g_db, e),
                run.cell(curve, "outage_asymptotic", g_db, a),
                m,
                lo,
                hi,
            ];
            run.table.push(row);
        }
    }
    Ok(run)
}

/// High-SNR coefficients per ordered index. `g_a` uses the curve's
/// subchannel configuration and is blank beyond `r` or for non-uniform
/// power.
pub fn cmd_coeffs(exp: &Experiment) -> Result<Run, ConfigError> {
    let mut run = Run::new(COEFFS_COLUMNS);
    for curve in &exp.curves {
        let system = MbSystem::new(curve.channel.clone()).map_err(lib(curve))?;
        let spec = system.spec();
        let cfg = curve.mb_config(1.0)?;
        for k in exp.k_list(spec.s())? {
            let at = k as f64;
            let (d, ln_a) = match asymptotic_coeffs(spec, k) {
                Ok(c) => (Cell::from(c.d), Cell::Num(c.ln_a)),
                Err(e) => {
                    let failed = run.cell(curve, "asymptotic_coeffs", at, Err(e));
                    (failed.clone(), failed)
                }
            };
            let gd = diversity_order(spec, k).map_err(lib(curve))?;
            let ga = if k <= cfg.r() && cfg.is_uniform() {
                run.cell(curve, "array_gain", at, system.array_gain(&cfg, k))
            } else {
                Cell::Missing
            };
            let row = vec![curve.label.as_str().into(), curve.k_db.into(), k.into(), d, gd.into(), ln_a, ga];
            run.table.push(row);
        }
    }
    Ok(run)
}
