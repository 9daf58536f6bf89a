//! Declarative experiment files.
//!
//! An experiment is a TOML document with one or more `[[curves]]`, a
//! `[sweep]` table, optional `[mc]` and `[output]` tables. Every decibel
//! quantity is converted to linear scale here and nowhere else.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{RiceanChannel, TRACE_TOL};
use crate::perf::{MbConfig, Modulation};

/// A configuration problem, located by field path (and by line for syntax
/// errors, which the TOML parser reports itself).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn lib_err(field: impl Into<String>) -> impl FnOnce(Error) -> ConfigError {
    let field = field.into();
    move |e| ConfigError::new(field, e.to_string())
}

/// Linear power ratio of a decibel value; `-inf` maps to 0.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// Which ordered quantity the `x` axis of a CDF sweep refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    /// Singular values `ω_k` of `H`.
    #[default]
    Singular,
    /// Eigenvalues `φ_k` of `ε⁻²HH†`.
    Eigen,
}

/// Either an explicit list or `{ start, stop, num, log }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub num: usize,
    #[serde(default)]
    pub log: bool,
}

impl Grid {
    pub fn points(&self, field: &str) -> Result<Vec<f64>> {
        let pts = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => {
                if !(r.start.is_finite() && r.stop.is_finite()) {
                    return Err(ConfigError::new(field, "range bounds must be finite"));
                }
                if r.log && !(r.start > 0.0 && r.stop > 0.0) {
                    return Err(ConfigError::new(field, "logarithmic range needs positive bounds"));
                }
                let (a, b) = if r.log { (r.start.ln(), r.stop.ln()) } else { (r.start, r.stop) };
                (0..r.num)
                    .map(|i| {
                        let u = if r.num == 1 { a } else { a + (b - a) * i as f64 / (r.num - 1) as f64 };
                        if r.log {
                            u.exp()
                        } else {
                            u
                        }
                    })
                    .collect()
            }
        };
        if pts.is_empty() {
            return Err(ConfigError::new(field, "grid is empty"));
        }
        if let Some(i) = pts.iter().position(|v| v.is_nan()) {
            return Err(ConfigError::new(format!("{field}[{i}]"), "NaN in grid"));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub curves: Vec<CurveConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub label: String,
    /// Receive antennas.
    pub n: usize,
    /// Transmit antennas.
    pub m: usize,
    /// One curve per entry; `-inf` is the Rayleigh channel.
    pub k_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_values: Option<Vec<f64>>,
    #[serde(default = "default_mean_seed")]
    pub mean_seed: u64,
    /// Whitespace-separated rows of complex entries (`1.5`, `0.3-2i`, ...),
    /// relative to the configuration file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subchannels: Option<SubchannelConfig>,
}

fn default_mean_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubchannelConfig {
    pub r: usize,
    /// One name per subchannel, or a single name used for all of them.
    #[serde(default = "default_modulations")]
    pub modulations: Vec<String>,
    /// Relative powers, normalized to sum to `P`; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_weights: Option<Vec<f64>>,
}

fn default_modulations() -> Vec<String> {
    vec!["bpsk".into()]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Grid>,
    #[serde(default)]
    pub variable: Variable,
    /// Ordered indices to report; all of `1..=s` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_db: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_th_db: Option<Grid>,
    /// Linear alternative to `gamma_th_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_th: Option<Grid>,
    /// Total power of outage sweeps.
    #[serde(default)]
    pub outage_p_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_mc_seed")]
    pub seed: u64,
    /// `0` disables the Monte Carlo columns.
    #[serde(default)]
    pub samples: usize,
    /// `0` uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn default_mc_seed() -> u64 {
    1
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: default_mc_seed(),
            samples: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self> {
        // the parser's message already carries line, column and key
        toml::from_str(s).map_err(|e| ConfigError::new("", e.to_string().trim_end().to_string()))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = text
            .parse()
            .map_err(|e: ConfigError| ConfigError::new("", format!("{}: {}", path.display(), e.message)))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for c in &mut cfg.curves {
            if let Some(f) = &mut c.matrix_file {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }
}

/// One channel of the experiment: a curve at one Ricean factor.
#[derive(Debug, Clone)]
pub struct CurveInstance {
    pub label: String,
    pub k_db: f64,
    pub channel: RiceanChannel,
    pub subchannels: Option<SubchannelConfig>,
    /// Field path of the originating curve, for error messages.
    pub field: String,
}

impl CurveInstance {
    /// Subchannel configuration at total power `p`; `r = s` BPSK with
    /// uniform power unless the curve says otherwise.
    pub fn mb_config(&self, total_power: f64) -> Result<MbConfig> {
        let field = format!("{}.subchannels", self.field);
        let sub = self.subchannels.clone().unwrap_or(SubchannelConfig {
            r: self.channel.s(),
            modulations: default_modulations(),
            power_weights: None,
        });
        let s = self.channel.s();
        if sub.r == 0 || sub.r > s {
            return Err(ConfigError::new(format!("{field}.r"), format!("must be in 1..={s}, got {}", sub.r)));
        }
        let names = match sub.modulations.len() {
            1 => vec![sub.modulations[0].clone(); sub.r],
            n if n == sub.r => sub.modulations.clone(),
            n => {
                return Err(ConfigError::new(
                    format!("{field}.modulations"),
                    format!("expected 1 or r = {} entries, got {n}", sub.r),
                ))
            }
        };
        let mods = names
            .iter()
            .enumerate()
            .map(|(i, n)| Modulation::from_name(n).map_err(lib_err(format!("{field}.modulations[{i}]"))))
            .collect::<Result<Vec<_>>>()?;
        let powers = match &sub.power_weights {
            None => vec![total_power / sub.r as f64; sub.r],
            Some(w) => {
                if w.len() != sub.r {
                    return Err(ConfigError::new(
                        format!("{field}.power_weights"),
                        format!("expected r = {} entries, got {}", sub.r, w.len()),
                    ));
                }
                if let Some(i) = w.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(ConfigError::new(format!("{field}.power_weights[{i}]"), "must be positive"));
                }
                let sum: f64 = w.iter().sum();
                let mut p: Vec<f64> = w.iter().map(|v| total_power * v / sum).collect();
                // absorb rounding so the sum matches exactly
                let excess = p.iter().sum::<f64>() - total_power;
                p[0] -= excess;
                p
            }
        };
        MbConfig::new(total_power, powers, mods).map_err(lib_err(field))
    }

    pub fn r(&self) -> usize {
        self.subchannels.as_ref().map_or(self.channel.s(), |c| c.r)
    }
}

/// Validated, fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub curves: Vec<CurveInstance>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        if config.curves.is_empty() {
            return Err(ConfigError::new("curves", "at least one curve is required"));
        }
        let mut curves = Vec::new();
        for (i, c) in config.curves.iter().enumerate() {
            curves.extend(build_curve(c, &format!("curves[{i}]"))?);
        }
        Ok(Experiment { config, curves })
    }

    pub fn x_grid(&self) -> Result<Vec<f64>> {
        let g = self.config.sweep.x.as_ref().ok_or_else(|| ConfigError::new("sweep.x", "required"))?;
        let pts = g.points("sweep.x")?;
        if let Some(i) = pts.iter().position(|&v| v < 0.0) {
            return Err(ConfigError::new(format!("sweep.x[{i}]"), "must be >= 0"));
        }
        Ok(pts)
    }

    pub fn p_db_grid(&self) -> Result<Vec<f64>> {
        let g = self.config.sweep.p_db.as_ref().ok_or_else(|| ConfigError::new("sweep.p_db", "required"))?;
        let pts = g.points("sweep.p_db")?;
        if let Some(i) = pts.iter().position(|v| !v.is_finite()) {
            return Err(ConfigError::new(format!("sweep.p_db[{i}]"), "must be finite"));
        }
        Ok(pts)
    }

    /// Outage thresholds as `(linear, dB)` pairs, whichever way they were
    /// given; the given form is kept exactly.
    pub fn gamma_th_grid(&self) -> Result<Vec<(f64, f64)>> {
        let sw = &self.config.sweep;
        let (field, pairs): (&str, Vec<(f64, f64)>) = match (&sw.gamma_th_db, &sw.gamma_th) {
            (Some(g), None) => (
                "sweep.gamma_th_db",
                g.points("sweep.gamma_th_db")?.into_iter().map(|d| (db_to_linear(d), d)).collect(),
            ),
            (None, Some(g)) => (
                "sweep.gamma_th",
                g.points("sweep.gamma_th")?.into_iter().map(|v| (v, linear_to_db(v))).collect(),
            ),
            (None, None) => return Err(ConfigError::new("sweep.gamma_th_db", "required")),
            (Some(_), Some(_)) => {
                return Err(ConfigError::new("sweep", "give either gamma_th_db or gamma_th, not both"))
            }
        };
        if let Some(i) = pairs.iter().position(|(v, _)| !(*v > 0.0 && v.is_finite())) {
            return Err(ConfigError::new(format!("{field}[{i}]"), "threshold must be positive and finite"));
        }
        Ok(pairs)
    }

    pub fn outage_power(&self) -> Result<f64> {
        let p = self.config.sweep.outage_p_db;
        if !p.is_finite() {
            return Err(ConfigError::new("sweep.outage_p_db", "must be finite"));
        }
        Ok(db_to_linear(p))
    }

    /// Ordered indices for a channel with `s` eigenvalues.
    pub fn k_list(&self, s: usize) -> Result<Vec<usize>> {
        match &self.config.sweep.k {
            None => Ok((1..=s).collect()),
            Some(ks) if ks.is_empty() => Err(ConfigError::new("sweep.k", "list is empty")),
            Some(ks) => {
                if let Some(i) = ks.iter().position(|&k| k == 0 || k > s) {
                    return Err(ConfigError::new(format!("sweep.k[{i}]"), format!("must be in 1..={s}")));
                }
                Ok(ks.clone())
            }
        }
    }
}

fn build_curve(c: &CurveConfig, field: &str) -> Result<Vec<CurveInstance>> {
    if c.n == 0 || c.m == 0 {
        return Err(ConfigError::new(format!("{field}.n"), "antenna counts must be >= 1"));
    }
    if c.k_db.is_empty() {
        return Err(ConfigError::new(format!("{field}.k_db"), "list is empty"));
    }
    if let Some(i) = c.k_db.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(ConfigError::new(format!("{field}.k_db[{i}]"), "must be finite or -inf"));
    }
    let rayleigh_only = c.k_db.iter().all(|v| *v == f64::NEG_INFINITY);
    let mean = match (&c.singular_values, &c.matrix_file) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::new(field, "give either singular_values or matrix_file, not both"))
        }
        (Some(sv), None) => Some(
            crate::model::mean_from_singulars(c.n, c.m, sv, c.mean_seed)
                .map_err(lib_err(format!("{field}.singular_values")))?,
        ),
        (None, Some(path)) => Some(read_matrix(path, c.n, c.m, &format!("{field}.matrix_file"))?),
        (None, None) if rayleigh_only => None,
        (None, None) => {
            return Err(ConfigError::new(
                field,
                "a channel mean (singular_values or matrix_file) is required unless every k_db is -inf",
            ))
        }
    };
    if let Some(sub) = &c.subchannels {
        let s = c.n.min(c.m);
        if sub.r == 0 || sub.r > s {
            return Err(ConfigError::new(
                format!("{field}.subchannels.r"),
                format!("must be in 1..={s}, got {}", sub.r),
            ));
        }
    }
    c.k_db
        .iter()
        .enumerate()
        .map(|(i, &k_db)| {
            let kf = format!("{field}.k_db[{i}]");
            let channel = match &mean {
                None => RiceanChannel::rayleigh(c.n, c.m),
                Some(h) => RiceanChannel::new(db_to_linear(k_db), h.clone()),
            }
            .map_err(lib_err(&kf))?;
            Ok(CurveInstance {
                label: c.label.clone(),
                k_db,
                channel,
                subchannels: c.subchannels.clone(),
                field: field.to_string(),
            })
        })
        .collect()
}

/// Reads an `n × m` complex matrix and rescales it to `tr(H̄H̄†) = nm`.
fn read_matrix(path: &Path, n: usize, m: usize, field: &str) -> Result<DMatrix<Complex64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(field, format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<Vec<Complex64>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(ln, l)| {
            l.split_whitespace()
                .map(|tok| {
                    tok.parse::<Complex64>().map_err(|_| {
                        ConfigError::new(field, format!("{}:{}: cannot parse `{tok}` as a complex number", path.display(), ln + 1))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.len() != n || rows.iter().any(|r| r.len() != m) {
        return Err(ConfigError::new(
            field,
            format!("{} must hold {n} rows of {m} entries", path.display()),
        ));
    }
    let mut h = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    let energy: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(ConfigError::new(field, "matrix must be nonzero and finite"));
    }
    let target = (n * m) as f64;
    if ((energy - target) / target).abs() > TRACE_TOL {
        log::warn!(target: "ncwishart::config", field, energy; "channel mean rescaled to tr(HH†) = nm");
        h *= Complex64::new((target / energy).sqrt(), 0.0);
    }
    Ok(h)
}
