//! Command-line front end: experiment files in, result tables out.
//!
//! Data goes to `--out` (or stdout) once the whole sweep has finished.
//! Diagnostics go to stderr as JSON lines, filtered by `NCWISHART_LOG`
//! (`warn` by default; `info`, `debug`, `off`, or per-target filters in the
//! usual `env_logger` syntax).
//!
//! Exit status: 0 when every requested value was computed, 1 when some
//! computation failed (the rows are still written, with `NaN`), 2 for usage
//! and configuration errors.

pub mod commands;
pub mod config;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

pub use commands::{cmd_cdf, cmd_coeffs, cmd_mc, cmd_outage, cmd_ser, Run};
pub use config::{ConfigError, Experiment, ExperimentConfig, Format};
pub use table::{Cell, Table};

/// Log target of the structured per-point diagnostics.
pub const DIAG: &str = "ncwishart::diag";

/// Environment variable holding the diagnostics filter.
pub const LOG_ENV: &str = "NCWISHART_LOG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ncwishart", version, about = "Ordered eigenvalue CDFs of noncentral Wishart matrices and MIMO beamforming performance in Ricean fading")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic (and optionally simulated) ordered CDFs on the x grid
    Cdf(RunArgs),
    /// Exact, high-SNR and simulated SER over the p_db grid
    Ser(RunArgs),
    /// Exact, asymptotic and simulated outage over the threshold grid
    Outage(RunArgs),
    /// Diversity orders, leading coefficients and array gains
    Coeffs(RunArgs),
    /// Empirical ordered CDFs only
    Mc(RunArgs),
    /// Ordered singular-value CDFs, 3x5, K = 10 dB
    Fig1(FigArgs),
    /// Smallest singular value, rank-1 vs rank-3 means (qualitative)
    Fig2(FigArgs),
    /// Subchannel and global SER, BPSK x3, K = 0 dB
    Fig3(FigArgs),
    /// SER at 3 bits/s/Hz with 1, 2 or 3 subchannels
    Fig4(FigArgs),
    /// MIMO-MRC outage at P = 0 dB for several K
    Fig5(FigArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment file (TOML)
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct FigArgs {
    /// Print the embedded experiment file and exit
    #[arg(long)]
    pub dump_config: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags that take precedence over the experiment file.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Monte Carlo seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo draws; 0 disables the simulated columns
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(p) = &self.out {
            cfg.output.path = Some(p.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(s) = self.seed {
            cfg.mc.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.mc.samples = n;
        }
        if let Some(w) = self.workers {
            cfg.mc.workers = w;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Cdf,
    Ser,
    Outage,
    Coeffs,
    Mc,
}

impl Verb {
    pub fn run(self, exp: &Experiment) -> Result<Run, ConfigError> {
        match self {
            Verb::Cdf => cmd_cdf(exp),
            Verb::Ser => cmd_ser(exp),
            Verb::Outage => cmd_outage(exp),
            Verb::Coeffs => cmd_coeffs(exp),
            Verb::Mc => cmd_mc(exp),
        }
    }
}

/// Embedded experiment file of `figN` and the verb it runs.
pub fn preset(n: u8) -> Option<(&'static str, Verb)> {
    Some(match n {
        1 => (include_str!("presets/fig1.toml"), Verb::Cdf),
        2 => (include_str!("presets/fig2.toml"), Verb::Cdf),
        3 => (include_str!("presets/fig3.toml"), Verb::Ser),
        4 => (include_str!("presets/fig4.toml"), Verb::Ser),
        5 => (include_str!("presets/fig5.toml"), Verb::Outage),
        _ => return None,
    })
}

/// Installs the JSON-lines stderr logger. Safe to call more than once.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env)
        .format(|buf, record| {
            let mut obj = Map::new();
            obj.insert("level".into(), record.level().as_str().to_ascii_lowercase().into());
            obj.insert("target".into(), record.target().into());
            obj.insert("message".into(), record.args().to_string().into());
            let mut fields = Fields(&mut obj);
            let _ = record.key_values().visit(&mut fields);
            writeln!(buf, "{}", Value::Object(obj))
        })
        .target(env_logger::Target::Stderr)
        .try_init();
}

struct Fields<'a>(&'a mut Map<String, Value>);

impl<'kvs> log::kv::VisitSource<'kvs> for Fields<'_> {
    fn visit_pair(&mut self, key: log::kv::Key<'kvs>, value: log::kv::Value<'kvs>) -> Result<(), log::kv::Error> {
        let v = if let Some(i) = value.to_i64() {
            Value::from(i)
        } else if let Some(u) = value.to_u64() {
            Value::from(u)
        } else if let Some(f) = value.to_f64() {
            // non-finite floats become null
            serde_json::Number::from_f64(f).map_or(Value::Null, Value::Number)
        } else if let Some(b) = value.to_bool() {
            Value::Bool(b)
        } else {
            Value::String(value.to_string())
        };
        self.0.insert(key.to_string(), v);
        Ok(())
    }
}

fn usage_error(err: impl std::fmt::Display) -> i32 {
    log::error!(target: "ncwishart::cli", "{err}");
    EXIT_USAGE
}

fn write_output(cfg: &ExperimentConfig, table: &Table) -> io::Result<()> {
    let fmt = cfg.output.format;
    match &cfg.output.path {
        Some(p) => table.write(fmt, BufWriter::new(File::create(p)?)),
        None => table.write(fmt, io::stdout().lock()),
    }
}

/// Runs a verb on a parsed experiment and writes its table.
pub fn execute(verb: Verb, mut cfg: ExperimentConfig, overrides: &Overrides) -> i32 {
    overrides.apply(&mut cfg);
    let exp = match Experiment::new(cfg) {
        Ok(e) => e,
        Err(e) => return usage_error(e),
    };
    let run = match verb.run(&exp) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    if let Err(e) = write_output(&exp.config, &run.table) {
        log::error!(target: "ncwishart::cli", "cannot write output: {e}");
        return EXIT_COMPUTATION;
    }
    if run.failures > 0 {
        log::error!(target: "ncwishart::cli", failures = run.failures; "some values could not be computed");
        EXIT_COMPUTATION
    } else {
        EXIT_OK
    }
}

/// Entry point behind the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (verb, file, overrides) = match cli.command {
        Command::Cdf(a) => (Verb::Cdf, a.config, a.overrides),
        Command::Ser(a) => (Verb::Ser, a.config, a.overrides),
        Command::Outage(a) => (Verb::Outage, a.config, a.overrides),
        Command::Coeffs(a) => (Verb::Coeffs, a.config, a.overrides),
        Command::Mc(a) => (Verb::Mc, a.config, a.overrides),
        Command::Fig1(a) => return run_preset(1, a),
        Command::Fig2(a) => return run_preset(2, a),
        Command::Fig3(a) => return run_preset(3, a),
        Command::Fig4(a) => return run_preset(4, a),
        Command::Fig5(a) => return run_preset(5, a),
    };
    match ExperimentConfig::load(&file) {
        Ok(cfg) => execute(verb, cfg, &overrides),
        Err(e) => usage_error(e),
    }
}

fn run_preset(n: u8, args: FigArgs) -> i32 {
    let (text, verb) = preset(n).expect("presets 1..=5 exist");
    if args.dump_config {
        let res = match &args.overrides.out {
            Some(p) => std::fs::write(p, text),
            None => io::stdout().lock().write_all(text.as_bytes()),
        };
        return match res {
            Ok(()) => EXIT_OK,
            Err(e) => {
                log::error!(target: "ncwishart::cli", "cannot write output: {e}");
                EXIT_COMPUTATION
            }
        };
    }
    match text.parse() {
        Ok(cfg) => execute(verb, cfg, &args.overrides),
        Err(e) => usage_error(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for n in 1..=5 {
            let (text, _) = preset(n).unwrap();
            let cfg: ExperimentConfig = text.parse().unwrap_or_else(|e| panic!("fig{n}: {e}"));
            Experiment::new(cfg).unwrap_or_else(|e| panic!("fig{n}: {e}"));
        }
        assert!(preset(6).is_none());
    }

    #[test]
    fn overrides_win() {
        let (text, _) = preset(1).unwrap();
        let mut cfg: ExperimentConfig = text.parse().unwrap();
        let o = Overrides {
            seed: Some(9),
            samples: Some(0),
            format: Some(Format::Jsonl),
            ..Default::default()
        };
        o.apply(&mut cfg);
        assert_eq!((cfg.mc.seed, cfg.mc.samples, cfg.output.format), (9, 0, Format::Jsonl));
    }

    #[test]
    fn coefficient_table_for_the_reference_channel() {
        let (text, _) = preset(3).unwrap();
        let exp = Experiment::new(text.parse().unwrap()).unwrap();
        let run = cmd_coeffs(&exp).unwrap();
        assert_eq!(run.failures, 0);
        let g = run.table.column("g_d").unwrap();
        let gd: Vec<Cell> = run.table.rows.iter().map(|r| r[g].clone()).collect();
        assert_eq!(gd, vec![Cell::Int(15), Cell::Int(8), Cell::Int(3)]);
    }

    #[test]
    fn siso_coefficients() {
        let text = "[[curves]]\nlabel='siso'\nn=1\nm=1\nk_db=[0]\nsingular_values=[1]";
        let exp = Experiment::new(text.parse().unwrap()).unwrap();
        let run = cmd_coeffs(&exp).unwrap();
        assert_eq!(run.table.rows.len(), 1);
        assert_eq!(run.table.rows[0][4], Cell::Int(1));
    }
}
