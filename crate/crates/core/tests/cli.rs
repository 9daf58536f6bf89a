//! End-to-end runs of the `ncwishart` binary: frozen CSV schemas and golden
//! values, exit codes, diagnostics and the figure presets.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ncwishart::cli::ExperimentConfig;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ncwishart"));
    c.env_remove("NCWISHART_LOG");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("experiment.toml");
    std::fs::write(&p, text).unwrap();
    p
}

/// Same header, same text cells, numbers equal to `rel` relative.
fn assert_csv_matches(got: &str, want: &str, rel: f64) {
    let g: Vec<&str> = got.lines().collect();
    let w: Vec<&str> = want.lines().collect();
    assert_eq!(g.first(), w.first(), "header changed");
    assert_eq!(g.len(), w.len(), "row count changed");
    for (gl, wl) in g.iter().zip(&w).skip(1) {
        for (a, b) in gl.split(',').zip(wl.split(',')) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
                    assert!((x - y).abs() <= rel * y.abs(), "{a} vs {b} in\n{gl}\n{wl}")
                }
                _ => assert_eq!(a, b, "in\n{gl}\n{wl}"),
            }
        }
    }
}

#[test]
fn golden_tables() {
    for (cfg, verbs) in [("reference", ["coeffs", "cdf", "ser", "outage"]), ("siso", ["coeffs", "cdf", "ser", "outage"])] {
        for verb in verbs {
            let path = fixture(&format!("{cfg}.toml"));
            let o = run(&[verb, "--config", path.to_str().unwrap()]);
            assert!(o.status.success(), "{verb} {cfg}: {}", stderr(&o));
            assert_csv_matches(&stdout(&o), &golden(&format!("{cfg}_{verb}.csv")), 1e-9);
        }
    }
}

#[test]
fn mc_columns_fill_in_and_are_reproducible() {
    let path = fixture("siso.toml");
    let p = path.to_str().unwrap();
    let a = run(&["cdf", "--config", p, "--samples", "20000", "--seed", "3", "--workers", "1"]);
    let b = run(&["cdf", "--config", p, "--samples", "20000", "--seed", "3", "--workers", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let mut rdr = csv::Reader::from_reader(a.stdout.as_slice());
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let analytic: f64 = rec[4].parse().unwrap();
        let mc: f64 = rec[5].parse().unwrap();
        // pointwise binomial band, far inside 5 sigma
        let sd = (analytic * (1.0 - analytic) / 20000.0).sqrt();
        assert!((analytic - mc).abs() < 5.0 * sd + 1e-4, "{rec:?}");
    }
    let m = run(&["mc", "--config", p, "--samples", "20000", "--seed", "3"]);
    assert!(m.status.success());
    let out = stdout(&m);
    assert_eq!(out.lines().next(), Some("curve,k_db,k,x,mc_cdf"));
    let mc_col: Vec<&str> = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    let cdf_col: Vec<String> = stdout(&a).lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
    assert_eq!(mc_col, cdf_col);
}

#[test]
fn mc_verb_needs_samples() {
    let o = run(&["mc", "--config", fixture("siso.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mc.samples"));
}

#[test]
fn jsonl_records_carry_the_schema() {
    let o = run(&["ser", "--config", fixture("siso.toml").to_str().unwrap(), "--format", "jsonl"]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    let keys: Vec<&String> = lines[0].as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        ["curve", "k_db", "p_db", "subchannel", "modulation", "exactness", "exact", "high_snr", "mc", "mc_se"]
    );
    // -inf has no JSON form
    assert!(lines[0]["k_db"].is_null() && lines[0]["mc"].is_null());
    assert_eq!(lines[1]["subchannel"], "global");
}

#[test]
fn output_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&["coeffs", "--config", fixture("siso.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_csv_matches(&std::fs::read_to_string(out).unwrap(), &golden("siso_coeffs.csv"), 1e-9);
}

#[test]
fn empty_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("reference.toml")).unwrap().replace("x = [0.25, 0.5, 1.0, 2.0, 3.0]", "x = []");
    let cfg = write_config(dir.path(), &text);
    let o = run(&["cdf", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let diag: serde_json::Value = serde_json::from_str(stderr(&o).lines().next().unwrap()).unwrap();
    assert_eq!(diag["level"], "error");
    assert!(diag["message"].as_str().unwrap().contains("sweep.x: grid is empty"));
}

#[test]
fn unknown_modulation_lists_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("reference.toml")).unwrap().replace("[\"bpsk\"]", "[\"16qam\"]");
    let cfg = write_config(dir.path(), &text);
    let o = run(&["ser", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("curves[0].subchannels.modulations[0]"), "{err}");
    for name in ["bpsk", "bfsk", "pam", "psk"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn nonpositive_thresholds_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("siso.toml")).unwrap().replace("gamma_th = [0.5]", "gamma_th = [0.5, -1.0]");
    let cfg = write_config(dir.path(), &text);
    let o = run(&["outage", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep.gamma_th[1]"));
}

#[test]
fn syntax_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[curves]]\nlabel = \"a\"\nn = 3\nm = 5\nk_db = [0.0]\nsingular_value = [1.0]\n");
    let o = run(&["coeffs", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 6") && err.contains("singular_value"), "{err}");
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(run(&["cdf"]).status.code(), Some(2));
    assert_eq!(run(&["fig1", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["fig9"]).status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

/// The largest-eigenvalue SER of the 3×5 channel at 50 dB is about 1e-68,
/// below what its cancelling determinant can resolve to the quadrature
/// tolerance: the row is written with NaN and the exit code says so.
#[test]
fn unresolved_values_exit_nonzero_but_still_write_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("reference.toml"))
        .unwrap()
        .replace("k_db = [0.0, 10.0]", "k_db = [0.0]")
        .replace("p_db = [0.0, 10.0, 20.0]", "p_db = [50.0]");
    let cfg = write_config(dir.path(), &text);
    let o = run(&["ser", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 5);
    let row1: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row1[6], "NaN");
    let global: Vec<&str> = out.lines().nth(4).unwrap().split(',').collect();
    assert_eq!(global[6], "NaN");
    let third: Vec<&str> = out.lines().nth(3).unwrap().split(',').collect();
    assert!(third[6].parse::<f64>().unwrap() > 0.0);
    let records: Vec<serde_json::Value> = stderr(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let failure = records.iter().find(|r| r["message"] == "computation failed").expect("diagnostic record");
    assert_eq!(failure["quantity"], "ser");
    assert_eq!(failure["curve"], "rank3");
    assert!(failure["error"].as_str().unwrap().contains("quadrature"));
}

#[test]
fn log_filter_silences_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[curves]]\nlabel='a'\nn=2\nm=2\nk_db=[0]\nsingular_values=[1.7320508, 1.0]\n");
    let loud = bin().args(["coeffs", "--config", cfg.to_str().unwrap()]).env("NCWISHART_LOG", "info").output().unwrap();
    assert!(stderr(&loud).contains("rescaled"));
    let quiet = bin().args(["coeffs", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(quiet.status.success() && quiet.stderr.is_empty());
}

#[test]
fn presets_dump_valid_configs() {
    for n in 1..=5 {
        let o = run(&[&format!("fig{n}"), "--dump-config"]);
        assert!(o.status.success());
        let cfg: ExperimentConfig = stdout(&o).parse().unwrap_or_else(|e| panic!("fig{n}: {e}"));
        assert!(!cfg.curves.is_empty());
    }
}

/// Runs a preset with reduced Monte Carlo and returns its CSV records.
fn preset_records(n: u8, samples: &str) -> Vec<csv::StringRecord> {
    let o = run(&[&format!("fig{n}"), "--samples", samples]);
    assert!(o.status.success(), "fig{n}: {}", stderr(&o));
    csv::Reader::from_reader(o.stdout.as_slice()).records().map(Result::unwrap).collect()
}

#[test]
fn fig1_preset_matches_its_simulation() {
    let recs = preset_records(1, "20000");
    assert_eq!(recs.len(), 3 * 181);
    let worst = recs
        .iter()
        .map(|r| (r[4].parse::<f64>().unwrap() - r[5].parse::<f64>().unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1.63 / 20000f64.sqrt(), "sup gap {worst}");
}

#[test]
fn fig2_preset_shape() {
    let recs = preset_records(2, "0");
    let labels: std::collections::BTreeSet<(String, String)> =
        recs.iter().map(|r| (r[0].to_string(), r[1].to_string())).collect();
    assert_eq!(labels.len(), 7);
    assert!(recs.iter().all(|r| &r[2] == "3" && r[5].is_empty()));
}

#[test]
fn fig5_asymptote_decreases_in_k() {
    let recs = preset_records(5, "0");
    let at = |k: &str, g: &str| -> f64 {
        recs.iter().find(|r| &r[1] == k && &r[3] == g).map(|r| r[5].parse().unwrap()).unwrap()
    };
    for g in ["-20", "-15", "-10"] {
        assert!(at("-10", g) > at("0", g) && at("0", g) > at("10", g), "gamma_th = {g} dB");
    }
}

#[test]
fn ser_presets_have_frozen_schema() {
    for n in [3u8, 4] {
        let o = run(&[&format!("fig{n}"), "--samples", "0"]);
        assert!(o.status.success());
        assert_eq!(
            stdout(&o).lines().next(),
            Some("curve,k_db,p_db,subchannel,modulation,exactness,exact,high_snr,mc,mc_se")
        );
    }
    let o = run(&["fig5", "--samples", "0"]);
    assert_eq!(stdout(&o).lines().next(), Some("curve,k_db,p_db,gamma_th_db,exact,asymptotic,mc,ci_lo,ci_hi"));
}
