use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use fpme::evolve::solve;
use fpme::operator::assemble;
use fpme_cli::config::{DatumConfig, KernelConfig, RunConfig};
use fpme_cli::io::read_numeric_csv;
use serde_json::Value;
use tempfile::TempDir;

fn small_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.domain.n = 64;
    cfg.time.t1 = 0.1;
    cfg.output_dir = dir.join("out");
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn fpme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpme")).args(args).output().unwrap()
}

fn run_with(cfg: &RunConfig, dir: &Path, command: &str, extra: &[&str]) -> Output {
    let path = write_config(dir, cfg);
    let mut args = vec![command, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    fpme(&args)
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&out.stderr)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn assemble_writes_the_contract_files_deterministically() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = run_with(&cfg, tmp.path(), "assemble", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["operator.json", "operator_matrix.csv", "eigen.csv", "manifest.json"] {
        assert!(cfg.output_dir.join(f).is_file(), "{f} missing");
    }
    let first = std::fs::read(cfg.output_dir.join("operator_matrix.csv")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 64);
    let out = run_with(&cfg, tmp.path(), "assemble", &[]);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(cfg.output_dir.join("operator_matrix.csv")).unwrap());

    let eigen = read_numeric_csv(&cfg.output_dir.join("eigen.csv")).unwrap();
    assert_eq!(eigen.header, ["node", "phi1", "d"]);
    assert!(eigen.rows.iter().all(|r| r[1] > 0.0));
    let header = read_json(&cfg.output_dir.join("operator.json"));
    assert_eq!(header["nodes"], 64);
    assert!(header["lambda1"].as_f64().unwrap() > 0.0);
    let manifest = read_json(&cfg.output_dir.join("manifest.json"));
    assert_eq!(manifest["config_hash"], cfg.hash());
}

#[test]
fn output_dir_flag_overrides_config_and_nothing_else_is_written() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let path = write_config(tmp.path(), &cfg);
    let target = tmp.path().join("elsewhere");
    let out = fpme(&["--output-dir", target.to_str().unwrap(), "assemble", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(!cfg.output_dir.exists());
    let mut names: Vec<String> = std::fs::read_dir(&target)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["eigen.csv", "manifest.json", "operator.json", "operator_matrix.csv"]);
    let mut top: Vec<String> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["config.json", "elsewhere"]);
}

#[test]
fn too_few_cells_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.domain.n = 4;
    let out = run_with(&cfg, tmp.path(), "assemble", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["exit_code"], 2);
}

#[test]
fn reversed_time_interval_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.time.t0 = 1.0;
    cfg.time.t1 = 0.5;
    assert_eq!(run_with(&cfg, tmp.path(), "solve", &[]).status.code(), Some(2));
}

#[test]
fn unknown_fields_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("config.json");
    let mut value = serde_json::to_value(small_config(tmp.path())).unwrap();
    value["domain"]["cells"] = 12.into();
    std::fs::write(&path, value.to_string()).unwrap();
    assert_eq!(fpme(&["solve", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn zero_datum_gives_zero_rows() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.initial_datum = DatumConfig::Zero;
    let out = run_with(&cfg, tmp.path(), "solve", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = read_numeric_csv(&cfg.output_dir.join("trajectory.csv")).unwrap();
    assert_eq!(table.header[0], "t");
    assert_eq!(table.header.len(), 65);
    assert!(table.rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
}

#[test]
fn lifted_run_stays_above_delta() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.delta = 0.01;
    let out = run_with(&cfg, tmp.path(), "solve", &[]);
    assert!(out.status.success());
    let table = read_numeric_csv(&cfg.output_dir.join("trajectory.csv")).unwrap();
    let min = table.rows.iter().flat_map(|r| r[1..].iter().copied()).fold(f64::INFINITY, f64::min);
    assert!(min >= 0.01, "{min}");
    let sidecar = read_json(&cfg.output_dir.join("trajectory.json"));
    assert_eq!(sidecar["meta"]["delta"], 0.01);
}

#[test]
fn trajectory_round_trips_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = run_with(&cfg, tmp.path(), "solve", &[]);
    assert!(out.status.success());
    let table = read_numeric_csv(&cfg.output_dir.join("trajectory.csv")).unwrap();

    let domain = cfg.build_domain().unwrap();
    let op = assemble(&domain, cfg.kernel_spec()).unwrap();
    let DatumConfig::Indicator { support, height } = cfg.initial_datum else {
        unreachable!()
    };
    let u0 = fpme::grid::Field::from_fn(&domain, |p| if p[0] >= support[0] && p[0] <= support[1] { height } else { 0.0 });
    let traj = solve(&op, &cfg.nonlinearity().unwrap(), &u0, &cfg.time_grid().unwrap(), &cfg.solver, 0.0).unwrap();
    assert_eq!(table.rows.len(), traj.len());
    for (row, (t, u)) in table.rows.iter().zip(traj.times().iter().zip(traj.snapshots())) {
        assert_eq!(row[0].to_bits(), t.to_bits());
        for (a, b) in row[1..].iter().zip(u.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn datum_from_file_and_eigen_power() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    let mut csv = String::from("node,value\n");
    for i in 0..64 {
        csv.push_str(&format!("{i},{}\n", if i == 32 { 1.0 } else { 0.0 }));
    }
    std::fs::write(tmp.path().join("datum.csv"), csv).unwrap();
    cfg.initial_datum = DatumConfig::File { path: "datum.csv".into() };
    assert!(run_with(&cfg, tmp.path(), "solve", &[]).status.success());

    cfg.initial_datum = DatumConfig::File { path: "missing.csv".into() };
    assert_eq!(run_with(&cfg, tmp.path(), "solve", &[]).status.code(), Some(2));

    cfg.initial_datum = DatumConfig::EigenPower { scale: 2.0, exponent: None };
    assert!(run_with(&cfg, tmp.path(), "solve", &[]).status.success());
}

#[test]
fn rough_kernel_outside_its_bounds_fails_assembly() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    let c = fpme::operator::normalization(1, 0.3);
    cfg.kernel = KernelConfig::Rough {
        s: 0.3,
        lambda: 0.9 * c,
        big_lambda: 1.1 * c,
        amplitude: 0.5,
        frequency: 5.0,
    };
    assert_eq!(run_with(&cfg, tmp.path(), "assemble", &[]).status.code(), Some(3));
    cfg.kernel = KernelConfig::Rough {
        s: 0.3,
        lambda: 0.5 * c,
        big_lambda: 1.5 * c,
        amplitude: 0.5,
        frequency: 5.0,
    };
    assert!(run_with(&cfg, tmp.path(), "assemble", &[]).status.success());
}

#[test]
fn solver_failure_reports_the_time() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.initial_datum = DatumConfig::Indicator {
        support: [0.4, 0.6],
        height: 1e8,
    };
    cfg.time.layout = fpme::evolve::TimeLayout::Uniform { steps: 1 };
    cfg.solver.newton_max_iter = 5;
    cfg.solver.halve_on_failure = false;
    let out = run_with(&cfg, tmp.path(), "solve", &[]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stderr_json(&out)["time"].as_f64().is_some());
}

#[test]
fn config_hash_tracks_every_field() {
    let tmp = TempDir::new().unwrap();
    let base = small_config(tmp.path());
    assert_eq!(base.hash(), base.clone().hash());
    let mut variants = Vec::new();
    let mut c = base.clone();
    c.domain.n = 65;
    variants.push(c);
    let mut c = base.clone();
    c.kernel = KernelConfig::Fractional { s: 0.31 };
    variants.push(c);
    let mut c = base.clone();
    c.delta = 1e-3;
    variants.push(c);
    let mut c = base.clone();
    c.seed += 1;
    variants.push(c);
    let mut c = base.clone();
    c.constants.c_star = 2.0;
    variants.push(c);
    let mut c = base.clone();
    c.solver.newton_rel_tol = 1e-9;
    variants.push(c);
    let mut c = base.clone();
    c.time.t1 = 0.2;
    variants.push(c);
    let mut c = base.clone();
    c.output_dir = "other".into();
    variants.push(c);
    for v in &variants {
        assert_ne!(v.hash(), base.hash());
    }
}

#[test]
fn verify_single_suite_passes_quickly() {
    let tmp = TempDir::new().unwrap();
    let cfg = RunConfig {
        output_dir: tmp.path().join("out"),
        ..RunConfig::default()
    };
    let start = Instant::now();
    let out = run_with(&cfg, tmp.path(), "verify", &["--suite", "S9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(start.elapsed().as_secs() < 60);
    let report = read_json(&cfg.output_dir.join("report.json"));
    assert_eq!(report["suites"].as_array().unwrap().len(), 1);
    assert_eq!(report["suites"][0]["pass"], true);
}

#[test]
fn verify_refusal_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.kernel = KernelConfig::Fractional { s: 0.6 };
    let out = run_with(&cfg, tmp.path(), "verify", &["--suite", "S2"]);
    assert_eq!(out.status.code(), Some(1));
    let report = read_json(&cfg.output_dir.join("report.json"));
    assert!(report["suites"][0]["refusal"].is_string());
}

#[test]
fn verify_rejects_unknown_suites_and_threads() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    assert_eq!(run_with(&cfg, tmp.path(), "verify", &["--suite", "S99"]).status.code(), Some(2));
    let path = write_config(tmp.path(), &cfg);
    let out = Command::new(env!("CARGO_BIN_EXE_fpme"))
        .env("FPME_THREADS", "zero")
        .args(["verify", "--config", path.to_str().unwrap(), "--suite", "S9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_all_reports_every_suite_with_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = RunConfig {
        output_dir: tmp.path().join("out"),
        ..RunConfig::default()
    };
    let path = write_config(tmp.path(), &cfg);
    let out = Command::new(env!("CARGO_BIN_EXE_fpme"))
        .env("FPME_THREADS", "4")
        .args(["verify", "--config", path.to_str().unwrap(), "--suite", "all"])
        .output()
        .unwrap();
    let report = read_json(&cfg.output_dir.join("report.json"));
    let suites = report["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 14);
    let all_pass = suites.iter().all(|s| s["pass"] == true);
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
    let envelope = cfg.output_dir.join("S2_envelope.csv");
    assert!(envelope.is_file());
    assert!(cfg.output_dir.join("S4_exponent.csv").is_file());

    let plot = fpme(&["plot", "--kind", "envelope", envelope.to_str().unwrap()]);
    assert!(plot.status.success());
    let svg = std::fs::read_to_string(cfg.output_dir.join("S2_envelope_envelope.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn profile_plot_has_one_polyline_per_snapshot() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    assert!(run_with(&cfg, tmp.path(), "solve", &[]).status.success());
    let csv = cfg.output_dir.join("trajectory.csv");
    let out = fpme(&["plot", "--kind", "profile", "--snapshots", "0,10,20", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(cfg.output_dir.join("trajectory_profile.svg")).unwrap();
    assert!(svg.contains("version=\"1.1\""));
    assert_eq!(svg.matches("<polyline").count(), 3);
    let out = fpme(&["plot", "--kind", "profile", "--snapshots", "100000", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exponent_plot_is_annotated_with_the_slope() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("d,u\n");
    for k in 0..40 {
        let d = 0.002 * 1.1f64.powi(k);
        csv.push_str(&format!("{d},{}\n", d.powf(0.7)));
    }
    let path = tmp.path().join("power.csv");
    std::fs::write(&path, csv).unwrap();
    let out_dir = tmp.path().join("plots");
    let out = fpme(&["--output-dir", out_dir.to_str().unwrap(), "plot", "--kind", "exponent", path.to_str().unwrap()]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(out_dir.join("power_exponent.svg")).unwrap();
    assert!(svg.contains("0.700"));
    assert_eq!(svg.matches("<circle").count(), 40);
}

#[test]
fn malformed_csv_reports_the_row() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("bad.csv");
    std::fs::write(&path, "d,u\n0.1,0.2\n0.2,abc\n").unwrap();
    let out = fpme(&["plot", "--kind", "exponent", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["row"], 3);
    assert!(err["error"].as_str().unwrap().contains("row 3"));

    std::fs::write(&path, "d,u\n0.1,0.2\n0.2\n").unwrap();
    let out = fpme(&["plot", "--kind", "exponent", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["row"], 3);
}

#[test]
fn default_config_round_trips() {
    let out = fpme(&["default-config"]);
    assert!(out.status.success());
    let cfg: RunConfig = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg, RunConfig::default());
    cfg.validate().unwrap();
}
