//! The four subcommands. Each writes only inside its output directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fpme::evolve::solve;
use fpme::grid::{distance_field, Domain, Field};
use fpme::operator::{assemble, check_rough_kernel_bounds, NonlocalOperator};
use fpme::spectral::{principal_eigenpair, EigenPair, Normalization, DEFAULT_EIGEN_TOL};
use fpme::verify::{run_suites, SuiteId, VerificationReport};
use serde_json::json;

use crate::config::{DatumConfig, KernelConfig, NonlinearityConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{numeric_csv, read_numeric_csv, trajectory_csv, write_atomic, write_json, NumericTable};
use crate::plot::{self, PlotKind};

pub const OPERATOR_JSON: &str = "operator.json";
pub const OPERATOR_CSV: &str = "operator_matrix.csv";
pub const EIGEN_CSV: &str = "eigen.csv";
pub const MANIFEST: &str = "manifest.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRAJECTORY_JSON: &str = "trajectory.json";
pub const REPORT_JSON: &str = "report.json";

const KERNEL_BOUND_SAMPLES: usize = 2000;

fn manifest(cfg: &RunConfig, command: &str, files: &[&str], extra: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
        "config": cfg,
        "files": files,
        "details": extra,
    })
}

fn build_operator(cfg: &RunConfig, domain: &Arc<Domain<f64>>) -> CliResult<NonlocalOperator<f64>> {
    let spec = cfg.kernel_spec();
    if matches!(cfg.kernel, KernelConfig::Rough { .. }) {
        let bounds = check_rough_kernel_bounds(&spec, domain, KERNEL_BOUND_SAMPLES, cfg.seed).map_err(CliError::Assembly)?;
        if !bounds.pass {
            return Err(CliError::Assembly(fpme::Error::InvalidArgument(format!(
                "kernel ratio range [{:e}, {:e}] leaves the declared bounds",
                bounds.min_ratio, bounds.max_ratio
            ))));
        }
    }
    let op = assemble(domain, spec).map_err(CliError::Assembly)?;
    let report = op.check_invariants();
    if !report.holds(1e-10, op.kernel().is_local()) {
        return Err(CliError::Assembly(fpme::Error::InvalidArgument(format!(
            "operator invariants fail: {report:?}"
        ))));
    }
    Ok(op)
}

fn eigenpair(op: &NonlocalOperator<f64>) -> CliResult<EigenPair<f64>> {
    principal_eigenpair(op, DEFAULT_EIGEN_TOL, Normalization::UnitL1Weighted).map_err(CliError::Assembly)
}

/// Writes the operator header and dense matrix, the principal eigenpair and
/// a manifest.
pub fn cmd_assemble(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let out = &cfg.output_dir;
    let domain = cfg.build_domain()?;
    let op = build_operator(cfg, &domain)?;
    let eig = eigenpair(&op)?;
    let n = op.len();
    let header = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
        "dim": domain.dim(),
        "bounds": cfg.domain.bounds,
        "cells_per_axis": domain.cells_per_axis(),
        "nodes": n,
        "kernel": op.kernel().name(),
        "order": op.kernel().order(),
        "normalization": op.normalization(),
        "lambda1": eig.lambda1,
        "eigen_residual": eig.residual,
        "invariants": op.check_invariants(),
        "tail": op.tail().values(),
        "matrix_file": OPERATOR_CSV,
        "matrix_layout": "dense, row i of the CSV holds A[i][0..n]",
    });
    write_json(&out.join(OPERATOR_JSON), &header)?;
    let rows = (0..n).map(|i| op.matrix().row(i).to_vec());
    write_atomic(&out.join(OPERATOR_CSV), &numeric_csv(&[], rows)?)?;
    let d = distance_field(&domain);
    let eig_rows = (0..n).map(|i| vec![i as f64, eig.phi1.values()[i], d.values()[i]]);
    let eig_header = ["node", "phi1", "d"].map(String::from);
    write_atomic(&out.join(EIGEN_CSV), &numeric_csv(&eig_header, eig_rows)?)?;
    let files = [OPERATOR_JSON, OPERATOR_CSV, EIGEN_CSV, MANIFEST];
    write_json(
        &out.join(MANIFEST),
        &manifest(cfg, "assemble", &files, json!({ "lambda1": eig.lambda1 })),
    )?;
    Ok(files.iter().map(|f| out.join(f)).collect())
}

fn datum(cfg: &RunConfig, op: &NonlocalOperator<f64>) -> CliResult<Field<f64>> {
    let domain = op.domain();
    let u0 = match &cfg.initial_datum {
        DatumConfig::Zero => Field::zeros(domain),
        DatumConfig::Indicator { support, height } => {
            let [lo, hi] = *support;
            let bounds = cfg.domain.bounds.clone();
            Field::from_fn(domain, |p| {
                let inside = bounds.iter().enumerate().all(|(a, b)| {
                    let r = (p[a] - b[0]) / (b[1] - b[0]);
                    r >= lo && r <= hi
                });
                if inside {
                    *height
                } else {
                    0.0
                }
            })
        }
        DatumConfig::EigenPower { scale, exponent } => {
            let eig = eigenpair(op)?;
            let e = exponent.unwrap_or(match cfg.nonlinearity {
                NonlinearityConfig::Power { m } => 1.0 / m,
                NonlinearityConfig::TwoPower { m1, .. } => 1.0 / m1,
            });
            eig.phi1.map(|v| scale * v.max(0.0).powf(e))
        }
        DatumConfig::File { path } => {
            let table = read_numeric_csv(path)?;
            let value = table
                .column("value")
                .ok_or_else(|| CliError::Config(format!("{} has no \"value\" column", path.display())))?;
            if table.rows.len() != domain.len() {
                return Err(CliError::Config(format!(
                    "{} has {} rows for {} nodes",
                    path.display(),
                    table.rows.len(),
                    domain.len()
                )));
            }
            Field::new(domain, table.rows.iter().map(|r| r[value]).collect()).map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    if let Some((i, v)) = u0.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(CliError::Config(format!("initial datum has invalid value {v} at node {i}")));
    }
    Ok(u0)
}

/// Runs the evolution and writes the trajectory CSV with its sidecar.
pub fn cmd_solve(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let out = &cfg.output_dir;
    let domain = cfg.build_domain()?;
    let op = build_operator(cfg, &domain)?;
    let f = cfg.nonlinearity().map_err(|e| CliError::Config(e.to_string()))?;
    let u0 = datum(cfg, &op)?;
    let grid = cfg.time_grid()?;
    let traj = solve(&op, &f, &u0, &grid, &cfg.solver, cfg.delta).map_err(CliError::Solver)?;
    let mut warnings = Vec::new();
    let s = op.kernel().order();
    if !op.kernel().is_local() && (domain.dim() as f64) <= 2.0 * s {
        warnings.push(format!(
            "dimension {} <= 2s = {}: outside the range covered by the theory",
            domain.dim(),
            2.0 * s
        ));
    }
    write_atomic(&out.join(TRAJECTORY_CSV), &trajectory_csv(&traj)?)?;
    let nodes: Vec<Vec<f64>> = domain.nodes().iter().map(|p| p[..domain.dim()].to_vec()).collect();
    let sidecar = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
        "trajectory_file": TRAJECTORY_CSV,
        "snapshots": traj.len(),
        "nodes": nodes,
        "meta": traj.meta,
        "warnings": warnings,
    });
    write_json(&out.join(TRAJECTORY_JSON), &sidecar)?;
    let files = [TRAJECTORY_CSV, TRAJECTORY_JSON, MANIFEST];
    write_json(
        &out.join(MANIFEST),
        &manifest(cfg, "solve", &files, json!({ "stats": traj.meta.stats })),
    )?;
    Ok(files.iter().map(|f| out.join(f)).collect())
}

/// Parses `all` or a suite id.
pub fn parse_suites(spec: &str) -> CliResult<Vec<SuiteId>> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(SuiteId::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<SuiteId>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

/// Runs suites, writes the report and the suites' tables. Fails with
/// [`CliError::SuitesFailed`] after writing if any suite did not pass.
pub fn cmd_verify(cfg: &RunConfig, suites: &str) -> CliResult<VerificationReport> {
    let out = &cfg.output_dir;
    let ids = parse_suites(suites)?;
    let scenario = cfg.scenario()?;
    let mut report = run_suites(&ids, &scenario).map_err(|e| CliError::Config(e.to_string()))?;
    let mut files = vec![REPORT_JSON.to_string(), MANIFEST.to_string()];
    for suite in &mut report.suites {
        for table in &suite.tables {
            let name = format!("{}_{}.csv", suite.suite_id, table.name);
            write_atomic(&out.join(&name), &numeric_csv(&table.columns, table.rows.iter().cloned())?)?;
            suite.artifacts.push(name.clone());
            files.push(name);
        }
    }
    let mut text = report.to_json();
    text.push('\n');
    write_atomic(&out.join(REPORT_JSON), text.as_bytes())?;
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    let failed = report.suites.iter().filter(|s| !s.pass).count();
    write_json(
        &out.join(MANIFEST),
        &manifest(cfg, "verify", &names, json!({ "suites": report.suites.len(), "failed": failed })),
    )?;
    if failed > 0 {
        return Err(CliError::SuitesFailed {
            failed,
            total: report.suites.len(),
        });
    }
    Ok(report)
}

/// Node abscissae from a trajectory sidecar next to `csv`, for 1D runs.
fn sidecar_abscissae(csv: &Path) -> Option<Vec<f64>> {
    let text = std::fs::read_to_string(csv.with_extension("json")).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    value["nodes"]
        .as_array()?
        .iter()
        .map(|p| match p.as_array()?.as_slice() {
            [x] => x.as_f64(),
            _ => None,
        })
        .collect()
}

/// Renders one SVG per input into `out`, named `<input stem>_<kind>.svg`.
pub fn cmd_plot(kind: PlotKind, inputs: &[PathBuf], out: &Path, snapshots: Option<&[usize]>) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for input in inputs {
        let table: NumericTable = read_numeric_csv(input)?;
        let svg = match kind {
            PlotKind::Profile => plot::profile(&table, sidecar_abscissae(input).as_deref(), snapshots)?,
            PlotKind::Envelope => plot::envelope(&table)?,
            PlotKind::Exponent => plot::exponent(&table)?,
        };
        let stem = input.file_stem().map_or("plot".into(), |s| s.to_string_lossy().into_owned());
        let path = out.join(format!("{stem}_{}.svg", kind.as_str()));
        write_atomic(&path, svg.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
