//! Acceptance criteria, one line of output each. Exits non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fpme::analysis::{fit_boundary_exponent, ShellRange};
use fpme::evolve::{solve, SolverConfig, TimeGrid, TimeLayout};
use fpme::grid::{build_grid, distance_field, Field, Interval};
use fpme::nonlinearity::Nonlinearity;
use fpme::operator::{assemble, KernelSpec};
use fpme::spectral::{principal_eigenpair, Normalization};
use fpme::verify::{run_suite, run_suites, Scenario, SuiteId, SuiteResult, DUAL_RESIDUAL_TOL};
use rayon::prelude::*;

type Outcome = fpme::Result<(bool, String)>;

const EXPONENT_CASES: [(f64, f64); 4] = [(0.2, 2.0), (0.3, 2.0), (0.3, 3.0), (0.45, 2.0)];

fn suite(id: SuiteId) -> fpme::Result<SuiteResult> {
    run_suite(id, &Scenario::default())
}

fn summary(r: &SuiteResult, keys: &[&str]) -> String {
    let mut parts: Vec<String> = keys
        .iter()
        .filter_map(|k| r.measurement(k).map(|v| format!("{k}={v:.4e}")))
        .collect();
    let failed = r.failed_checks();
    if !failed.is_empty() {
        parts.push(format!("failed: {}", failed.join(", ")));
    }
    if let Some(why) = &r.refusal {
        parts.push(format!("refused: {why}"));
    }
    parts.join(" ")
}

fn infinite_speed() -> Outcome {
    let r = suite(SuiteId::S1)?;
    let text = summary(&r, &["min_u_at_probe_time", "kappa", "kappa_coarse", "kappa_resolution_change"]);
    Ok((r.pass, text))
}

fn finite_speed_contrast() -> Outcome {
    let r = suite(SuiteId::S14)?;
    Ok((r.pass, summary(&r, &["far_field_relative", "far_field_relative_refined"])))
}

fn scaling_law() -> Outcome {
    let (s, m, n) = (0.3, 2.0, 256);
    let d = Arc::new(build_grid(1, &[Interval::new(0.0, 1.0)], n)?);
    let op = assemble(&d, KernelSpec::fractional(s))?;
    let f = Nonlinearity::power(m)?;
    let datum = |height: f64| Field::from_fn(&d, |p| if p[0] > 0.4 && p[0] < 0.6 { height } else { 0.0 });
    let grid = TimeGrid::new(0.0, 1.0, TimeLayout::GeometricFrom { first_step: 1e-6, ratio: 1.15 })?;
    let cfg = SolverConfig::default();
    let base = solve(&op, &f, &datum(1.0), &grid, &cfg, 0.0)?;
    let mut worst = 0.0f64;
    for big in [2.0f64, 5.0] {
        let run = solve(&op, &f, &datum(big), &grid.scaled(big.powf(1.0 - m))?, &cfg, 0.0)?;
        for (a, b) in run.snapshots().iter().zip(base.snapshots()).skip(1) {
            let scaled = b.map(|v| big * v);
            let diff = a.zip_map(&scaled, |x, y| x - y)?.max_abs();
            worst = worst.max(diff / scaled.max_abs());
        }
    }
    Ok((worst <= 1e-4, format!("max relative deviation {worst:.3e}")))
}

fn ghp_envelope() -> Outcome {
    let r = suite(SuiteId::S2)?;
    Ok((r.pass, summary(&r, &["c_min", "c_max", "ratio_max", "small_time_floor"])))
}

fn boundary_exponent() -> Outcome {
    let results: Vec<(f64, f64, SuiteResult)> = EXPONENT_CASES
        .par_iter()
        .map(|&(s, m)| {
            let sc = Scenario { s, m, ..Scenario::default() };
            run_suite(SuiteId::S4, &sc).map(|r| (s, m, r))
        })
        .collect::<fpme::Result<_>>()?;
    let pass = results.iter().all(|(_, _, r)| r.pass);
    let text = results
        .iter()
        .map(|(s, m, r)| {
            format!(
                "({s},{m}): slope={:.3} r2={:.4} growth={:.3}",
                r.measurement("exponent").unwrap_or(f64::NAN),
                r.measurement("r_squared").unwrap_or(f64::NAN),
                r.measurement("sharpness_growth").unwrap_or(f64::NAN),
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok((pass, text))
}

fn eigenfunction_exponent() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [0.2, 0.3, 0.45] {
        let mut lambdas: Vec<f64> = Vec::new();
        let mut slope = f64::NAN;
        for n in [128, 256] {
            let d = Arc::new(build_grid(1, &[Interval::new(0.0, 1.0)], n)?);
            let op = assemble(&d, KernelSpec::fractional(s))?;
            let eig = principal_eigenpair(&op, 1e-10, Normalization::UnitL1Weighted)?;
            lambdas.push(eig.lambda1);
            slope = fit_boundary_exponent(&eig.phi1, &distance_field(&d), ShellRange::standard(d.as_ref()))?.slope;
        }
        let drift = (lambdas[1] - lambdas[0]).abs() / lambdas[1];
        pass &= (slope - s).abs() <= 0.05 && drift <= 0.02;
        parts.push(format!("s={s}: slope={slope:.3} lambda1={:.4} drift={drift:.2e}", lambdas[1]));
    }
    Ok((pass, parts.join("; ")))
}

fn delta_ladder() -> Outcome {
    let r = suite(SuiteId::S8)?;
    Ok((r.pass, summary(&r, &["order_gap_min", "l1_excess_max", "lift_margin_min"])))
}

fn monotonicity_pair() -> Outcome {
    let r = suite(SuiteId::S12)?;
    let text = summary(
        &r,
        &["benilan_crandall_min_increment", "benilan_crandall_slack", "crandall_pierre_min_increment", "crandall_pierre_slack"],
    );
    Ok((r.check("benilan_crandall_monotone") == Some(true) && r.check("crandall_pierre_monotone") == Some(true), text))
}

fn functional_inequalities() -> Outcome {
    let (sv, cmp) = rayon::join(|| suite(SuiteId::S9), || suite(SuiteId::S10));
    let (sv, cmp) = (sv?, cmp?);
    let text = format!(
        "{} | {}",
        summary(&sv, &["fields", "min_relative_gap_tanh", "min_relative_gap_atan", "min_relative_gap_odd_power"]),
        summary(&cmp, &["pairs", "order_gap_min", "hstar_growth_max"])
    );
    Ok((sv.pass && cmp.pass, text))
}

fn smoothing_bound() -> Outcome {
    let r = suite(SuiteId::S11)?;
    Ok((r.pass, summary(&r, &["k1", "k1_coarse", "fit_residual_delta_1e-2", "fit_residual_delta_1e-3"])))
}

fn derivative_growth() -> Outcome {
    let r = suite(SuiteId::S5)?;
    Ok((r.pass, summary(&r, &["slope_k1", "slope_k2", "slope_k3"])))
}

fn determinism() -> Outcome {
    let sc = Scenario::default();
    let first = run_suites(&SuiteId::ALL, &sc)?;
    let second = run_suites(&SuiteId::ALL, &sc)?;
    let identical = first.without_volatile().to_json() == second.without_volatile().to_json();
    let worst = first
        .suites
        .iter()
        .filter_map(|s| s.measurement("dual_residual"))
        .fold(0.0f64, f64::max);
    let entries = first.suites.len();
    Ok((
        identical && worst < DUAL_RESIDUAL_TOL && entries == 14,
        format!("identical={identical} entries={entries} max dual residual={worst:.3e}"),
    ))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria = [
        Criterion { name: "infinite speed of propagation", limit: minutes(2), run: infinite_speed },
        Criterion { name: "finite speed contrast", limit: minutes(1), run: finite_speed_contrast },
        Criterion { name: "scaling law", limit: minutes(2), run: scaling_law },
        Criterion { name: "global Harnack envelope", limit: minutes(3), run: ghp_envelope },
        Criterion { name: "boundary exponent", limit: minutes(3), run: boundary_exponent },
        Criterion { name: "eigenfunction exponent", limit: None, run: eigenfunction_exponent },
        Criterion { name: "delta ladder", limit: minutes(3), run: delta_ladder },
        Criterion { name: "monotonicity pair", limit: None, run: monotonicity_pair },
        Criterion { name: "functional inequalities", limit: minutes(1), run: functional_inequalities },
        Criterion { name: "smoothing and upper bound", limit: None, run: smoothing_bound },
        Criterion { name: "derivative growth", limit: None, run: derivative_growth },
        Criterion { name: "determinism and dual residual", limit: None, run: determinism },
    ];
    let mut failures = 0;
    for (k, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (mut pass, mut text) = match (c.run)() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed();
        if let Some(limit) = c.limit {
            if elapsed > limit {
                pass = false;
                text.push_str(&format!(" runtime over {}s", limit.as_secs()));
            }
        }
        failures += usize::from(!pass);
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {} [{:.1}s] {text}", k + 1, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
