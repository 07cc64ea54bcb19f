use std::sync::Arc;

use fpme::evolve::{dual_residual, solve, SolverConfig, TimeGrid, TimeLayout, Trajectory};
use fpme::grid::{build_grid, integrate, Domain, Field, Interval};
use fpme::nonlinearity::Nonlinearity;
use fpme::operator::{assemble, KernelSpec, NonlocalOperator};
use fpme::spectral::{green_matrix, principal_eigenpair, Normalization};

fn line(n: usize) -> Arc<Domain<f64>> {
    Arc::new(build_grid(1, &[Interval::new(0.0, 1.0)], n).unwrap())
}

fn indicator(d: &Arc<Domain<f64>>, height: f64) -> Field<f64> {
    Field::from_fn(d, |p| if p[0] > 0.4 && p[0] < 0.6 { height } else { 0.0 })
}

fn run(op: &NonlocalOperator<f64>, m: f64, u0: &Field<f64>, grid: &TimeGrid<f64>) -> Trajectory<f64> {
    let f = Nonlinearity::power(m).unwrap();
    solve(op, &f, u0, grid, &SolverConfig::default(), 0.0).unwrap()
}

fn geometric(t1: f64) -> TimeGrid<f64> {
    TimeGrid::new(0.0, t1, TimeLayout::GeometricFrom { first_step: t1 * 1e-6, ratio: 1.15 }).unwrap()
}

#[test]
fn zero_datum_stays_zero() {
    let d = line(64);
    let op = assemble(&d, KernelSpec::fractional(0.3)).unwrap();
    let traj = run(&op, 2.0, &Field::zeros(&d), &geometric(1.0));
    assert!(traj.snapshots().iter().all(|u| u.max_abs() == 0.0));
    let f = Nonlinearity::power(2.0).unwrap();
    let res = dual_residual(&green_matrix(&op).unwrap(), &traj, &f).unwrap();
    assert_eq!(res.max, 0.0);
}

#[test]
fn dual_residual_detects_corruption() {
    let d = line(128);
    let op = assemble(&d, KernelSpec::fractional(0.3)).unwrap();
    let green = green_matrix(&op).unwrap();
    let f = Nonlinearity::power(2.0).unwrap();
    let mut traj = run(&op, 2.0, &indicator(&d, 1.0), &geometric(1.0));
    let clean = dual_residual(&green, &traj, &f).unwrap();
    assert!(clean.relative < 1e-8, "{clean:?}");
    let k = traj.len() / 2;
    traj.snapshots_mut()[k].values_mut()[64] *= 1.5;
    let corrupted = dual_residual(&green, &traj, &f).unwrap();
    assert!(corrupted.relative > 1e-3, "{corrupted:?}");
}

#[test]
fn lifted_runs_have_small_dual_residual() {
    let d = line(128);
    let op = assemble(&d, KernelSpec::fractional(0.3)).unwrap();
    let f = Nonlinearity::power(2.0).unwrap();
    let traj = solve(&op, &f, &indicator(&d, 1.0), &geometric(1.0), &SolverConfig::default(), 1e-3).unwrap();
    assert!(traj.snapshots().iter().all(|u| u.min() >= 1e-3));
    let res = dual_residual(&green_matrix(&op).unwrap(), &traj, &f).unwrap();
    assert!(res.relative < 1e-8, "{res:?}");
}

#[test]
fn scaling_law_holds_on_matched_grids() {
    let d = line(128);
    let op = assemble(&d, KernelSpec::fractional(0.3)).unwrap();
    let m = 2.0;
    let grid = geometric(1.0);
    let base = run(&op, m, &indicator(&d, 1.0), &grid);
    for big in [2.0f64, 5.0] {
        let scaled_grid = grid.scaled(big.powf(1.0 - m)).unwrap();
        let lifted = run(&op, m, &indicator(&d, big), &scaled_grid);
        for (u_big, u) in lifted.snapshots().iter().zip(base.snapshots()).skip(1) {
            let rescaled = u.map(|v| big * v);
            let diff = u_big.zip_map(&rescaled, |a, b| a - b).unwrap().max_abs();
            assert!(diff <= 1e-4 * rescaled.max_abs(), "M={big}: {diff:e}");
        }
    }
}

#[test]
fn weighted_mass_decays_at_the_eigen_rate() {
    let d = line(128);
    let op = assemble(&d, KernelSpec::fractional(0.3)).unwrap();
    let eig = principal_eigenpair(&op, 1e-12, Normalization::UnitL1Weighted).unwrap();
    let m = 2.0;
    let traj = run(&op, m, &indicator(&d, 1.0), &geometric(1.0));
    let mass = |u: &Field<f64>| integrate(u, Some(&eig.phi1)).unwrap();
    for k in 1..traj.len() {
        let dt = traj.times()[k] - traj.times()[k - 1];
        let (prev, next) = (&traj.snapshots()[k - 1], &traj.snapshots()[k]);
        let loss = dt * eig.lambda1 * mass(&next.map(|v| v.powf(m)));
        let change = mass(next) - mass(prev);
        assert!(change <= 0.0);
        assert!((change + loss).abs() <= 1e-8 * mass(prev), "step {k}");
    }
}

#[test]
fn single_precision_matches_double() {
    let d32 = Arc::new(build_grid(1, &[Interval::new(0.0f32, 1.0)], 64).unwrap());
    let d64 = line(64);
    let op32 = assemble(&d32, KernelSpec::fractional(0.3f32)).unwrap();
    let op64 = assemble(&d64, KernelSpec::fractional(0.3)).unwrap();
    let f = Nonlinearity::power(2.0).unwrap();
    let cfg = SolverConfig { newton_rel_tol: 1e-5, ..SolverConfig::default() };
    let grid32 = TimeGrid::new(0.0f32, 0.1, TimeLayout::Uniform { steps: 20 }).unwrap();
    let grid64 = TimeGrid::new(0.0, 0.1, TimeLayout::Uniform { steps: 20 }).unwrap();
    let u32_0 = Field::from_fn(&d32, |p| if p[0] > 0.4 && p[0] < 0.6 { 1.0f32 } else { 0.0 });
    let t32 = solve(&op32, &f, &u32_0, &grid32, &cfg, 0.0).unwrap();
    let t64 = solve(&op64, &f, &indicator(&d64, 1.0), &grid64, &SolverConfig::default(), 0.0).unwrap();
    let (a, b) = (t32.last(), t64.last());
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((*x as f64 - y).abs() < 1e-3 * b.max_abs());
    }
    assert!(a.min() > 0.0);
}
