use std::sync::Arc;

use fpme::analysis::{
    barrier, derivative_growth, field_holder_seminorm, fit_boundary_exponent, ghp_envelope, harnack_quotient,
    holder_seminorm, t_star, weighted_norm, HolderAxis, HolderWindow, ShellRange, TheoryConstants,
};
use fpme::evolve::{solve, SolverConfig, TimeGrid, TimeLayout, Trajectory, TrajectoryMeta};
use fpme::grid::{build_grid, distance_field, Domain, Field, Interval};
use fpme::nonlinearity::{benilan_crandall, crandall_pierre_quantity, Nonlinearity};
use fpme::operator::{assemble, KernelSpec};
use fpme::spectral::{principal_eigenpair, EigenPair, Normalization};

fn line(n: usize) -> Arc<Domain<f64>> {
    Arc::new(build_grid(1, &[Interval::new(0.0, 1.0)], n).unwrap())
}

fn meta() -> TrajectoryMeta {
    TrajectoryMeta {
        delta: 0.0,
        kernel: "synthetic".into(),
        nonlinearity: "power(2)".into(),
        stats: Default::default(),
    }
}

fn eigen(d: &Arc<Domain<f64>>, s: f64) -> EigenPair<f64> {
    let op = assemble(d, KernelSpec::fractional(s)).unwrap();
    principal_eigenpair(&op, 1e-10, Normalization::UnitL1Weighted).unwrap()
}

/// Solution at the waiting time for `s = 0.3`, `m = 2` and unit indicator data.
fn at_waiting_time(n: usize) -> (Field<f64>, Field<f64>) {
    let (s, m) = (0.3, 2.0);
    let d = line(n);
    let op = assemble(&d, KernelSpec::fractional(s)).unwrap();
    let eig = principal_eigenpair(&op, 1e-10, Normalization::UnitL1Weighted).unwrap();
    let u0 = Field::from_fn(&d, |p| if p[0] > 0.4 && p[0] < 0.6 { 1.0 } else { 0.0 });
    let t = t_star(weighted_norm(&u0, &eig.phi1, 1.0).unwrap(), &TheoryConstants::default(), m).unwrap();
    let grid = TimeGrid::new(0.0, t, TimeLayout::GeometricFrom { first_step: t * 1e-6, ratio: 1.15 }).unwrap();
    let f = Nonlinearity::power(m).unwrap();
    let traj = solve(&op, &f, &u0, &grid, &SolverConfig::default(), 0.0).unwrap();
    (traj.last().clone(), distance_field(&d))
}

#[test]
fn envelope_of_the_barrier_is_flat() {
    let d = line(64);
    let eig = eigen(&d, 0.3);
    let (kappa0, m) = (0.7, 2.0);
    let times = vec![0.0, 0.5, 1.0, 2.0];
    let snaps = times.iter().map(|&t| barrier(kappa0, t, &eig.phi1, m)).collect();
    let traj = Trajectory::new(times, snaps, meta()).unwrap();
    for e in ghp_envelope(&traj, &eig.phi1, m).unwrap() {
        let expected = kappa0 * e.t.powf(m / (m - 1.0));
        assert!((e.c_min - expected).abs() < 1e-12 * expected);
        assert!((e.c_max - expected).abs() < 1e-12 * expected);
    }
}

#[test]
fn eigenfunction_harnack_quotient_on_a_central_ball() {
    let s = 0.3;
    let d = line(256);
    let eig = eigen(&d, s);
    let q = harnack_quotient(&eig.phi1, &[0.5, 0.0], 0.2).unwrap();
    // Comparability with d^s gives at most a factor (0.5 / 0.1)^s times the
    // two-sided constant.
    assert!(q.is_finite() && q >= 1.0);
    assert!(q <= 3.0 * 5f64.powf(s), "{q}");
    let near = harnack_quotient(&eig.phi1, &[0.5, 0.0], 0.45).unwrap();
    assert!(near > q);
}

#[test]
fn solution_at_waiting_time_is_comparable_to_distance_power() {
    let exponent = 0.15;
    let bounds = |n: usize| {
        let (u, d) = at_waiting_time(n);
        let floor = 2.0 / n as f64;
        let q: Vec<f64> = u
            .values()
            .iter()
            .zip(d.values())
            .filter(|(_, x)| **x >= floor)
            .map(|(v, x)| v / x.powf(exponent))
            .collect();
        (q.iter().cloned().fold(f64::INFINITY, f64::min), q.iter().cloned().fold(0.0, f64::max))
    };
    let (coarse, fine) = (bounds(128), bounds(256));
    assert!(fine.0 > 0.0 && fine.1 / fine.0 < 5.0, "{fine:?}");
    assert!((coarse.0 / fine.0 - 1.0).abs() < 0.1 && (coarse.1 / fine.1 - 1.0).abs() < 0.1);
}

#[test]
fn solution_log_slope_approaches_s_over_m_at_the_boundary() {
    let (u, d) = at_waiting_time(512);
    let h = 1.0 / 512.0;
    let near = fit_boundary_exponent(&u, &d, ShellRange { d_min: 2.0 * h, d_max: 16.0 * h }).unwrap();
    let far = fit_boundary_exponent(&u, &d, ShellRange { d_min: 0.025, d_max: 0.2 }).unwrap();
    assert!((near.slope - 0.15).abs() < (far.slope - 0.15).abs(), "{} {}", near.slope, far.slope);
    assert!((near.slope - 0.15).abs() < 0.05, "{}", near.slope);
}

#[test]
fn first_derivative_growth_at_waiting_time() {
    let (u, d) = at_waiting_time(256);
    let g = derivative_growth(&u, &d, 1).unwrap();
    assert!(g.fit.unwrap().slope >= -0.95, "{:?}", g.fit);
}

#[test]
fn holder_seminorm_of_distance_power_is_sharp() {
    let alpha = 0.15;
    let at = |n: usize, exponent: f64| {
        let u = distance_field(&line(n)).map(|x| x.powf(alpha));
        field_holder_seminorm(&u, exponent, 0.0, None).unwrap()
    };
    let sizes = [256, 512, 1024, 2048];
    assert!(sizes.iter().all(|&n| at(n, alpha) <= 1.0 + 1e-12));
    let above: Vec<f64> = sizes.iter().map(|&n| at(n, alpha + 0.1)).collect();
    assert!(above.windows(2).all(|w| w[1] > w[0]), "{above:?}");
    // Divergence at the rate h^{-0.1} as the nodes approach the boundary.
    let rate = (above[3] / above[0]).log2() / 3.0;
    assert!((rate - 0.1).abs() < 0.02, "{rate}");
}

#[test]
fn time_seminorm_is_mesh_stable() {
    let m = 2.0;
    let seminorm = |n: usize| {
        let d = line(n);
        let op = assemble(&d, KernelSpec::fractional(0.3)).unwrap();
        let eig = principal_eigenpair(&op, 1e-10, Normalization::UnitL1Weighted).unwrap();
        let u0 = eig.phi1.map(|v| v.powf(1.0 / m));
        let grid = TimeGrid::new(0.0, 1.0, TimeLayout::Uniform { steps: 200 }).unwrap();
        let traj = solve(&op, &Nonlinearity::power(m).unwrap(), &u0, &grid, &SolverConfig::default(), 0.0).unwrap();
        let window = HolderWindow { t_min: 0.1, t_max: 1.0, floor: 0.0, nodes: None };
        holder_seminorm(&traj, HolderAxis::Time, 1.0 / (2.0 * m), &window).unwrap()
    };
    let (coarse, fine) = (seminorm(128), seminorm(256));
    assert!(fine.is_finite() && fine > 0.0);
    assert!((coarse - fine).abs() <= 0.3 * fine, "{coarse} {fine}");
}

#[test]
fn monotonicity_of_stationary_and_two_power_trajectories() {
    let d = line(128);
    let zero = Trajectory::new(vec![0.0, 1.0, 2.0], vec![Field::zeros(&d); 3], meta()).unwrap();
    let r = benilan_crandall(2.0, &zero);
    assert!(r.pass && r.min_increment == 0.0);

    let op = assemble(&d, KernelSpec::fractional(0.3)).unwrap();
    let f = Nonlinearity::two_power(2.0, 3.0).unwrap();
    let u0 = Field::from_fn(&d, |p| if p[0] > 0.4 && p[0] < 0.6 { 1.0 } else { 0.0 });
    let mut times = vec![0.0];
    let mut dt = 1e-6;
    while *times.last().unwrap() < 1.0 {
        times.push(times.last().unwrap() + dt);
        dt *= 1.15;
    }
    let grid = TimeGrid::from_times(times).unwrap();
    let traj = solve(&op, &f, &u0, &grid, &SolverConfig::default(), 0.0).unwrap();
    let cp = crandall_pierre_quantity(&f, &traj);
    assert!(cp.pass, "{} {}", cp.min_increment, cp.slack);
}
