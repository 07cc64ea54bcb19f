//! Implicit Euler integration of `u_t + A F(u) = 0` with Newton's method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::linalg::{Lu, Matrix};
use crate::nonlinearity::Nonlinearity;
use crate::operator::NonlocalOperator;
use crate::scalar::{max_abs, Real};
use crate::spectral::GreenMatrix;

/// Default ratio of geometric time grids.
pub const DEFAULT_RATIO: f64 = 1.15;
const MAX_HALVINGS: usize = 20;
const POLISH_STEPS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeLayout {
    Uniform { steps: usize },
    Geometric { steps: usize, ratio: f64 },
    /// Steps `dt0, dt0 r, dt0 r², ...` until `t1`, the last one shortened.
    GeometricFrom { first_step: f64, ratio: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid<T> {
    times: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, t1: T, layout: TimeLayout) -> Result<Self> {
        if !(t0 >= T::zero()) || !(t1 > t0) || !t1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time interval needs 0 <= t0 < t1, got [{t0}, {t1}]"
            )));
        }
        let span = t1 - t0;
        let times = match layout {
            TimeLayout::Uniform { steps } => {
                if steps == 0 {
                    return Err(Error::InvalidArgument("at least one step is required".into()));
                }
                let k = T::from_usize_lossy(steps);
                let mut times: Vec<T> = (0..steps).map(|i| t0 + span * T::from_usize_lossy(i) / k).collect();
                times.push(t1);
                times
            }
            TimeLayout::Geometric { steps, ratio } => {
                if steps == 0 || !(ratio > 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "geometric layout needs steps >= 1 and ratio > 1, got {steps} and {ratio}"
                    )));
                }
                let r = T::lit(ratio);
                let first = span * (r - T::one()) / (r.powi(steps as i32) - T::one());
                let mut times = vec![t0];
                let mut dt = first;
                let mut t = t0;
                for _ in 1..steps {
                    t += dt;
                    times.push(t);
                    dt *= r;
                }
                times.push(t1);
                times
            }
            TimeLayout::GeometricFrom { first_step, ratio } => {
                if !(ratio > 1.0) || !(first_step > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "geometric layout needs first step > 0 and ratio > 1, got {first_step} and {ratio}"
                    )));
                }
                let r = T::lit(ratio);
                let mut dt = T::lit(first_step);
                let mut times = vec![t0];
                let mut t = t0;
                while t + dt < t1 {
                    t += dt;
                    times.push(t);
                    dt *= r;
                }
                let last = *times.last().expect("nonempty");
                // Merge a sliver final step into its predecessor.
                if times.len() > 1 && t1 - last < T::lit(1e-3) * (dt / r) {
                    times.pop();
                }
                times.push(t1);
                times
            }
        };
        Self::from_times(times)
    }

    /// Explicit strictly increasing list of times, the first being `t0`.
    pub fn from_times(times: Vec<T>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument("a time grid needs at least two times".into()));
        }
        if !(times[0] >= T::zero()) {
            return Err(Error::InvalidArgument("times must be nonnegative".into()));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "times must increase strictly, found {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { times })
    }

    /// Adds the given interior times as extra stops.
    pub fn with_stops(&self, stops: &[T]) -> Result<Self> {
        let mut times = self.times.clone();
        let (t0, t1) = (self.t0(), self.t1());
        for &s in stops {
            if s > t0 && s < t1 {
                times.push(s);
            }
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        times.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * a.abs().max(T::one()));
        Self::from_times(times)
    }

    /// Every time multiplied by `factor > 0`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::from_times(self.times.iter().map(|&t| t * factor).collect())
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn t0(&self) -> T {
        self.times[0]
    }

    pub fn t1(&self) -> T {
        *self.times.last().expect("nonempty")
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub newton_rel_tol: f64,
    pub newton_max_iter: usize,
    pub linear_tol: f64,
    pub halve_on_failure: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_rel_tol: 1e-10,
            newton_max_iter: 50,
            linear_tol: 1e-12,
            halve_on_failure: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_rel_tol > 0.0) || !(self.linear_tol > 0.0) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if self.newton_max_iter < 5 {
            return Err(Error::InvalidArgument(format!(
                "newton_max_iter must be at least 5, got {}",
                self.newton_max_iter
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub max_iterations_per_step: usize,
    /// Largest accepted `‖u - u_prev + dt A F(u)‖∞ / ‖u_prev‖∞`.
    pub max_relative_residual: f64,
    pub halvings: usize,
    pub clamped_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub delta: f64,
    pub kernel: String,
    pub nonlinearity: String,
    pub stats: SolverStats,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    times: Vec<T>,
    snapshots: Vec<Field<T>>,
    pub meta: TrajectoryMeta,
}

impl<T: Real> Trajectory<T> {
    pub fn new(times: Vec<T>, snapshots: Vec<Field<T>>, meta: TrajectoryMeta) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidArgument("trajectory times must increase".into()));
            }
        }
        for s in &snapshots[1..] {
            if !s.same_domain(&snapshots[0]) {
                return Err(Error::DomainMismatch);
            }
        }
        Ok(Self { times, snapshots, meta })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Field<T>] {
        &self.snapshots
    }

    pub fn snapshots_mut(&mut self) -> &mut [Field<T>] {
        &mut self.snapshots
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.meta.delta
    }

    pub fn last(&self) -> &Field<T> {
        self.snapshots.last().expect("nonempty trajectory")
    }

    /// Snapshot at exactly time `t`, if present.
    pub fn at(&self, t: T) -> Option<&Field<T>> {
        let tol = T::lit(1e-12) * t.abs().max(T::lit(1e-300));
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|k| &self.snapshots[k])
    }

    /// Index of the snapshot whose time is closest to `t`.
    pub fn nearest(&self, t: T) -> usize {
        let mut best = 0;
        for (k, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }
}

fn step_residual<T: Real>(op: &NonlocalOperator<T>, f: &Nonlinearity, u: &[T], u_prev: &[T], dt: T) -> Vec<T> {
    let fu: Vec<T> = u.iter().map(|&v| f.value(v)).collect();
    let afu = op.apply_slice(&fu);
    u.iter()
        .zip(u_prev)
        .zip(&afu)
        .map(|((&a, &b), &c)| a - b + dt * c)
        .collect()
}

struct StepOutcome<T> {
    u: Vec<T>,
    iterations: usize,
    relative_residual: f64,
    clamped: usize,
}

fn newton_step<T: Real>(
    op: &NonlocalOperator<T>,
    f: &Nonlinearity,
    u_prev: &[T],
    dt: T,
    cfg: &SolverConfig,
    time: f64,
) -> Result<StepOutcome<T>> {
    let n = u_prev.len();
    let scale = max_abs(u_prev).max(T::min_positive_value());
    let target = T::lit(cfg.newton_rel_tol) * scale;
    let mut u = u_prev.to_vec();
    let mut r = step_residual(op, f, &u, u_prev, dt);
    let mut rnorm = max_abs(&r);
    let mut iterations = 0;
    let mut last_lu: Option<Lu<T>> = None;
    while rnorm > target {
        if iterations >= cfg.newton_max_iter {
            return Err(Error::NewtonFailed {
                time,
                iterations,
                residual: (rnorm / scale).to_f64_lossy(),
            });
        }
        iterations += 1;
        let lu = Lu::new(jacobian(op, f, &u, dt))?;
        let dx = lu.solve(&r);
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<T> = u.iter().zip(&dx).map(|(&a, &b)| a - lambda * b).collect();
            let rt = step_residual(op, f, &trial, u_prev, dt);
            let nt = max_abs(&rt);
            if nt.is_finite() && nt <= (T::one() - T::lit(1e-4) * lambda) * rnorm {
                u = trial;
                r = rt;
                rnorm = nt;
                accepted = true;
                break;
            }
            lambda *= T::lit(0.5);
        }
        last_lu = Some(lu);
        if !accepted {
            return Err(Error::NewtonFailed {
                time,
                iterations,
                residual: (rnorm / scale).to_f64_lossy(),
            });
        }
    }
    // Drive the residual to roundoff with the last factorization.
    if let Some(lu) = &last_lu {
        for _ in 0..POLISH_STEPS {
            let dx = lu.solve(&r);
            let trial: Vec<T> = u.iter().zip(&dx).map(|(&a, &b)| a - b).collect();
            let rt = step_residual(op, f, &trial, u_prev, dt);
            let nt = max_abs(&rt);
            if !(nt < rnorm) {
                break;
            }
            let gain = rnorm / nt;
            u = trial;
            r = rt;
            rnorm = nt;
            if gain < T::lit(2.0) {
                break;
            }
        }
    }
    let floor = T::lit(1e-13) * scale.max(T::one());
    let mut clamped = 0;
    for (node, v) in u.iter_mut().enumerate() {
        if *v < T::zero() {
            if -*v < floor {
                *v = T::zero();
                clamped += 1;
            } else {
                return Err(Error::NegativeValue {
                    node,
                    value: v.to_f64_lossy(),
                });
            }
        }
    }
    debug_assert_eq!(u.len(), n);
    Ok(StepOutcome {
        u,
        iterations,
        relative_residual: (rnorm / scale).to_f64_lossy(),
        clamped,
    })
}

/// `I + dt A diag(F'(u))`.
fn jacobian<T: Real>(op: &NonlocalOperator<T>, f: &Nonlinearity, u: &[T], dt: T) -> Matrix<T> {
    let n = u.len();
    let d: Vec<T> = u.iter().map(|&v| dt * f.slope(v)).collect();
    let a = op.matrix();
    let mut j = Matrix::zeros(n, n);
    for i in 0..n {
        let src = a.row(i);
        let dst = j.row_mut(i);
        for k in 0..n {
            dst[k] = src[k] * d[k];
        }
        dst[i] += T::one();
    }
    j
}

fn check_admissible<T: Real>(values: &[T]) -> Result<()> {
    for (node, &v) in values.iter().enumerate() {
        if !(v >= T::zero()) || !v.is_finite() {
            return Err(Error::NegativeValue {
                node,
                value: v.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// One implicit Euler step `u + dt A F(u) = u_prev`.
pub fn implicit_step<T: Real>(
    op: &NonlocalOperator<T>,
    f: &Nonlinearity,
    u_prev: &Field<T>,
    dt: T,
    cfg: &SolverConfig,
) -> Result<Field<T>> {
    cfg.validate()?;
    if !crate::grid::same_domain(op.domain(), u_prev.domain()) {
        return Err(Error::DomainMismatch);
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    check_admissible(u_prev.values())?;
    let out = newton_step(op, f, u_prev.values(), dt, cfg, dt.to_f64_lossy())?;
    Field::new(op.domain(), out.u)
}

/// Advances from `t` to `t_next`, halving on Newton failure. Intermediate
/// substeps are appended to `out`.
#[allow(clippy::too_many_arguments)]
fn advance<T: Real>(
    op: &NonlocalOperator<T>,
    f: &Nonlinearity,
    u: &[T],
    t: T,
    t_next: T,
    cfg: &SolverConfig,
    stats: &mut SolverStats,
    depth: usize,
    out: &mut Vec<(T, Vec<T>)>,
) -> Result<()> {
    match newton_step(op, f, u, t_next - t, cfg, t_next.to_f64_lossy()) {
        Ok(step) => {
            stats.steps += 1;
            stats.newton_iterations += step.iterations;
            stats.max_iterations_per_step = stats.max_iterations_per_step.max(step.iterations);
            stats.max_relative_residual = stats.max_relative_residual.max(step.relative_residual);
            stats.clamped_nodes += step.clamped;
            out.push((t_next, step.u));
            Ok(())
        }
        Err(err @ Error::NewtonFailed { .. }) => {
            if !cfg.halve_on_failure || depth >= MAX_HALVINGS {
                return Err(err);
            }
            stats.halvings += 1;
            let mid = t + (t_next - t) * T::lit(0.5);
            advance(op, f, u, t, mid, cfg, stats, depth + 1, out)?;
            let u_mid = out.last().expect("substep recorded").1.clone();
            advance(op, f, &u_mid, mid, t_next, cfg, stats, depth + 1, out)
        }
        Err(other) => Err(other),
    }
}

/// Marches `u0` over `grid`. With `exterior = δ > 0` the shifted problem for
/// `v = u - δ` is solved with `F_δ` and the snapshots hold `u_δ = v + δ`.
pub fn solve<T: Real>(
    op: &NonlocalOperator<T>,
    f: &Nonlinearity,
    u0: &Field<T>,
    grid: &TimeGrid<T>,
    cfg: &SolverConfig,
    exterior: T,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    if !crate::grid::same_domain(op.domain(), u0.domain()) {
        return Err(Error::DomainMismatch);
    }
    if !(exterior >= T::zero()) {
        return Err(Error::InvalidArgument(format!("exterior value must be >= 0, got {exterior}")));
    }
    check_admissible(u0.values())?;
    let delta = exterior.to_f64_lossy();
    let shifted;
    let fv = if delta > 0.0 {
        shifted = f.delta_shift(delta)?;
        &shifted
    } else {
        f
    };
    let mut stats = SolverStats::default();
    let mut states: Vec<(T, Vec<T>)> = vec![(grid.t0(), u0.values().to_vec())];
    for w in grid.times().windows(2) {
        let u = states.last().expect("nonempty").1.clone();
        advance(op, fv, &u, w[0], w[1], cfg, &mut stats, 0, &mut states)?;
    }
    let domain = op.domain();
    let mut times = Vec::with_capacity(states.len());
    let mut snapshots = Vec::with_capacity(states.len());
    for (t, v) in states {
        times.push(t);
        let values = if delta > 0.0 {
            v.into_iter().map(|x| x + exterior).collect()
        } else {
            v
        };
        snapshots.push(Field::new(domain, values)?);
    }
    Trajectory::new(
        times,
        snapshots,
        TrajectoryMeta {
            delta,
            kernel: format!("{:?}", op.kernel()),
            nonlinearity: f.describe(),
            stats,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualResidual {
    pub max: f64,
    pub scale: f64,
    /// `max / scale`, or `max` itself when the scale vanishes.
    pub relative: f64,
}

/// `max_n ‖G (v^{n+1} - v^n)/Δt + F(v^{n+1})‖∞` with `v = u - δ` and the
/// matching shifted nonlinearity for δ-runs. The scale is `max_n ‖F(v^n)‖∞`.
pub fn dual_residual<T: Real>(green: &GreenMatrix<T>, traj: &Trajectory<T>, f: &Nonlinearity) -> Result<DualResidual> {
    if traj.len() < 2 {
        return Err(Error::InvalidArgument("dual residual needs at least two snapshots".into()));
    }
    let delta = traj.delta();
    let shifted;
    let fv = if delta > 0.0 {
        shifted = f.delta_shift(delta)?;
        &shifted
    } else {
        f
    };
    let d = T::lit(delta);
    let v: Vec<Vec<T>> = traj
        .snapshots()
        .iter()
        .map(|s| s.values().iter().map(|&x| x - d).collect())
        .collect();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, w) in v.windows(2).enumerate() {
        let dt = traj.times()[k + 1] - traj.times()[k];
        let diff: Vec<T> = w[1].iter().zip(&w[0]).map(|(&a, &b)| (a - b) / dt).collect();
        let g = green.apply_slice(&diff);
        let fu: Vec<T> = w[1].iter().map(|&x| fv.value(x)).collect();
        scale = scale.max(max_abs(&fu).to_f64_lossy());
        let r = g.iter().zip(&fu).map(|(&a, &b)| (a + b).abs()).fold(T::zero(), T::max);
        worst = worst.max(r.to_f64_lossy());
    }
    if let Some(first) = v.first() {
        let f0: Vec<T> = first.iter().map(|&x| fv.value(x)).collect();
        scale = scale.max(max_abs(&f0).to_f64_lossy());
    }
    Ok(DualResidual {
        max: worst,
        scale,
        relative: if scale > 0.0 { worst / scale } else { worst },
    })
}
