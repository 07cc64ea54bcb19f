//! Verification suites. Each suite runs the solver on a scenario, measures
//! the constants that the qualitative theory leaves unspecified and checks
//! closed-form inequalities on them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    derivative_growth, fit_boundary_exponent, ghp_envelope, harnack_quotient, holder_seminorm, saturation_time,
    sharpness_probe, t_star, weighted_norm, EnvelopePoint, HolderAxis, HolderWindow, ShellRange, TheoryConstants,
};
use crate::error::{Error, Result};
use crate::evolve::{dual_residual, solve, SolverConfig, TimeGrid, TimeLayout, Trajectory, DEFAULT_RATIO};
use crate::grid::{build_grid, distance_field, integrate, Domain, Field, Interval, Point};
use crate::linalg::Cholesky;
use crate::nonlinearity::{benilan_crandall, crandall_pierre_quantity, Nonlinearity};
use crate::operator::{assemble, check_rough_kernel_bounds, normalization, KernelSpec, NonlocalOperator};
use crate::spectral::{green_matrix_with, hstar_norm, principal_eigenpair_with, EigenPair, GreenMatrix, Normalization};

/// Relative change allowed between two resolutions.
pub const RESOLUTION_TOL: f64 = 0.25;
pub const FIT_TOL: f64 = 0.05;
pub const DERIVATIVE_FIT_TOL: f64 = 0.15;
pub const ALGEBRAIC_SLACK: f64 = 1e-12;
pub const SCHEME_SLACK: f64 = 1e-9;
/// Additive tolerance of the weighted L1 gap bound.
pub const LADDER_TOL: f64 = 1e-8;
pub const DUAL_RESIDUAL_TOL: f64 = 1e-8;
pub const LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const S1_PROBE_TIME: f64 = 1e-4;
pub const S11_WINDOW: [f64; 2] = [1e-5, 1e-1];
pub const S11_HEIGHT: f64 = 1e7;
const SV_FIELDS: usize = 1000;
const COMPARISON_PAIRS: usize = 100;
const FAR_DISTANCE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuiteId {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
    S9,
    S10,
    S11,
    S12,
    S13,
    S14,
}

impl SuiteId {
    pub const ALL: [SuiteId; 14] = [
        SuiteId::S1,
        SuiteId::S2,
        SuiteId::S3,
        SuiteId::S4,
        SuiteId::S5,
        SuiteId::S6,
        SuiteId::S7,
        SuiteId::S8,
        SuiteId::S9,
        SuiteId::S10,
        SuiteId::S11,
        SuiteId::S12,
        SuiteId::S13,
        SuiteId::S14,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteId::S1 => "S1",
            SuiteId::S2 => "S2",
            SuiteId::S3 => "S3",
            SuiteId::S4 => "S4",
            SuiteId::S5 => "S5",
            SuiteId::S6 => "S6",
            SuiteId::S7 => "S7",
            SuiteId::S8 => "S8",
            SuiteId::S9 => "S9",
            SuiteId::S10 => "S10",
            SuiteId::S11 => "S11",
            SuiteId::S12 => "S12",
            SuiteId::S13 => "S13",
            SuiteId::S14 => "S14",
        }
    }

    pub fn theorem_ref(&self) -> &'static str {
        match self {
            SuiteId::S1 => "infinite speed of propagation and small-time lower bound",
            SuiteId::S2 => "global Harnack principle for all times",
            SuiteId::S3 => "local Harnack inequality for all times",
            SuiteId::S4 => "Hölder regularity up to the boundary",
            SuiteId::S5 => "higher interior regularity in space",
            SuiteId::S6 => "regularity in time",
            SuiteId::S7 => "lower bound for weighted norms",
            SuiteId::S8 => "ordered approximations from above",
            SuiteId::S9 => "Stroock-Varopoulos inequality",
            SuiteId::S10 => "comparison and dual-norm contraction",
            SuiteId::S11 => "absolute upper estimate",
            SuiteId::S12 => "general nonlinearities and Crandall-Pierre monotonicity",
            SuiteId::S13 => "rough kernels",
            SuiteId::S14 => "finite speed of propagation for the local operator",
        }
    }

    /// Suites whose statements need `N > 2s`.
    pub fn needs_subcritical_order(&self) -> bool {
        matches!(
            self,
            SuiteId::S1
                | SuiteId::S2
                | SuiteId::S3
                | SuiteId::S4
                | SuiteId::S5
                | SuiteId::S6
                | SuiteId::S7
                | SuiteId::S8
                | SuiteId::S13
        )
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

/// Problem setup shared by all suites: a box, the fractional order, the
/// power and an indicator datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub bounds: Vec<[f64; 2]>,
    pub n: usize,
    /// Resolution used for the stability sub-checks.
    pub coarse_n: usize,
    pub s: f64,
    pub m: f64,
    /// Support of the datum in coordinates relative to each axis.
    pub support: [f64; 2],
    pub height: f64,
    pub c_star: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            dim: 1,
            bounds: vec![[0.0, 1.0]],
            n: 256,
            coarse_n: 128,
            s: 0.3,
            m: 2.0,
            support: [0.4, 0.6],
            height: 1.0,
            c_star: 1.0,
            seed: 7,
            solver: SolverConfig::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.bounds.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "{} bounds given for dimension {}",
                self.bounds.len(),
                self.dim
            )));
        }
        if self.bounds.iter().any(|b| !(b[1] > b[0]) || !b[0].is_finite() || !b[1].is_finite()) {
            return Err(Error::InvalidArgument("every axis needs a < b".into()));
        }
        if self.n < crate::grid::MIN_CELLS || self.coarse_n < crate::grid::MIN_CELLS {
            return Err(Error::InvalidArgument(format!(
                "resolutions must be at least {}, got {} and {}",
                crate::grid::MIN_CELLS,
                self.n,
                self.coarse_n
            )));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidArgument(format!("s must lie in (0, 1), got {}", self.s)));
        }
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(Error::InvalidArgument(format!("m must exceed 1, got {}", self.m)));
        }
        let [lo, hi] = self.support;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!("datum support [{lo}, {hi}] is not inside [0, 1]")));
        }
        if !(self.height > 0.0) || !(self.c_star > 0.0) {
            return Err(Error::InvalidArgument("datum height and c_star must be positive".into()));
        }
        self.solver.validate()
    }

    pub fn domain(&self, n: usize) -> Result<Arc<Domain<f64>>> {
        let bounds: Vec<Interval<f64>> = self.bounds.iter().map(|b| Interval::new(b[0], b[1])).collect();
        Ok(Arc::new(build_grid(self.dim, &bounds, n)?))
    }

    /// Absolute coordinates of the datum support along `axis`.
    pub fn support_on(&self, axis: usize) -> [f64; 2] {
        let [a, b] = self.bounds[axis];
        [a + self.support[0] * (b - a), a + self.support[1] * (b - a)]
    }

    pub fn datum(&self, domain: &Arc<Domain<f64>>, height: f64) -> Field<f64> {
        Field::from_fn(domain, |p| {
            let inside = (0..self.dim).all(|a| {
                let [lo, hi] = self.support_on(a);
                p[a] > lo && p[a] < hi
            });
            if inside {
                height
            } else {
                0.0
            }
        })
    }

    /// Euclidean distance from `p` to the datum support.
    pub fn distance_to_support(&self, p: &Point<f64>) -> f64 {
        (0..self.dim)
            .map(|a| {
                let [lo, hi] = self.support_on(a);
                (lo - p[a]).max(p[a] - hi).max(0.0).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        Nonlinearity::power(self.m)
    }

    pub fn subcritical(&self) -> bool {
        (self.dim as f64) > 2.0 * self.s
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        hash_json(&serde_json::to_value(self).expect("scenario serializes"))
    }
}

fn hash_json(value: &serde_json::Value) -> String {
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Numeric table attached to a suite result, written out by front ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite_id: String,
    pub theorem_ref: String,
    pub pass: bool,
    /// Named sub-checks; `pass` is their conjunction.
    pub checks: BTreeMap<String, bool>,
    pub measurements: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
    pub runtime_seconds: f64,
    /// Set when the scenario violates a hypothesis of the statement.
    pub refusal: Option<String>,
    /// Set when the suite could not be evaluated.
    pub error: Option<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl SuiteResult {
    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements.get(name).copied()
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.get(name).copied()
    }

    /// Sub-checks that did not hold.
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suites: Vec<SuiteResult>,
    pub config_hash: String,
    pub version: String,
    pub timestamp: String,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    pub fn suite(&self, id: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.suite_id == id)
    }

    /// Pretty JSON with object keys sorted.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    /// Copy with the timestamp and runtimes blanked.
    pub fn without_volatile(&self) -> Self {
        let mut r = self.clone();
        r.timestamp.clear();
        for s in &mut r.suites {
            s.runtime_seconds = 0.0;
        }
        r
    }
}

#[derive(Default)]
struct Outcome {
    checks: BTreeMap<String, bool>,
    measurements: BTreeMap<String, f64>,
    tables: Vec<Table>,
}

impl Outcome {
    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }

    fn measure(&mut self, name: &str, value: f64) {
        self.measurements.insert(name.to_string(), value);
    }

    fn dual(&mut self, name: &str, value: f64) {
        let key = "dual_residual";
        let worst = self.measurements.get(key).copied().unwrap_or(0.0).max(value);
        self.measure(key, worst);
        self.check(&format!("dual_residual_{name}"), value < DUAL_RESIDUAL_TOL);
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Operator, eigenpair and datum at one resolution.
struct Level {
    domain: Arc<Domain<f64>>,
    op: NonlocalOperator<f64>,
    chol: Cholesky<f64>,
    eigen: EigenPair<f64>,
    dist: Field<f64>,
    u0: Field<f64>,
    green: OnceLock<GreenMatrix<f64>>,
}

impl Level {
    fn new(sc: &Scenario, n: usize, kernel: KernelSpec<f64>) -> Result<Self> {
        let domain = sc.domain(n)?;
        let op = assemble(&domain, kernel)?;
        let chol = op.cholesky()?;
        let eigen = principal_eigenpair_with(&op, &chol, crate::spectral::DEFAULT_EIGEN_TOL, Normalization::UnitL1Weighted)?;
        let dist = distance_field(&domain);
        let u0 = sc.datum(&domain, sc.height);
        Ok(Self {
            domain,
            op,
            chol,
            eigen,
            dist,
            u0,
            green: OnceLock::new(),
        })
    }

    fn green(&self) -> &GreenMatrix<f64> {
        self.green.get_or_init(|| green_matrix_with(&self.op, &self.chol))
    }

    fn h(&self) -> f64 {
        self.domain.min_spacing()
    }
}

/// The reference run: trajectory, envelope and saturation time.
struct Base {
    grid: TimeGrid<f64>,
    traj: Trajectory<f64>,
    envelope: Vec<EnvelopePoint>,
    t_hat: f64,
    t_star: f64,
}

type Shared<T> = OnceLock<std::result::Result<Arc<T>, Error>>;

fn shared<T>(cell: &Shared<T>, init: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
    cell.get_or_init(|| init().map(Arc::new)).clone()
}

/// Lazily computed state shared by the suites of one scenario.
struct Context<'a> {
    sc: &'a Scenario,
    fine: Shared<Level>,
    coarse: Shared<Level>,
    base_fine: Shared<Base>,
    base_coarse: Shared<Base>,
}

impl<'a> Context<'a> {
    fn new(sc: &'a Scenario) -> Self {
        Self {
            sc,
            fine: OnceLock::new(),
            coarse: OnceLock::new(),
            base_fine: OnceLock::new(),
            base_coarse: OnceLock::new(),
        }
    }

    fn fine(&self) -> Result<Arc<Level>> {
        shared(&self.fine, || Level::new(self.sc, self.sc.n, KernelSpec::fractional(self.sc.s)))
    }

    fn coarse(&self) -> Result<Arc<Level>> {
        shared(&self.coarse, || {
            Level::new(self.sc, self.sc.coarse_n, KernelSpec::fractional(self.sc.s))
        })
    }

    fn f(&self) -> Result<Nonlinearity> {
        self.sc.nonlinearity()
    }

    /// Fine run up to at least `10 t̂`, the horizon growing if needed.
    fn base_fine(&self) -> Result<Arc<Base>> {
        shared(&self.base_fine, || {
            let level = self.fine()?;
            let f = self.f()?;
            let norm = weighted_norm(&level.u0, &level.eigen.phi1, 1.0)?;
            let tstar = t_star(norm, &TheoryConstants::new(self.sc.c_star)?, self.sc.m)?;
            let mut t1 = 20.0 * tstar;
            for _ in 0..4 {
                let grid = base_grid(t1)?;
                let traj = solve(&level.op, &f, &level.u0, &grid, &self.sc.solver, 0.0)?;
                let envelope = ghp_envelope(&traj, &level.eigen.phi1, self.sc.m)?;
                let t_hat = saturation_time(&envelope)
                    .ok_or_else(|| Error::InvalidArgument("empty envelope".into()))?;
                if 10.0 * t_hat <= t1 {
                    return Ok(Base {
                        grid,
                        traj,
                        envelope,
                        t_hat,
                        t_star: tstar,
                    });
                }
                t1 = 20.0 * t_hat;
            }
            Err(Error::InvalidArgument("saturation time keeps growing with the horizon".into()))
        })
    }

    /// Coarse run on the fine time grid; `t̂` is inherited.
    fn base_coarse(&self) -> Result<Arc<Base>> {
        shared(&self.base_coarse, || {
            let fine = self.base_fine()?;
            let level = self.coarse()?;
            let f = self.f()?;
            let traj = solve(&level.op, &f, &level.u0, &fine.grid, &self.sc.solver, 0.0)?;
            let envelope = ghp_envelope(&traj, &level.eigen.phi1, self.sc.m)?;
            Ok(Base {
                grid: fine.grid.clone(),
                traj,
                envelope,
                t_hat: fine.t_hat,
                t_star: fine.t_star,
            })
        })
    }
}

/// Steps `dt0, dt0 r, dt0 r², ...` from 0 with ratio 1.15, ending at the
/// first time at or beyond `t1` so that no step is shortened.
fn geometric_grid(first_step: f64, t1: f64) -> Result<TimeGrid<f64>> {
    let mut times = vec![0.0];
    let (mut t, mut dt) = (0.0, first_step);
    while t < t1 * (1.0 - 1e-12) {
        t += dt;
        times.push(t);
        dt *= DEFAULT_RATIO;
    }
    TimeGrid::from_times(times)
}

/// Geometric grid from `t1·1e-6` with a stop at the S1 probe time.
fn base_grid(t1: f64) -> Result<TimeGrid<f64>> {
    geometric_grid(t1 * 1e-6, t1)?.with_stops(&[S1_PROBE_TIME])
}

fn relative_dual(green: &GreenMatrix<f64>, traj: &Trajectory<f64>, f: &Nonlinearity) -> Result<f64> {
    Ok(dual_residual(green, traj, f)?.relative)
}

/// `inf u / (t Φ1^{1/m} ‖u0‖^m)` over snapshots with `0 < t <= t_max`.
fn small_time_kappa(traj: &Trajectory<f64>, phi1: &Field<f64>, m: f64, norm: f64, t_max: f64) -> f64 {
    let mut kappa = f64::INFINITY;
    for (t, snap) in traj.times().iter().zip(traj.snapshots()) {
        if *t <= 0.0 || *t > t_max {
            continue;
        }
        for (&u, &p) in snap.values().iter().zip(phi1.values()) {
            kappa = kappa.min(u / (t * p.powf(1.0 / m) * norm.powf(m)));
        }
    }
    kappa
}

fn min_positive_time(traj: &Trajectory<f64>) -> f64 {
    traj.times()
        .iter()
        .zip(traj.snapshots())
        .filter(|(t, _)| **t > 0.0)
        .map(|(_, s)| s.min())
        .fold(f64::INFINITY, f64::min)
}

fn envelope_at(env: &[EnvelopePoint], t: f64) -> Option<&EnvelopePoint> {
    env.iter().find(|e| (e.t - t).abs() <= 1e-12 * t.abs())
}

fn s1(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let fine = ctx.fine()?;
    let coarse = ctx.coarse()?;
    let base = ctx.base_fine()?;
    let base_c = ctx.base_coarse()?;
    let f = ctx.f()?;
    let m = sc.m;
    out.measure("t_hat", base.t_hat);
    out.measure("t_star_configured", base.t_star);

    let min_all = min_positive_time(&base.traj);
    out.measure("min_u_positive_times", min_all);
    out.check("positive_at_all_times", min_all > 0.0);
    if let Some(u) = base.traj.at(S1_PROBE_TIME) {
        out.measure("min_u_at_probe_time", u.min());
        out.check("positive_at_probe_time", u.min() > 0.0);
    }

    let norm = weighted_norm(&fine.u0, &fine.eigen.phi1, 1.0)?;
    let norm_c = weighted_norm(&coarse.u0, &coarse.eigen.phi1, 1.0)?;
    let window = base.t_hat / 10.0;
    let kappa = small_time_kappa(&base.traj, &fine.eigen.phi1, m, norm, window);
    let kappa_c = small_time_kappa(&base_c.traj, &coarse.eigen.phi1, m, norm_c, window);
    out.measure("kappa", kappa);
    out.measure("kappa_coarse", kappa_c);
    out.measure("kappa_resolution_change", rel_change(kappa, kappa_c));
    out.check("kappa_positive", kappa > 0.0 && kappa.is_finite());
    out.check("kappa_resolution_stable", rel_change(kappa, kappa_c) <= RESOLUTION_TOL);

    // The same datum doubled: its saturation time shrinks by 2^{m-1}.
    let scale = 2.0;
    let u0 = sc.datum(&fine.domain, 2.0 * sc.height);
    let traj = solve(&fine.op, &f, &u0, &base.grid, &sc.solver, 0.0)?;
    let env = ghp_envelope(&traj, &fine.eigen.phi1, m)?;
    let t_hat2 = saturation_time(&env).unwrap_or(base.t_hat);
    let kappa2 = small_time_kappa(&traj, &fine.eigen.phi1, m, scale * norm, t_hat2 / 10.0);
    out.measure("kappa_rescaled_datum", kappa2);
    out.measure("kappa_rescaling_change", rel_change(kappa2, kappa));
    out.check("kappa_rescaling_stable", rel_change(kappa2, kappa) <= RESOLUTION_TOL);

    out.dual("base", relative_dual(fine.green(), &base.traj, &f)?);
    out.dual("coarse", relative_dual(coarse.green(), &base_c.traj, &f)?);
    Ok(out)
}

fn s2(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let base = ctx.base_fine()?;
    let base_c = ctx.base_coarse()?;
    let t_hat = base.t_hat;
    out.measure("t_hat", t_hat);
    let (mut cmin, mut cmax, mut ratio) = (f64::INFINITY, 0.0f64, 0.0f64);
    let (mut drift_min, mut drift_max) = (0.0f64, 0.0f64);
    let mut matched = 0usize;
    for e in base.envelope.iter().filter(|e| e.t >= t_hat && e.t <= 10.0 * t_hat * (1.0 + 1e-12)) {
        cmin = cmin.min(e.c_min);
        cmax = cmax.max(e.c_max);
        ratio = ratio.max(e.ratio());
        if let Some(c) = envelope_at(&base_c.envelope, e.t) {
            matched += 1;
            drift_min = drift_min.max(rel_change(e.c_min, c.c_min));
            drift_max = drift_max.max(rel_change(e.c_max, c.c_max));
        }
    }
    out.measure("c_min", cmin);
    out.measure("c_max", cmax);
    out.measure("ratio_max", ratio);
    out.measure("c_min_resolution_change", drift_min);
    out.measure("c_max_resolution_change", drift_max);
    out.check("c_min_positive", cmin > 0.0);
    out.check("ratio_below_50", ratio < 50.0);
    out.check("resolution_stable", matched > 0 && drift_min <= RESOLUTION_TOL && drift_max <= RESOLUTION_TOL);

    let e = sc.m / (sc.m - 1.0);
    let floor = |env: &[EnvelopePoint]| {
        env.iter()
            .filter(|p| p.t <= t_hat)
            .map(|p| p.c_min * (t_hat / p.t).powf(e))
            .fold(f64::INFINITY, f64::min)
    };
    let small = floor(&base.envelope);
    let small_c = floor(&base_c.envelope);
    out.measure("small_time_floor", small);
    out.measure("small_time_floor_coarse", small_c);
    out.check("small_time_floor_positive", small > 0.0 && small.is_finite());
    out.check("small_time_floor_stable", rel_change(small, small_c) <= RESOLUTION_TOL);
    out.tables.push(Table {
        name: "envelope".into(),
        columns: vec!["t".into(), "c_min".into(), "c_max".into()],
        rows: base.envelope.iter().map(|p| vec![p.t, p.c_min, p.c_max]).collect(),
    });
    Ok(out)
}

/// `max_t q(t) (1 ∧ t/t̂)^{m/(m-1)}` and the spread of `q` over `t >= t̂`.
fn harnack_profile(traj: &Trajectory<f64>, sc: &Scenario, t_hat: f64) -> Result<(f64, f64)> {
    let domain = traj.snapshots()[0].domain().clone();
    let center = domain.center();
    let radius = 0.2 * domain.diameter();
    let e = sc.m / (sc.m - 1.0);
    let mut h = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (t, u) in traj.times().iter().zip(traj.snapshots()) {
        if *t <= 0.0 {
            continue;
        }
        let q = harnack_quotient(u, &center, radius)?;
        h = h.max(q * (t / t_hat).min(1.0).powf(e));
        if *t >= t_hat {
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    Ok((h, hi / lo))
}

fn s3(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let base = ctx.base_fine()?;
    let base_c = ctx.base_coarse()?;
    let (h, spread) = harnack_profile(&base.traj, sc, base.t_hat)?;
    let (h_c, _) = harnack_profile(&base_c.traj, sc, base.t_hat)?;
    out.measure("harnack_constant", h);
    out.measure("harnack_constant_coarse", h_c);
    out.measure("late_quotient_spread", spread);
    out.check("harnack_constant_finite", h.is_finite() && h > 0.0);
    out.check("harnack_constant_stable", rel_change(h, h_c) <= RESOLUTION_TOL);
    out.check("late_quotient_stable", spread <= 1.2);

    let domain = base.traj.snapshots()[0].domain().clone();
    let center = domain.center();
    let radius = 0.2 * domain.diameter();
    let k0 = base.traj.nearest(base.t_hat);
    let u = base.traj.snapshots()[k0].clone();
    for (label, shift) in [("0", 0.0), ("half", 0.5), ("one", 1.0)] {
        let k = base.traj.nearest(base.t_hat * (1.0 + shift));
        let later = &base.traj.snapshots()[k];
        let sup = ball_extreme(&u, &center, radius, f64::max, 0.0);
        let inf = ball_extreme(later, &center, radius, f64::min, f64::INFINITY);
        out.measure(&format!("backward_quotient_shift_{label}"), sup / inf);
    }
    Ok(out)
}

fn ball_extreme(u: &Field<f64>, center: &Point<f64>, radius: f64, pick: fn(f64, f64) -> f64, init: f64) -> f64 {
    let d = u.domain();
    d.nodes()
        .iter()
        .zip(u.values())
        .filter(|(p, _)| d.distance(p, center) <= radius)
        .fold(init, |a, (_, &v)| pick(a, v))
}

fn s4(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let fine = ctx.fine()?;
    let coarse = ctx.coarse()?;
    let base = ctx.base_fine()?;
    let base_c = ctx.base_coarse()?;
    let target = sc.s / sc.m;
    let k = base.traj.nearest(base.t_hat);
    let u = &base.traj.snapshots()[k];
    let range = ShellRange::standard(fine.domain.as_ref());
    let fit = fit_boundary_exponent(u, &fine.dist, range)?;
    let u_c = &base_c.traj.snapshots()[base_c.traj.nearest(base.t_hat)];
    let fit_c = fit_boundary_exponent(u_c, &coarse.dist, ShellRange::standard(coarse.domain.as_ref()))?;
    out.measure("target_exponent", target);
    out.measure("exponent", fit.slope);
    out.measure("exponent_coarse", fit_c.slope);
    out.measure("r_squared", fit.r_squared);
    out.check("exponent_within_tolerance", (fit.slope - target).abs() <= FIT_TOL);
    out.check("r_squared_at_least_0.98", fit.r_squared >= 0.98);
    out.check("exponent_resolution_stable", rel_change(fit.slope, fit_c.slope) <= RESOLUTION_TOL);

    let phi_fit = fit_boundary_exponent(&fine.eigen.phi1, &fine.dist, range)?;
    out.measure("phi1_exponent", phi_fit.slope);

    let layer: Vec<usize> = (0..fine.domain.len())
        .filter(|&i| fine.dist.values()[i] <= range.d_max)
        .collect();
    let probe = sharpness_probe(u, target + 0.1, 4.0 * fine.h(), Some(&layer))?;
    out.measure("sharpness_growth", probe.growth);
    out.measure("seminorm_at_floor", probe.coarse);
    out.measure("seminorm_at_half_floor", probe.fine);
    out.check("sharpness_growth_at_least_10", probe.growth >= 10.0);

    let rows = fine
        .dist
        .values()
        .iter()
        .zip(u.values())
        .filter(|(d, _)| **d >= range.d_min && **d <= range.d_max)
        .map(|(&d, &v)| vec![d, v])
        .collect();
    out.tables.push(Table {
        name: "exponent".into(),
        columns: vec!["d".into(), "u".into()],
        rows,
    });
    Ok(out)
}

fn s5(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let fine = ctx.fine()?;
    let base = ctx.base_fine()?;
    let u = &base.traj.snapshots()[base.traj.nearest(base.t_hat)];
    for k in 1..=3 {
        let bound = sc.s / sc.m - k as f64 - DERIVATIVE_FIT_TOL;
        let g = derivative_growth(u, &fine.dist, k)?;
        match g.fit {
            Some(fit) => {
                out.measure(&format!("slope_k{k}"), fit.slope);
                out.measure(&format!("r_squared_k{k}"), fit.r_squared);
                out.check(&format!("slope_k{k}_above_bound"), fit.slope >= bound);
            }
            None => {
                out.measure(&format!("degenerate_k{k}"), 1.0);
            }
        }
        out.measure(&format!("bound_k{k}"), bound);
    }
    Ok(out)
}

/// Hölder exponent of `u_t` at one node: slope of `log |D_{k0+L} - D_{k0}|`
/// against the log of the time lag, with `D_k` the backward difference
/// quotients starting at the first snapshot after `t_min`.
fn time_derivative_exponent(traj: &Trajectory<f64>, node: usize, t_min: f64) -> Option<f64> {
    let times = traj.times();
    let k0 = times.iter().position(|&t| t >= t_min)?;
    let quotient = |k: usize| {
        let (a, b) = (&traj.snapshots()[k], &traj.snapshots()[k + 1]);
        let tau = 0.5 * (times[k] + times[k + 1]);
        (tau, (b.values()[node] - a.values()[node]) / (times[k + 1] - times[k]))
    };
    if k0 + 8 >= times.len() {
        return None;
    }
    let (tau0, d0) = quotient(k0);
    let pts: Vec<(f64, f64)> = (1..=6)
        .map(|lag| {
            let (tau, d) = quotient(k0 + lag);
            ((tau - tau0).ln(), (d - d0).abs().ln())
        })
        .filter(|p| p.1.is_finite())
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn boundary_time_seminorm(traj: &Trajectory<f64>, dist: &Field<f64>, m: f64, t_min: f64, t_max: f64) -> Result<f64> {
    let nodes: Vec<usize> = dist
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= 0.1)
        .map(|(i, _)| i)
        .collect();
    holder_seminorm(
        traj,
        HolderAxis::Time,
        1.0 / (2.0 * m),
        &HolderWindow {
            t_min,
            t_max,
            floor: 0.0,
            nodes: Some(nodes),
        },
    )
}

fn s6(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let fine = ctx.fine()?;
    let coarse = ctx.coarse()?;
    let base = ctx.base_fine()?;
    let base_c = ctx.base_coarse()?;
    let t1 = base.grid.t1();
    let t_min = t1 / 10.0;
    let near = boundary_time_seminorm(&base.traj, &fine.dist, sc.m, t_min, t1)?;
    let near_c = boundary_time_seminorm(&base_c.traj, &coarse.dist, sc.m, t_min, t1)?;
    out.measure("boundary_time_seminorm", near);
    out.measure("boundary_time_seminorm_coarse", near_c);
    out.check("boundary_time_seminorm_finite", near.is_finite());
    out.check("boundary_time_seminorm_stable", rel_change(near, near_c) <= 0.3);

    let alpha = (1.0 / (2.0 * sc.m)).min(1.0 - sc.s);
    let center = fine.domain.center();
    let node = (0..fine.domain.len())
        .min_by(|&a, &b| {
            let da = fine.domain.distance(&fine.domain.nodes()[a], &center);
            let db = fine.domain.distance(&fine.domain.nodes()[b], &center);
            da.total_cmp(&db)
        })
        .unwrap_or(0);
    let exponent = time_derivative_exponent(&base.traj, node, t_min).unwrap_or(f64::NAN);
    out.measure("alpha", alpha);
    out.measure("interior_ut_exponent", exponent);
    out.check("interior_ut_exponent_at_least_alpha", exponent >= alpha - 0.1);
    Ok(out)
}

/// `min_{0 < t <= t̂} ∫ u(t)^p Φ1 / (∫ u0 Φ1)^p`.
fn weighted_floor(traj: &Trajectory<f64>, phi1: &Field<f64>, p: f64, t_hat: f64) -> Result<f64> {
    let u0 = &traj.snapshots()[0];
    let norm0 = weighted_norm(u0, phi1, 1.0)?;
    let mut c = f64::INFINITY;
    for (t, u) in traj.times().iter().zip(traj.snapshots()) {
        if *t <= 0.0 || *t > t_hat {
            continue;
        }
        c = c.min(weighted_norm(u, phi1, p)?.powf(p) / norm0.powf(p));
    }
    Ok(c)
}

fn s7(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let fine = ctx.fine()?;
    let coarse = ctx.coarse()?;
    let base = ctx.base_fine()?;
    let base_c = ctx.base_coarse()?;
    for (label, p) in [("p1", 1.0), ("pm", sc.m)] {
        let c = weighted_floor(&base.traj, &fine.eigen.phi1, p, base.t_hat)?;
        let c_c = weighted_floor(&base_c.traj, &coarse.eigen.phi1, p, base.t_hat)?;
        out.measure(&format!("c2_{label}"), c);
        out.measure(&format!("c2_{label}_coarse"), c_c);
        out.check(&format!("c2_{label}_positive"), c > 0.0 && c.is_finite());
        out.check(&format!("c2_{label}_stable"), rel_change(c, c_c) <= RESOLUTION_TOL);
    }
    Ok(out)
}

/// Componentwise ordering of a ladder of runs and the weighted L1 gap bound.
fn ladder_checks(
    out: &mut Outcome,
    level: &Level,
    f: &Nonlinearity,
    grid: &TimeGrid<f64>,
    solver: &SolverConfig,
    deltas: &[f64],
) -> Result<()> {
    let exact = solve(&level.op, f, &level.u0, grid, solver, 0.0)?;
    let runs: Vec<Trajectory<f64>> = deltas
        .par_iter()
        .map(|&d| {
            let v0 = level.u0.clone();
            solve(&level.op, f, &v0, grid, solver, d)
        })
        .collect::<Result<_>>()?;
    let phi = &level.eigen.phi1;
    let phi_l1 = integrate(phi, None)?;
    let scale = level.u0.max_abs().max(1.0);
    let mut order_gap = f64::INFINITY;
    let mut excess = f64::NEG_INFINITY;
    let mut min_lift = f64::INFINITY;
    let mut chain: Vec<&Trajectory<f64>> = runs.iter().collect();
    chain.push(&exact);
    for &t in grid.times() {
        let snaps: Vec<&Field<f64>> = chain
            .iter()
            .map(|tr| tr.at(t).expect("nominal times are kept"))
            .collect();
        for w in snaps.windows(2) {
            for (a, b) in w[0].values().iter().zip(w[1].values()) {
                order_gap = order_gap.min(a - b);
            }
        }
        order_gap = order_gap.min(snaps.last().expect("exact run").min());
        for (run, &d) in snaps.iter().zip(deltas) {
            min_lift = min_lift.min(run.min() - d);
            let gap = run.zip_map(snaps[snaps.len() - 1], |a, b| a - b)?;
            let l1 = weighted_norm(&gap.map(|x| x.max(0.0)), phi, 1.0)?;
            excess = excess.max(l1 - d * phi_l1);
        }
    }
    out.measure("order_gap_min", order_gap);
    out.measure("l1_excess_max", excess);
    out.measure("lift_margin_min", min_lift);
    out.measure("phi1_l1", phi_l1);
    out.check("ladder_ordered", order_gap >= -ALGEBRAIC_SLACK * scale);
    out.check("l1_gap_bounded", excess <= LADDER_TOL);
    out.check("lift_positive", min_lift >= -ALGEBRAIC_SLACK * scale);
    let green = level.green();
    out.dual("exact", relative_dual(green, &exact, f)?);
    for (run, d) in runs.iter().zip(deltas) {
        out.dual(&format!("delta_{d:e}"), relative_dual(green, run, f)?);
    }
    Ok(())
}

fn s8(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let fine = ctx.fine()?;
    let base = ctx.base_fine()?;
    ladder_checks(&mut out, &fine, &ctx.f()?, &base.grid, &ctx.sc.solver, &LADDER)?;
    Ok(out)
}

/// Pairs `(φ, η)` with `(η')² = φ'`.
#[derive(Clone, Copy, Debug)]
pub enum SvFamily {
    Identity,
    /// `φ = tanh(r/ε)`, `η = √ε gd(r/ε)`.
    Tanh { eps: f64 },
    /// `φ = atan(r/ε)`, `η = √ε asinh(r/ε)`.
    Atan { eps: f64 },
    /// `φ = r^{2k+1}`, `η = √(2k+1) |r|^k r / (k+1)`.
    OddPower { k: u32 },
}

impl SvFamily {
    pub fn phi(&self, r: f64) -> f64 {
        match *self {
            SvFamily::Identity => r,
            SvFamily::Tanh { eps } => (r / eps).tanh(),
            SvFamily::Atan { eps } => (r / eps).atan(),
            SvFamily::OddPower { k } => r.powi(2 * k as i32 + 1),
        }
    }

    pub fn eta(&self, r: f64) -> f64 {
        match *self {
            SvFamily::Identity => r,
            SvFamily::Tanh { eps } => eps.sqrt() * 2.0 * (0.5 * r / eps).tanh().atan(),
            SvFamily::Atan { eps } => eps.sqrt() * (r / eps).asinh(),
            SvFamily::OddPower { k } => {
                let k = k as f64;
                (2.0 * k + 1.0).sqrt() * r.abs().powf(k) * r / (k + 1.0)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SvFamily::Identity => "identity",
            SvFamily::Tanh { .. } => "tanh",
            SvFamily::Atan { .. } => "atan",
            SvFamily::OddPower { .. } => "odd_power",
        }
    }
}

/// `⟨φ(f), Af⟩ - ⟨η(f), Aη(f)⟩` and the roundoff scale of the two pairings.
pub fn stroock_varopoulos_gap(op: &NonlocalOperator<f64>, family: SvFamily, f: &[f64]) -> (f64, f64) {
    let vol = op.domain().cell_volume();
    let a = op.matrix();
    let phi: Vec<f64> = f.iter().map(|&x| family.phi(x)).collect();
    let eta: Vec<f64> = f.iter().map(|&x| family.eta(x)).collect();
    let af = a.matvec(f);
    let aeta = a.matvec(&eta);
    let lhs: f64 = phi.iter().zip(&af).map(|(x, y)| x * y).sum::<f64>() * vol;
    let rhs: f64 = eta.iter().zip(&aeta).map(|(x, y)| x * y).sum::<f64>() * vol;
    let mut scale = 0.0;
    for i in 0..f.len() {
        let row = a.row(i);
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for j in 0..f.len() {
            s1 += row[j].abs() * f[j].abs();
            s2 += row[j].abs() * eta[j].abs();
        }
        scale += phi[i].abs() * s1 + eta[i].abs() * s2;
    }
    (lhs - rhs, scale * vol)
}

fn s9(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let fine = ctx.fine()?;
    let families = [
        SvFamily::Tanh { eps: 0.1 },
        SvFamily::Atan { eps: 0.1 },
        SvFamily::OddPower { k: 1 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let n = fine.domain.len();
    let fields: Vec<Vec<f64>> = (0..SV_FIELDS)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    for family in families {
        let worst = fields
            .par_iter()
            .map(|f| {
                let (gap, scale) = stroock_varopoulos_gap(&fine.op, family, f);
                gap / scale
            })
            .reduce(|| f64::INFINITY, f64::min);
        out.measure(&format!("min_relative_gap_{}", family.name()), worst);
        out.check(&format!("inequality_{}", family.name()), worst >= -ALGEBRAIC_SLACK);
    }
    let (gap, scale) = stroock_varopoulos_gap(&fine.op, SvFamily::Identity, &fields[0]);
    out.measure("identity_relative_gap", gap.abs() / scale);
    out.check("identity_equality", gap.abs() <= ALGEBRAIC_SLACK * scale);
    out.measure("fields", SV_FIELDS as f64);
    Ok(out)
}

/// Random ordered pairs and an independent third datum on a small grid.
fn comparison_checks(out: &mut Outcome, sc: &Scenario, f: &Nonlinearity, pairs: usize) -> Result<()> {
    let n = (sc.n / 4).max(crate::grid::MIN_CELLS);
    let domain = sc.domain(n)?;
    let op = assemble(&domain, KernelSpec::fractional(sc.s))?;
    let chol = op.cholesky()?;
    let green = green_matrix_with(&op, &chol);
    let grid = TimeGrid::new(0.0, 1.0, TimeLayout::Geometric { steps: 12, ratio: 1.5 })?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed.wrapping_add(10));
    let data: Vec<[Vec<f64>; 3]> = (0..pairs)
        .map(|_| {
            let u: Vec<f64> = (0..domain.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let w: Vec<f64> = u.iter().map(|&x| x + rng.gen_range(0.0..0.5)).collect();
            let z: Vec<f64> = (0..domain.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            [u, w, z]
        })
        .collect();
    let results: Vec<(f64, f64, f64, f64)> = data
        .par_iter()
        .map(|[u, w, z]| -> Result<(f64, f64, f64, f64)> {
            let run = |v: &Vec<f64>| solve(&op, f, &Field::new(&domain, v.clone())?, &grid, &sc.solver, 0.0);
            let (tu, tw, tz) = (run(u)?, run(w)?, run(z)?);
            let mut order = f64::INFINITY;
            let mut l1_growth = f64::NEG_INFINITY;
            let mut hstar_growth = f64::NEG_INFINITY;
            let mut prev: Option<(f64, f64)> = None;
            for &t in grid.times() {
                let (a, b, c) = (tu.at(t).expect("kept"), tw.at(t).expect("kept"), tz.at(t).expect("kept"));
                for (x, y) in a.values().iter().zip(b.values()) {
                    order = order.min(y - x);
                }
                let diff = a.zip_map(c, |x, y| x - y)?;
                let l1 = integrate(&diff.map(|x| x.max(0.0)), None)?;
                let hs = hstar_norm(&green, &diff)?;
                if let Some((l1p, hsp)) = prev {
                    l1_growth = l1_growth.max(l1 - l1p);
                    hstar_growth = hstar_growth.max(hs - hsp);
                }
                prev = Some((l1, hs));
            }
            let dual = [&tu, &tw, &tz]
                .iter()
                .map(|t| relative_dual(&green, t, f))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((order, l1_growth, hstar_growth, dual))
        })
        .collect::<Result<_>>()?;
    let order = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let l1 = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let hs = results.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let dual = results.iter().map(|r| r.3).fold(0.0, f64::max);
    out.measure("pairs", pairs as f64);
    out.measure("order_gap_min", order);
    out.measure("positive_part_growth_max", l1);
    out.measure("hstar_growth_max", hs);
    out.check("ordering_preserved", order >= -ALGEBRAIC_SLACK);
    out.check("positive_part_nonincreasing", l1 <= SCHEME_SLACK);
    out.check("hstar_contraction", hs <= SCHEME_SLACK);
    out.dual("pairs", dual);
    Ok(())
}

fn s10(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    comparison_checks(&mut out, ctx.sc, &ctx.f()?, COMPARISON_PAIRS)?;
    Ok(out)
}

/// Large-datum runs over `[1e-5, 1e-1]`.
fn s11_grid() -> Result<TimeGrid<f64>> {
    geometric_grid(S11_WINDOW[1] * 1e-6, S11_WINDOW[1])?.with_stops(&[S11_WINDOW[0], S11_WINDOW[1]])
}

fn sup_weighted(traj: &Trajectory<f64>, m: f64) -> f64 {
    traj.times()
        .iter()
        .zip(traj.snapshots())
        .filter(|(t, _)| **t >= S11_WINDOW[0] * (1.0 - 1e-12) && **t <= S11_WINDOW[1])
        .map(|(t, u)| u.max_abs() * t.powf(1.0 / (m - 1.0)))
        .fold(0.0, f64::max)
}

/// Fit of `y ≈ K x + c` with `x = t^{-1/(m-1)}`, least squares in the
/// relative error; returns `(K, c, max relative residual)`.
fn fit_upper_form(traj: &Trajectory<f64>, m: f64) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = traj
        .times()
        .iter()
        .zip(traj.snapshots())
        .filter(|(t, _)| **t >= S11_WINDOW[0] * (1.0 - 1e-12) && **t <= S11_WINDOW[1])
        .map(|(t, u)| (t.powf(-1.0 / (m - 1.0)), u.max_abs()))
        .collect();
    let w: Vec<f64> = pts.iter().map(|p| p.1.powi(-2)).collect();
    let sw: f64 = w.iter().sum();
    let mx = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = pts.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - mx).powi(2)).sum();
    let k = sxy / sxx;
    let c = my - k * mx;
    let res = pts.iter().map(|p| ((k * p.0 + c) - p.1).abs() / p.1).fold(0.0, f64::max);
    (k, c, res)
}

fn s11(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let f = ctx.f()?;
    let grid = s11_grid()?;
    let fine = ctx.fine()?;
    let coarse = ctx.coarse()?;
    let levels = [fine.clone(), coarse.clone()];
    let runs: Vec<Trajectory<f64>> = levels
        .par_iter()
        .map(|l| solve(&l.op, &f, &sc.datum(&l.domain, S11_HEIGHT), &grid, &sc.solver, 0.0))
        .collect::<Result<_>>()?;
    let k_f = sup_weighted(&runs[0], sc.m);
    let k_c = sup_weighted(&runs[1], sc.m);
    out.measure("datum_height", S11_HEIGHT);
    out.measure("k1", k_f);
    out.measure("k1_coarse", k_c);
    out.check("k1_finite", k_f.is_finite() && k_f > 0.0);
    out.check("k1_resolution_stable", rel_change(k_f, k_c) <= RESOLUTION_TOL);
    out.dual("fine", relative_dual(fine.green(), &runs[0], &f)?);

    let deltas = [1e-2, 1e-3];
    let lifted: Vec<Trajectory<f64>> = deltas
        .par_iter()
        .map(|&d| solve(&fine.op, &f, &sc.datum(&fine.domain, S11_HEIGHT), &grid, &sc.solver, d))
        .collect::<Result<_>>()?;
    let mut ks = Vec::new();
    for (traj, d) in lifted.iter().zip(deltas) {
        let (k, c, res) = fit_upper_form(traj, sc.m);
        out.measure(&format!("fit_k1_delta_{d:e}"), k);
        out.measure(&format!("fit_offset_delta_{d:e}"), c);
        out.measure(&format!("fit_residual_delta_{d:e}"), res);
        out.check(&format!("fit_residual_below_10pct_delta_{d:e}"), res < 0.1);
        out.check(&format!("bound_holds_delta_{d:e}"), sup_weighted(traj, sc.m) <= k_f * (1.0 + RESOLUTION_TOL) + d);
        ks.push(k);
    }
    let spread = rel_change(ks[0], ks[1]);
    out.measure("fit_k1_delta_change", spread);
    out.check("fit_k1_stable_in_delta", spread <= RESOLUTION_TOL);
    Ok(out)
}

fn s12(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let f = Nonlinearity::two_power(sc.m, sc.m + 1.0)?;
    let fine = ctx.fine()?;
    let base = ctx.base_fine()?;
    let traj = solve(&fine.op, &f, &fine.u0, &base.grid, &sc.solver, 0.0)?;
    let min_all = min_positive_time(&traj);
    out.measure("min_u_positive_times", min_all);
    out.check("positive_at_all_times", min_all > 0.0);
    let cp = crandall_pierre_quantity(&f, &traj);
    out.measure("mu0", f.mu0());
    out.measure("crandall_pierre_min_increment", cp.min_increment);
    out.measure("crandall_pierre_slack", cp.slack);
    out.check("crandall_pierre_monotone", cp.pass);
    out.dual("two_power", relative_dual(fine.green(), &traj, &f)?);

    let bc = benilan_crandall(sc.m, &base.traj);
    out.measure("benilan_crandall_min_increment", bc.min_increment);
    out.measure("benilan_crandall_slack", bc.slack);
    out.check("benilan_crandall_monotone", bc.pass);

    let mut ladder = Outcome::default();
    ladder_checks(&mut ladder, &fine, &f, &base.grid, &sc.solver, &LADDER[..2])?;
    let mut cmp = Outcome::default();
    comparison_checks(&mut cmp, sc, &f, COMPARISON_PAIRS / 4)?;
    for (prefix, sub) in [("ladder", ladder), ("comparison", cmp)] {
        for (k, v) in sub.checks {
            out.check(&format!("{prefix}_{k}"), v);
        }
        for (k, v) in sub.measurements {
            if k == "dual_residual" {
                out.dual(prefix, v);
            } else {
                out.measure(&format!("{prefix}_{k}"), v);
            }
        }
    }
    Ok(out)
}

/// The fractional kernel times `1 + ½ sin(5x) sin(5y)`, with `x` and `y` the
/// first coordinates clamped to `[lo, hi]`. Bounds are `c/2` and `3c/2`.
pub fn rough_kernel(dim: usize, s: f64, lo: f64, hi: f64) -> KernelSpec<f64> {
    let c = normalization(dim, s);
    KernelSpec::rough(s, 0.5 * c, 1.5 * c, move |x: &Point<f64>, y: &Point<f64>| {
        let r2: f64 = (0..dim).map(|a| (x[a] - y[a]).powi(2)).sum();
        let (a, b) = (x[0].clamp(lo, hi), y[0].clamp(lo, hi));
        let modulation = 1.0 + 0.5 * (5.0 * a).sin() * (5.0 * b).sin();
        c * modulation * r2.powf(-(dim as f64 + 2.0 * s) / 2.0)
    })
}

fn s13(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let kernel = rough_kernel(sc.dim, sc.s, sc.bounds[0][0], sc.bounds[0][1]);
    let fine = ctx.fine()?;
    let bounds = check_rough_kernel_bounds(&kernel, fine.domain.as_ref(), 2000, sc.seed)?;
    out.measure("kernel_ratio_min", bounds.min_ratio);
    out.measure("kernel_ratio_max", bounds.max_ratio);
    out.check("kernel_bounds", bounds.pass);
    let level = Level::new(sc, sc.n, kernel)?;
    out.measure("kernel_infimum", level.op.kernel_infimum());
    let base = ctx.base_fine()?;
    let f = ctx.f()?;
    let grid = base_grid(base.t_hat)?;
    let traj = solve(&level.op, &f, &level.u0, &grid, &sc.solver, 0.0)?;
    let min_all = min_positive_time(&traj);
    let norm = weighted_norm(&level.u0, &level.eigen.phi1, 1.0)?;
    let kappa = small_time_kappa(&traj, &level.eigen.phi1, sc.m, norm, base.t_hat / 10.0);
    out.measure("min_u_positive_times", min_all);
    out.measure("kappa", kappa);
    out.check("positive_at_all_times", min_all > 0.0);
    out.check("kappa_positive", kappa > 0.0 && kappa.is_finite());
    out.dual("rough", relative_dual(level.green(), &traj, &f)?);
    Ok(out)
}

/// Largest value over nodes farther than `FAR_DISTANCE` from the support,
/// relative to the sup norm, at the end of a local-operator run to `t`.
fn far_field(sc: &Scenario, n: usize, t: f64) -> Result<(f64, f64)> {
    let domain = sc.domain(n)?;
    let op = assemble(&domain, KernelSpec::Local)?;
    let f = sc.nonlinearity()?;
    let grid = geometric_grid(t * 1e-6, t)?.with_stops(&[t])?;
    let traj = solve(&op, &f, &sc.datum(&domain, sc.height), &grid, &sc.solver, 0.0)?;
    let u = traj.at(t).expect("probe time is a stop");
    let far = domain
        .nodes()
        .iter()
        .zip(u.values())
        .filter(|(p, _)| sc.distance_to_support(p) > FAR_DISTANCE)
        .map(|(_, &v)| v.abs())
        .fold(0.0, f64::max);
    let chol = op.cholesky()?;
    let dual = relative_dual(&green_matrix_with(&op, &chol), &traj, &f)?;
    Ok((far / u.max_abs(), dual))
}

fn s14(ctx: &Context) -> Result<Outcome> {
    let sc = ctx.sc;
    let mut out = Outcome::default();
    let t = S1_PROBE_TIME;
    let (coarse, refined) = rayon::join(|| far_field(sc, sc.n, t), || far_field(sc, 2 * sc.n, t));
    let ((far, dual), (far2, dual2)) = (coarse?, refined?);
    out.dual("local", dual);
    out.dual("local_refined", dual2);
    out.measure("probe_time", t);
    out.measure("far_field_relative", far);
    out.measure("far_field_relative_refined", far2);
    out.check("far_field_vanishes", far < 1e-12);
    out.check("far_field_vanishes_refined", far2 < 1e-12);
    if sc.subcritical() {
        let base = ctx.base_fine()?;
        if let Some(u) = base.traj.at(t) {
            out.measure("fractional_min_u_at_probe_time", u.min());
            out.check("fractional_run_positive", u.min() > 0.0);
        }
    }
    Ok(out)
}

fn evaluate(ctx: &Context, id: SuiteId) -> Result<Outcome> {
    match id {
        SuiteId::S1 => s1(ctx),
        SuiteId::S2 => s2(ctx),
        SuiteId::S3 => s3(ctx),
        SuiteId::S4 => s4(ctx),
        SuiteId::S5 => s5(ctx),
        SuiteId::S6 => s6(ctx),
        SuiteId::S7 => s7(ctx),
        SuiteId::S8 => s8(ctx),
        SuiteId::S9 => s9(ctx),
        SuiteId::S10 => s10(ctx),
        SuiteId::S11 => s11(ctx),
        SuiteId::S12 => s12(ctx),
        SuiteId::S13 => s13(ctx),
        SuiteId::S14 => s14(ctx),
    }
}

fn run_in(ctx: &Context, id: SuiteId, label: Option<&str>) -> Result<SuiteResult> {
    let start = Instant::now();
    let sc = ctx.sc;
    let suite_id = match label {
        Some(l) => format!("{l}/{id}"),
        None => id.to_string(),
    };
    let mut result = SuiteResult {
        suite_id,
        theorem_ref: id.theorem_ref().to_string(),
        pass: false,
        checks: BTreeMap::new(),
        measurements: BTreeMap::new(),
        artifacts: Vec::new(),
        runtime_seconds: 0.0,
        refusal: None,
        error: None,
        tables: Vec::new(),
    };
    if id.needs_subcritical_order() && !sc.subcritical() {
        result.refusal = Some(format!(
            "the statement needs N > 2s, but N = {} and 2s = {}",
            sc.dim,
            2.0 * sc.s
        ));
        result.measurements.insert("dimension".into(), sc.dim as f64);
        result.measurements.insert("order".into(), 2.0 * sc.s);
        result.runtime_seconds = start.elapsed().as_secs_f64();
        return Ok(result);
    }
    let outcome = evaluate(ctx, id).map_err(|e| Error::SuiteFailed {
        suite: id.to_string(),
        source: Box::new(e),
    })?;
    result.pass = !outcome.checks.is_empty() && outcome.checks.values().all(|&ok| ok);
    result.checks = outcome.checks;
    result.measurements = outcome.measurements;
    result.tables = outcome.tables;
    result.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Runs one suite. Hypothesis violations give a refused, failing result;
/// solver failures are returned as errors naming the suite.
pub fn run_suite(id: SuiteId, scenario: &Scenario) -> Result<SuiteResult> {
    scenario.validate()?;
    run_in(&Context::new(scenario), id, None)
}

/// Runs the given suites on one scenario in parallel, sharing the reference
/// runs. Failed evaluations are recorded in the report.
pub fn run_suites(ids: &[SuiteId], scenario: &Scenario) -> Result<VerificationReport> {
    run_set(std::slice::from_ref(scenario), ids)
}

/// Every suite on every scenario. Suite ids carry the scenario name when
/// more than one scenario is given.
pub fn run_all(scenarios: &[Scenario]) -> Result<VerificationReport> {
    run_set(scenarios, &SuiteId::ALL)
}

fn run_set(scenarios: &[Scenario], ids: &[SuiteId]) -> Result<VerificationReport> {
    if scenarios.is_empty() {
        return Err(Error::InvalidArgument("the scenario set is empty".into()));
    }
    if ids.is_empty() {
        return Err(Error::InvalidArgument("no suites selected".into()));
    }
    for sc in scenarios {
        sc.validate()?;
    }
    let labelled = scenarios.len() > 1;
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if labelled && names.len() != scenarios.len() {
        return Err(Error::InvalidArgument("scenario names must be unique".into()));
    }
    let contexts: Vec<Context> = scenarios.iter().map(Context::new).collect();
    let jobs: Vec<(usize, SuiteId)> = (0..scenarios.len())
        .flat_map(|k| ids.iter().map(move |&id| (k, id)))
        .collect();
    let mut suites: Vec<SuiteResult> = jobs
        .par_iter()
        .map(|&(k, id)| {
            let ctx = &contexts[k];
            let label = labelled.then_some(scenarios[k].name.as_str());
            run_in(ctx, id, label).unwrap_or_else(|e| SuiteResult {
                suite_id: match label {
                    Some(l) => format!("{l}/{id}"),
                    None => id.to_string(),
                },
                theorem_ref: id.theorem_ref().to_string(),
                pass: false,
                checks: BTreeMap::new(),
                measurements: BTreeMap::from([("failed".to_string(), 1.0)]),
                artifacts: Vec::new(),
                runtime_seconds: 0.0,
                refusal: None,
                error: Some(e.to_string()),
                tables: Vec::new(),
            })
        })
        .collect();
    suites.sort_by_key(|s| suite_order(&s.suite_id));
    let config = serde_json::to_value(scenarios).expect("scenarios serialize");
    Ok(VerificationReport {
        suites,
        config_hash: hash_json(&config),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string(),
    })
}

fn suite_order(id: &str) -> (String, usize) {
    let (prefix, tail) = id.rsplit_once('/').map_or(("", id), |(a, b)| (a, b));
    let number = tail.trim_start_matches('S').parse().unwrap_or(usize::MAX);
    (prefix.to_string(), number)
}
