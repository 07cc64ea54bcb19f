//! Monotone nonlinearities `F` with `F(0) = 0`, their δ-shifts and the
//! `(F/F')'` band diagnostics.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::grid::Field;
use crate::scalar::Real;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Kind {
    Power { m: f64 },
    /// `F(u) = u^{m1} + u^{m2}`.
    TwoPower { m1: f64, m2: f64 },
    Custom { f: ScalarFn, df: ScalarFn },
    /// `F_δ(v) = F(v + δ) - F(δ)`.
    Shifted { base: Box<Nonlinearity>, delta: f64 },
}

#[derive(Clone)]
pub struct Nonlinearity {
    kind: Kind,
    mu0: f64,
    mu1: f64,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.describe())
    }
}

impl Nonlinearity {
    pub fn power(m: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::InvalidArgument(format!("power nonlinearity needs m > 1, got {m}")));
        }
        let mu = (m - 1.0) / m;
        Ok(Self {
            kind: Kind::Power { m },
            mu0: mu,
            mu1: mu,
        })
    }

    pub fn two_power(m1: f64, m2: f64) -> Result<Self> {
        if !(m1 > 1.0 && m2 > 1.0) || !m1.is_finite() || !m2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "two-power nonlinearity needs m1, m2 > 1, got {m1} and {m2}"
            )));
        }
        Ok(Self {
            kind: Kind::TwoPower { m1, m2 },
            mu0: 1.0 - 1.0 / m1.min(m2),
            mu1: 1.0 - 1.0 / m1.max(m2),
        })
    }

    /// User supplied `F`, `F'` and declared exponents `mu0 <= mu1`.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mu0: f64,
        mu1: f64,
    ) -> Result<Self> {
        if !(mu0 <= mu1) || !(0.0..1.0).contains(&mu0) || !(0.0..1.0).contains(&mu1) {
            return Err(Error::InvalidArgument(format!(
                "declared exponents must satisfy 0 <= mu0 <= mu1 < 1, got {mu0} and {mu1}"
            )));
        }
        Ok(Self {
            kind: Kind::Custom {
                f: Arc::new(f),
                df: Arc::new(df),
            },
            mu0,
            mu1,
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    /// Exponent `m` of a power nonlinearity, including shifted powers.
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.kind {
            Kind::Power { m } => Some(*m),
            Kind::Shifted { base, .. } => base.power_exponent(),
            _ => None,
        }
    }

    /// Shift `δ` of a shifted nonlinearity, zero otherwise.
    pub fn delta(&self) -> f64 {
        match &self.kind {
            Kind::Shifted { delta, .. } => *delta,
            _ => 0.0,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Power { m } => format!("power(m={m})"),
            Kind::TwoPower { m1, m2 } => format!("two_power(m1={m1}, m2={m2})"),
            Kind::Custom { .. } => format!("custom(mu0={}, mu1={})", self.mu0, self.mu1),
            Kind::Shifted { base, delta } => format!("shift({}, delta={delta})", base.describe()),
        }
    }

    pub fn delta_shift(&self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("shift must be positive, got {delta}")));
        }
        Ok(Self {
            kind: Kind::Shifted {
                base: Box::new(self.clone()),
                delta,
            },
            mu0: self.mu0,
            mu1: self.mu1,
        })
    }

    /// `F(u)` for `u >= 0`.
    pub fn eval<T: Real>(&self, u: T) -> Result<T> {
        if u < T::zero() || u.is_nan() {
            return Err(Error::NegativeValue {
                node: 0,
                value: u.to_f64_lossy(),
            });
        }
        Ok(self.value(u))
    }

    /// `F'(u)` for `u >= 0`.
    pub fn eval_deriv<T: Real>(&self, u: T) -> Result<T> {
        if u < T::zero() || u.is_nan() {
            return Err(Error::NegativeValue {
                node: 0,
                value: u.to_f64_lossy(),
            });
        }
        Ok(self.slope(u))
    }

    pub fn eval_field<T: Real>(&self, u: &Field<T>) -> Result<Field<T>> {
        let mut out = Vec::with_capacity(u.len());
        for (node, &v) in u.values().iter().enumerate() {
            if v < T::zero() || v.is_nan() {
                return Err(Error::NegativeValue {
                    node,
                    value: v.to_f64_lossy(),
                });
            }
            out.push(self.value(v));
        }
        Field::new(u.domain(), out)
    }

    pub fn eval_deriv_field<T: Real>(&self, u: &Field<T>) -> Result<Field<T>> {
        let mut out = Vec::with_capacity(u.len());
        for (node, &v) in u.values().iter().enumerate() {
            if v < T::zero() || v.is_nan() {
                return Err(Error::NegativeValue {
                    node,
                    value: v.to_f64_lossy(),
                });
            }
            out.push(self.slope(v));
        }
        Field::new(u.domain(), out)
    }

    /// Odd extension `sign(u) F(|u|)`, monotone on the whole line.
    pub(crate) fn value<T: Real>(&self, u: T) -> T {
        match &self.kind {
            Kind::Power { m } => u.signum() * u.abs().powf(T::lit(*m)),
            Kind::TwoPower { m1, m2 } => {
                let a = u.abs();
                u.signum() * (a.powf(T::lit(*m1)) + a.powf(T::lit(*m2)))
            }
            Kind::Custom { f, .. } => {
                let a = u.abs().to_f64_lossy();
                u.signum() * T::lit(f(a))
            }
            Kind::Shifted { base, delta } => {
                let d = T::lit(*delta);
                base.value(u + d) - base.value(d)
            }
        }
    }

    /// Derivative of [`Self::value`].
    pub(crate) fn slope<T: Real>(&self, u: T) -> T {
        match &self.kind {
            Kind::Power { m } => {
                let m = T::lit(*m);
                m * u.abs().powf(m - T::one())
            }
            Kind::TwoPower { m1, m2 } => {
                let a = u.abs();
                let (m1, m2) = (T::lit(*m1), T::lit(*m2));
                m1 * a.powf(m1 - T::one()) + m2 * a.powf(m2 - T::one())
            }
            Kind::Custom { df, .. } => T::lit(df(u.abs().to_f64_lossy())),
            Kind::Shifted { base, delta } => base.slope(u + T::lit(*delta)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct N1Report {
    pub min_slope: f64,
    pub max_slope: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
    pub failure: Option<String>,
}

pub const N1_TOL: f64 = 1e-6;

/// Central differences of `r ↦ F(r)/F'(r)` on `samples`, compared against the
/// band `[1 - mu1, 1 - mu0]`.
pub fn check_n1(f: &Nonlinearity, samples: &[f64]) -> N1Report {
    let lower = 1.0 - f.mu1;
    let upper = 1.0 - f.mu0;
    let mut report = N1Report {
        min_slope: f64::INFINITY,
        max_slope: f64::NEG_INFINITY,
        lower,
        upper,
        pass: true,
        failure: None,
    };
    let ratio = |r: f64| -> Option<f64> {
        let d = f.slope(r);
        let v = f.value(r);
        if d == 0.0 {
            return if v == 0.0 { Some(0.0) } else { None };
        }
        Some(v / d)
    };
    for &r in samples {
        if !(r > 0.0) {
            report.pass = false;
            report.failure = Some(format!("sample {r} is not positive"));
            return report;
        }
        let eps = 1e-5 * r;
        let (Some(a), Some(b)) = (ratio(r + eps), ratio(r - eps)) else {
            report.pass = false;
            report.failure = Some(format!("F' vanishes while F does not near r = {r}"));
            return report;
        };
        let slope = (a - b) / (2.0 * eps);
        report.min_slope = report.min_slope.min(slope);
        report.max_slope = report.max_slope.max(slope);
    }
    let admissible = f.mu0 > 0.0 && f.mu1 < 1.0;
    let inside = report.min_slope >= lower - N1_TOL && report.max_slope <= upper + N1_TOL;
    if !admissible {
        report.pass = false;
        report.failure = Some(format!(
            "declared band [{lower}, {upper}] is not inside (0, 1)"
        ));
    } else if !inside {
        report.pass = false;
        report.failure = Some(format!(
            "measured slopes [{}, {}] leave the band [{lower}, {upper}]",
            report.min_slope, report.max_slope
        ));
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Per node, the smallest increment between consecutive snapshots.
    pub per_node_min: Vec<f64>,
    pub min_increment: f64,
    pub scale: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Per-node monotonicity of `t ↦ t^{1/mu0} F(u(t, x))` along a trajectory.
pub fn crandall_pierre_quantity<T: Real>(f: &Nonlinearity, traj: &Trajectory<T>) -> MonotonicityReport {
    let exponent = 1.0 / f.mu0;
    monotone_in_time(traj, |t, u| t.powf(exponent) * f.value(u))
}

/// Benilan–Crandall quantity `t^{1/(m-1)} u(t, x)`.
pub fn benilan_crandall<T: Real>(m: f64, traj: &Trajectory<T>) -> MonotonicityReport {
    let exponent = 1.0 / (m - 1.0);
    monotone_in_time(traj, |t, u| t.powf(exponent) * u)
}

pub(crate) fn monotone_in_time<T: Real>(traj: &Trajectory<T>, q: impl Fn(f64, f64) -> f64) -> MonotonicityReport {
    let n = traj.snapshots().first().map_or(0, |f| f.len());
    let times: Vec<f64> = traj.times().iter().map(|t| t.to_f64_lossy()).collect();
    let values: Vec<Vec<f64>> = traj
        .snapshots()
        .iter()
        .zip(&times)
        .map(|(s, &t)| s.values().iter().map(|&u| q(t, u.to_f64_lossy())).collect())
        .collect();
    let scale = values
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let mut per_node_min = vec![f64::INFINITY; n];
    for w in values.windows(2) {
        for (k, slot) in per_node_min.iter_mut().enumerate() {
            *slot = slot.min(w[1][k] - w[0][k]);
        }
    }
    if values.len() < 2 {
        per_node_min.iter_mut().for_each(|v| *v = 0.0);
    }
    let min_increment = per_node_min.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-9 * scale;
    MonotonicityReport {
        pass: min_increment >= -slack || n == 0,
        per_node_min,
        min_increment,
        scale,
        slack,
    }
}
