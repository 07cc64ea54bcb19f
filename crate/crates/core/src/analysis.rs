//! Derived quantities: weighted norms, barriers, Harnack envelopes, exponent
//! fits and Hölder estimators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::grid::{Field, Point};
use crate::scalar::Real;

/// Constants that enter the estimates. Only `c_star` is configured; the
/// rest are measured by the suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub c_star: f64,
    measured: BTreeMap<String, f64>,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        Self {
            c_star: 1.0,
            measured: BTreeMap::new(),
        }
    }
}

impl TheoryConstants {
    pub fn new(c_star: f64) -> Result<Self> {
        if !(c_star > 0.0) || !c_star.is_finite() {
            return Err(Error::InvalidArgument(format!("c_star must be positive, got {c_star}")));
        }
        Ok(Self {
            c_star,
            measured: BTreeMap::new(),
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "measured constant {name} must be positive, got {value}"
            )));
        }
        self.measured.insert(name.to_owned(), value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.measured.get(name).copied()
    }

    pub fn measured(&self) -> &BTreeMap<String, f64> {
        &self.measured
    }
}

/// `(∫ u^p Φ1 dx)^{1/p}`.
pub fn weighted_norm<T: Real>(u: &Field<T>, phi1: &Field<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::InvalidArgument(format!("weighted norm needs p >= 1, got {p}")));
    }
    if !u.same_domain(phi1) {
        return Err(Error::DomainMismatch);
    }
    let integer = p == p.round();
    let mut sum = T::zero();
    for (node, (&v, &w)) in u.values().iter().zip(phi1.values()).enumerate() {
        if v < T::zero() && !integer {
            return Err(Error::NegativeValue {
                node,
                value: v.to_f64_lossy(),
            });
        }
        let power = if p == T::one() { v } else { v.powf(p) };
        sum += power * w;
    }
    let integral = sum * u.domain().cell_volume();
    Ok(if p == T::one() { integral } else { integral.powf(p.recip()) })
}

/// `t_* = c_* / ‖u0‖^{m-1}`.
pub fn t_star(norm_u0: f64, constants: &TheoryConstants, m: f64) -> Result<f64> {
    if !(norm_u0 > 0.0) {
        return Err(Error::InvalidArgument("t_star needs a nonzero datum".into()));
    }
    Ok(constants.c_star / norm_u0.powf(m - 1.0))
}

/// Lower barrier `κ0 t Φ1^{1/m}`.
pub fn barrier<T: Real>(kappa0: T, t: T, phi1: &Field<T>, m: T) -> Field<T> {
    let e = m.recip();
    phi1.map(|p| kappa0 * t * p.max(T::zero()).powf(e))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub t: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl EnvelopePoint {
    pub fn ratio(&self) -> f64 {
        self.c_max / self.c_min
    }
}

/// Per snapshot, extreme values of `u / (Φ1^{1/m} t^{-1/(m-1)})`. The snapshot
/// at `t = 0` is skipped.
pub fn ghp_envelope<T: Real>(traj: &Trajectory<T>, phi1: &Field<T>, m: f64) -> Result<Vec<EnvelopePoint>> {
    let profile: Vec<f64> = phi1.values().iter().map(|p| p.to_f64_lossy().powf(1.0 / m)).collect();
    let mut out = Vec::new();
    for (t, snap) in traj.times().iter().zip(traj.snapshots()) {
        let t = t.to_f64_lossy();
        if !(t > 0.0) {
            continue;
        }
        if !snap.domain().as_ref().eq(phi1.domain().as_ref()) {
            return Err(Error::DomainMismatch);
        }
        let factor = t.powf(1.0 / (m - 1.0));
        let mut c_min = f64::INFINITY;
        let mut c_max = f64::NEG_INFINITY;
        for (&u, &p) in snap.values().iter().zip(&profile) {
            let c = u.to_f64_lossy() * factor / p;
            c_min = c_min.min(c);
            c_max = c_max.max(c);
        }
        out.push(EnvelopePoint { t, c_min, c_max });
    }
    Ok(out)
}

/// First envelope time at which the ratio `c_max / c_min` is within 10% of
/// its terminal value.
pub fn saturation_time(envelope: &[EnvelopePoint]) -> Option<f64> {
    let last = envelope.last()?.ratio();
    envelope
        .iter()
        .find(|e| e.ratio().is_finite() && e.ratio() <= 1.1 * last)
        .map(|e| e.t)
}

/// `sup_B u / inf_B u` over the nodes of the ball `B(center, radius)`.
pub fn harnack_quotient<T: Real>(u: &Field<T>, center: &Point<T>, radius: T) -> Result<T> {
    let domain = u.domain();
    if !(radius > T::zero()) || !(domain.distance_to_boundary(center) > radius) {
        return Err(Error::InvalidArgument("ball must lie strictly inside the domain".into()));
    }
    let mut hi = T::neg_infinity();
    let mut lo = T::infinity();
    let mut count = 0;
    for (p, &v) in domain.nodes().iter().zip(u.values()) {
        if domain.distance(p, center) <= radius {
            hi = hi.max(v);
            lo = lo.min(v);
            count += 1;
        }
    }
    if count < 3 {
        return Err(Error::TooFewPoints { found: count, needed: 3 });
    }
    Ok(hi / lo)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRange {
    pub d_min: f64,
    pub d_max: f64,
}

impl ShellRange {
    /// `[2h, min(diam/4, 0.2)]`.
    pub fn standard<T: Real>(domain: &crate::grid::Domain<T>) -> Self {
        let h = domain.min_spacing().to_f64_lossy();
        let diam = domain.diameter().to_f64_lossy();
        Self {
            d_min: 2.0 * h,
            d_max: (0.25 * diam).min(0.2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub shell_range: [f64; 2],
    pub points_used: usize,
}

const MIN_FIT_POINTS: usize = 5;
const SHELL_RATIO: f64 = std::f64::consts::SQRT_2;

/// Least squares line through `(log d, log y)` after averaging both
/// coordinates over geometric shells of ratio √2 in `d`.
fn shell_fit(pairs: impl Iterator<Item = (f64, f64)>, range: ShellRange) -> Result<ExponentFit> {
    if !(range.d_min > 0.0) || !(range.d_max > range.d_min) {
        return Err(Error::InvalidArgument(format!(
            "empty shell range [{}, {}]",
            range.d_min, range.d_max
        )));
    }
    let shells = ((range.d_max / range.d_min).ln() / SHELL_RATIO.ln()).ceil().max(1.0) as usize;
    let mut acc = vec![(0.0, 0.0, 0usize); shells];
    for (d, y) in pairs {
        if !(d >= range.d_min * (1.0 - 1e-12) && d <= range.d_max * (1.0 + 1e-12)) {
            continue;
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fit needs positive values, found {y:e} at d = {d:e}"
            )));
        }
        let k = (((d / range.d_min).ln() / SHELL_RATIO.ln()).floor().max(0.0) as usize).min(shells - 1);
        acc[k].0 += d.ln();
        acc[k].1 += y.ln();
        acc[k].2 += 1;
    }
    let pts: Vec<(f64, f64)> = acc
        .into_iter()
        .filter(|a| a.2 > 0)
        .map(|(x, y, c)| (x / c as f64, y / c as f64))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            found: pts.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        shell_range: [range.d_min, range.d_max],
        points_used: pts.len(),
    })
}

/// Slope of `log u` against `log d` over the shell range.
pub fn fit_boundary_exponent<T: Real>(u: &Field<T>, d: &Field<T>, shells: ShellRange) -> Result<ExponentFit> {
    if !u.same_domain(d) {
        return Err(Error::DomainMismatch);
    }
    let h = u.domain().min_spacing().to_f64_lossy();
    if shells.d_min < 2.0 * h * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "shells must start at least two cells from the boundary ({} < {})",
            shells.d_min,
            2.0 * h
        )));
    }
    shell_fit(
        d.values()
            .iter()
            .zip(u.values())
            .map(|(&d, &u)| (d.to_f64_lossy(), u.to_f64_lossy())),
        shells,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderAxis {
    Space,
    Time,
}

/// Pairs taken into a Hölder quotient.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderWindow {
    pub t_min: f64,
    pub t_max: f64,
    /// Pairs closer than this (in space or time) are skipped.
    pub floor: f64,
    /// Restrict to these nodes; all nodes when `None`.
    pub nodes: Option<Vec<usize>>,
}

/// Largest `|u(P) - u(Q)| / |P - Q|^exponent` over sampled pairs.
pub fn holder_seminorm<T: Real>(traj: &Trajectory<T>, axis: HolderAxis, exponent: f64, window: &HolderWindow) -> Result<f64> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {exponent} is outside (0, 1]")));
    }
    let snaps: Vec<usize> = traj
        .times()
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let t = t.to_f64_lossy();
            t >= window.t_min && t <= window.t_max
        })
        .map(|(k, _)| k)
        .collect();
    let domain = traj.snapshots()[0].domain();
    let nodes: Vec<usize> = match &window.nodes {
        Some(v) => v.clone(),
        None => (0..domain.len()).collect(),
    };
    let needed = if axis == HolderAxis::Time { 2 } else { 1 };
    if snaps.len() < needed || nodes.is_empty() {
        return Err(Error::InvalidArgument("Hölder window selects no pairs".into()));
    }
    let mut best: f64 = 0.0;
    let mut pairs = 0usize;
    match axis {
        HolderAxis::Space => {
            let pts = domain.nodes();
            for &k in &snaps {
                let u = traj.snapshots()[k].values();
                for (a, &i) in nodes.iter().enumerate() {
                    for &j in &nodes[a + 1..] {
                        let r = domain.distance(&pts[i], &pts[j]).to_f64_lossy();
                        if r < window.floor {
                            continue;
                        }
                        pairs += 1;
                        let du = (u[i] - u[j]).abs().to_f64_lossy();
                        best = best.max(du / r.powf(exponent));
                    }
                }
            }
        }
        HolderAxis::Time => {
            let times: Vec<f64> = traj.times().iter().map(|t| t.to_f64_lossy()).collect();
            for (a, &ka) in snaps.iter().enumerate() {
                for &kb in &snaps[a + 1..] {
                    let dt = (times[kb] - times[ka]).abs();
                    if dt < window.floor {
                        continue;
                    }
                    let (ua, ub) = (traj.snapshots()[ka].values(), traj.snapshots()[kb].values());
                    for &i in &nodes {
                        pairs += 1;
                        let du = (ua[i] - ub[i]).abs().to_f64_lossy();
                        best = best.max(du / dt.powf(exponent));
                    }
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::InvalidArgument("Hölder window selects no pairs".into()));
    }
    Ok(best)
}

/// Space seminorm of a single field, restricted to pairs at distance at
/// least `floor` and, optionally, to pairs of the given nodes.
pub fn field_holder_seminorm<T: Real>(u: &Field<T>, exponent: f64, floor: f64, nodes: Option<&[usize]>) -> Result<f64> {
    let traj = Trajectory::new(
        vec![T::zero()],
        vec![u.clone()],
        crate::evolve::TrajectoryMeta {
            delta: 0.0,
            kernel: String::new(),
            nonlinearity: String::new(),
            stats: Default::default(),
        },
    )?;
    holder_seminorm(
        &traj,
        HolderAxis::Space,
        exponent,
        &HolderWindow {
            t_min: 0.0,
            t_max: 0.0,
            floor,
            nodes: nodes.map(<[usize]>::to_vec),
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpnessProbe {
    pub floor: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `fine / coarse`: growth of the seminorm when the pair floor is halved.
    pub growth: f64,
}

/// Space seminorm at pair floors `floor` and `floor / 2`.
pub fn sharpness_probe<T: Real>(
    u: &Field<T>,
    exponent: f64,
    floor: f64,
    nodes: Option<&[usize]>,
) -> Result<SharpnessProbe> {
    let coarse = field_holder_seminorm(u, exponent, floor, nodes)?;
    let fine = field_holder_seminorm(u, exponent, 0.5 * floor, nodes)?;
    Ok(SharpnessProbe {
        floor,
        coarse,
        fine,
        growth: fine / coarse,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivativeGrowth {
    pub order: usize,
    pub fit: Option<ExponentFit>,
    /// Set when the derivative vanishes to roundoff and no fit is possible.
    pub degenerate: bool,
}

/// Fit of `log |D^k u|` against `log d`, with `D^k` the central difference of
/// order `k` along the first axis.
pub fn derivative_growth<T: Real>(u: &Field<T>, d: &Field<T>, k: usize) -> Result<DerivativeGrowth> {
    derivative_growth_in(u, d, k, None)
}

pub fn derivative_growth_in<T: Real>(
    u: &Field<T>,
    d: &Field<T>,
    k: usize,
    range: Option<ShellRange>,
) -> Result<DerivativeGrowth> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("derivative order {k} is not 1, 2 or 3")));
    }
    if !u.same_domain(d) {
        return Err(Error::DomainMismatch);
    }
    let domain = u.domain();
    let n = domain.cells_per_axis();
    let h = domain.spacing(0).to_f64_lossy();
    let vals: Vec<f64> = u.values().iter().map(|v| v.to_f64_lossy()).collect();
    let reach = if k == 3 { 2 } else { 1 };
    let mut pairs = Vec::new();
    for idx in 0..domain.len() {
        let [i, _] = domain.lattice(idx);
        if i < reach || i + reach >= n {
            continue;
        }
        let at = |off: isize| vals[(idx as isize + off) as usize];
        let dk = match k {
            1 => (at(1) - at(-1)) / (2.0 * h),
            2 => (at(1) - 2.0 * at(0) + at(-1)) / (h * h),
            _ => (at(2) - 2.0 * at(1) + 2.0 * at(-1) - at(-2)) / (2.0 * h * h * h),
        };
        pairs.push((d.values()[idx].to_f64_lossy(), dk.abs()));
    }
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let diam = domain.diameter().to_f64_lossy();
    let biggest = pairs.iter().fold(0.0f64, |a, p| a.max(p.1));
    if scale == 0.0 || biggest * diam.powi(k as i32) <= 1e-9 * scale {
        return Ok(DerivativeGrowth {
            order: k,
            fit: None,
            degenerate: true,
        });
    }
    let range = range.unwrap_or_else(|| {
        let mut r = ShellRange::standard(domain.as_ref());
        r.d_min = r.d_min.max((2 * reach + 2) as f64 * h);
        r
    });
    let fit = shell_fit(pairs.into_iter().filter(|p| p.1 > 0.0), range)?;
    Ok(DerivativeGrowth {
        order: k,
        fit: Some(fit),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, distance_field, integrate, Domain, Interval};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn line(n: usize) -> Arc<Domain<f64>> {
        Arc::new(build_grid(1, &[Interval::new(0.0, 1.0)], n).unwrap())
    }

    #[test]
    fn weighted_norm_examples() {
        let d = line(128);
        let phi = Field::from_fn(&d, |p| (std::f64::consts::PI * p[0]).sin());
        let total = integrate(&phi, None).unwrap();
        let phi = phi.map(|v| v / total);
        assert!((weighted_norm(&Field::constant(&d, 1.0), &phi, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(weighted_norm(&Field::zeros(&d), &phi, 2.0).unwrap(), 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = Field::new(&d, (0..128).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
        let mut direct = 0.0;
        for i in 0..128 {
            direct += u.values()[i] * u.values()[i] * phi.values()[i] / 128.0;
        }
        assert!((weighted_norm(&u, &phi, 2.0).unwrap() - direct.sqrt()).abs() < 1e-12);
        assert!((weighted_norm(&u, &phi, 1.0).unwrap() - integrate(&u, Some(&phi)).unwrap()).abs() < 1e-15);
        assert!(weighted_norm(&u, &phi, 0.5).is_err());
    }

    #[test]
    fn t_star_examples() {
        let c = TheoryConstants::default();
        assert_eq!(t_star(1.0, &c, 2.0).unwrap(), 1.0);
        assert_eq!(t_star(4.0, &c, 2.0).unwrap(), 0.25);
        let m = 3.0;
        assert!((t_star(2.0, &c, m).unwrap() * 2f64.powf(m - 1.0) - t_star(1.0, &c, m).unwrap()).abs() < 1e-15);
        assert!(t_star(0.0, &c, 2.0).is_err());
    }

    #[test]
    fn constants_must_be_positive() {
        let mut c = TheoryConstants::default();
        assert!(c.set("kappa", 0.0).is_err());
        c.set("kappa", 0.3).unwrap();
        assert_eq!(c.get("kappa"), Some(0.3));
        assert!(TheoryConstants::new(-1.0).is_err());
    }

    #[test]
    fn barrier_examples() {
        let d = line(16);
        let phi = Field::from_fn(&d, |p| p[0] * (1.0 - p[0]));
        assert!(barrier(2.0, 0.0, &phi, 2.0).values().iter().all(|&v| v == 0.0));
        let a = barrier(1.0, 0.5, &phi, 2.0);
        let b = barrier(3.0, 1.0, &phi, 2.0);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((6.0 * x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn harnack_examples() {
        let d = line(64);
        let c = Field::constant(&d, 2.0);
        assert_eq!(harnack_quotient(&c, &[0.5, 0.0], 0.2).unwrap(), 1.0);
        assert!(harnack_quotient(&c, &[0.1, 0.0], 0.2).is_err());
        assert!(matches!(
            harnack_quotient(&c, &[0.5, 0.0], 0.01),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn exact_power_law_fit() {
        let d = line(256);
        let dist = distance_field(&d);
        let u = dist.map(|x| x.powf(0.7));
        let fit = fit_boundary_exponent(&u, &dist, ShellRange::standard(d.as_ref())).unwrap();
        assert!((fit.slope - 0.7).abs() < 1e-6);
        assert!(fit.r_squared > 0.999999);
        assert!(fit.points_used >= 5);
    }

    #[test]
    fn fit_rejects_thin_ranges() {
        let d = line(64);
        let dist = distance_field(&d);
        let u = dist.map(|x| x.sqrt());
        let r = fit_boundary_exponent(&u, &dist, ShellRange { d_min: 0.05, d_max: 0.06 });
        assert!(matches!(r, Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn derivative_growth_of_power_law() {
        let d = line(1024);
        let dist = distance_field(&d);
        let alpha = 0.15;
        let u = dist.map(|x| x.powf(alpha));
        for k in 1..=3 {
            let g = derivative_growth(&u, &dist, k).unwrap();
            let slope = g.fit.unwrap().slope;
            assert!((slope - (alpha - k as f64)).abs() < 0.1, "k={k} slope={slope}");
        }
        let flat = derivative_growth(&Field::constant(&d, 1.0), &dist, 2).unwrap();
        assert!(flat.degenerate && flat.fit.is_none());
        assert!(derivative_growth(&u, &dist, 4).is_err());
    }

    #[test]
    fn constant_field_has_zero_seminorm() {
        let d = line(32);
        assert_eq!(field_holder_seminorm(&Field::constant(&d, 3.0), 0.5, 0.0, None).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn synthetic_exponents_are_recovered(alpha in 0.1f64..0.9, n in 64usize..400) {
            let d = line(n);
            let dist = distance_field(&d);
            let u = dist.map(|x| 3.0 * x.powf(alpha));
            let fit = fit_boundary_exponent(&u, &dist, ShellRange::standard(d.as_ref())).unwrap();
            prop_assert!((fit.slope - alpha).abs() < 1e-6);
        }

        #[test]
        fn t_star_is_homogeneous(norm in 0.01f64..100.0, lambda in 0.1f64..10.0, m in 1.2f64..4.0) {
            let c = TheoryConstants::default();
            let lhs = t_star(lambda * norm, &c, m).unwrap();
            let rhs = lambda.powf(-(m - 1.0)) * t_star(norm, &c, m).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }
}
