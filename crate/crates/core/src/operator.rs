//! Assembly of the restricted nonlocal operator with zero exterior data.
//!
//! Every operator is stored as a dense symmetric matrix `A` together with a
//! tail vector `T`, where `T_i` is the interaction of node `i` with the
//! exterior of the box. Rows are built so that `A 1 = T` exactly up to
//! roundoff, which makes `A` a diagonally dominant M-matrix.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, Point};
use crate::linalg::{Cholesky, Matrix};
use crate::quad::{adaptive, Rule};
use crate::scalar::Real;

/// User kernel `K(x, y)` for the rough kind.
pub type KernelFn<T> = Arc<dyn Fn(&Point<T>, &Point<T>) -> T + Send + Sync>;

const TAIL_TOL: f64 = 1e-10;
const SERIES_FROM: usize = 16;

#[derive(Clone)]
pub enum KernelSpec<T> {
    Fractional { s: T },
    Rough {
        s: T,
        kernel: KernelFn<T>,
        lambda: T,
        big_lambda: T,
    },
    /// Second-difference stencil of the classical Laplacian.
    Local,
}

impl<T: Real> KernelSpec<T> {
    pub fn fractional(s: T) -> Self {
        Self::Fractional { s }
    }

    pub fn rough(
        s: T,
        lambda: T,
        big_lambda: T,
        kernel: impl Fn(&Point<T>, &Point<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self::Rough {
            s,
            kernel: Arc::new(kernel),
            lambda,
            big_lambda,
        }
    }

    /// Order of the operator, `1` for the local stencil.
    pub fn order(&self) -> T {
        match self {
            Self::Fractional { s } | Self::Rough { s, .. } => *s,
            Self::Local => T::one(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fractional { .. } => "fractional",
            Self::Rough { .. } => "rough",
            Self::Local => "local",
        }
    }

    pub fn is_local(&self) -> bool {
        matches!(self, Self::Local)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Local => Ok(()),
            Self::Fractional { s } => check_order(*s),
            Self::Rough {
                s,
                lambda,
                big_lambda,
                ..
            } => {
                check_order(*s)?;
                if !(*lambda > T::zero()) || !(*big_lambda >= *lambda) {
                    return Err(Error::InvalidArgument(format!(
                        "rough kernel bounds need 0 < lambda <= Lambda, got {lambda} and {big_lambda}"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn check_order<T: Real>(s: T) -> Result<()> {
    if s > T::zero() && s < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("order s = {s} is outside (0, 1)")))
    }
}

impl<T: fmt::Debug> fmt::Debug for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fractional { s } => f.debug_struct("Fractional").field("s", s).finish(),
            Self::Rough {
                s,
                lambda,
                big_lambda,
                ..
            } => f
                .debug_struct("Rough")
                .field("s", s)
                .field("lambda", lambda)
                .field("big_lambda", big_lambda)
                .finish_non_exhaustive(),
            Self::Local => f.write_str("Local"),
        }
    }
}

/// `c_{N,s} = 4^s s Γ(s + N/2) / (π^{N/2} Γ(1 - s))`.
pub fn normalization(dim: usize, s: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let half_n = dim as f64 / 2.0;
    4f64.powf(s) * s * gamma(s + half_n) / (std::f64::consts::PI.powf(half_n) * gamma(1.0 - s))
}

#[derive(Clone, Debug)]
pub struct NonlocalOperator<T> {
    domain: Arc<Domain<T>>,
    matrix: Matrix<T>,
    tail: Field<T>,
    kernel: KernelSpec<T>,
    normalization: T,
}

/// Measured structural properties of an assembled operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub asymmetry: f64,
    pub max_offdiagonal: f64,
    /// `min_i (A_ii - sum_j |A_ij| - T_i)` relative to `max_i A_ii`.
    pub dominance_margin: f64,
    pub min_tail: f64,
    /// `max_i |(A 1)_i - T_i|` relative to `max_i A_ii`.
    pub constant_residual: f64,
}

impl InvariantReport {
    /// Strict tail positivity is required unless `allow_zero_tail` is set.
    pub fn holds(&self, tol: f64, allow_zero_tail: bool) -> bool {
        let tail_ok = if allow_zero_tail {
            self.min_tail >= 0.0
        } else {
            self.min_tail > 0.0
        };
        self.asymmetry == 0.0
            && self.max_offdiagonal <= 0.0
            && self.dominance_margin >= -tol
            && self.constant_residual <= tol
            && tail_ok
    }
}

impl<T: Real> NonlocalOperator<T> {
    pub fn domain(&self) -> &Arc<Domain<T>> {
        &self.domain
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn tail(&self) -> &Field<T> {
        &self.tail
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    /// `(A f)_i`, the operator applied to the zero extension of `f`.
    pub fn apply(&self, f: &Field<T>) -> Result<Field<T>> {
        if !crate::grid::same_domain(&self.domain, f.domain()) {
            return Err(Error::DomainMismatch);
        }
        Field::new(&self.domain, self.matrix.matvec(f.values()))
    }

    pub fn apply_slice(&self, f: &[T]) -> Vec<T> {
        self.matrix.matvec(f)
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        Cholesky::new(&self.matrix)
    }

    /// Quadratic form `<f, A f>` in the Euclidean pairing.
    pub fn energy(&self, f: &[T]) -> T {
        crate::scalar::dot(f, &self.matrix.matvec(f))
    }

    /// Smallest interaction per unit volume between two distinct nodes.
    pub fn kernel_infimum(&self) -> T {
        let n = self.len();
        let vol = self.domain.cell_volume();
        let mut inf = T::infinity();
        for i in 0..n {
            for (j, &a) in self.matrix.row(i).iter().enumerate() {
                if i != j {
                    inf = inf.min(-a / vol);
                }
            }
        }
        inf
    }

    pub fn check_invariants(&self) -> InvariantReport {
        let n = self.len();
        let t = self.tail.values();
        let mut max_off = f64::NEG_INFINITY;
        let mut margin = f64::INFINITY;
        let mut residual: f64 = 0.0;
        let mut max_diag: f64 = 0.0;
        for i in 0..n {
            let row = self.matrix.row(i);
            let mut off = 0.0;
            let mut sum = 0.0;
            for (j, &a) in row.iter().enumerate() {
                let a = a.to_f64_lossy();
                sum += a;
                if i != j {
                    off += a.abs();
                    max_off = max_off.max(a);
                }
            }
            let diag = row[i].to_f64_lossy();
            let ti = t[i].to_f64_lossy();
            max_diag = max_diag.max(diag);
            margin = margin.min(diag - off - ti);
            residual = residual.max((sum - ti).abs());
        }
        if n < 2 {
            max_off = 0.0;
        }
        let scale = max_diag.max(f64::MIN_POSITIVE);
        InvariantReport {
            asymmetry: self.matrix.asymmetry().to_f64_lossy(),
            max_offdiagonal: max_off,
            dominance_margin: margin / scale,
            min_tail: t.iter().map(|v| v.to_f64_lossy()).fold(f64::INFINITY, f64::min),
            constant_residual: residual / scale,
        }
    }
}

/// Builds the operator for `kernel` on `domain`.
pub fn assemble<T: Real>(domain: &Arc<Domain<T>>, kernel: KernelSpec<T>) -> Result<NonlocalOperator<T>> {
    kernel.validate()?;
    let geom = Geometry::new(domain);
    let (off, tail, norm) = match &kernel {
        KernelSpec::Local => {
            let (off, tail) = local_stencil(&geom);
            (off, tail, 1.0)
        }
        KernelSpec::Fractional { s } => {
            let s = s.to_f64_lossy();
            let c = normalization(geom.dim, s);
            let off = if geom.dim == 1 {
                fractional_weights_1d(&geom, s, c)
            } else {
                fractional_weights_2d(&geom, s, c)
            };
            (off, fractional_tail(&geom, s, c), c)
        }
        KernelSpec::Rough {
            s,
            kernel: k,
            lambda,
            big_lambda,
        } => {
            let s = s.to_f64_lossy();
            let off = rough_weights(domain, &geom, s, k, lambda.to_f64_lossy(), big_lambda.to_f64_lossy())?;
            let tail = rough_tail(domain, &geom, s, k);
            (off, tail, normalization(geom.dim, s))
        }
    };
    finish(domain, &geom, off, tail, kernel, norm)
}

/// Node data in `f64` used while assembling.
struct Geometry {
    dim: usize,
    n: usize,
    h: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    nodes: Vec<[f64; 2]>,
}

impl Geometry {
    fn new<T: Real>(domain: &Domain<T>) -> Self {
        let dim = domain.dim();
        let mut h = [0.0; 2];
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for (k, iv) in domain.bounds().iter().enumerate() {
            h[k] = domain.spacing(k).to_f64_lossy();
            lo[k] = iv.a.to_f64_lossy();
            hi[k] = iv.b.to_f64_lossy();
        }
        let nodes = domain
            .nodes()
            .iter()
            .map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()])
            .collect();
        Self {
            dim,
            n: domain.cells_per_axis(),
            h,
            lo,
            hi,
            nodes,
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn lattice(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i % self.n, i / self.n]
        }
    }

    /// Lattice neighbours of `i` along each axis that are inside the box.
    fn neighbours(&self, i: usize) -> Vec<(usize, usize)> {
        let p = self.lattice(i);
        let mut out = Vec::with_capacity(4);
        for axis in 0..self.dim {
            let stride = if axis == 0 { 1 } else { self.n };
            if p[axis] > 0 {
                out.push((i - stride, axis));
            }
            if p[axis] + 1 < self.n {
                out.push((i + stride, axis));
            }
        }
        out
    }
}

/// Off-diagonal weights are stored as positive interaction strengths `w_ij`.
fn finish<T: Real>(
    domain: &Arc<Domain<T>>,
    geom: &Geometry,
    off: Vec<f64>,
    tail: Vec<f64>,
    kernel: KernelSpec<T>,
    norm: f64,
) -> Result<NonlocalOperator<T>> {
    let n = geom.len();
    let mut data = vec![T::zero(); n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let src = &off[i * n..(i + 1) * n];
        let mut diag = T::zero();
        for (j, (&w, out)) in src.iter().zip(row.iter_mut()).enumerate() {
            if j != i {
                let a = T::lit(w);
                *out = -a;
                diag += a;
            }
        }
        row[i] = diag + T::lit(tail[i]);
    });
    let matrix = Matrix::from_row_major(n, n, data)?;
    let tail = Field::new(domain, tail.into_iter().map(T::lit).collect())?;
    Ok(NonlocalOperator {
        domain: Arc::clone(domain),
        matrix,
        tail,
        kernel,
        normalization: T::lit(norm),
    })
}

fn local_stencil(geom: &Geometry) -> (Vec<f64>, Vec<f64>) {
    let n = geom.len();
    let mut off = vec![0.0; n * n];
    let mut tail = vec![0.0; n];
    for i in 0..n {
        for (j, axis) in geom.neighbours(i) {
            off[i * n + j] = 1.0 / (geom.h[axis] * geom.h[axis]);
        }
        let p = geom.lattice(i);
        for axis in 0..geom.dim {
            let faces = usize::from(p[axis] == 0) + usize::from(p[axis] + 1 == geom.n);
            tail[i] += 2.0 * faces as f64 / (geom.h[axis] * geom.h[axis]);
        }
    }
    (off, tail)
}

fn q(s: f64, r: f64) -> f64 {
    if s == 0.5 {
        -r.ln()
    } else if r == 0.0 {
        0.0
    } else {
        r.powf(1.0 - 2.0 * s) / ((-2.0 * s) * (1.0 - 2.0 * s))
    }
}

fn dq(s: f64, r: f64) -> f64 {
    -r.powf(-2.0 * s) / (2.0 * s)
}

/// Interaction of a node with the unit hat function `j` cells away, kernel `|z|^{-1-2s}`.
pub(crate) fn hat_weight(s: f64, j: usize) -> f64 {
    debug_assert!(j >= 1);
    let r = j as f64;
    if j == 1 && s >= 0.5 {
        return q(s, 2.0) - q(s, 1.0) - dq(s, 1.0) + 1.0 / (2.0 - 2.0 * s);
    }
    if j < SERIES_FROM {
        return q(s, r + 1.0) - 2.0 * q(s, r) + q(s, r - 1.0);
    }
    let x2 = 1.0 / (r * r);
    if s == 0.5 {
        return -(-x2).ln_1p();
    }
    let p = 1.0 - 2.0 * s;
    let mut b = p * (p - 1.0) / 2.0;
    let mut xk = x2;
    let mut sum = 0.0;
    for k in 1..200 {
        let term = b * xk;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        let kk = 2.0 * k as f64;
        b *= (p - kk) * (p - kk - 1.0) / ((kk + 1.0) * (kk + 2.0));
        xk *= x2;
    }
    2.0 * r.powf(p) * sum / ((-2.0 * s) * (1.0 - 2.0 * s))
}

/// Per-neighbour weight of the second-order correction for the singular own cell,
/// for the kernel `|z|^{-N-2s}` without normalization.
fn own_cell_correction(geom: &Geometry, s: f64) -> [f64; 2] {
    if geom.dim == 1 {
        let h = geom.h[0];
        let j = 2.0 * (0.5 * h).powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        return [j / (2.0 * h * h), 0.0];
    }
    let (hx, hy) = (geom.h[0], geom.h[1]);
    let corner = (hy / hx).atan();
    let mut out = [0.0; 2];
    for (axis, slot) in out.iter_mut().enumerate() {
        let mut f = |theta: f64| {
            let (c, sn) = (theta.cos(), theta.sin());
            let r = (0.5 * hx / c).min(0.5 * hy / sn);
            let proj = if axis == 0 { c } else { sn };
            proj * proj * r.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s)
        };
        let quarter = adaptive(&mut f, 1e-300, corner, 1e-13)
            + adaptive(&mut f, corner, std::f64::consts::FRAC_PI_2, 1e-13);
        let moment = 4.0 * quarter;
        let h = geom.h[axis];
        *slot = moment / (2.0 * h * h);
    }
    out
}

fn fractional_weights_1d(geom: &Geometry, s: f64, c: f64) -> Vec<f64> {
    let n = geom.len();
    let h = geom.h[0];
    let scale = c * h.powf(-2.0 * s);
    let table: Vec<f64> = (0..n)
        .map(|d| if d == 0 { 0.0 } else { scale * hat_weight(s, d) })
        .collect();
    let mut off = vec![0.0; n * n];
    off.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, w) in row.iter_mut().enumerate() {
            *w = table[i.abs_diff(j)];
        }
    });
    off
}

/// `∫_cell |z|^{-2-2s} dz` over the cell at lattice offset `(dx, dy)`.
fn cell_integral_2d(geom: &Geometry, s: f64, dx: usize, dy: usize, rules: &[Rule; 3]) -> f64 {
    let (hx, hy) = (geom.h[0], geom.h[1]);
    let reach = dx.max(dy);
    let (sub, rule) = match reach {
        0..=2 => (6, &rules[0]),
        3..=6 => (2, &rules[0]),
        _ => (1, &rules[1]),
    };
    let x0 = (dx as f64 - 0.5) * hx;
    let y0 = (dy as f64 - 0.5) * hy;
    let (sx, sy) = (hx / sub as f64, hy / sub as f64);
    let mut total = 0.0;
    for a in 0..sub {
        for b in 0..sub {
            let xa = x0 + a as f64 * sx;
            let yb = y0 + b as f64 * sy;
            for (x, wx) in rule.mapped(xa, xa + sx) {
                for (y, wy) in rule.mapped(yb, yb + sy) {
                    total += wx * wy * (x * x + y * y).powf(-1.0 - s);
                }
            }
        }
    }
    total
}

fn fractional_weights_2d(geom: &Geometry, s: f64, c: f64) -> Vec<f64> {
    let n = geom.n;
    let rules = [Rule::new(8), Rule::new(6), Rule::new(4)];
    let table: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (dx, dy) = (k % n, k / n);
            if dx == 0 && dy == 0 {
                0.0
            } else {
                c * cell_integral_2d(geom, s, dx, dy, &rules)
            }
        })
        .collect();
    let corr = own_cell_correction(geom, s);
    let total = geom.len();
    let mut off = vec![0.0; total * total];
    off.par_chunks_mut(total).enumerate().for_each(|(i, row)| {
        let pi = geom.lattice(i);
        for (j, w) in row.iter_mut().enumerate() {
            let pj = geom.lattice(j);
            let dx = pi[0].abs_diff(pj[0]);
            let dy = pi[1].abs_diff(pj[1]);
            *w = table[dx + n * dy];
            if dx + dy == 1 {
                *w += c * corr[if dx == 1 { 0 } else { 1 }];
            }
        }
    });
    off
}

/// Distance from `p` to the box boundary along direction `theta`.
fn exit_distance(geom: &Geometry, p: &[f64; 2], theta: f64) -> f64 {
    let d = [theta.cos(), theta.sin()];
    let mut r = f64::INFINITY;
    for k in 0..2 {
        if d[k] > 1e-300 {
            r = r.min((geom.hi[k] - p[k]) / d[k]);
        } else if d[k] < -1e-300 {
            r = r.min((geom.lo[k] - p[k]) / d[k]);
        }
    }
    r
}

/// Angles of the four box corners seen from `p`, sorted in `[0, 2π)`, plus the endpoints.
fn corner_breaks(geom: &Geometry, p: &[f64; 2]) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let mut out = vec![0.0, tau];
    for cx in [geom.lo[0], geom.hi[0]] {
        for cy in [geom.lo[1], geom.hi[1]] {
            out.push((cy - p[1]).atan2(cx - p[0]).rem_euclid(tau));
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    out
}

fn fractional_tail(geom: &Geometry, s: f64, c: f64) -> Vec<f64> {
    if geom.dim == 1 {
        return geom
            .nodes
            .iter()
            .map(|p| {
                let (l, r) = (p[0] - geom.lo[0], geom.hi[0] - p[0]);
                c * (l.powf(-2.0 * s) + r.powf(-2.0 * s)) / (2.0 * s)
            })
            .collect();
    }
    geom.nodes
        .par_iter()
        .map(|p| {
            let breaks = corner_breaks(geom, p);
            let mut f = |theta: f64| exit_distance(geom, p, theta).powf(-2.0 * s);
            let integral: f64 = breaks
                .windows(2)
                .map(|w| adaptive(&mut f, w[0], w[1], TAIL_TOL))
                .sum();
            c * integral / (2.0 * s)
        })
        .collect()
}

fn to_point<T: Real>(p: &[f64; 2]) -> Point<T> {
    [T::lit(p[0]), T::lit(p[1])]
}

fn rough_weights<T: Real>(
    domain: &Domain<T>,
    geom: &Geometry,
    s: f64,
    kernel: &KernelFn<T>,
    lambda: f64,
    big_lambda: f64,
) -> Result<Vec<f64>> {
    let n = geom.len();
    let vol = domain.cell_volume().to_f64_lossy();
    let nodes = domain.nodes();
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for j in (i + 1)..n {
                let forward = kernel(&nodes[i], &nodes[j]).to_f64_lossy();
                let backward = kernel(&nodes[j], &nodes[i]).to_f64_lossy();
                if (forward - backward).abs() > 1e-12 * forward.abs().max(backward.abs()) {
                    return Err(Error::NonSymmetricKernel { forward, backward });
                }
                if !(forward > 0.0) || !forward.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "kernel value {forward:e} between nodes {i} and {j} is not positive and finite"
                    )));
                }
                row[j] = 0.5 * (forward + backward) * vol;
            }
            Ok(row)
        })
        .collect();
    let mut off = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for j in (i + 1)..n {
            off[i * n + j] = row[j];
            off[j * n + i] = row[j];
        }
    }
    let corr = own_cell_correction(geom, s);
    let exponent = geom.dim as f64 + 2.0 * s;
    for i in 0..n {
        for (j, axis) in geom.neighbours(i) {
            if j > i {
                let dist = geom.h[axis];
                let c_eff = (off[i * n + j] / vol * dist.powf(exponent)).clamp(lambda, big_lambda);
                let w = c_eff * corr[axis];
                off[i * n + j] += w;
                off[j * n + i] += w;
            }
        }
    }
    Ok(off)
}

/// `∫_R^∞ K(x, x + r e) r^{N-1} dr` through `r = R t^{-1/(2s)}`.
fn ray_integral<T: Real>(kernel: &KernelFn<T>, x: &[f64; 2], e: [f64; 2], r0: f64, s: f64, dim: usize, tol: f64) -> f64 {
    let xp = to_point::<T>(x);
    let mut f = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let r = r0 * t.powf(-1.0 / (2.0 * s));
        let dr = r0 / (2.0 * s) * t.powf(-1.0 / (2.0 * s) - 1.0);
        let y = to_point::<T>(&[x[0] + r * e[0], x[1] + r * e[1]]);
        kernel(&xp, &y).to_f64_lossy() * r.powi(dim as i32 - 1) * dr
    };
    adaptive(&mut f, 0.0, 1.0, tol)
}

fn rough_tail<T: Real>(_domain: &Domain<T>, geom: &Geometry, s: f64, kernel: &KernelFn<T>) -> Vec<f64> {
    geom.nodes
        .par_iter()
        .map(|p| {
            if geom.dim == 1 {
                ray_integral(kernel, p, [1.0, 0.0], geom.hi[0] - p[0], s, 1, TAIL_TOL)
                    + ray_integral(kernel, p, [-1.0, 0.0], p[0] - geom.lo[0], s, 1, TAIL_TOL)
            } else {
                let breaks = corner_breaks(geom, p);
                let mut f = |theta: f64| {
                    let r0 = exit_distance(geom, p, theta);
                    ray_integral(kernel, p, [theta.cos(), theta.sin()], r0, s, 2, 1e-8)
                };
                breaks.windows(2).map(|w| adaptive(&mut f, w[0], w[1], 1e-8)).sum()
            }
        })
        .collect()
}

/// Outcome of sampling `K(x, y) |x - y|^{N + 2s}` against the declared bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelBoundsReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Samples random pairs of distinct points in the box and compares the
/// normalized kernel against `[λ, Λ]`. Only the rough kind carries bounds.
pub fn check_rough_kernel_bounds<T: Real>(
    kernel: &KernelSpec<T>,
    domain: &Domain<T>,
    samples: usize,
    seed: u64,
) -> Result<KernelBoundsReport> {
    let KernelSpec::Rough {
        s,
        kernel: k,
        lambda,
        big_lambda,
    } = kernel
    else {
        return Err(Error::InvalidArgument(format!(
            "bounds are only defined for rough kernels, not {}",
            kernel.name()
        )));
    };
    let (lo, hi) = (lambda.to_f64_lossy(), big_lambda.to_f64_lossy());
    let exponent = domain.dim() as f64 + 2.0 * s.to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> [f64; 2] {
        let mut p = [0.0; 2];
        for (k, iv) in domain.bounds().iter().enumerate() {
            p[k] = rng.gen_range(iv.a.to_f64_lossy()..iv.b.to_f64_lossy());
        }
        p
    };
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut taken = 0;
    while taken < samples {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        if dist == 0.0 {
            continue;
        }
        let value = k(&to_point(&x), &to_point(&y)).to_f64_lossy();
        let ratio = value * dist.powf(exponent);
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        taken += 1;
    }
    let tol = 1e-12 * hi;
    let pass = taken > 0 && min_ratio >= lo - tol && max_ratio <= hi + tol;
    Ok(KernelBoundsReport {
        min_ratio,
        max_ratio,
        samples: taken,
        pass,
    })
}
