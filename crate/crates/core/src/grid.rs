//! Cell-centered box geometry, node data and midpoint quadrature.
//!
//! Nodes never sit on the boundary: node `i` along an axis `[a, b]` split in
//! `n` cells is `a + (i + 1/2)(b - a)/n`. In two dimensions nodes are stored
//! x-fastest, so node `(i, j)` has flat index `i + n * j`.
//!
//! A [`Field`] stores only the interior values. Everything outside the box is
//! implicitly zero.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest per-axis cell count accepted by [`build_grid`].
pub const MIN_CELLS: usize = 8;

/// A node coordinate. The second component is zero in one dimension.
pub type Point<T> = [T; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> Interval<T> {
    pub fn new(a: T, b: T) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> T {
        self.b - self.a
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain<T> {
    dim: usize,
    bounds: Vec<Interval<T>>,
    n: usize,
    nodes: Vec<Point<T>>,
    cell_volume: T,
}

impl<T: Real> Domain<T> {
    /// Uniform cell-centered grid without the minimum-resolution check of
    /// [`build_grid`].
    pub fn cell_centered(dim: usize, bounds: &[Interval<T>], n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!("dimension {dim} is not 1 or 2")));
        }
        if bounds.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{} intervals given for a {dim}-dimensional box",
                bounds.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("cell count must be positive".into()));
        }
        for iv in bounds {
            if !(iv.b > iv.a) || !iv.a.is_finite() || !iv.b.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "degenerate interval [{}, {}]",
                    iv.a, iv.b
                )));
            }
        }
        let axis = |iv: &Interval<T>| -> Vec<T> {
            let h = iv.length() / T::from_usize_lossy(n);
            (0..n)
                .map(|i| iv.a + (T::from_usize_lossy(i) + T::lit(0.5)) * h)
                .collect()
        };
        let xs = axis(&bounds[0]);
        let nodes = if dim == 1 {
            xs.iter().map(|&x| [x, T::zero()]).collect()
        } else {
            let ys = axis(&bounds[1]);
            let mut nodes = Vec::with_capacity(n * n);
            for &y in &ys {
                for &x in &xs {
                    nodes.push([x, y]);
                }
            }
            nodes
        };
        let cell_volume = bounds
            .iter()
            .map(|iv| iv.length() / T::from_usize_lossy(n))
            .fold(T::one(), |acc, h| acc * h);
        Ok(Self {
            dim,
            bounds: bounds.to_vec(),
            n,
            nodes,
            cell_volume,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[Interval<T>] {
        &self.bounds
    }

    /// Cells per axis.
    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point<T>] {
        &self.nodes
    }

    pub fn cell_volume(&self) -> T {
        self.cell_volume
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.bounds[axis].length() / T::from_usize_lossy(self.n)
    }

    /// Smallest spacing over all axes.
    pub fn min_spacing(&self) -> T {
        (0..self.dim)
            .map(|k| self.spacing(k))
            .fold(T::infinity(), |a, b| a.min(b))
    }

    pub fn measure(&self) -> T {
        self.bounds.iter().fold(T::one(), |acc, iv| acc * iv.length())
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> T {
        self.bounds
            .iter()
            .map(|iv| iv.length() * iv.length())
            .sum::<T>()
            .sqrt()
    }

    pub fn center(&self) -> Point<T> {
        let mut c = [T::zero(); 2];
        for (k, iv) in self.bounds.iter().enumerate() {
            c[k] = (iv.a + iv.b) * T::lit(0.5);
        }
        c
    }

    /// Distance from an arbitrary point inside the box to its boundary.
    pub fn distance_to_boundary(&self, p: &Point<T>) -> T {
        self.bounds
            .iter()
            .enumerate()
            .map(|(k, iv)| (p[k] - iv.a).min(iv.b - p[k]))
            .fold(T::infinity(), |a, b| a.min(b))
    }

    pub fn distance(&self, p: &Point<T>, q: &Point<T>) -> T {
        let mut s = T::zero();
        for k in 0..self.dim {
            let d = p[k] - q[k];
            s += d * d;
        }
        s.sqrt()
    }

    /// Per-axis lattice coordinates of a flat node index.
    pub fn lattice(&self, index: usize) -> [usize; 2] {
        if self.dim == 1 {
            [index, 0]
        } else {
            [index % self.n, index / self.n]
        }
    }

    pub fn flat_index(&self, lattice: [usize; 2]) -> usize {
        if self.dim == 1 {
            lattice[0]
        } else {
            lattice[0] + self.n * lattice[1]
        }
    }
}

/// Builds a cell-centered uniform grid on `bounds` with `n` cells per axis.
pub fn build_grid<T: Real>(dim: usize, bounds: &[Interval<T>], n: usize) -> Result<Domain<T>> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidArgument(format!("dimension {dim} is not 1 or 2")));
    }
    if n < MIN_CELLS {
        return Err(Error::InvalidArgument(format!(
            "{n} cells per axis is below the minimum of {MIN_CELLS}"
        )));
    }
    Domain::cell_centered(dim, bounds, n)
}

/// Scalar data attached to the nodes of a domain.
#[derive(Clone, Debug)]
pub struct Field<T> {
    domain: Arc<Domain<T>>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(domain: &Arc<Domain<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a domain with {} nodes",
                values.len(),
                domain.len()
            )));
        }
        Ok(Self {
            domain: Arc::clone(domain),
            values,
        })
    }

    pub fn zeros(domain: &Arc<Domain<T>>) -> Self {
        Self::constant(domain, T::zero())
    }

    pub fn constant(domain: &Arc<Domain<T>>, value: T) -> Self {
        Self {
            domain: Arc::clone(domain),
            values: vec![value; domain.len()],
        }
    }

    pub fn from_fn(domain: &Arc<Domain<T>>, f: impl Fn(&Point<T>) -> T) -> Self {
        Self {
            domain: Arc::clone(domain),
            values: domain.nodes().iter().map(f).collect(),
        }
    }

    pub fn domain(&self) -> &Arc<Domain<T>> {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_domain(&self, other: &Field<T>) -> bool {
        same_domain(&self.domain, &other.domain)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field<T>, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !self.same_domain(other) {
            return Err(Error::DomainMismatch);
        }
        Ok(Self {
            domain: Arc::clone(&self.domain),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> T {
        crate::scalar::max_abs(&self.values)
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |a, &b| a.max(b))
    }
}

pub(crate) fn same_domain<T: PartialEq>(a: &Arc<Domain<T>>, b: &Arc<Domain<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Per-node distance to the boundary of the box.
pub fn distance_field<T: Real>(domain: &Arc<Domain<T>>) -> Field<T> {
    Field::from_fn(domain, |p| domain.distance_to_boundary(p))
}

/// Midpoint rule `cell_volume * sum_i f_i w_i`, with `w = 1` when no weight is given.
pub fn integrate<T: Real>(field: &Field<T>, weight: Option<&Field<T>>) -> Result<T> {
    let sum: T = match weight {
        None => field.values.iter().copied().sum(),
        Some(w) => {
            if !field.same_domain(w) {
                return Err(Error::DomainMismatch);
            }
            crate::scalar::dot(&field.values, &w.values)
        }
    };
    Ok(sum * field.domain.cell_volume())
}
