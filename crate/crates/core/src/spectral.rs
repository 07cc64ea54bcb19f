//! Principal eigenpair, Green matrix and the dual `H*` norm.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Field};
use crate::linalg::{Cholesky, Matrix};
use crate::operator::NonlocalOperator;
use crate::scalar::{dot, max_abs, Real};

pub const MAX_EIGEN_ITERATIONS: usize = 10_000;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `∫ Φ1 dx = 1`.
    #[default]
    UnitL1Weighted,
    /// `∫ Φ1² dx = 1`.
    UnitL2,
}

#[derive(Clone, Debug)]
pub struct EigenPair<T> {
    pub lambda1: T,
    pub phi1: Field<T>,
    /// `‖A Φ1 - λ1 Φ1‖∞ / (λ1 ‖Φ1‖∞)`.
    pub residual: T,
    pub normalization: Normalization,
    pub iterations: usize,
}

impl<T: Real> EigenPair<T> {
    /// `Φ1^{1/m}` node by node.
    pub fn phi_power(&self, exponent: T) -> Field<T> {
        self.phi1.map(|v| v.powf(exponent))
    }
}

/// Inverse power iteration started from the constant vector.
pub fn principal_eigenpair<T: Real>(
    op: &NonlocalOperator<T>,
    tol: T,
    normalization: Normalization,
) -> Result<EigenPair<T>> {
    let chol = op.cholesky()?;
    principal_eigenpair_with(op, &chol, tol, normalization)
}

/// As [`principal_eigenpair`], reusing an existing factorization of the operator.
pub fn principal_eigenpair_with<T: Real>(
    op: &NonlocalOperator<T>,
    chol: &Cholesky<T>,
    tol: T,
    normalization: Normalization,
) -> Result<EigenPair<T>> {
    let n = op.len();
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("eigen tolerance must be positive".into()));
    }
    let mut v = vec![T::one() / T::from_usize_lossy(n).sqrt(); n];
    let mut rq = T::zero();
    let mut residual = T::infinity();
    for it in 1..=MAX_EIGEN_ITERATIONS {
        let w = chol.solve(&v);
        let norm = dot(&w, &w).sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
        let av = op.apply_slice(&v);
        let next = dot(&v, &av);
        residual = relative_residual(&av, &v, next);
        let change = (next - rq).abs();
        rq = next;
        if change <= tol * rq && residual <= tol {
            return Ok(finish(op, v, rq, residual, normalization, it));
        }
    }
    Err(Error::EigenNotConverged {
        iterations: MAX_EIGEN_ITERATIONS,
        residual: residual.to_f64_lossy(),
    })
}

fn relative_residual<T: Real>(av: &[T], v: &[T], lambda: T) -> T {
    let worst = av
        .iter()
        .zip(v)
        .map(|(&a, &x)| (a - lambda * x).abs())
        .fold(T::zero(), T::max);
    worst / (lambda.abs() * max_abs(v))
}

fn finish<T: Real>(
    op: &NonlocalOperator<T>,
    mut v: Vec<T>,
    lambda: T,
    residual: T,
    normalization: Normalization,
    iterations: usize,
) -> EigenPair<T> {
    let domain = op.domain();
    if v.iter().copied().sum::<T>() < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let vol = domain.cell_volume();
    let scale = match normalization {
        Normalization::UnitL1Weighted => v.iter().copied().sum::<T>() * vol,
        Normalization::UnitL2 => (dot(&v, &v) * vol).sqrt(),
    };
    v.iter_mut().for_each(|x| *x /= scale);
    EigenPair {
        lambda1: lambda,
        phi1: Field::new(domain, v).expect("eigenvector length matches domain"),
        residual,
        normalization,
        iterations,
    }
}

/// Discrete Green function `G = A^{-1} / cell_volume`, so that
/// `Σ_j G_ij f_j · cell_volume ≈ ∫ G(x_i, y) f(y) dy`.
#[derive(Clone, Debug)]
pub struct GreenMatrix<T> {
    g: Matrix<T>,
    domain: Arc<Domain<T>>,
}

impl<T: Real> GreenMatrix<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.g
    }

    pub fn domain(&self) -> &Arc<Domain<T>> {
        &self.domain
    }

    /// `(G f)_i = Σ_j G_ij f_j · cell_volume`, which equals `(A^{-1} f)_i`.
    pub fn apply_slice(&self, f: &[T]) -> Vec<T> {
        let vol = self.domain.cell_volume();
        self.g.matvec(f).into_iter().map(|x| x * vol).collect()
    }

    pub fn apply(&self, f: &Field<T>) -> Result<Field<T>> {
        if !crate::grid::same_domain(&self.domain, f.domain()) {
            return Err(Error::DomainMismatch);
        }
        Field::new(&self.domain, self.apply_slice(f.values()))
    }

    /// `⟨f, G f⟩` under midpoint quadrature.
    pub fn pairing(&self, f: &[T]) -> T {
        dot(f, &self.apply_slice(f)) * self.domain.cell_volume()
    }
}

pub fn green_matrix<T: Real>(op: &NonlocalOperator<T>) -> Result<GreenMatrix<T>> {
    let chol = op.cholesky()?;
    Ok(green_matrix_with(op, &chol))
}

pub fn green_matrix_with<T: Real>(op: &NonlocalOperator<T>, chol: &Cholesky<T>) -> GreenMatrix<T> {
    let mut g = chol.inverse();
    g.scale(T::one() / op.domain().cell_volume());
    GreenMatrix {
        g,
        domain: Arc::clone(op.domain()),
    }
}

/// Discrete dual norm `‖f‖_{H*} = sqrt(⟨f, G f⟩)`.
pub fn hstar_norm<T: Real>(green: &GreenMatrix<T>, f: &Field<T>) -> Result<T> {
    if !crate::grid::same_domain(green.domain(), f.domain()) {
        return Err(Error::DomainMismatch);
    }
    Ok(green.pairing(f.values()).max(T::zero()).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenShell {
    pub r_min: f64,
    pub r_max: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenComparability {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub pairs: usize,
    /// Dyadic shells in `|x - y|`.
    pub shells: Vec<GreenShell>,
}

/// Ratio of `G` against the two-sided model
/// `|x-y|^{2s-N} (1 ∧ d(x)^s/|x-y|^s)(1 ∧ d(y)^s/|x-y|^s)` over pairs at
/// least two cells apart.
pub fn green_comparability<T: Real>(green: &GreenMatrix<T>, s: T) -> Result<GreenComparability> {
    let domain = green.domain();
    let dim = domain.dim() as f64;
    let s = s.to_f64_lossy();
    if dim <= 2.0 * s {
        return Err(Error::Hypothesis(format!(
            "Green estimates need N > 2s, got N = {dim} and s = {s}"
        )));
    }
    let nodes: Vec<[f64; 2]> = domain
        .nodes()
        .iter()
        .map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()])
        .collect();
    let d: Vec<f64> = domain
        .nodes()
        .iter()
        .map(|p| domain.distance_to_boundary(p).to_f64_lossy())
        .collect();
    let h = domain.min_spacing().to_f64_lossy();
    let cutoff = 2.0 * h * (1.0 - 1e-9);
    let diam = domain.diameter().to_f64_lossy();
    let n_shells = ((diam / cutoff).log2().ceil() as usize).max(1);
    let mut shells: Vec<GreenShell> = (0..n_shells)
        .map(|k| GreenShell {
            r_min: cutoff * 2f64.powi(k as i32),
            r_max: cutoff * 2f64.powi(k as i32 + 1),
            ratio_min: f64::INFINITY,
            ratio_max: 0.0,
            pairs: 0,
        })
        .collect();
    let g = green.matrix();
    let mut out = GreenComparability {
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
        pairs: 0,
        shells: Vec::new(),
    };
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            if i == j {
                continue;
            }
            let r = ((nodes[i][0] - nodes[j][0]).powi(2) + (nodes[i][1] - nodes[j][1]).powi(2)).sqrt();
            if r < cutoff {
                continue;
            }
            let model = r.powf(2.0 * s - dim)
                * (d[i].powf(s) / r.powf(s)).min(1.0)
                * (d[j].powf(s) / r.powf(s)).min(1.0);
            let ratio = g[(i, j)].to_f64_lossy() / model;
            out.ratio_min = out.ratio_min.min(ratio);
            out.ratio_max = out.ratio_max.max(ratio);
            out.pairs += 1;
            let k = ((r / cutoff).log2().floor() as usize).min(n_shells - 1);
            let shell = &mut shells[k];
            shell.ratio_min = shell.ratio_min.min(ratio);
            shell.ratio_max = shell.ratio_max.max(ratio);
            shell.pairs += 1;
        }
    }
    out.shells = shells.into_iter().filter(|sh| sh.pairs > 0).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, integrate, Interval};
    use crate::operator::{assemble, KernelSpec};

    fn op(n: usize, kernel: KernelSpec<f64>) -> NonlocalOperator<f64> {
        let d = Arc::new(build_grid(1, &[Interval::new(0.0, 1.0)], n).unwrap());
        assemble(&d, kernel).unwrap()
    }

    #[test]
    fn local_eigenvalue_is_discrete_sine_mode() {
        let a = op(128, KernelSpec::Local);
        let e = principal_eigenpair(&a, 1e-12, Normalization::UnitL2).unwrap();
        let h = 1.0 / 128.0;
        let exact = (2.0 - 2.0 * (std::f64::consts::PI * h).cos()) / (h * h);
        assert!((e.lambda1 / exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigenpair_normalizations() {
        let a = op(64, KernelSpec::fractional(0.3));
        let e = principal_eigenpair(&a, 1e-10, Normalization::UnitL1Weighted).unwrap();
        assert!((integrate(&e.phi1, None).unwrap() - 1.0).abs() < 1e-12);
        assert!(e.phi1.values().iter().all(|&v| v > 0.0));
        assert!(e.residual <= 1e-10);
        let l2 = principal_eigenpair(&a, 1e-10, Normalization::UnitL2).unwrap();
        let sq = l2.phi1.map(|v| v * v);
        assert!((integrate(&sq, None).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn green_inverse_identity_and_positivity() {
        let a = op(48, KernelSpec::fractional(0.3));
        let g = green_matrix(&a).unwrap();
        let m = g.matrix();
        assert!(m.asymmetry() < 1e-10 * m.max_abs());
        assert!(m.as_slice().iter().all(|&v| v > 0.0));
        let e = principal_eigenpair(&a, 1e-12, Normalization::UnitL1Weighted).unwrap();
        let back = g.apply(&a.apply(&e.phi1).unwrap()).unwrap();
        for (x, y) in back.values().iter().zip(e.phi1.values()) {
            assert!((x - y).abs() < 1e-8);
        }
        let scaled = g.apply(&e.phi1).unwrap();
        for (x, y) in scaled.values().iter().zip(e.phi1.values()) {
            assert!((x * e.lambda1 - y).abs() < 1e-8);
        }
    }

    #[test]
    fn hstar_norm_basics() {
        let a = op(32, KernelSpec::fractional(0.3));
        let g = green_matrix(&a).unwrap();
        let d = a.domain();
        assert_eq!(hstar_norm(&g, &Field::zeros(d)).unwrap(), 0.0);
        let f = Field::from_fn(d, |p| (7.0 * p[0]).sin());
        let n1 = hstar_norm(&g, &f).unwrap();
        let n2 = hstar_norm(&g, &f.map(|v| -2.5 * v)).unwrap();
        assert!((n2 - 2.5 * n1).abs() < 1e-12 * n2);
    }

    #[test]
    fn comparability_refuses_without_n_greater_than_2s() {
        let a = op(32, KernelSpec::fractional(0.6));
        let g = green_matrix(&a).unwrap();
        assert!(matches!(green_comparability(&g, 0.6), Err(Error::Hypothesis(_))));
    }
}
