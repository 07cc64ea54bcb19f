//! Numerical laboratory for the fractional porous medium equation
//! `u_t + L(u^m) = 0` on a box with zero exterior data.
//!
//! Every numerical type is generic over [`Real`], implemented for `f32` and
//! `f64`. The aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod linalg;
pub mod nonlinearity;
pub mod operator;
mod quad;
pub mod scalar;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{build_grid, distance_field, integrate, Interval};
pub use scalar::Real;

pub type Domain64 = grid::Domain<f64>;
pub type Field64 = grid::Field<f64>;
pub type Operator64 = operator::NonlocalOperator<f64>;
pub type KernelSpec64 = operator::KernelSpec<f64>;
pub type EigenPair64 = spectral::EigenPair<f64>;
pub type GreenMatrix64 = spectral::GreenMatrix<f64>;
pub type TimeGrid64 = evolve::TimeGrid<f64>;
pub type Trajectory64 = evolve::Trajectory<f64>;
