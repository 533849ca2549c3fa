//! Topological derivatives for semilinear elliptic transmission problems.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too; index loops
// mirror the element formulas; quadrature tables keep their published digits.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision,
    clippy::too_many_arguments
)]

pub mod assembly;
pub mod config;
pub mod error;
pub mod exterior;
pub mod io;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod pde;
pub mod quadrature;
pub mod scalar;
pub mod topo;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type of the finite element pipeline.
pub type Real = f64;
/// Point in the plane.
pub type Point = [Real; 2];

pub type CsrMatrix = linalg::CsrMatrix<Real>;
pub type SparseSystem = linalg::SparseSystem<Real>;
pub type Quadrature = quadrature::Quadrature<Real>;
