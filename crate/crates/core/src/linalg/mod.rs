//! Sparse storage and linear solvers.

mod cg;
mod csr;
mod lu;
mod system;

pub use cg::{pcg_jacobi, CgOutcome};
pub use csr::CsrMatrix;
pub use lu::{reverse_cuthill_mckee, BandedLu};
pub use system::{LinearSettings, SolveReport, SolverPath, SparseSystem};

use crate::scalar::Scalar;

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}
