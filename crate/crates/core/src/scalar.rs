use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point type the linear algebra kernels and quadrature rules are
/// written against. The finite element pipeline itself runs in [`crate::Real`].
pub trait Scalar:
    'static
    + Float
    + NumAssign
    + FromPrimitive
    + Default
    + Send
    + Sync
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
{
    /// Converts an `f64` literal. Panics only for values outside the target range.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range for scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
