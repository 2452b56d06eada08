//! The real scalar type underlying all complex arithmetic.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the dense linear algebra is generic over.
///
/// Implemented for `f32` and `f64`. All tolerances in this crate are stated
/// for `f64`; `f32` works but needs correspondingly looser thresholds.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Converts a literal tolerance or coefficient into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to scalar")
    }

    /// A tolerance equal to the stated double-precision figure, widened only
    /// as far as this scalar's precision requires. Identity for `f64`.
    fn tol(stated: f64, eps_multiple: f64) -> Self {
        Self::lit(stated).max(Self::epsilon() * Self::lit(eps_multiple))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
