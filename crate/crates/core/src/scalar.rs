use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A field in which closed-form combinatorial sums can be evaluated, either
/// exactly (`BigRational`) or approximately (`f64`).
pub trait ExactField: Num + Clone + FromPrimitive {}

impl<T: Num + Clone + FromPrimitive> ExactField for T {}
