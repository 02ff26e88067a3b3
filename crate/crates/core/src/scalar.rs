//! Scalar abstractions.
//!
//! Numerical code is written against [`Real`] so that the same solvers run in
//! `f32` or `f64`. The closed-form convexification weights only need field
//! arithmetic and are written against [`Field`], which also admits exact
//! rationals such as `num_rational::Ratio<i64>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating point scalar used by the solvers: `f32` or `f64`.
pub trait Real:
    Float + Signed + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold at all.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field arithmetic, enough for the junction weight formulas.
pub trait Field: Num + Signed + PartialOrd + Copy + Debug {}

impl<T: Num + Signed + PartialOrd + Copy + Debug> Field for T {}
