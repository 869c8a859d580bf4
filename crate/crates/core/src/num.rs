//! Scalar abstraction shared by every solver component.
//!
//! All numerical code is written against [`Real`], which is implemented for
//! `f32` and `f64`. The crate root re-exports `f64` aliases for the common
//! case.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the solver.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(tol, ulps * machine epsilon)`: a tolerance that stays reachable
    /// in low precision.
    #[inline]
    fn tol(tol: f64, ulps: f64) -> Self {
        Self::lit(tol).max(Self::lit(ulps) * Self::epsilon())
    }
}

impl Real for f32 {}
impl Real for f64 {}
