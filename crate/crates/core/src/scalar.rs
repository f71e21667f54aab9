//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type the algorithms are generic over (`f32` or `f64`).
///
/// Linear algebra comes from [`RealField`]; conversions to and from `f64`
/// go through `num-traits` so literals and bin indices stay readable.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Display + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Tolerance used by invariant checks: `1e-9` in double precision, looser
    /// for narrower types.
    #[inline]
    fn invariant_tol() -> Self {
        let floor = Self::default_epsilon() * Self::lit(1e3);
        let tol = Self::lit(1e-9);
        if floor > tol {
            floor
        } else {
            tol
        }
    }

    #[inline]
    fn to_degrees(self) -> Self {
        self * Self::lit(180.0) / Self::pi()
    }

    #[inline]
    fn to_radians(self) -> Self {
        self * Self::pi() / Self::lit(180.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle in degrees into `[0, 360)`.
#[inline]
pub fn wrap_deg<T: Real>(deg: T) -> T {
    let full = T::lit(360.0);
    let mut a = deg % full;
    if a < T::zero() {
        a += full;
    }
    // -1e-17 + 360 rounds to 360.
    if a >= full {
        a = T::zero();
    }
    a
}
