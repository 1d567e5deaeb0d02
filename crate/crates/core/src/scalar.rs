//! Scalar abstraction shared by the simulation modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the simulator (`f32` or `f64`).
///
/// Numerical tolerances throughout the crate are written for `f64`. Lower
/// precision types raise them to a floor via [`Real::tol`].
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Smallest tolerance that is meaningful at this precision.
    const TOL_FLOOR: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// `t` raised to the precision floor.
    #[inline]
    fn tol(t: f64) -> Self {
        Self::lit(t.max(Self::TOL_FLOOR))
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const TOL_FLOOR: f64 = 0.0;
}

impl Real for f32 {
    const TOL_FLOOR: f64 = 5e-5;
}

pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn c_real<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}
