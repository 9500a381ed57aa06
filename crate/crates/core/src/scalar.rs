use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(k: usize) -> Self {
        Self::from_usize(k).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Total order for finite scores; NaN sorts last (callers reject NaN earlier).
#[inline]
pub(crate) fn total_cmp<T: Real>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Smallest integer `>= x`, forgiving representation error just above an integer.
///
/// `(n + 1) * (1 - alpha)` for `alpha = 0.1, n = 9` evaluates to `9.000000000000002`;
/// the intended rank is 9, not 10.
pub(crate) fn ceil_tolerant<T: Real>(x: T) -> T {
    let r = x.round();
    if (x - r).abs() <= T::epsilon() * T::lit(16.0) * r.abs().max(T::one()) {
        r
    } else {
        x.ceil()
    }
}

/// Floor with the same tolerance as [`ceil_tolerant`].
pub(crate) fn floor_tolerant<T: Real>(x: T) -> T {
    let r = x.round();
    if (x - r).abs() <= T::epsilon() * T::lit(16.0) * r.abs().max(T::one()) {
        r
    } else {
        x.floor()
    }
}
