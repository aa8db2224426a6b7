//! Scalar abstraction for probability values.
//!
//! The enumeration machinery only needs field arithmetic and a total order on
//! the values it sees, so it runs unchanged on `f64`, `f32` and exact
//! rationals. Anything that needs logarithms or exponentials (HMM forward
//! passes, entropies) is restricted to [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

pub trait Prob:
    Num + Clone + PartialOrd + Debug + Send + Sync + FromPrimitive + ToPrimitive + 'static
{
    /// Amount by which a derived probability may leave [0, 1] and still be
    /// clamped silently. Zero for exact types.
    fn roundoff() -> Self;

    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

/// Floating-point probabilities.
pub trait Real: Prob + Float {}

impl Prob for f64 {
    fn roundoff() -> Self {
        1e-12
    }
}

impl Prob for f32 {
    fn roundoff() -> Self {
        1e-6
    }
}

impl Real for f64 {}
impl Real for f32 {}

macro_rules! exact_ratio {
    ($($int:ty),*) => {$(
        impl Prob for Ratio<$int> {
            fn roundoff() -> Self {
                Ratio::from_integer(0)
            }
        }
    )*};
}

exact_ratio!(i64, i128);

/// Converts an `f64` constant into the scalar type.
pub(crate) fn lit<T: Prob>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}
