//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point type the simulators and solvers are generic over.
///
/// Implemented for `f32` and `f64`. Sampling hooks live on the trait so that
/// generic code does not need `StandardNormal: Distribution<T>` bounds.
pub trait Real: Float + FloatConst + FromPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static {
    /// One standard normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn std_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn std_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }
}

impl Real for f64 {
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn std_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Wraps an angle-like value into `(-period/2, period/2]`.
#[inline]
pub fn wrap_centered<T: Real>(x: T, period: T) -> T {
    let half = period / lit(2.0);
    let mut y = x - period * ((x + half) / period).floor();
    if y <= -half {
        y = y + period;
    }
    if y > half {
        y = y - period;
    }
    y
}

/// Reduces `x` into `[0, period)`.
#[inline]
pub fn wrap_positive<T: Real>(x: T, period: T) -> T {
    let y = x - period * (x / period).floor();
    if y >= period || y < T::zero() {
        T::zero()
    } else {
        y
    }
}
