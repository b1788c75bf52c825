use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Floating point element type of a [`Tensor`](super::Tensor).
pub trait Scalar: Float + Default + Debug + Display + Send + Sync + Sum + 'static {
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
