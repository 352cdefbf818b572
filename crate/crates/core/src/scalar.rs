//! Scalar abstractions.
//!
//! Network evaluation and training only need floating point, so they are
//! generic over [`Real`]. Polynomial arithmetic also runs over exact
//! rationals (Bernstein expansion, exact Horner checks), so it is generic
//! over the looser [`Coeff`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating point scalar used by neurons and networks.
pub trait Real: Float + FromPrimitive + Debug + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Coefficient ring for polynomials: floats or exact rationals.
pub trait Coeff: Clone + Num + Signed + PartialOrd + Debug {
    fn from_usize(n: usize) -> Self;
    fn to_f64(&self) -> f64;
}

impl Coeff for f32 {
    fn from_usize(n: usize) -> Self {
        n as f32
    }
    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Coeff for f64 {
    fn from_usize(n: usize) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Coeff for BigRational {
    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational image of a finite `f64`.
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_f64(v)
}
