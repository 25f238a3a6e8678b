//! Number types shared by the closed-form evaluators.

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Field elements the closed forms are evaluated in: `f64`, or exact
/// rationals when cancellation in alternating sums matters.
pub trait Scalar: Clone + Num + FromPrimitive + ToPrimitive + core::fmt::Debug {}

impl<T: Clone + Num + FromPrimitive + ToPrimitive + core::fmt::Debug> Scalar for T {}

pub type Exact = BigRational;

/// Largest `N` for which the closed forms switch to exact rationals.
pub const EXACT_ARITHMETIC_MAX_N: usize = 12;

/// Exact image of a finite float (every finite `f64` is a dyadic rational).
pub fn lift<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("finite input")
}

pub fn lower<S: Scalar>(v: &S) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn int<S: Scalar>(v: i64) -> S {
    S::from_i64(v).expect("integer fits")
}

pub fn pow<S: Scalar>(base: &S, e: usize) -> S {
    let mut out = S::one();
    for _ in 0..e {
        out = out * base.clone();
    }
    out
}
