//! Scalar abstractions shared by the analytical models.
//!
//! Backoff algebra only needs a field, so it runs over exact rationals as
//! well as floats. The Markov chain needs `powi` and friends and is
//! restricted to [`Real`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, One, ToPrimitive, Zero};

/// A field element usable as a probability.
pub trait Scalar:
    Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Absolute tolerance for "sums to one" style checks.
    fn mass_tolerance() -> Self;

    /// `1 / n`, exact where the representation allows it.
    fn reciprocal_of(n: u64) -> Self {
        Self::one() / Self::from_u64(n).expect("count representable")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self > other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }

    fn is_within(&self, other: &Self, tol: &Self) -> bool {
        self.abs_diff(other) <= *tol
    }
}

/// Floating-point scalars, required by the chain kernels.
pub trait Real: Scalar + Float {}

impl Scalar for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn mass_tolerance() -> Self {
        1e-4
    }
}

impl Scalar for BigRational {
    fn mass_tolerance() -> Self {
        Self::zero()
    }

    fn reciprocal_of(n: u64) -> Self {
        BigRational::new(BigInt::one(), BigInt::from(n))
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Binomial coefficient `C(n, k)` as a scalar, computed multiplicatively.
pub fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for step in 0..k {
        acc = acc * T::from_usize(n - step).expect("representable")
            / T::from_usize(step + 1).expect("representable");
    }
    acc
}
