use std::ops::Index;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmfError {
    #[error("empty probability vector")]
    Empty,
    #[error("negative probability at offset {0}")]
    Negative(usize),
    #[error("probabilities sum to {total}, expected 1")]
    NotNormalized { total: f64 },
}

/// Probability mass function over non-negative slot offsets.
///
/// Canonical: the last stored entry is nonzero, so `support_max` is the
/// largest reachable offset.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Pmf<T> {
    probs: Vec<T>,
}

impl<T: Scalar> Pmf<T> {
    /// Builds a canonical PMF, rejecting negative or unnormalized input.
    pub fn new(mut probs: Vec<T>) -> Result<Self, PmfError> {
        trim_trailing_zeros(&mut probs);
        if probs.is_empty() {
            return Err(PmfError::Empty);
        }
        if let Some(pos) = probs.iter().position(|p| *p < T::zero()) {
            return Err(PmfError::Negative(pos));
        }
        let total = sum(&probs);
        if !total.is_within(&T::one(), &T::mass_tolerance()) {
            return Err(PmfError::NotNormalized {
                total: total.to_f64_lossy(),
            });
        }
        Ok(Self { probs })
    }

    /// Point mass at `offset`.
    pub fn delta(offset: usize) -> Self {
        let mut probs = vec![T::zero(); offset + 1];
        probs[offset] = T::one();
        Self { probs }
    }

    /// Uniform over `0..width`.
    pub fn uniform(width: u64) -> Self {
        assert!(width > 0, "uniform PMF needs a positive width");
        let w = usize::try_from(width).expect("window fits in memory");
        Self {
            probs: vec![T::reciprocal_of(width); w],
        }
    }

    /// Discrete convolution by direct summation.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = vec![T::zero(); self.probs.len() + other.probs.len() - 1];
        for (s, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (r, q) in other.probs.iter().enumerate() {
                out[s + r] = out[s + r].clone() + p.clone() * q.clone();
            }
        }
        trim_trailing_zeros(&mut out);
        Self { probs: out }
    }

    /// Moves all mass `by` slots later.
    pub fn shift(&self, by: usize) -> Self {
        let mut probs = vec![T::zero(); by];
        probs.extend(self.probs.iter().cloned());
        Self { probs }
    }

    /// Probability at `offset`, zero outside the support.
    pub fn get(&self, offset: usize) -> T {
        self.probs.get(offset).cloned().unwrap_or_else(T::zero)
    }

    pub fn support_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_mass(&self) -> T {
        sum(&self.probs)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }
}

impl<T> Index<usize> for Pmf<T> {
    type Output = T;

    fn index(&self, offset: usize) -> &T {
        &self.probs[offset]
    }
}

fn trim_trailing_zeros<T: Scalar>(v: &mut Vec<T>) {
    while v.last().is_some_and(|p| p.is_zero()) {
        v.pop();
    }
}

fn sum<T: Scalar>(v: &[T]) -> T {
    v.iter().cloned().fold(T::zero(), |acc, p| acc + p)
}
