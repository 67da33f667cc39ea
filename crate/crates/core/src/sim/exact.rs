use serde::Serialize;

use super::walk::{walk, DrawSource};
use super::SimError;
use crate::numeric::Scalar;
use crate::protocol::{ProtocolParams, RetryPolicy};

/// Upper bound on the joint draw space accepted by [`enumerate_exact`].
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Exact expectations over every backoff draw sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMetrics<T> {
    pub expected_successes: T,
    pub expected_collided: T,
    pub expected_failures: T,
    /// `completion[s]`: probability that the last station finishes at slot `s`.
    pub completion: Vec<T>,
    /// Distinct draw sequences walked.
    pub paths: u64,
}

impl<T: Scalar> ExactMetrics<T> {
    pub fn completion_quantile(&self, q: &T) -> Option<u64> {
        let mut acc = T::zero();
        for (slot, p) in self.completion.iter().enumerate() {
            acc = acc + p.clone();
            if acc >= *q && !acc.is_zero() {
                return Some(slot as u64);
            }
        }
        None
    }

    pub fn max_completion(&self) -> Option<u64> {
        self.completion
            .iter()
            .rposition(|p| !p.is_zero())
            .map(|s| s as u64)
    }
}

/// `(Π_k W_k)^N`: every station makes at most one draw per stage.
pub fn joint_space_size(params: &ProtocolParams) -> u128 {
    let per_station = (0..=params.nb_max())
        .try_fold(1u128, |acc, k| {
            acc.checked_mul(u128::from(params.window_unchecked(k)))
        })
        .unwrap_or(u128::MAX);
    (0..params.n_stations())
        .try_fold(1u128, |acc, _| acc.checked_mul(per_station))
        .unwrap_or(u128::MAX)
}

/// Replays a recorded prefix of choices and extends it with zeros.
struct Odometer {
    path: Vec<(u64, u64)>,
    cursor: usize,
}

impl DrawSource for Odometer {
    fn draw(&mut self, window: u64) -> u64 {
        let choice = if let Some(&(choice, w)) = self.path.get(self.cursor) {
            debug_assert_eq!(w, window, "walk must be deterministic given its draws");
            choice
        } else {
            self.path.push((0, window));
            0
        };
        self.cursor += 1;
        choice
    }
}

impl Odometer {
    /// Advances to the next unexplored branch; `false` once exhausted.
    fn advance(&mut self) -> bool {
        while let Some((choice, window)) = self.path.pop() {
            if choice + 1 < window {
                self.path.push((choice + 1, window));
                self.cursor = 0;
                return true;
            }
        }
        false
    }
}

/// Walks the whole draw tree depth-first, weighting each leaf by the
/// product of its draw probabilities.
pub fn enumerate_exact<T: Scalar>(
    params: &ProtocolParams,
    policy: RetryPolicy,
) -> Result<ExactMetrics<T>, SimError> {
    let size = joint_space_size(params);
    if size > MAX_ENUMERATION {
        return Err(SimError::SpaceTooLarge {
            size,
            bound: MAX_ENUMERATION,
        });
    }
    let mut out = ExactMetrics {
        expected_successes: T::zero(),
        expected_collided: T::zero(),
        expected_failures: T::zero(),
        completion: Vec::new(),
        paths: 0,
    };
    let mut odo = Odometer {
        path: Vec::new(),
        cursor: 0,
    };
    loop {
        let trial = walk(params, policy, &mut odo);
        let weight = odo
            .path
            .iter()
            .fold(T::one(), |acc, &(_, w)| acc * T::reciprocal_of(w));
        let count = |v: u32| T::from_u32(v).expect("representable") * weight.clone();
        out.expected_successes = out.expected_successes.clone() + count(trial.successes);
        out.expected_collided = out.expected_collided.clone() + count(trial.collided);
        out.expected_failures = out.expected_failures.clone() + count(trial.failures);
        let slot = trial.completion_slot as usize;
        if out.completion.len() <= slot {
            out.completion.resize(slot + 1, T::zero());
        }
        out.completion[slot] = out.completion[slot].clone() + weight;
        out.paths += 1;
        if !odo.advance() {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{validate, RawParams};
    use num_rational::BigRational;
    use num_traits::One;

    fn tiny(n: u32) -> ProtocolParams {
        validate(RawParams {
            be_min: 1,
            be_max: 1,
            nb_max: 0,
            cw: 1,
            packet_len: 1,
            n_stations: n,
        })
        .unwrap()
    }

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    #[test]
    fn two_station_tiny_case() {
        // (0,0) and (1,1) collide; (0,1) and (1,0) give one success.
        let m: ExactMetrics<BigRational> =
            enumerate_exact(&tiny(2), RetryPolicy::NackDone).unwrap();
        assert_eq!(m.paths, 4);
        assert_eq!(m.expected_successes, half());
        assert_eq!(m.expected_failures, half());
        assert_eq!(m.expected_collided, BigRational::one());
    }

    #[test]
    fn lone_station_always_succeeds() {
        let p = validate(RawParams {
            be_min: 2,
            be_max: 4,
            nb_max: 2,
            n_stations: 1,
            ..RawParams::default()
        })
        .unwrap();
        for policy in [RetryPolicy::NackDone, RetryPolicy::CollisionContinue] {
            let m: ExactMetrics<BigRational> = enumerate_exact(&p, policy).unwrap();
            assert_eq!(m.expected_successes, BigRational::one());
            // Never sensed busy: only the stage-0 draw is ever made.
            assert_eq!(m.paths, 4);
        }
    }

    #[test]
    fn completion_distribution_is_normalized() {
        let p = validate(RawParams {
            be_min: 1,
            be_max: 2,
            nb_max: 1,
            cw: 1,
            packet_len: 2,
            n_stations: 2,
        })
        .unwrap();
        for policy in [RetryPolicy::NackDone, RetryPolicy::CollisionContinue] {
            let m: ExactMetrics<BigRational> = enumerate_exact(&p, policy).unwrap();
            let total = m
                .completion
                .iter()
                .cloned()
                .fold(BigRational::from_integer(0.into()), |a, b| a + b);
            assert_eq!(total, BigRational::one());
            let partition = m.expected_successes + m.expected_collided + m.expected_failures;
            assert_eq!(partition, BigRational::from_integer(2.into()));
        }
    }

    #[test]
    fn oversized_space_rejected() {
        let p = validate(RawParams::default()).unwrap();
        assert!(matches!(
            enumerate_exact::<f64>(&p, RetryPolicy::NackDone),
            Err(SimError::SpaceTooLarge { .. })
        ));
        assert_eq!(joint_space_size(&tiny(3)), 8);
    }

    #[test]
    fn quantiles() {
        let m: ExactMetrics<f64> = enumerate_exact(&tiny(2), RetryPolicy::NackDone).unwrap();
        // Completion: slot 1 w.p. 3/4, slot 2 w.p. 1/4.
        assert_eq!(m.completion, vec![0.0, 0.75, 0.25]);
        assert_eq!(m.completion_quantile(&0.5), Some(1));
        assert_eq!(m.completion_quantile(&0.9), Some(2));
        assert_eq!(m.max_completion(), Some(2));
    }
}
