//! Slot-accurate simulation of a batch arrival.
//!
//! Every station starts at slot 0 with a stage-0 backoff draw and senses the
//! channel when its wait reaches zero. After `cw` consecutive clear CCAs at
//! slots ending in `t`, it transmits over `[t + 1, t + L]`. A busy CCA moves
//! to the next stage and the new wait counts from the following slot.

mod exact;
mod walk;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use exact::{enumerate_exact, joint_space_size, ExactMetrics, MAX_ENUMERATION};
pub use walk::{
    DrawSource, Outcome, StationRecord, StationResult, StationStatus, Transmission, TrialOutcome,
};

use crate::protocol::{ProtocolParams, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("a batch needs at least one trial")]
    NoTrials,
    #[error("joint backoff space has {size} outcomes, above the enumeration bound of {bound}")]
    SpaceTooLarge { size: u128, bound: u128 },
}

/// One trial seeded from `seed`.
pub fn run_trial(params: &ProtocolParams, policy: RetryPolicy, seed: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    walk::walk(params, policy, &mut rng)
}

/// One trial driven by an arbitrary draw source.
pub fn run_trial_with(
    params: &ProtocolParams,
    policy: RetryPolicy,
    src: &mut impl DrawSource,
) -> TrialOutcome {
    walk::walk(params, policy, src)
}

/// Trial `index` of a batch rooted at `seed`: the root key with the trial
/// index as ChaCha stream, so trials are independent of scheduling.
fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Aggregated Monte Carlo statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchMetrics {
    pub trials: u64,
    pub mean_successes: f64,
    pub mean_collided: f64,
    pub mean_failures: f64,
    pub stderr_successes: f64,
    pub stderr_collided: f64,
    pub stderr_failures: f64,
    /// `completion_histogram[s]`: trials whose last station finished at slot `s`.
    pub completion_histogram: Vec<u64>,
}

impl BatchMetrics {
    /// Smallest slot `s` with at least a `q` fraction of trials complete by `s`.
    pub fn completion_quantile(&self, q: f64) -> Option<u64> {
        let target = q * self.trials as f64;
        let mut acc = 0u64;
        for (slot, count) in self.completion_histogram.iter().enumerate() {
            acc += count;
            if acc as f64 >= target && acc > 0 {
                return Some(slot as u64);
            }
        }
        None
    }

    pub fn max_completion(&self) -> Option<u64> {
        self.completion_histogram
            .iter()
            .rposition(|c| *c > 0)
            .map(|s| s as u64)
    }
}

/// Integer accumulator; merging is exact so the parallel schedule cannot
/// change the result.
#[derive(Default, Clone)]
struct Tally {
    sums: [u64; 3],
    squares: [u64; 3],
    histogram: Vec<u64>,
}

impl Tally {
    fn record(mut self, t: &TrialOutcome) -> Self {
        for (k, v) in [t.successes, t.collided, t.failures]
            .into_iter()
            .enumerate()
        {
            self.sums[k] += u64::from(v);
            self.squares[k] += u64::from(v) * u64::from(v);
        }
        let slot = t.completion_slot as usize;
        if self.histogram.len() <= slot {
            self.histogram.resize(slot + 1, 0);
        }
        self.histogram[slot] += 1;
        self
    }

    fn merge(mut self, other: Self) -> Self {
        for k in 0..3 {
            self.sums[k] += other.sums[k];
            self.squares[k] += other.squares[k];
        }
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            *a += b;
        }
        self
    }
}

fn mean_and_stderr(sum: u64, squares: u64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((squares as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Runs `trials` independent trials in parallel.
pub fn run_batch(
    params: &ProtocolParams,
    policy: RetryPolicy,
    trials: u64,
    seed: u64,
) -> Result<BatchMetrics, SimError> {
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let tally = (0..trials)
        .into_par_iter()
        .fold(Tally::default, |acc, k| {
            let outcome = walk::walk(params, policy, &mut trial_rng(seed, k));
            acc.record(&outcome)
        })
        .reduce(Tally::default, Tally::merge);

    let (mean_successes, stderr_successes) =
        mean_and_stderr(tally.sums[0], tally.squares[0], trials);
    let (mean_collided, stderr_collided) = mean_and_stderr(tally.sums[1], tally.squares[1], trials);
    let (mean_failures, stderr_failures) = mean_and_stderr(tally.sums[2], tally.squares[2], trials);
    Ok(BatchMetrics {
        trials,
        mean_successes,
        mean_collided,
        mean_failures,
        stderr_successes,
        stderr_collided,
        stderr_failures,
        completion_histogram: tally.histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{validate, RawParams};

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

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(
            run_batch(&tiny(2), RetryPolicy::NackDone, 0, 1).unwrap_err(),
            SimError::NoTrials
        );
    }

    #[test]
    fn single_trial_batch_has_zero_stderr() {
        let b = run_batch(&tiny(2), RetryPolicy::NackDone, 1, 9).unwrap();
        let t = walk::walk(&tiny(2), RetryPolicy::NackDone, &mut trial_rng(9, 0));
        assert_eq!(b.mean_successes, f64::from(t.successes));
        assert_eq!(b.mean_collided, f64::from(t.collided));
        assert_eq!(b.mean_failures, f64::from(t.failures));
        assert_eq!(
            (b.stderr_successes, b.stderr_collided, b.stderr_failures),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn trial_is_deterministic() {
        let p = validate(RawParams::default()).unwrap();
        for policy in [RetryPolicy::NackDone, RetryPolicy::CollisionContinue] {
            assert_eq!(run_trial(&p, policy, 77), run_trial(&p, policy, 77));
        }
    }

    #[test]
    fn stream_split_gives_distinct_trials() {
        let p = validate(RawParams::default()).unwrap();
        let a = walk::walk(&p, RetryPolicy::NackDone, &mut trial_rng(5, 0));
        let b = walk::walk(&p, RetryPolicy::NackDone, &mut trial_rng(5, 1));
        assert_ne!(a.transmissions, b.transmissions);
    }

    #[test]
    fn quantiles_from_histogram() {
        let b = BatchMetrics {
            trials: 4,
            mean_successes: 0.0,
            mean_collided: 0.0,
            mean_failures: 0.0,
            stderr_successes: 0.0,
            stderr_collided: 0.0,
            stderr_failures: 0.0,
            completion_histogram: vec![0, 1, 1, 0, 2],
        };
        assert_eq!(b.completion_quantile(0.5), Some(2));
        assert_eq!(b.completion_quantile(0.9), Some(4));
        assert_eq!(b.max_completion(), Some(4));
    }
}
