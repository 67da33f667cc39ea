//! Channel-independent attempt probabilities.
//!
//! `d_k(t)` is the probability that a station's k-th CCA falls on slot `t`
//! given every earlier CCA found the channel busy; it is the convolution of
//! the backoff draws of stages `0..=k`. Under [`BackoffSemantics::Corrected`]
//! each retry also spends one deterministic slot, the busy CCA itself.
//! The attempt probability is `a(t) = Σ_k d_k(t)`.

mod pmf;

use serde::Serialize;
use thiserror::Error;

pub use pmf::{Pmf, PmfError};

use crate::numeric::Scalar;
use crate::protocol::{BackoffSemantics, ParamError, ProtocolParams};

/// Default cap on the reachable horizon.
pub const DEFAULT_SLOT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttemptError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("reachable horizon of {t_max} slots exceeds the cap of {cap}")]
    HorizonTooLarge { t_max: u64, cap: u64 },
    #[error("attempt probability {value} at slot {slot} exceeds 1")]
    ProbabilityAboveOne { slot: usize, value: f64 },
}

/// Per-slot attempt probabilities and their per-stage components.
#[derive(Debug, Clone, Serialize)]
pub struct AttemptProfile<T> {
    stage_pmfs: Vec<Pmf<T>>,
    a: Vec<T>,
    t_max: u64,
    semantics: BackoffSemantics,
    params: ProtocolParams,
}

impl<T: Scalar> AttemptProfile<T> {
    /// `d_k` for `k = 0..=nb_max`.
    pub fn stage_pmfs(&self) -> &[Pmf<T>] {
        &self.stage_pmfs
    }

    /// `d_{nb_max}`, the distribution of the final permitted CCA.
    pub fn last_stage(&self) -> &Pmf<T> {
        self.stage_pmfs.last().expect("at least one stage")
    }

    /// `a(t)` for `t = 0..=t_max`.
    pub fn attempts(&self) -> &[T] {
        &self.a
    }

    /// `a(t)`, zero past the horizon.
    pub fn a(&self, t: usize) -> T {
        self.a.get(t).cloned().unwrap_or_else(T::zero)
    }

    /// `d_{nb_max}(t)`, zero past the horizon.
    pub fn last_stage_at(&self, t: usize) -> T {
        self.last_stage().get(t)
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    pub fn semantics(&self) -> BackoffSemantics {
        self.semantics
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }
}

/// Uniform backoff PMF of stage `k`: mass `1/W_k` on `0..W_k`.
pub fn uniform_backoff_pmf<T: Scalar>(
    params: &ProtocolParams,
    stage: u32,
) -> Result<Pmf<T>, ParamError> {
    Ok(Pmf::uniform(params.window_size(stage)?))
}

/// Discrete convolution of two PMFs.
pub fn convolve<T: Scalar>(p: &Pmf<T>, q: &Pmf<T>) -> Pmf<T> {
    p.convolve(q)
}

/// Largest slot at which a CCA can happen.
///
/// Corrected semantics use the closed form
/// `(2 + nb_max − (be_max − be_min))·2^be_max − 2^be_min − 1`, which assumes
/// the window reaches its cap (`nb_max ≥ be_max − be_min`). Below that the
/// geometric sum is truncated: `2^(be_min + nb_max + 1) − 2^be_min − 1`.
/// Naive semantics drop the per-retry slot: `Σ_k (W_k − 1)`.
pub fn max_reach_slot(params: &ProtocolParams, semantics: BackoffSemantics) -> u64 {
    let be_min = u64::from(params.be_min());
    let be_max = u64::from(params.be_max());
    let nb = u64::from(params.nb_max());
    let span = be_max - be_min;
    let corrected = if nb >= span {
        (2 + nb - span) * (1u64 << be_max) - (1u64 << be_min) - 1
    } else {
        (1u64 << (be_min + nb + 1)) - (1u64 << be_min) - 1
    };
    match semantics {
        BackoffSemantics::Corrected => corrected,
        BackoffSemantics::Naive => corrected - nb,
    }
}

/// Builds `d_0..d_{nb_max}` and `a(t)` with the default horizon cap.
pub fn attempt_profile<T: Scalar>(
    params: &ProtocolParams,
    semantics: BackoffSemantics,
) -> Result<AttemptProfile<T>, AttemptError> {
    attempt_profile_capped(params, semantics, DEFAULT_SLOT_CAP)
}

pub fn attempt_profile_capped<T: Scalar>(
    params: &ProtocolParams,
    semantics: BackoffSemantics,
    cap: u64,
) -> Result<AttemptProfile<T>, AttemptError> {
    let t_max = max_reach_slot(params, semantics);
    if t_max > cap {
        return Err(AttemptError::HorizonTooLarge { t_max, cap });
    }
    let retry_shift = match semantics {
        BackoffSemantics::Naive => 0,
        BackoffSemantics::Corrected => 1,
    };

    let mut stage_pmfs: Vec<Pmf<T>> = Vec::with_capacity(params.nb_max() as usize + 1);
    let mut acc = uniform_backoff_pmf(params, 0)?;
    stage_pmfs.push(acc.clone());
    for k in 1..=params.nb_max() {
        let step = uniform_backoff_pmf(params, k)?.shift(retry_shift);
        acc = acc.convolve(&step);
        stage_pmfs.push(acc.clone());
    }
    debug_assert_eq!(acc.support_max() as u64, t_max);

    let len = t_max as usize + 1;
    let mut a = vec![T::zero(); len];
    for d in &stage_pmfs {
        for (slot, p) in d.as_slice().iter().enumerate() {
            a[slot] = a[slot].clone() + p.clone();
        }
    }
    let limit = T::one() + T::mass_tolerance();
    if let Some((slot, value)) = a.iter().enumerate().find(|(_, v)| **v > limit) {
        return Err(AttemptError::ProbabilityAboveOne {
            slot,
            value: value.to_f64_lossy(),
        });
    }

    Ok(AttemptProfile {
        stage_pmfs,
        a,
        t_max,
        semantics,
        params: *params,
    })
}
