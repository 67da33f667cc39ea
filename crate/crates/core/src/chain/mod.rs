//! Time-inhomogeneous Markov chains over `(remaining, busy_left)` states.
//!
//! Two kernels share one state space. [`KernelKind::Original`] is the
//! classical model: collisions leave the channel free and failures are drawn
//! from idle states. [`KernelKind::Improved`] keeps the channel busy for `L`
//! slots after a collision and only draws failures while the channel is busy.

mod state;
mod weights;

use serde::Serialize;
use thiserror::Error;

pub use state::{ChainState, Occupancy, StateDistribution, StateSpace};
pub use weights::{channel_busy_xi, default_mean_window, transition_weights, TransitionWeights};

use crate::attempt::AttemptProfile;
use crate::numeric::Real;
use crate::protocol::ProtocolParams;
use weights::binomial_pmf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("mean backoff window must be positive, got {0}")]
    MeanWindow(f64),
    #[error("station count {i} out of range 1..={n}")]
    StationsOutOfRange { i: usize, n: usize },
    #[error("the chain models assume a single CCA (cw = 1), got cw = {0}")]
    ContentionWindow(u32),
    #[error("attempt profile was built for different backoff parameters")]
    ProfileMismatch,
    #[error("horizon {horizon} is shorter than t_max + L = {required}")]
    HorizonTooShort { horizon: usize, required: usize },
    #[error("probability mass {total} at slot {slot} is not 1")]
    MassViolation { slot: usize, total: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum KernelKind {
    Original,
    Improved,
}

/// A slot-dependent transition kernel bound to one attempt profile.
#[derive(Debug, Clone)]
pub struct Kernel<'a, T> {
    params: ProtocolParams,
    profile: &'a AttemptProfile<T>,
    kind: KernelKind,
    xi: T,
}

/// Kernel with `ξ` computed from the default mean window.
pub fn build_kernel<'a, T: Real>(
    params: &ProtocolParams,
    profile: &'a AttemptProfile<T>,
    kind: KernelKind,
) -> Result<Kernel<'a, T>, ChainError> {
    let mean_window = T::from_f64(default_mean_window(params)).unwrap();
    build_kernel_with_mean_window(params, profile, kind, mean_window)
}

pub fn build_kernel_with_mean_window<'a, T: Real>(
    params: &ProtocolParams,
    profile: &'a AttemptProfile<T>,
    kind: KernelKind,
    mean_window: T,
) -> Result<Kernel<'a, T>, ChainError> {
    let xi = channel_busy_xi(params, mean_window)?;
    build_kernel_with_xi(params, profile, kind, xi)
}

pub fn build_kernel_with_xi<'a, T: Real>(
    params: &ProtocolParams,
    profile: &'a AttemptProfile<T>,
    kind: KernelKind,
    xi: T,
) -> Result<Kernel<'a, T>, ChainError> {
    if params.cw() != 1 {
        return Err(ChainError::ContentionWindow(params.cw()));
    }
    let pp = profile.params();
    if (pp.be_min(), pp.be_max(), pp.nb_max(), pp.n_stations())
        != (
            params.be_min(),
            params.be_max(),
            params.nb_max(),
            params.n_stations(),
        )
    {
        return Err(ChainError::ProfileMismatch);
    }
    Ok(Kernel {
        params: *params,
        profile,
        kind,
        xi,
    })
}

impl<T: Real> Kernel<'_, T> {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn profile(&self) -> &AttemptProfile<T> {
        self.profile
    }

    pub fn space(&self) -> StateSpace {
        StateSpace {
            n_stations: self.params.n_stations(),
            packet_len: self.params.packet_len(),
        }
    }

    /// Smallest horizon at which every transmission started by `t_max` has
    /// fully drained back to an idle state.
    pub fn default_horizon(&self) -> usize {
        self.profile.t_max() as usize + self.params.packet_len() as usize + 1
    }

    /// Outgoing transitions from `state` at slot `t`. Destinations may repeat.
    pub fn transitions(&self, t: usize, state: ChainState) -> Vec<(ChainState, T)> {
        let i = state.remaining;
        let len = self.params.packet_len();
        if state.busy_left > 0 {
            return match self.kind {
                KernelKind::Original => vec![(state.drained(i), T::one())],
                KernelKind::Improved => {
                    // Channel certainly busy: a last-stage CCA now fails.
                    let eta = self.profile.last_stage_at(t);
                    (0..=i)
                        .map(|m| {
                            let p = binomial_pmf(i as usize, m as usize, eta);
                            (state.drained(i - m), p)
                        })
                        .collect()
                }
            };
        }
        if i == 0 {
            return vec![(state, T::one())];
        }
        let tw = transition_weights(i as usize, t, self.profile, self.xi)
            .expect("remaining within 1..=N");
        let mut out = vec![
            (ChainState::busy(i - 1, len, Occupancy::SuccessTx), tw.s),
            (state, tw.w),
        ];
        match self.kind {
            KernelKind::Original => {
                for (j, fj) in tw.f.iter().enumerate() {
                    out.push((ChainState::idle(i - j as u32), *fj));
                }
            }
            KernelKind::Improved => {
                out.push((ChainState::busy(i, len, Occupancy::CollisionTx), tw.c));
            }
        }
        out
    }

    fn step(&self, t: usize, from: &StateDistribution<T>) -> StateDistribution<T> {
        let mut next = StateDistribution::zeros(from.space());
        for (state, mass) in from.iter() {
            for (dest, p) in self.transitions(t, state) {
                if !p.is_zero() {
                    next.add(dest, mass * p);
                }
            }
        }
        next
    }
}

/// Transient solution and the metrics read from it.
#[derive(Debug, Clone, Serialize)]
pub struct TransientResult<T> {
    pub per_slot: Vec<StateDistribution<T>>,
    pub kernel_kind: KernelKind,
    pub n_stations: u32,
    /// Expected successes by counting each success once as it drains
    /// through `busy_left = 1`.
    pub success_renewal: T,
    /// `Σ_i (N − i)·Σ_j x_{i,j}(horizon)`; known to overcount (departures
    /// include failures). Only computed for the original kernel.
    pub success_leibnitz: Option<T>,
    /// Mass idle at the horizon with stations still waiting.
    pub residual_mass: T,
    /// `F(t)`: mass on `(0, 0)` at slot `t`.
    pub completion_cdf: Vec<T>,
}

impl<T: Real> TransientResult<T> {
    pub fn horizon(&self) -> usize {
        self.per_slot.len() - 1
    }

    pub fn at_horizon(&self) -> &StateDistribution<T> {
        self.per_slot.last().expect("non-empty")
    }

    pub fn expected_remaining(&self) -> Vec<T> {
        self.per_slot
            .iter()
            .map(|d| d.expected_remaining())
            .collect()
    }

    /// First slot `t` with `F(t) ≥ q`, or `None` if never reached.
    pub fn completion_quantile(&self, q: T) -> Option<usize> {
        self.completion_cdf.iter().position(|f| *f >= q)
    }
}

/// Runs the chain from `(N, 0)` for `horizon` slots and fills every metric.
pub fn propagate<T: Real>(
    kernel: &Kernel<'_, T>,
    horizon: usize,
) -> Result<TransientResult<T>, ChainError> {
    let required = kernel.profile.t_max() as usize + kernel.params.packet_len() as usize;
    if horizon < required {
        return Err(ChainError::HorizonTooShort { horizon, required });
    }
    let space = kernel.space();
    let mut per_slot = Vec::with_capacity(horizon + 1);
    per_slot.push(StateDistribution::point(
        space,
        ChainState::idle(kernel.params.n_stations()),
    ));
    for t in 0..horizon {
        let next = kernel.step(t, &per_slot[t]);
        let total = next.total_mass();
        if !(T::one() - total).abs().le(&T::mass_tolerance()) {
            return Err(ChainError::MassViolation {
                slot: t + 1,
                total: total.to_f64().unwrap_or(f64::NAN),
            });
        }
        per_slot.push(next);
    }

    let mut result = TransientResult {
        per_slot,
        kernel_kind: kernel.kind,
        n_stations: kernel.params.n_stations(),
        success_renewal: T::zero(),
        success_leibnitz: None,
        residual_mass: T::zero(),
        completion_cdf: Vec::new(),
    };
    result.success_renewal = success_count_renewal(&result);
    if kernel.kind == KernelKind::Original {
        result.success_leibnitz = Some(success_count_leibnitz(&result));
    }
    result.residual_mass = residual_mass(&result);
    result.completion_cdf = completion_cdf(&result);
    Ok(result)
}

/// `Σ_{t ≥ 1} Σ_i x_{i,1,success}(t)`.
pub fn success_count_renewal<T: Real>(result: &TransientResult<T>) -> T {
    result.per_slot[1..].iter().fold(T::zero(), |acc, d| {
        acc + d.mass_where(|s| s.busy_left == 1 && s.occupancy == Occupancy::SuccessTx)
    })
}

/// Literal departure count at the horizon.
pub fn success_count_leibnitz<T: Real>(result: &TransientResult<T>) -> T {
    leibnitz_departures(result.at_horizon(), result.n_stations)
}

/// `Σ_i (N − i)·Σ_j x_{i,j}` for one distribution.
pub fn leibnitz_departures<T: Real>(dist: &StateDistribution<T>, n_stations: u32) -> T {
    dist.iter().fold(T::zero(), |acc, (s, p)| {
        acc + p * T::from_u32(n_stations - s.remaining).unwrap()
    })
}

/// Mass stranded at the horizon: idle with at least one station left.
pub fn residual_mass<T: Real>(result: &TransientResult<T>) -> T {
    result
        .at_horizon()
        .mass_where(|s| s.remaining >= 1 && s.occupancy == Occupancy::Idle)
}

/// `F(t)` for every recorded slot.
pub fn completion_cdf<T: Real>(result: &TransientResult<T>) -> Vec<T> {
    result
        .per_slot
        .iter()
        .map(|d| d.get(ChainState::idle(0)))
        .collect()
}
