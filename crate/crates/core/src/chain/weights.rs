use serde::Serialize;

use super::ChainError;
use crate::attempt::AttemptProfile;
use crate::numeric::{binomial, Real};
use crate::protocol::ProtocolParams;

/// Per-slot transition probabilities out of an idle state with `i`
/// contenders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionWeights<T> {
    /// Exactly one contender attempts.
    pub s: T,
    /// No contender attempts.
    pub w: T,
    /// Two or more attempt (collision).
    pub c: T,
    /// `f[j]`: collision during which `j` contenders fail their last CCA.
    pub f: Vec<T>,
    pub eta: T,
    pub xi: T,
}

/// Mean of the first backoff window, `(2^be_min − 1) / 2`.
pub fn default_mean_window(params: &ProtocolParams) -> f64 {
    ((1u64 << params.be_min()) as f64 - 1.0) / 2.0
}

/// Constant channel-busy probability `ξ = min(1, L·(N−1)/E[W])`.
pub fn channel_busy_xi<T: Real>(params: &ProtocolParams, mean_window: T) -> Result<T, ChainError> {
    if mean_window.is_nan() || mean_window <= T::zero() {
        return Err(ChainError::MeanWindow(
            mean_window.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let load = T::from_u32(params.packet_len()).unwrap()
        * T::from_u32(params.n_stations() - 1).unwrap()
        / mean_window;
    Ok(load.min(T::one()))
}

/// `P(Binomial(n, p) = k)`.
pub(crate) fn binomial_pmf<T: Real>(n: usize, k: usize, p: T) -> T {
    binomial::<T>(n, k) * p.powi(k as i32) * (T::one() - p).powi((n - k) as i32)
}

/// Weights for `i` contenders at slot `t`.
///
/// `c` is accumulated from the `≥ 2` binomial terms rather than `1 − s − w`
/// so it is never negative and is exactly zero for a lone station.
pub fn transition_weights<T: Real>(
    i: usize,
    t: usize,
    profile: &AttemptProfile<T>,
    xi: T,
) -> Result<TransitionWeights<T>, ChainError> {
    let n = profile.params().n_stations() as usize;
    if i == 0 || i > n {
        return Err(ChainError::StationsOutOfRange { i, n });
    }
    let a = profile.a(t);
    let s = binomial_pmf(i, 1, a);
    let w = binomial_pmf(i, 0, a);
    let c = (2..=i).fold(T::zero(), |acc, m| acc + binomial_pmf(i, m, a));
    let eta = profile.last_stage_at(t) * xi;
    let f = (0..=i).map(|j| c * binomial_pmf(i, j, eta)).collect();
    Ok(TransitionWeights {
        s,
        w,
        c,
        f,
        eta,
        xi,
    })
}
