//! MAC and network parameters of a batch-arrival scenario.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest backoff exponent accepted.
pub const MAX_BACKOFF_EXPONENT: u32 = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("be_max: must not exceed {MAX_BACKOFF_EXPONENT}, got {0}")]
    BeMaxTooLarge(u32),
    #[error("be_min: must not exceed be_max (be_min={be_min}, be_max={be_max})")]
    BeMinAboveBeMax { be_min: u32, be_max: u32 },
    #[error("cw: must be 1 or 2, got {0}")]
    ContentionWindow(u32),
    #[error("packet_len: must be at least 1 slot")]
    PacketLen,
    #[error("n_stations: must be at least 1")]
    NoStations,
    #[error("stage {stage} out of range 0..={nb_max}")]
    StageOutOfRange { stage: u32, nb_max: u32 },
}

/// Unchecked parameter record, as read from a configuration source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawParams {
    pub be_min: u32,
    pub be_max: u32,
    pub nb_max: u32,
    pub cw: u32,
    pub packet_len: u32,
    pub n_stations: u32,
}

impl Default for RawParams {
    /// Standard backoff values with the NACK-mode contention window of 1.
    fn default() -> Self {
        Self {
            be_min: 3,
            be_max: 5,
            nb_max: 4,
            cw: 1,
            packet_len: 4,
            n_stations: 10,
        }
    }
}

/// Validated parameters. Only obtainable through [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ProtocolParams {
    be_min: u32,
    be_max: u32,
    nb_max: u32,
    cw: u32,
    packet_len: u32,
    n_stations: u32,
}

/// Checks every parameter invariant, reporting the first violation.
pub fn validate(raw: RawParams) -> Result<ProtocolParams, ParamError> {
    if raw.be_max > MAX_BACKOFF_EXPONENT {
        return Err(ParamError::BeMaxTooLarge(raw.be_max));
    }
    if raw.be_min > raw.be_max {
        return Err(ParamError::BeMinAboveBeMax {
            be_min: raw.be_min,
            be_max: raw.be_max,
        });
    }
    if !(1..=2).contains(&raw.cw) {
        return Err(ParamError::ContentionWindow(raw.cw));
    }
    if raw.packet_len == 0 {
        return Err(ParamError::PacketLen);
    }
    if raw.n_stations == 0 {
        return Err(ParamError::NoStations);
    }
    Ok(ProtocolParams {
        be_min: raw.be_min,
        be_max: raw.be_max,
        nb_max: raw.nb_max,
        cw: raw.cw,
        packet_len: raw.packet_len,
        n_stations: raw.n_stations,
    })
}

impl ProtocolParams {
    pub fn be_min(&self) -> u32 {
        self.be_min
    }

    pub fn be_max(&self) -> u32 {
        self.be_max
    }

    /// Index of the last permitted CCA attempt; attempts run `0..=nb_max`.
    pub fn nb_max(&self) -> u32 {
        self.nb_max
    }

    pub fn cw(&self) -> u32 {
        self.cw
    }

    pub fn packet_len(&self) -> u32 {
        self.packet_len
    }

    pub fn n_stations(&self) -> u32 {
        self.n_stations
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            be_min: self.be_min,
            be_max: self.be_max,
            nb_max: self.nb_max,
            cw: self.cw,
            packet_len: self.packet_len,
            n_stations: self.n_stations,
        }
    }

    /// Copy with a different station count / packet length (sweep points).
    pub fn with_point(&self, n_stations: u32, packet_len: u32) -> Result<Self, ParamError> {
        validate(RawParams {
            n_stations,
            packet_len,
            ..self.raw()
        })
    }

    /// Backoff window `W_k = 2^min(be_min + k, be_max)`; draws at stage `k`
    /// are uniform over `0..W_k`.
    pub fn window_size(&self, stage: u32) -> Result<u64, ParamError> {
        if stage > self.nb_max {
            return Err(ParamError::StageOutOfRange {
                stage,
                nb_max: self.nb_max,
            });
        }
        Ok(self.window_unchecked(stage))
    }

    pub(crate) fn window_unchecked(&self, stage: u32) -> u64 {
        let exp = self.be_min.saturating_add(stage).min(self.be_max);
        1u64 << exp
    }
}

/// Whether a zero backoff draw re-senses the slot just sensed busy
/// (`Naive`) or senses the following slot (`Corrected`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackoffSemantics {
    Naive,
    Corrected,
}

/// What a station does after transmitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RetryPolicy {
    /// No acknowledgements: every transmitter is finished, collided or not.
    NackDone,
    /// A collided station carries on at the next backoff stage without
    /// resetting its MAC parameters.
    CollisionContinue,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(be_min: u32, be_max: u32, nb_max: u32, cw: u32, l: u32, n: u32) -> RawParams {
        RawParams {
            be_min,
            be_max,
            nb_max,
            cw,
            packet_len: l,
            n_stations: n,
        }
    }

    #[test]
    fn accepts_standard_defaults() {
        let p = validate(raw(3, 5, 4, 1, 4, 10)).unwrap();
        assert_eq!(p.raw(), RawParams::default());
    }

    #[test]
    fn rejects_inverted_exponents() {
        let err = validate(raw(5, 3, 4, 1, 4, 10)).unwrap_err();
        assert_eq!(
            err,
            ParamError::BeMinAboveBeMax {
                be_min: 5,
                be_max: 3
            }
        );
        assert!(err.to_string().starts_with("be_min"));
    }

    #[test]
    fn rejects_bad_cw_and_zeros() {
        assert_eq!(
            validate(raw(3, 5, 4, 3, 4, 10)).unwrap_err(),
            ParamError::ContentionWindow(3)
        );
        assert_eq!(
            validate(raw(3, 5, 4, 1, 0, 10)).unwrap_err(),
            ParamError::PacketLen
        );
        assert_eq!(
            validate(raw(3, 5, 4, 1, 4, 0)).unwrap_err(),
            ParamError::NoStations
        );
        assert_eq!(
            validate(raw(3, 16, 4, 1, 4, 1)).unwrap_err(),
            ParamError::BeMaxTooLarge(16)
        );
    }

    #[test]
    fn window_sizes_at_defaults() {
        let p = validate(RawParams::default()).unwrap();
        assert_eq!(p.window_size(0).unwrap(), 8);
        assert_eq!(p.window_size(2).unwrap(), 32);
        assert_eq!(p.window_size(4).unwrap(), 32);
        assert!(matches!(
            p.window_size(5),
            Err(ParamError::StageOutOfRange {
                stage: 5,
                nb_max: 4
            })
        ));
    }

    proptest! {
        #[test]
        fn window_nondecreasing_and_capped(be_min in 0u32..=15, span in 0u32..=15, nb in 0u32..20) {
            let be_max = (be_min + span).min(15);
            let p = validate(raw(be_min, be_max, nb, 1, 1, 1)).unwrap();
            let mut prev = 0;
            for k in 0..=nb {
                let w = p.window_size(k).unwrap();
                prop_assert!(w >= prev);
                if be_min + k >= be_max {
                    prop_assert_eq!(w, 1u64 << be_max);
                }
                prev = w;
            }
        }

        #[test]
        fn validate_is_idempotent(be_min in 0u32..17, be_max in 0u32..17, nb in 0u32..8,
                                  cw in 0u32..4, l in 0u32..4, n in 0u32..4) {
            let r = raw(be_min, be_max, nb, cw, l, n);
            if let Ok(p) = validate(r) {
                prop_assert_eq!(validate(p.raw()), Ok(p));
            }
        }
    }
}
