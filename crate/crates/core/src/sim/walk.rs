use serde::Serialize;

use crate::protocol::{ProtocolParams, RetryPolicy};

/// Source of uniform backoff draws.
pub trait DrawSource {
    /// A value in `0..window`.
    fn draw(&mut self, window: u64) -> u64;
}

impl<R: rand::Rng> DrawSource for R {
    fn draw(&mut self, window: u64) -> u64 {
        self.gen_range(0..window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Outcome {
    /// Sole occupant of its transmission slots.
    Success,
    /// Transmitted with overlap and finished (terminal).
    Collided,
    /// Busy CCA at the last permitted stage.
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StationStatus {
    Backing,
    Sensing,
    Transmitting { ends_at: u64 },
    Done { outcome: Outcome, finish_slot: u64 },
}

/// Live MAC state of one station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StationRecord {
    pub stage: u32,
    /// Slots left before the next CCA.
    pub wait: u64,
    pub cca_progress: u32,
    pub status: StationStatus,
}

/// One transmission on the channel, inclusive slot range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transmission {
    pub station: usize,
    pub start: u64,
    pub end: u64,
    pub collided: bool,
}

impl Transmission {
    pub fn overlaps(&self, other: &Transmission) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StationResult {
    pub outcome: Outcome,
    pub finish_slot: u64,
    /// CCAs that found the channel busy.
    pub busy_ccas: u32,
    pub ccas: u32,
    pub transmissions: u32,
    /// Highest stage reached at each transmission, in order.
    pub stage_at_transmissions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub stations: Vec<StationResult>,
    pub successes: u32,
    pub collided: u32,
    pub failures: u32,
    pub completion_slot: u64,
    /// Channel trace.
    pub transmissions: Vec<Transmission>,
}

struct Station {
    rec: StationRecord,
    busy_ccas: u32,
    ccas: u32,
    stages_tx: Vec<u32>,
}

/// Deterministic slot walk of one batch arrival.
///
/// Within a slot, CCAs are evaluated in station order before transmission
/// ends are resolved, so every random draw has a fixed position in the
/// sequence handed to `src`.
pub(crate) fn walk(
    params: &ProtocolParams,
    policy: RetryPolicy,
    src: &mut impl DrawSource,
) -> TrialOutcome {
    let n = params.n_stations() as usize;
    let len = u64::from(params.packet_len());
    let mut stations: Vec<Station> = (0..n)
        .map(|_| Station {
            rec: StationRecord {
                stage: 0,
                wait: src.draw(params.window_unchecked(0)),
                cca_progress: 0,
                status: StationStatus::Backing,
            },
            busy_ccas: 0,
            ccas: 0,
            stages_tx: Vec::new(),
        })
        .collect();
    let mut trace: Vec<Transmission> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut pending = n;
    let mut t: u64 = 0;

    while pending > 0 {
        let busy = active
            .iter()
            .any(|&k| trace[k].start <= t && t <= trace[k].end);

        for (id, st) in stations.iter_mut().enumerate() {
            let rec = &mut st.rec;
            match rec.status {
                StationStatus::Backing if rec.wait > 0 => {
                    rec.wait -= 1;
                    continue;
                }
                StationStatus::Backing | StationStatus::Sensing => {}
                _ => continue,
            }
            st.ccas += 1;
            if busy {
                st.busy_ccas += 1;
                rec.cca_progress = 0;
                rec.stage += 1;
                if rec.stage > params.nb_max() {
                    rec.status = StationStatus::Done {
                        outcome: Outcome::Failure,
                        finish_slot: t,
                    };
                    pending -= 1;
                } else {
                    rec.wait = src.draw(params.window_unchecked(rec.stage));
                    rec.status = StationStatus::Backing;
                }
            } else {
                rec.cca_progress += 1;
                if rec.cca_progress == params.cw() {
                    rec.cca_progress = 0;
                    rec.status = StationStatus::Transmitting { ends_at: t + len };
                    st.stages_tx.push(rec.stage);
                    active.push(trace.len());
                    trace.push(Transmission {
                        station: id,
                        start: t + 1,
                        end: t + len,
                        collided: false,
                    });
                } else {
                    rec.status = StationStatus::Sensing;
                }
            }
        }

        // Transmissions ending this slot: every overlapping partner has
        // already started, so collision status is final.
        let mut still_active = Vec::with_capacity(active.len());
        let mut ending = Vec::new();
        for &k in &active {
            if trace[k].end == t {
                ending.push(k);
            } else {
                still_active.push(k);
            }
        }
        for &k in &ending {
            let collided = trace
                .iter()
                .enumerate()
                .any(|(other, tx)| other != k && tx.overlaps(&trace[k]));
            trace[k].collided = collided;
        }
        for &k in &ending {
            let rec = &mut stations[trace[k].station].rec;
            let collided = trace[k].collided;
            let finish = |outcome| StationStatus::Done {
                outcome,
                finish_slot: t,
            };
            match (policy, collided) {
                (_, false) => {
                    rec.status = finish(Outcome::Success);
                    pending -= 1;
                }
                (RetryPolicy::NackDone, true) => {
                    rec.status = finish(Outcome::Collided);
                    pending -= 1;
                }
                (RetryPolicy::CollisionContinue, true) => {
                    rec.stage += 1;
                    if rec.stage > params.nb_max() {
                        rec.status = finish(Outcome::Collided);
                        pending -= 1;
                    } else {
                        rec.wait = src.draw(params.window_unchecked(rec.stage));
                        rec.status = StationStatus::Backing;
                    }
                }
            }
        }
        active = still_active;
        t += 1;
    }

    let mut out = TrialOutcome {
        stations: Vec::with_capacity(n),
        successes: 0,
        collided: 0,
        failures: 0,
        completion_slot: 0,
        transmissions: trace,
    };
    for st in stations {
        let StationStatus::Done {
            outcome,
            finish_slot,
        } = st.rec.status
        else {
            unreachable!("walk ends only when every station is done");
        };
        match outcome {
            Outcome::Success => out.successes += 1,
            Outcome::Collided => out.collided += 1,
            Outcome::Failure => out.failures += 1,
        }
        out.completion_slot = out.completion_slot.max(finish_slot);
        out.stations.push(StationResult {
            outcome,
            finish_slot,
            busy_ccas: st.busy_ccas,
            ccas: st.ccas,
            transmissions: st.stages_tx.len() as u32,
            stage_at_transmissions: st.stages_tx,
        });
    }
    out
}
