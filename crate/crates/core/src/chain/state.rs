use serde::Serialize;

use crate::numeric::Real;

/// What is occupying the channel, if anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Occupancy {
    Idle,
    SuccessTx,
    CollisionTx,
}

impl Occupancy {
    const ALL: [Occupancy; 3] = [
        Occupancy::Idle,
        Occupancy::SuccessTx,
        Occupancy::CollisionTx,
    ];

    fn index(self) -> usize {
        match self {
            Occupancy::Idle => 0,
            Occupancy::SuccessTx => 1,
            Occupancy::CollisionTx => 2,
        }
    }
}

/// `(remaining, busy_left, occupancy)`; `busy_left == 0` iff idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ChainState {
    pub remaining: u32,
    pub busy_left: u32,
    pub occupancy: Occupancy,
}

impl ChainState {
    pub fn idle(remaining: u32) -> Self {
        Self {
            remaining,
            busy_left: 0,
            occupancy: Occupancy::Idle,
        }
    }

    pub fn busy(remaining: u32, busy_left: u32, occupancy: Occupancy) -> Self {
        debug_assert!(busy_left > 0 && occupancy != Occupancy::Idle);
        Self {
            remaining,
            busy_left,
            occupancy,
        }
    }

    /// The state one slot further into the current occupancy.
    pub fn drained(self, remaining: u32) -> Self {
        if self.busy_left <= 1 {
            Self::idle(remaining)
        } else {
            Self::busy(remaining, self.busy_left - 1, self.occupancy)
        }
    }

    pub fn is_valid(&self) -> bool {
        (self.busy_left == 0) == (self.occupancy == Occupancy::Idle)
    }
}

/// Shape of the dense state array: `(N + 1)·(L + 1)·3` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateSpace {
    pub n_stations: u32,
    pub packet_len: u32,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        (self.n_stations as usize + 1) * (self.packet_len as usize + 1) * 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, s: ChainState) -> usize {
        debug_assert!(s.remaining <= self.n_stations && s.busy_left <= self.packet_len);
        ((s.remaining as usize) * (self.packet_len as usize + 1) + s.busy_left as usize) * 3
            + s.occupancy.index()
    }

    /// Every valid state, in index order.
    pub fn states(&self) -> impl Iterator<Item = ChainState> + '_ {
        (0..=self.n_stations).flat_map(move |i| {
            (0..=self.packet_len).flat_map(move |j| {
                Occupancy::ALL
                    .into_iter()
                    .map(move |o| ChainState {
                        remaining: i,
                        busy_left: j,
                        occupancy: o,
                    })
                    .filter(ChainState::is_valid)
            })
        })
    }
}

/// Probability over chain states at one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution<T> {
    space: StateSpace,
    probs: Vec<T>,
}

impl<T: Real> StateDistribution<T> {
    pub fn zeros(space: StateSpace) -> Self {
        Self {
            space,
            probs: vec![T::zero(); space.len()],
        }
    }

    pub fn point(space: StateSpace, state: ChainState) -> Self {
        let mut d = Self::zeros(space);
        d.probs[space.index(state)] = T::one();
        d
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn get(&self, s: ChainState) -> T {
        self.probs[self.space.index(s)]
    }

    pub(crate) fn add(&mut self, s: ChainState, p: T) {
        let idx = self.space.index(s);
        self.probs[idx] = self.probs[idx] + p;
    }

    /// Non-zero entries.
    pub fn iter(&self) -> impl Iterator<Item = (ChainState, T)> + '_ {
        self.space
            .states()
            .map(|s| (s, self.get(s)))
            .filter(|(_, p)| !p.is_zero())
    }

    pub fn total_mass(&self) -> T {
        self.probs.iter().fold(T::zero(), |acc, p| acc + *p)
    }

    /// Mass on states satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(&ChainState) -> bool) -> T {
        self.iter()
            .filter(|(s, _)| pred(s))
            .fold(T::zero(), |acc, (_, p)| acc + p)
    }

    pub fn expected_remaining(&self) -> T {
        self.iter().fold(T::zero(), |acc, (s, p)| {
            acc + p * T::from_u32(s.remaining).unwrap()
        })
    }
}
