//! Outgoing-transition tables of the chain-building process.
//!
//! Each transient state has eight rows, one per noise vector
//! `z = (z_i, z_j, z_k)` (1 = erasure), giving the next state and seven
//! impulse rewards. Row `r` holds `z = (r >> 2 & 1, r >> 1 & 1, r & 1)`.
//!
//! States: 1 start a chain with a fresh pair, 2 the target-`j` symbol was
//! just replaced, 3 the target-`k` symbol was just replaced, 4 resend a new
//! combination of the same pair, 5 chain abandoned, 6 chain decoded.
//! State 3 is state 2 with the roles of `j` and `k` exchanged and is derived
//! rather than written out.

use serde::Serialize;

/// Reward columns, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// Symbols decoded by target `j`.
    TargetJ,
    /// Symbols decoded by target `k`.
    TargetK,
    /// Equations received by the builder.
    Equations,
    /// Symbols pushed to the builder's private queue.
    QueueI,
    /// Symbols pushed to target `j`'s private queue.
    QueueJ,
    /// Symbols pushed to target `k`'s private queue.
    QueueK,
    /// Symbols pushed to the chain-unlocking priority queue.
    QueueStar,
}

impl RewardKind {
    pub const ALL: [RewardKind; 7] = [
        RewardKind::TargetJ,
        RewardKind::TargetK,
        RewardKind::Equations,
        RewardKind::QueueI,
        RewardKind::QueueJ,
        RewardKind::QueueK,
        RewardKind::QueueStar,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column after exchanging the roles of `j` and `k`.
    pub fn swapped(self) -> RewardKind {
        match self {
            RewardKind::TargetJ => RewardKind::TargetK,
            RewardKind::TargetK => RewardKind::TargetJ,
            RewardKind::QueueJ => RewardKind::QueueK,
            RewardKind::QueueK => RewardKind::QueueJ,
            other => other,
        }
    }
}

pub const NUM_STATES: usize = 6;
pub const NON_DECODING: usize = 5;
pub const DECODING: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseRow {
    /// `(z_i, z_j, z_k)`, 1 = erased.
    pub z: [u8; 3],
    /// 1-based next state.
    pub next: usize,
    /// Indexed by [`RewardKind::index`].
    pub rewards: [u8; 7],
}

pub type NoiseTable = [NoiseRow; 8];

const fn row(z: [u8; 3], next: usize, rewards: [u8; 7]) -> NoiseRow {
    NoiseRow { z, next, rewards }
}

//                                   j  k  E  Qi Qj Qk Q*
const STATE1: NoiseTable = [
    row([0, 0, 0], 5, [1, 1, 1, 0, 0, 0, 1]),
    row([0, 0, 1], 2, [1, 0, 1, 0, 0, 0, 0]),
    row([0, 1, 0], 3, [0, 1, 1, 0, 0, 0, 0]),
    row([0, 1, 1], 4, [0, 0, 1, 0, 0, 0, 0]),
    row([1, 0, 0], 5, [1, 1, 0, 2, 0, 0, 0]),
    row([1, 0, 1], 1, [1, 0, 0, 1, 0, 0, 0]),
    row([1, 1, 0], 1, [0, 1, 0, 1, 0, 0, 0]),
    row([1, 1, 1], 1, [0, 0, 0, 0, 0, 0, 0]),
];

const STATE2: NoiseTable = [
    row([0, 0, 0], 5, [1, 1, 1, 0, 0, 0, 1]),
    row([0, 0, 1], 2, [1, 0, 1, 0, 0, 0, 0]),
    row([0, 1, 0], 3, [0, 1, 1, 0, 0, 0, 0]),
    row([0, 1, 1], 4, [0, 0, 1, 0, 0, 0, 0]),
    row([1, 0, 0], 5, [1, 1, 0, 1, 0, 0, 1]),
    row([1, 0, 1], 2, [1, 0, 0, 1, 0, 0, 0]),
    row([1, 1, 0], 5, [0, 1, 0, 0, 0, 0, 1]),
    row([1, 1, 1], 2, [0, 0, 0, 0, 0, 0, 0]),
];

const STATE4: NoiseTable = [
    row([0, 0, 0], 6, [1, 1, 1, 0, 0, 0, 0]),
    row([0, 0, 1], 6, [1, 0, 1, 0, 0, 1, 0]),
    row([0, 1, 0], 6, [0, 1, 1, 0, 1, 0, 0]),
    row([0, 1, 1], 6, [0, 0, 1, 0, 1, 1, 0]),
    row([1, 0, 0], 5, [1, 1, 0, 0, 0, 0, 1]),
    row([1, 0, 1], 2, [1, 0, 0, 0, 0, 0, 0]),
    row([1, 1, 0], 3, [0, 1, 0, 0, 0, 0, 0]),
    row([1, 1, 1], 4, [0, 0, 0, 0, 0, 0, 0]),
];

pub fn row_index(z: [u8; 3]) -> usize {
    (z[0] as usize) << 2 | (z[1] as usize) << 1 | z[2] as usize
}

/// Exchanges the roles of the two targets throughout a table.
pub fn swap_targets(table: &NoiseTable) -> NoiseTable {
    let swap_state = |s: usize| match s {
        2 => 3,
        3 => 2,
        s => s,
    };
    let mut out = *table;
    for (r, slot) in out.iter_mut().enumerate() {
        let z = table[r].z;
        let src = &table[row_index([z[0], z[2], z[1]])];
        let mut rewards = [0; 7];
        for kind in RewardKind::ALL {
            rewards[kind.swapped().index()] = src.rewards[kind.index()];
        }
        *slot = NoiseRow {
            z,
            next: swap_state(src.next),
            rewards,
        };
    }
    out
}

/// Tables for the transient states 1 to 4, in order.
pub fn noise_tables() -> [NoiseTable; 4] {
    [STATE1, STATE2, swap_targets(&STATE2), STATE4]
}

/// Probability of noise vector `z` with role-ordered erasure rates.
pub fn noise_probability(z: [u8; 3], eps: [f64; 3]) -> f64 {
    (0..3)
        .map(|u| if z[u] == 1 { eps[u] } else { 1.0 - eps[u] })
        .product()
}
