//! Symbol-level chaining: the builder collects linked equations over pairs
//! drawn from its two pair queues while both targets are served one new
//! symbol per reception.

use serde::Serialize;

use super::engine::{Engine, Home};
use super::phases::{pick_combo, send_combo};
use crate::chaining::tables::{
    noise_tables, row_index, RewardKind, DECODING, NON_DECODING, NUM_STATES,
};
use crate::feedback_lp::others;

/// Counters kept by the chaining phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ChainStats {
    /// Chain runs that reached the abandoned or decoded state.
    pub runs: u64,
    pub decoded: u64,
    /// `transitions[l][m]`: observed `l -> m` steps (0-based states).
    pub transitions: [[u64; NUM_STATES]; NUM_STATES],
    /// Slots spent on opportunistic combinations.
    pub opportunistic_slots: u64,
    /// Reward totals accumulated from the observed side effects, by
    /// [`RewardKind::index`].
    pub rewards: [u64; 7],
}

pub(crate) enum ChainExit {
    Satisfied,
    /// A feed queue ran dry with a target still unsatisfied.
    Exhausted,
}

struct Run {
    state: usize,
    a: Option<u32>,
    b: Option<u32>,
    chain: Vec<u32>,
    equations: u64,
}

impl Run {
    fn fresh() -> Self {
        Self {
            state: 1,
            a: None,
            b: None,
            chain: Vec::new(),
            equations: 0,
        }
    }
}

/// Runs the chaining state machine with `builder` until a user is satisfied
/// or a feed queue is exhausted.
pub(crate) fn run_chaining(
    e: &mut Engine,
    builder: usize,
    restricted: bool,
    stats: &mut ChainStats,
) -> ChainExit {
    let (j, k) = others(builder);
    // A retired builder no longer owns a share of the feed queues.
    let (feed_j, feed_k) = (
        (1u8 << builder | 1 << j) & e.active,
        (1u8 << builder | 1 << k) & e.active,
    );
    let tables = noise_tables();
    let mut in_chain = vec![false; e.m];
    let mut run = Run::fresh();
    e.builder = Some(builder);
    loop {
        if run.state == 1 && run.a.is_none() && run.b.is_none() && !restricted {
            if let Some(combo) = pick_combo(e, &[j, k]) {
                let mut scratch = [0; 4];
                send_combo(e, combo, "chain-extra", &mut scratch);
                stats.opportunistic_slots += 1;
                if e.settle_satisfied() != 0 {
                    return ChainExit::Satisfied;
                }
                continue;
            }
        }
        for (slot, feed) in [(&mut run.a, feed_j), (&mut run.b, feed_k)] {
            if slot.is_none() {
                if let Some(s) = e.front(feed) {
                    e.set_home(s, Home::Held);
                    *slot = Some(s);
                }
            }
        }
        let (Some(a), Some(b)) = (run.a, run.b) else {
            hand_off(e, &mut run, &mut in_chain, builder);
            return ChainExit::Exhausted;
        };

        let erased = e.draw_noise();
        e.slot += 1;
        let (ri, rj, rk) = (
            !erased[builder] && e.is_active(builder),
            !erased[j],
            !erased[k],
        );
        let mut rewards = [0u8; 7];
        for (u, r) in [(builder, ri), (j, rj), (k, rk)] {
            if r {
                e.receptions[u] += 1;
            }
        }
        if ri && !run.chain.is_empty() && !in_chain[a as usize] && !in_chain[b as usize] {
            e.violation(format!(
                "builder equation on #{a}, #{b} shares nothing with its chain"
            ));
        }
        if rj {
            e.deliver(j, a);
            rewards[RewardKind::TargetJ.index()] = 1;
        }
        if rk {
            e.deliver(k, b);
            rewards[RewardKind::TargetK.index()] = 1;
        }
        if ri {
            run.equations += 1;
            rewards[RewardKind::Equations.index()] = 1;
            for s in [a, b] {
                if !in_chain[s as usize] {
                    in_chain[s as usize] = true;
                    run.chain.push(s);
                }
            }
        }

        let from = run.state;
        let next = if from == 4 && ri {
            let before = e.recon[builder];
            for &s in &run.chain {
                e.deliver(builder, s);
            }
            let gained = e.recon[builder] - before;
            if e.checks && gained != run.equations {
                e.violation(format!(
                    "decoded {gained} symbols from {} equations",
                    run.equations
                ));
            }
            for (s, kind) in [(a, RewardKind::QueueJ), (b, RewardKind::QueueK)] {
                if e.need[s as usize] != 0 {
                    rewards[kind.index()] += 1;
                }
                let h = e.queue_for(s);
                e.set_home(s, h);
            }
            for &s in &run.chain {
                e.settle(s);
            }
            DECODING
        } else if !rj && !rk {
            if ri && !run.chain.is_empty() {
                4
            } else {
                from
            }
        } else {
            for (s, replaced) in [(a, rj), (b, rk)] {
                if replaced && !in_chain[s as usize] {
                    let h = e.queue_for(s);
                    e.set_home(s, h);
                    rewards[RewardKind::QueueI.index()] += 1;
                }
            }
            let alive = (!rj && in_chain[a as usize]) || (!rk && in_chain[b as usize]);
            if rj {
                run.a = None;
            }
            if rk {
                run.b = None;
            }
            if alive {
                if rj {
                    2
                } else {
                    3
                }
            } else if !run.chain.is_empty() {
                let key = if rk && in_chain[b as usize] { b } else { a };
                e.set_home(key, Home::Star);
                rewards[RewardKind::QueueStar.index()] = 1;
                for held in [run.a.take(), run.b.take()].into_iter().flatten() {
                    let h = e.queue_for(held);
                    e.set_home_front(held, h);
                }
                NON_DECODING
            } else if rj && rk {
                NON_DECODING
            } else {
                1
            }
        };

        stats.transitions[from - 1][next - 1] += 1;
        for (t, r) in stats.rewards.iter_mut().zip(rewards) {
            *t += u64::from(r);
        }
        if e.checks {
            let z = [erased[builder], erased[j], erased[k]].map(u8::from);
            let row = &tables[from - 1][row_index(z)];
            if row.next != next || row.rewards != rewards {
                e.violation(format!(
                    "state {from} noise {z:?}: went to {next} with {rewards:?}, table says {} with {:?}",
                    row.next, row.rewards
                ));
            }
        }
        e.log(&format!("chain{from}"), erased, || {
            format!("pair #{a}^#{b} -> {next}")
        });

        if next == NON_DECODING || next == DECODING {
            stats.runs += 1;
            if next == DECODING {
                stats.decoded += 1;
            } else {
                e.store_chain(run.chain.clone());
            }
            for &s in &run.chain {
                in_chain[s as usize] = false;
            }
            if next == DECODING {
                run.a = None;
                run.b = None;
            }
            run.chain.clear();
            run.equations = 0;
            run.state = 1;
        } else {
            run.state = next;
        }
        e.check_conservation();
        if e.settle_satisfied() != 0 {
            hand_off(e, &mut run, &mut in_chain, builder);
            return ChainExit::Satisfied;
        }
    }
}

/// Returns symbols on the air to their queues and stores a live chain so
/// that one delivery to the builder solves it: a member still queued for a
/// target serves as the key, otherwise one member goes to the unlocking
/// queue.
fn hand_off(e: &mut Engine, run: &mut Run, in_chain: &mut [bool], builder: usize) {
    for s in [run.a.take(), run.b.take()].into_iter().flatten() {
        let h = e.queue_for(s);
        e.set_home_front(s, h);
    }
    let members: Vec<u32> = run
        .chain
        .drain(..)
        .filter(|&s| {
            in_chain[s as usize] = false;
            e.need[s as usize] & 1 << builder != 0
        })
        .collect();
    if members.is_empty() {
        return;
    }
    if !members
        .iter()
        .any(|&s| matches!(e.home[s as usize], Home::Queue(_)))
    {
        e.set_home(members[members.len() - 1], Home::Star);
    }
    e.store_chain(members);
}
