//! Systematic, network-coding, two-user fallback and idealized coding phases.

use super::engine::{Engine, ALL};
use crate::error::{Error, Result};
use crate::feedback_lp::{solve_queue_lp, ChannelTriple, QueueClass};

/// One transmitted combination: each part is a symbol and the users meant to
/// decode it. Every other user on the air already knows that symbol.
pub(crate) type Parts = Vec<(u32, u8)>;

fn describe(parts: &Parts) -> String {
    parts
        .iter()
        .map(|(s, _)| format!("#{s}"))
        .collect::<Vec<_>>()
        .join("^")
}

/// Sends one combination, applies the receptions and re-homes the parts.
/// With `innovative` set, flags any receiving user that does not gain
/// exactly one symbol. Returns the receiving mask.
pub(crate) fn send(e: &mut Engine, parts: &Parts, phase: &str, kind: &str, innovative: bool) -> u8 {
    let erased = e.draw_noise();
    e.slot += 1;
    let rcv = e.receivers(erased);
    let before = e.recon;
    for u in (0..3).filter(|&u| rcv & 1 << u != 0) {
        e.receptions[u] += 1;
        if let Some(&(s, _)) = parts.iter().find(|(_, m)| m & 1 << u != 0) {
            e.deliver(u, s);
        }
    }
    for &(s, _) in parts {
        e.settle(s);
    }
    if innovative && e.checks {
        for u in (0..3).filter(|&u| rcv & 1 << u != 0) {
            if e.recon[u] != before[u] + 1 {
                e.violation(format!(
                    "user {u} gained {} symbols from {kind}",
                    e.recon[u] - before[u]
                ));
            }
        }
    }
    e.log(phase, erased, || format!("{kind} {}", describe(parts)));
    e.check_conservation();
    rcv
}

/// Why a phase stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Exit {
    /// Ran to its own end condition.
    Done,
    /// Some user met its target.
    Satisfied,
}

/// Sends every symbol until at least one user receives it and files it under
/// the set of users that missed it. With the event handler on, stops as soon
/// as a user is satisfied.
pub(crate) fn run_systematic(e: &mut Engine, handler: bool) -> Exit {
    while e.next_unsent < e.m {
        let s = e.next_unsent as u32;
        let erased = e.draw_noise();
        e.slot += 1;
        let rcv = e.receivers(erased);
        for u in (0..3).filter(|&u| rcv & 1 << u != 0) {
            e.receptions[u] += 1;
            let before = e.recon[u];
            e.deliver(u, s);
            if e.checks && e.recon[u] != before + 1 {
                e.violation(format!("user {u} did not gain the systematic symbol"));
            }
        }
        if rcv != 0 {
            let h = e.queue_for(s);
            e.set_home(s, h);
            e.next_unsent += 1;
        }
        e.log("systematic", erased, || format!("uncoded #{s}"));
        e.check_conservation();
        if handler && e.settle_satisfied() != 0 {
            return Exit::Satisfied;
        }
    }
    Exit::Done
}

/// Combination chosen by the network-coding phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Combo {
    /// `q_i ^ q_jk`.
    Pair(usize),
    /// `q_1 ^ q_2 ^ q_3`.
    Triple,
}

pub(crate) fn pick_combo(e: &Engine, pairs: &[usize]) -> Option<Combo> {
    for &i in pairs {
        let single = 1u8 << i;
        if e.len(single) > 0 && e.len(ALL ^ single) > 0 {
            return Some(Combo::Pair(i));
        }
    }
    (e.len(1) > 0 && e.len(2) > 0 && e.len(4) > 0).then_some(Combo::Triple)
}

/// Sends one network-coding combination. Returns the receiving mask.
pub(crate) fn send_combo(e: &mut Engine, combo: Combo, phase: &str, slots: &mut [u64; 4]) -> u8 {
    let parts: Parts = match combo {
        Combo::Pair(i) => {
            let single = 1u8 << i;
            let a = e.front(single).expect("checked nonempty");
            let b = e.front(ALL ^ single).expect("checked nonempty");
            vec![(a, single), (b, ALL ^ single)]
        }
        Combo::Triple => (0..3)
            .map(|u| (e.front(1 << u).expect("checked nonempty"), 1u8 << u))
            .collect(),
    };
    let (idx, kind) = match combo {
        Combo::Pair(i) => (i, "pair"),
        Combo::Triple => (3, "triple"),
    };
    slots[idx] += 1;
    send(e, &parts, phase, kind, true)
}

/// Pairs singleton queues with the complementary pair queue, then falls
/// back to triples, until neither is available. `slots` counts pairings by
/// user, then triples.
pub(crate) fn run_network_coding(e: &mut Engine, handler: bool, slots: &mut [u64; 4]) -> Exit {
    while let Some(combo) = pick_combo(e, &[0, 1, 2]) {
        send_combo(e, combo, "nc", slots);
        if handler && e.settle_satisfied() != 0 {
            return Exit::Satisfied;
        }
    }
    Exit::Done
}

/// Whether the queues are in a valid stopping configuration.
pub(crate) fn stopping_shape_ok(e: &Engine) -> bool {
    let blocked = (0..3).all(|i| e.len(1 << i) == 0 || e.len(ALL ^ 1 << i) == 0);
    blocked && (0..3).any(|l| e.len(1 << l) == 0)
}

/// Builder for the tail phase: the user common to every remaining queue, or
/// the best-channel user when all three pair queues remain.
pub(crate) fn tail_builder(e: &Engine) -> Option<usize> {
    let nonempty: Vec<u8> = (1..8u8).filter(|&m| e.len(m) > 0).collect();
    if nonempty.is_empty() {
        return None;
    }
    let common = nonempty.iter().fold(ALL, |acc, &m| acc & m);
    if common != 0 {
        // A unique common user when two pair queues remain; with a single
        // queue left, prefer the one with the best channel.
        return (0..3)
            .filter(|&u| common & 1 << u != 0)
            .min_by(|&a, &b| e.eps[a].total_cmp(&e.eps[b]));
    }
    (0..3).min_by(|&a, &b| e.eps[a].total_cmp(&e.eps[b]))
}

/// The builder's side of a pairwise combination: the chain-unlocking queue
/// first, then its own singleton queue.
fn side(e: &mut Engine, u: usize) -> Option<u32> {
    if e.builder == Some(u) {
        if let Some(s) = e.star_front() {
            return Some(s);
        }
    }
    e.front(1 << u)
}

/// Serves the users that remain after one is satisfied: `q_x ^ q_y` when both
/// sides have a symbol, else the shared queue uncoded, else a singleton
/// uncoded. Runs until every user is satisfied.
pub(crate) fn run_fallback(e: &mut Engine) -> Result<()> {
    e.flush_unsent();
    if let Some(u) = (0..3).find(|&u| e.is_active(u) && e.eps[u] >= 1.0) {
        return Err(Error::Numeric(format!(
            "user {u} never receives and cannot be satisfied"
        )));
    }
    while e.active != 0 {
        let users: Vec<usize> = (0..3).filter(|&u| e.is_active(u)).collect();
        let parts: Parts = if let [x, y] = users[..] {
            let (px, py) = (side(e, x), side(e, y));
            let shared = 1u8 << x | 1 << y;
            match (px, py) {
                (Some(a), Some(b)) => vec![(a, 1 << x), (b, 1 << y)],
                _ => match e.front(shared) {
                    Some(s) => vec![(s, shared)],
                    None => match px.map(|s| (s, 1u8 << x)).or(py.map(|s| (s, 1u8 << y))) {
                        Some(p) => vec![p],
                        None => return Err(stalled(e)),
                    },
                },
            }
        } else {
            let x = users[0];
            match side(e, x) {
                Some(s) => vec![(s, 1 << x)],
                None => return Err(stalled(e)),
            }
        };
        let kind = if parts.len() == 2 { "pair" } else { "uncoded" };
        send(e, &parts, "fallback", kind, false);
        e.settle_satisfied();
    }
    Ok(())
}

fn stalled(e: &Engine) -> Error {
    Error::Numeric(format!(
        "no symbol left to send at slot {} with users {:03b} unsatisfied",
        e.slot, e.active
    ))
}

/// Idealized capacity-achieving coding over whatever is left: solves the
/// queue-splitting LP on the measured queues and demands, charges its
/// objective as slots and delivers the allocated symbols. Returns the slots
/// charged.
pub(crate) fn run_preprocess(e: &mut Engine, eps: &ChannelTriple) -> Result<u64> {
    e.flush_unsent();
    let n = e.n as f64;
    let demands: [f64; 3] = std::array::from_fn(|u| {
        if e.is_active(u) {
            e.target[u].saturating_sub(e.recon[u]) as f64 / n
        } else {
            0.0
        }
    });
    // Class 0 is the chain-unlocking queue, 1..=7 the need-mask queues.
    let mut classes = Vec::new();
    let mut sources = Vec::new();
    if let (Some(b), true) = (e.builder, e.star_len() > 0) {
        let star = e.star_items();
        let total: usize = star.iter().map(|&s| e.unlock_yield(s)).sum();
        classes.push(QueueClass {
            members: 1 << b,
            items: star.len() as f64 / n,
            yield_per_item: total as f64 / star.len() as f64,
        });
        sources.push(None);
    }
    for m in 1..8u8 {
        if e.len(m) > 0 {
            classes.push(QueueClass {
                members: m,
                items: e.len(m) as f64 / n,
                yield_per_item: 1.0,
            });
            sources.push(Some(m));
        }
    }
    let lp = match solve_queue_lp(&classes, eps, demands) {
        Ok(lp) => lp,
        Err(Error::Infeasible) => {
            return Err(Error::Config(
                "remaining demands exceed the queue content".into(),
            ))
        }
        Err(err) => return Err(err),
    };
    for &(c, set, amount) in &lp.allocations {
        let count = (amount * n - 1e-9).ceil().max(0.0) as usize;
        for _ in 0..count {
            let s = match sources[c] {
                None => e.star_front(),
                Some(m) => e.front(m),
            };
            let Some(s) = s else { break };
            for u in 0..3 {
                if set & 1 << u != 0 && e.is_active(u) {
                    e.deliver(u, s);
                }
            }
            e.settle(s);
        }
    }
    // Rounding can leave a user a few symbols short; serve those point to
    // point at that user's rate.
    let mut extra = 0.0;
    for u in 0..3 {
        while e.is_active(u) && e.recon[u] < e.target[u] {
            let Some(s) = side(e, u).or_else(|| {
                (1..8u8)
                    .filter(|&m| m & 1 << u != 0)
                    .find_map(|m| e.front(m))
            }) else {
                return Err(Error::Config(
                    "remaining demands exceed the queue content".into(),
                ));
            };
            e.deliver_and_settle(u, s);
            extra += 1.0 / (1.0 - eps.eps(u));
        }
    }
    let charged = (lp.latency * n + extra - 1e-9).ceil().max(0.0) as u64;
    e.slot += charged;
    e.log("preprocess", [false; 3], || {
        format!("coded block {charged} slots")
    });
    e.settle_satisfied();
    e.check_conservation();
    Ok(charged)
}
