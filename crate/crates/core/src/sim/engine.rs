//! Symbol bookkeeping shared by every phase.
//!
//! Each source symbol carries two user masks: who has reconstructed it and
//! who still needs it. A symbol waiting to be sent lives in the queue indexed
//! by its need mask (`Q_U` holds symbols needed by exactly the users in `U`),
//! in the chain-unlocking queue, or is held by the chaining phase. Queues use
//! lazy deletion: every move bumps the symbol's stamp and stale entries are
//! skipped when they reach the front.

use std::collections::VecDeque;

use rand::Rng as _;

use crate::rng::{self, Rng};

pub(crate) const NO_CHAIN: u32 = u32::MAX;
pub(crate) const ALL: u8 = 0b111;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Home {
    /// Not yet sent by the systematic phase.
    Unsent,
    /// In the queue for this need mask.
    Queue(u8),
    /// In the chain-unlocking queue.
    Star,
    /// Held by the chaining phase: on the air or part of a stalled chain.
    Held,
    /// Needed by nobody.
    Gone,
}

pub(crate) struct Engine {
    pub m: usize,
    pub n: u64,
    pub eps: [f64; 3],
    pub need: Vec<u8>,
    pub known: Vec<u8>,
    pub home: Vec<Home>,
    stamp: Vec<u32>,
    /// Index 0 is the chain-unlocking queue; 1..=7 are the need-mask queues.
    queues: [VecDeque<(u32, u32)>; 8],
    lens: [usize; 8],
    pub chain_of: Vec<u32>,
    pub chains: Vec<Vec<u32>>,
    pub builder: Option<usize>,
    pub next_unsent: usize,
    pub recon: [u64; 3],
    pub target: [u64; 3],
    pub active: u8,
    pub dropped: [u64; 3],
    pub receptions: [u64; 3],
    pub satisfied_at: [Option<u64>; 3],
    pub slot: u64,
    rng: Rng,
    pub trace: Option<Vec<String>>,
    pub checks: bool,
    pub violations: Vec<String>,
}

impl Engine {
    /// `m` symbols, all unsent and needed by every user.
    pub fn new(m: usize, n: u64, eps: [f64; 3], target: [u64; 3], seed: u64) -> Self {
        let mut e = Self {
            m,
            n,
            eps,
            need: vec![ALL; m],
            known: vec![0; m],
            home: vec![Home::Unsent; m],
            stamp: vec![0; m],
            queues: Default::default(),
            lens: [0; 8],
            chain_of: vec![NO_CHAIN; m],
            chains: Vec::new(),
            builder: None,
            next_unsent: 0,
            recon: [0; 3],
            target,
            active: ALL,
            dropped: [0; 3],
            receptions: [0; 3],
            satisfied_at: [None; 3],
            slot: 0,
            rng: rng::from_seed(seed),
            trace: None,
            checks: false,
            violations: Vec::new(),
        };
        // A zero demand is met before anything is sent.
        e.settle_satisfied();
        e
    }

    /// Starts symbol `s` already known to `known` and queued for `need`.
    pub fn preload(&mut self, s: u32, known: u8, need: u8) {
        let si = s as usize;
        self.known[si] = known;
        self.need[si] = need;
        for u in 0..3 {
            self.recon[u] += u64::from(known >> u & 1);
        }
        let h = self.queue_for(s);
        self.set_home(s, h);
    }

    pub fn is_active(&self, u: usize) -> bool {
        self.active & 1 << u != 0
    }

    /// Erasure flags for one slot. Always three draws, so a run replays
    /// exactly from its seed.
    pub fn draw_noise(&mut self) -> [bool; 3] {
        let eps = self.eps;
        std::array::from_fn(|u| self.rng.random::<f64>() < eps[u])
    }

    /// Active users that received this slot.
    pub fn receivers(&self, erased: [bool; 3]) -> u8 {
        (0..3)
            .filter(|&u| !erased[u] && self.is_active(u))
            .fold(0, |m, u| m | 1 << u)
    }

    pub fn len(&self, mask: u8) -> usize {
        self.lens[mask as usize]
    }

    pub fn star_len(&self) -> usize {
        self.lens[0]
    }

    fn slot_of(home: Home) -> Option<usize> {
        match home {
            Home::Queue(m) => Some(m as usize),
            Home::Star => Some(0),
            _ => None,
        }
    }

    /// Moves a symbol, keeping queue lengths in step.
    pub fn set_home(&mut self, s: u32, to: Home) {
        let si = s as usize;
        let from = self.home[si];
        if from == to {
            return;
        }
        if let Some(q) = Self::slot_of(from) {
            self.lens[q] -= 1;
        }
        self.stamp[si] = self.stamp[si].wrapping_add(1);
        self.home[si] = to;
        if let Some(q) = Self::slot_of(to) {
            self.lens[q] += 1;
            self.queues[q].push_back((s, self.stamp[si]));
        }
    }

    /// Like [`set_home`](Self::set_home) but the symbol goes to the front.
    pub fn set_home_front(&mut self, s: u32, to: Home) {
        self.set_home(s, to);
        if let Some(q) = Self::slot_of(to) {
            let entry = self.queues[q].pop_back().expect("just pushed");
            self.queues[q].push_front(entry);
        }
    }

    fn front_slot(&mut self, q: usize) -> Option<u32> {
        let want = if q == 0 {
            Home::Star
        } else {
            Home::Queue(q as u8)
        };
        while let Some(&(s, st)) = self.queues[q].front() {
            if self.home[s as usize] == want && self.stamp[s as usize] == st {
                return Some(s);
            }
            self.queues[q].pop_front();
        }
        None
    }

    pub fn front(&mut self, mask: u8) -> Option<u32> {
        self.front_slot(mask as usize)
    }

    pub fn star_front(&mut self) -> Option<u32> {
        self.front_slot(0)
    }

    pub fn star_items(&self) -> Vec<u32> {
        (0..self.m as u32)
            .filter(|&s| self.home[s as usize] == Home::Star)
            .collect()
    }

    /// Default home for a symbol given its need mask.
    pub fn queue_for(&self, s: u32) -> Home {
        match self.need[s as usize] {
            0 => Home::Gone,
            m => Home::Queue(m),
        }
    }

    /// Re-homes a queued symbol after its need mask changed.
    pub fn settle(&mut self, s: u32) {
        let si = s as usize;
        match self.home[si] {
            Home::Queue(m) if self.need[si] != m => self.set_home(s, self.queue_for(s)),
            Home::Star | Home::Held if self.need[si] == 0 => self.set_home(s, Home::Gone),
            _ => {}
        }
    }

    /// User `u` reconstructs `s`. Returns whether it was new to `u`.
    /// Reconstructing any member of a stored chain makes the builder solve
    /// the whole chain.
    pub fn deliver(&mut self, u: usize, s: u32) -> bool {
        let si = s as usize;
        let bit = 1 << u;
        if self.known[si] & bit != 0 {
            return false;
        }
        self.known[si] |= bit;
        self.need[si] &= !bit;
        self.recon[u] += 1;
        if Some(u) == self.builder && self.chain_of[si] != NO_CHAIN {
            self.unlock(self.chain_of[si]);
        }
        true
    }

    pub fn deliver_and_settle(&mut self, u: usize, s: u32) -> bool {
        let new = self.deliver(u, s);
        self.settle(s);
        new
    }

    /// Registers a stalled chain; decoding any member solves the rest.
    pub fn store_chain(&mut self, members: Vec<u32>) {
        let id = self.chains.len() as u32;
        for &s in &members {
            self.chain_of[s as usize] = id;
        }
        self.chains.push(members);
    }

    fn unlock(&mut self, id: u32) {
        let Some(b) = self.builder else { return };
        let members = std::mem::take(&mut self.chains[id as usize]);
        for &s in &members {
            self.chain_of[s as usize] = NO_CHAIN;
        }
        for &s in &members {
            if self.is_active(b) {
                self.deliver(b, s);
            }
            self.settle(s);
        }
    }

    /// Symbols the builder recovers by decoding the chain-unlocking symbol `s`.
    pub fn unlock_yield(&self, s: u32) -> usize {
        let Some(b) = self.builder else { return 1 };
        match self.chain_of[s as usize] {
            NO_CHAIN => 1,
            id => self.chains[id as usize]
                .iter()
                .filter(|&&x| self.need[x as usize] & 1 << b != 0)
                .count()
                .max(1),
        }
    }

    /// Retires every user whose target is met, lowest index first, and drops
    /// what it no longer needs. Returns the users retired.
    pub fn settle_satisfied(&mut self) -> u8 {
        let mut newly = 0u8;
        for u in 0..3 {
            if self.is_active(u) && self.recon[u] >= self.target[u] {
                newly |= 1 << u;
                self.active &= !(1 << u);
                self.satisfied_at[u] = Some(self.slot);
            }
        }
        if newly != 0 {
            for s in 0..self.m {
                let lost = self.need[s] & newly;
                if lost != 0 {
                    self.need[s] &= !lost;
                    for u in 0..3 {
                        if lost & 1 << u != 0 {
                            self.dropped[u] += 1;
                        }
                    }
                    self.settle(s as u32);
                }
            }
        }
        newly
    }

    /// Moves every unsent symbol into the queue for its need mask.
    pub fn flush_unsent(&mut self) {
        for s in self.next_unsent..self.m {
            if self.home[s] == Home::Unsent {
                let h = self.queue_for(s as u32);
                self.set_home(s as u32, h);
            }
        }
        self.next_unsent = self.m;
    }

    pub fn log(&mut self, phase: &str, erased: [bool; 3], action: impl FnOnce() -> String) {
        if let Some(t) = self.trace.as_mut() {
            let z = erased.map(u8::from);
            t.push(format!(
                "{},{},{},{},{},{}",
                self.slot,
                phase,
                z[0],
                z[1],
                z[2],
                action()
            ));
        }
    }

    pub fn violation(&mut self, what: String) {
        if self.violations.len() < 64 {
            self.violations.push(format!("slot {}: {what}", self.slot));
        }
    }

    /// Full consistency scan. Only runs with checks enabled.
    pub fn check_conservation(&mut self) {
        if !self.checks {
            return;
        }
        let mut known = [0u64; 3];
        let mut owed = [0u64; 3];
        let mut lens = [0usize; 8];
        let mut bad: Vec<String> = Vec::new();
        for s in 0..self.m {
            let (k, n) = (self.known[s], self.need[s]);
            for u in 0..3 {
                known[u] += u64::from(k >> u & 1);
                owed[u] += u64::from(n >> u & 1);
            }
            if k & n != 0 {
                bad.push(format!("symbol {s} both known and needed"));
            }
            if n & !self.active != 0 {
                bad.push(format!("symbol {s} needed by a retired user"));
            }
            if (k | n) & self.active != self.active {
                bad.push(format!(
                    "symbol {s} neither known nor needed by an active user"
                ));
            }
            match self.home[s] {
                Home::Queue(m) => {
                    lens[m as usize] += 1;
                    if m != n {
                        bad.push(format!("symbol {s} in queue {m:03b} but needed by {n:03b}"));
                    }
                }
                Home::Star => {
                    lens[0] += 1;
                    if self.builder.map(|b| 1 << b) != Some(n) {
                        bad.push(format!("unlocking symbol {s} needed by {n:03b}"));
                    }
                }
                Home::Gone if n != 0 => bad.push(format!("discarded symbol {s} still needed")),
                _ => {}
            }
        }
        for u in 0..3 {
            if known[u] != self.recon[u] {
                bad.push(format!(
                    "user {u} count {} but {} known",
                    self.recon[u], known[u]
                ));
            }
            if self.recon[u] + owed[u] + self.dropped[u] != self.m as u64 {
                bad.push(format!(
                    "user {u}: {} known + {} owed + {} dropped != {}",
                    self.recon[u], owed[u], self.dropped[u], self.m
                ));
            }
        }
        if lens != self.lens {
            bad.push(format!(
                "queue lengths {:?} but counted {:?}",
                self.lens, lens
            ));
        }
        for b in bad.into_iter().take(4) {
            self.violation(b);
        }
    }

    /// Normalized sizes of the chain-unlocking queue (index 0) and the
    /// seven need-mask queues.
    pub fn snapshot(&self) -> [f64; 8] {
        self.lens.map(|l| l as f64 / self.n as f64)
    }
}
