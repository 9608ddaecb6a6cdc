//! Latency analysis of the instantly-decodable three-user scheme.
//!
//! Users are indexed `0, 1, 2`. For user `i`, `j` and `k` always denote the
//! other two users in increasing order.
//!
//! The uncoded phase is summarized by four normalized durations: `t0`, the
//! systematic phase, and `t[i]`, the time spent pairing user `i`'s private
//! queue with the queue of symbols missed by both `j` and `k`. The pairing
//! durations are the unique fixed point of
//!
//! ```text
//! t[i] = min(Q_i⁺(t[j], t[k]) / (1 - ε_i), Q_jk⁺ / (1 - ε_j ε_k))
//! ```
//!
//! which is also the optimum of a three-variable LP; [`uncoded_lp_problem`]
//! builds that LP so the two can be compared.

mod lp;
mod preprocess;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use lp::solve_by_vertices;
pub use lp::{solve_small_lp, Constraint, LpSolution, MAX_CONSTRAINTS, MAX_VARS};
pub use preprocess::{
    solve_preprocess_lp, solve_queue_lp, PreprocessInstance, PreprocessSolution, QueueClass,
    QueueLpSolution, DELTA_NAMES,
};

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITERS: u64 = 1_000_000;
/// Smallest residual queue counted as nonempty.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// The two users other than `i`, ascending.
pub fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("user index {i} out of range"),
    }
}

/// Per-user erasure probabilities, each in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ChannelTriple {
    eps: [f64; 3],
}

impl ChannelTriple {
    pub fn new(eps: [f64; 3]) -> Result<Self> {
        if let Some(e) = eps.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return Err(Error::InvalidInput(format!(
                "erasure probability {e} not in [0, 1)"
            )));
        }
        Ok(Self { eps })
    }

    pub fn get(&self) -> [f64; 3] {
        self.eps
    }

    pub fn eps(&self, i: usize) -> f64 {
        self.eps[i]
    }
}

impl TryFrom<[f64; 3]> for ChannelTriple {
    type Error = Error;

    fn try_from(eps: [f64; 3]) -> Result<Self> {
        Self::new(eps)
    }
}

impl From<ChannelTriple> for [f64; 3] {
    fn from(c: ChannelTriple) -> Self {
        c.eps
    }
}

/// Per-user distortion targets, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct DistortionTriple {
    d: [f64; 3],
}

impl DistortionTriple {
    pub fn new(d: [f64; 3]) -> Result<Self> {
        if let Some(x) = d.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidInput(format!("distortion {x} not in [0, 1]")));
        }
        Ok(Self { d })
    }

    /// `d_i = ε_i²`.
    pub fn quadratic(eps: &ChannelTriple) -> Self {
        Self {
            d: eps.get().map(|e| e * e),
        }
    }

    pub fn get(&self) -> [f64; 3] {
        self.d
    }

    pub fn d(&self, i: usize) -> f64 {
        self.d[i]
    }
}

impl TryFrom<[f64; 3]> for DistortionTriple {
    type Error = Error;

    fn try_from(d: [f64; 3]) -> Result<Self> {
        Self::new(d)
    }
}

impl From<DistortionTriple> for [f64; 3] {
    fn from(d: DistortionTriple) -> Self {
        d.d
    }
}

/// Expected length of the systematic phase per source symbol.
pub fn systematic_latency(eps: &ChannelTriple) -> f64 {
    let [a, b, c] = eps.get();
    1.0 / (1.0 - a * b * c)
}

/// Expected peak queue sizes, normalized by the block length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueBounds {
    /// `pair[i]`: symbols missed by exactly `j` and `k`.
    pub pair: [f64; 3],
    /// `single[i]`: symbols missed only by `i`, including those migrated in
    /// while the other two pairings run for `t[j]` and `t[k]`.
    pub single: [f64; 3],
}

pub fn queue_bounds(eps: &ChannelTriple, t: [f64; 3]) -> QueueBounds {
    let t0 = systematic_latency(eps);
    let e = eps.get();
    let mut pair = [0.0; 3];
    let mut single = [0.0; 3];
    for i in 0..3 {
        let (j, k) = others(i);
        pair[i] = t0 * (1.0 - e[i]) * e[j] * e[k];
        single[i] = t0 * e[i] * (1.0 - e[j]) * (1.0 - e[k])
            + t[j] * e[i] * (1.0 - e[k])
            + t[k] * e[i] * (1.0 - e[j]);
    }
    QueueBounds { pair, single }
}

/// Which bound determines a pairing duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveConstraint {
    /// User `i`'s private queue runs out first.
    QueueIBound,
    /// The queue shared by `j` and `k` runs out first.
    QueueJkBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncodedSolution {
    pub t0: f64,
    pub t: [f64; 3],
    pub t_star: f64,
    pub active_constraints: [ActiveConstraint; 3],
    /// Private queue sizes left when the pairings stop.
    pub residual_queues: [f64; 3],
    pub iterations: u64,
}

fn pairing_map(eps: &ChannelTriple, t: [f64; 3]) -> ([f64; 3], [ActiveConstraint; 3]) {
    let b = queue_bounds(eps, t);
    let e = eps.get();
    let mut next = [0.0; 3];
    let mut active = [ActiveConstraint::QueueJkBound; 3];
    for i in 0..3 {
        let (j, k) = others(i);
        let by_single = b.single[i] / (1.0 - e[i]);
        let by_pair = b.pair[i] / (1.0 - e[j] * e[k]);
        if by_single < by_pair {
            next[i] = by_single;
            active[i] = ActiveConstraint::QueueIBound;
        } else {
            next[i] = by_pair;
        }
    }
    (next, active)
}

/// Pairing durations by monotone fixed-point iteration from zero.
pub fn solve_uncoded_lp(eps: &ChannelTriple) -> Result<UncodedSolution> {
    let mut t = [0.0; 3];
    for iter in 1..=FIXED_POINT_MAX_ITERS {
        let (next, active) = pairing_map(eps, t);
        let change = (0..3).map(|i| (next[i] - t[i]).abs()).fold(0.0, f64::max);
        t = next;
        if change < FIXED_POINT_TOL {
            let t0 = systematic_latency(eps);
            let b = queue_bounds(eps, t);
            let residual_queues = std::array::from_fn(|i| b.single[i] - t[i] * (1.0 - eps.eps(i)));
            return Ok(UncodedSolution {
                t0,
                t,
                t_star: t0 + t.iter().sum::<f64>(),
                active_constraints: active,
                residual_queues,
                iterations: iter,
            });
        }
    }
    Err(Error::Numeric(format!(
        "pairing fixed point did not converge in {FIXED_POINT_MAX_ITERS} iterations"
    )))
}

/// The pairing durations as an LP: maximize `Σ t` subject to both queue
/// bounds for every user and `t >= 0`.
pub fn uncoded_lp_problem(eps: &ChannelTriple) -> (Vec<f64>, Vec<Constraint>) {
    let e = eps.get();
    let t0 = systematic_latency(eps);
    let zero = queue_bounds(eps, [0.0; 3]);
    let mut cons = Vec::new();
    for i in 0..3 {
        let (j, k) = others(i);
        let mut a = vec![0.0; 3];
        a[i] = 1.0 - e[i];
        a[j] = -e[i] * (1.0 - e[k]);
        a[k] = -e[i] * (1.0 - e[j]);
        cons.push(Constraint::le(a, t0 * e[i] * (1.0 - e[j]) * (1.0 - e[k])));
        let mut b = vec![0.0; 3];
        b[i] = 1.0 - e[j] * e[k];
        cons.push(Constraint::le(b, zero.pair[i]));
    }
    (vec![1.0; 3], cons)
}

/// Solves [`uncoded_lp_problem`] by vertex enumeration.
pub fn solve_uncoded_lp_by_vertices(eps: &ChannelTriple) -> Result<LpSolution> {
    let (obj, cons) = uncoded_lp_problem(eps);
    solve_small_lp(&obj, &cons, &[true; 3])
}

/// Single-user optimal latencies `w_i = (1 - d_i) / (1 - ε_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBounds {
    pub w: [f64; 3],
    pub w_minus: f64,
    pub w_plus: f64,
}

pub fn latency_bounds(eps: &ChannelTriple, d: &DistortionTriple) -> LatencyBounds {
    let w: [f64; 3] = std::array::from_fn(|i| (1.0 - d.d(i)) / (1.0 - eps.eps(i)));
    LatencyBounds {
        w,
        w_minus: w.iter().copied().fold(f64::INFINITY, f64::min),
        w_plus: w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Whether the uncoded phase alone certifies the outer bound `w⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub solution: UncodedSolution,
    pub bounds: LatencyBounds,
    /// Smallest residual private queue.
    pub q_minus: f64,
    /// Some user is done before the pairings can run dry (`w⁻ <= t*`).
    pub early_finish_certified: bool,
    /// Every private queue still holds symbols when the pairings stop.
    pub residual_queues_certified: bool,
    /// `w⁺` when either condition certifies it, otherwise undetermined.
    pub achievable_latency: Option<f64>,
}

pub fn optimality_report(eps: &ChannelTriple, d: &DistortionTriple) -> Result<OptimalityReport> {
    let solution = solve_uncoded_lp(eps)?;
    let bounds = latency_bounds(eps, d);
    let q_minus = solution
        .residual_queues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let early_finish_certified = bounds.w_minus <= solution.t_star;
    let residual_queues_certified = q_minus > RESIDUAL_TOL;
    Ok(OptimalityReport {
        achievable_latency: (early_finish_certified || residual_queues_certified)
            .then_some(bounds.w_plus),
        solution,
        bounds,
        q_minus,
        early_finish_certified,
        residual_queues_certified,
    })
}
