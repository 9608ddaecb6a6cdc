//! Absorbing discrete-time Markov reward processes with impulse rewards.
//!
//! A process is a row-stochastic transition matrix `P` and a reward matrix
//! `Θ` whose entry `(i, j)` is earned on every `i -> j` transition. After
//! [`canonicalize`] reorders the states so transients come first,
//!
//! ```text
//! P = [[Q, R], [0, I]]     H = Θ ⊙ P = [[H1, H2], [0, 0]]     N = (I - Q)^-1
//! ```
//!
//! and every quantity below is a block expression in those pieces. The
//! "scaled" reward `R̂ₙ(i, j)` is the expected reward accumulated over `n`
//! steps on paths from `i` that end in `j`, weighted by the probability of
//! ending in `j`; row sums give the unconditional expectation and dividing by
//! `Pⁿ(i, j)` gives the expectation conditioned on the endpoint.
//!
//! States are 0-based here. User-facing I/O in [`crate::cli`] is 1-based.

use std::fmt;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{geometric_tail, q_powers, Matrix};
use crate::rng;

const ROW_SUM_TOL: f64 = 1e-9;
const ABSORBING_TOL: f64 = 1e-12;
const EDGE_TOL: f64 = 1e-15;
const UNREACHABLE_TOL: f64 = 1e-12;

/// Exhaustive path enumeration is limited to `|Ω| <= 6` and `n <= 8`.
pub const ENUMERATION_MAX_STATES: usize = 6;
pub const ENUMERATION_MAX_STEPS: u64 = 8;

/// Trials per Monte-Carlo shard. Fixed so the aggregate does not depend on
/// the number of worker threads.
pub const SHARD_TRIALS: u64 = 1 << 14;

/// A transition matrix with its impulse-reward matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MrpSpec {
    transition: Matrix,
    reward: Matrix,
}

impl MrpSpec {
    pub fn new(transition: Matrix, reward: Matrix) -> Result<Self> {
        if !transition.is_square() {
            return Err(Error::InvalidInput(
                "transition matrix must be square".into(),
            ));
        }
        if (reward.rows(), reward.cols()) != (transition.rows(), transition.cols()) {
            return Err(Error::DimensionMismatch(format!(
                "reward is {}x{}, transition is {}x{}",
                reward.rows(),
                reward.cols(),
                transition.rows(),
                transition.cols()
            )));
        }
        for i in 0..transition.rows() {
            let row = transition.row(i);
            if let Some(j) = row.iter().position(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidInput(format!(
                    "transition ({i}, {j}) = {} is not a probability",
                    row[j]
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self { transition, reward })
    }

    pub fn num_states(&self) -> usize {
        self.transition.rows()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn reward(&self) -> &Matrix {
        &self.reward
    }

    /// Same chain, different rewards.
    pub fn with_reward(&self, reward: Matrix) -> Result<Self> {
        Self::new(self.transition.clone(), reward)
    }

    pub fn is_absorbing_state(&self, i: usize) -> bool {
        let row = self.transition.row(i);
        (row[i] - 1.0).abs() <= ABSORBING_TOL
            && row
                .iter()
                .enumerate()
                .all(|(j, &p)| j == i || p.abs() <= ABSORBING_TOL)
    }

    /// Reads two matrices in the [`Matrix`] text format separated by a blank
    /// line: transitions first, then rewards.
    pub fn parse(text: &str) -> Result<Self> {
        let blocks: Vec<String> = text
            .split("\n\n")
            .map(|b| b.trim().to_string())
            .filter(|b| !b.is_empty())
            .collect();
        let [p, theta] = &blocks[..] else {
            return Err(Error::Parse(format!(
                "expected two blank-line separated matrices, found {}",
                blocks.len()
            )));
        };
        Self::new(p.parse()?, theta.parse()?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl fmt::Display for MrpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\n{}", self.transition, self.reward)
    }
}

/// A process in canonical block form.
#[derive(Debug, Clone)]
pub struct CanonicalMrp {
    spec: MrpSpec,
    /// `permutation[c]` is the original index of canonical state `c`.
    permutation: Vec<usize>,
    /// `position[o]` is the canonical index of original state `o`.
    position: Vec<usize>,
    n_transient: usize,
    q: Matrix,
    r: Matrix,
    h1: Matrix,
    h2: Matrix,
    fundamental: Matrix,
}

/// Detects absorbing states, checks that every transient state can reach
/// one, and extracts the canonical blocks.
pub fn canonicalize(spec: &MrpSpec) -> Result<CanonicalMrp> {
    let n = spec.num_states();
    let absorbing: Vec<bool> = (0..n).map(|i| spec.is_absorbing_state(i)).collect();
    let transient: Vec<usize> = (0..n).filter(|&i| !absorbing[i]).collect();
    let sinks: Vec<usize> = (0..n).filter(|&i| absorbing[i]).collect();
    if sinks.is_empty() {
        return Err(Error::NotAbsorbing("no absorbing state".into()));
    }
    if transient.is_empty() {
        return Err(Error::InvalidInput("every state is absorbing".into()));
    }
    if let Some(stuck) = first_stuck_state(spec, &absorbing) {
        return Err(Error::NotAbsorbing(format!(
            "state {stuck} cannot reach an absorbing state"
        )));
    }

    let mut permutation = transient.clone();
    permutation.extend(&sinks);
    let mut position = vec![0; n];
    for (c, &o) in permutation.iter().enumerate() {
        position[o] = c;
    }

    let p = spec.transition();
    let h = spec.reward().hadamard(p)?;
    let q = p.select(&transient, &transient);
    let r = p.select(&transient, &sinks);
    let h1 = h.select(&transient, &transient);
    let h2 = h.select(&transient, &sinks);
    let fundamental = Matrix::identity(transient.len()).sub(&q)?.inverse()?;

    Ok(CanonicalMrp {
        spec: spec.clone(),
        permutation,
        position,
        n_transient: transient.len(),
        q,
        r,
        h1,
        h2,
        fundamental,
    })
}

fn first_stuck_state(spec: &MrpSpec, absorbing: &[bool]) -> Option<usize> {
    let n = spec.num_states();
    // Backward search from the absorbing set.
    let mut reaches = absorbing.to_vec();
    let mut frontier: Vec<usize> = (0..n).filter(|&i| absorbing[i]).collect();
    while let Some(j) = frontier.pop() {
        for i in 0..n {
            if !reaches[i] && spec.transition()[(i, j)] > EDGE_TOL {
                reaches[i] = true;
                frontier.push(i);
            }
        }
    }
    reaches.iter().position(|&r| !r)
}

/// Number of steps to look ahead: finite or the absorption limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Steps(u64),
    Infinite,
}

impl std::str::FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Horizon::Infinite),
            t => match t.parse::<u64>() {
                Ok(n) if n >= 1 => Ok(Horizon::Steps(n)),
                _ => Err(Error::Parse(format!(
                    "horizon must be a positive integer or `inf`, got {t:?}"
                ))),
            },
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Steps(n) => write!(f, "{n}"),
            Horizon::Infinite => write!(f, "inf"),
        }
    }
}

/// Expected rewards for one horizon, indexed by original state.
#[derive(Debug, Clone)]
pub struct RewardSummary {
    pub horizon: Horizon,
    /// `R̂` in original state order.
    pub scaled: Matrix,
    /// Row sums of `scaled`: expected reward from each initial state.
    pub per_state: Vec<f64>,
    pub with_prior: Option<f64>,
    /// `(transient, absorbing, expected reward given absorption there)` for
    /// every reachable pair; only filled at the infinite horizon.
    pub conditional: Option<Vec<(usize, usize, f64)>>,
}

impl CanonicalMrp {
    pub fn spec(&self) -> &MrpSpec {
        &self.spec
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn num_states(&self) -> usize {
        self.permutation.len()
    }

    pub fn num_transient(&self) -> usize {
        self.n_transient
    }

    pub fn num_absorbing(&self) -> usize {
        self.num_states() - self.n_transient
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn h1(&self) -> &Matrix {
        &self.h1
    }

    pub fn h2(&self) -> &Matrix {
        &self.h2
    }

    pub fn fundamental(&self) -> &Matrix {
        &self.fundamental
    }

    /// Whether original state `i` is transient.
    pub fn is_transient(&self, i: usize) -> bool {
        self.position[i] < self.n_transient
    }

    /// Original indices of the absorbing states, in canonical order.
    pub fn absorbing_states(&self) -> &[usize] {
        &self.permutation[self.n_transient..]
    }

    pub fn transient_states(&self) -> &[usize] {
        &self.permutation[..self.n_transient]
    }

    /// Full transition matrix in canonical order.
    pub fn canonical_transition(&self) -> Matrix {
        self.assemble(&self.q, &self.r, true)
    }

    /// Full `Θ ⊙ P` in canonical order, rewards out of absorbing states zeroed.
    pub fn canonical_h(&self) -> Matrix {
        self.assemble(&self.h1, &self.h2, false)
    }

    /// Builds `[[top_left, top_right], [0, I or 0]]`.
    fn assemble(&self, top_left: &Matrix, top_right: &Matrix, identity_corner: bool) -> Matrix {
        let n = self.num_states();
        let t = self.n_transient;
        let mut m = Matrix::zeros(n, n);
        m.set_block(0, 0, top_left);
        m.set_block(0, t, top_right);
        if identity_corner {
            for a in t..n {
                m[(a, a)] = 1.0;
            }
        }
        m
    }

    /// Maps a canonical-order square matrix back to original state order.
    pub fn to_original(&self, canonical: &Matrix) -> Matrix {
        canonical.select(&self.position, &self.position)
    }

    /// `Pⁿ` in canonical order, assembled from `Qⁿ` and `Σ_{i<n} Qⁱ R`.
    pub fn transition_power(&self, n: u64) -> Result<Matrix> {
        if n == 0 {
            return Err(Error::InvalidInput("transition_power needs n >= 1".into()));
        }
        let powers = q_powers(&self.q, n)?;
        let mut reach = Matrix::zeros(self.r.rows(), self.r.cols());
        for qi in &powers[..n as usize] {
            reach = reach.add(&qi.multiply(&self.r)?)?;
        }
        Ok(self.assemble(&powers[n as usize], &reach, true))
    }

    /// `P^∞ = [[0, N R], [0, I]]` in canonical order.
    pub fn transition_limit(&self) -> Result<Matrix> {
        let nr = self.fundamental.multiply(&self.r)?;
        let zero = Matrix::zeros(self.n_transient, self.n_transient);
        Ok(self.assemble(&zero, &nr, true))
    }

    /// Absorption probabilities `N R` (transient rows, absorbing columns).
    pub fn absorption_probabilities(&self) -> Result<Matrix> {
        self.fundamental.multiply(&self.r)
    }

    /// `R̂ₙ` in canonical order from the block closed form.
    pub fn scaled_reward_n(&self, n: u64) -> Result<Matrix> {
        if n == 0 {
            return Err(Error::InvalidInput("scaled_reward_n needs n >= 1".into()));
        }
        let t = self.n_transient;
        let powers = q_powers(&self.q, n)?;
        let nn = n as usize;
        let id = Matrix::identity(t);

        let mut d = Matrix::zeros(t, t);
        for i in 0..nn {
            d = d.add(
                &powers[i]
                    .multiply(&self.h1)?
                    .multiply(&powers[nn - 1 - i])?,
            )?;
        }

        let n_mat = &self.fundamental;
        let nr = n_mat.multiply(&self.r)?;
        let mut c = n_mat
            .multiply(&id.sub(&powers[nn])?)?
            .multiply(&self.h2)?
            .add(
                &n_mat
                    .multiply(&id.sub(&powers[nn - 1])?)?
                    .multiply(&self.h1)?
                    .multiply(&nr)?,
            )?;
        if n >= 2 {
            let h1n = self.h1.multiply(n_mat)?;
            c = c.sub(&geometric_tail(n, &h1n, &self.q)?.multiply(&self.r)?)?;
        }
        Ok(self.assemble(&d, &c, false))
    }

    /// `R̂_∞ = [[0, N (H2 + H1 N R)], [0, 0]]` in canonical order.
    pub fn scaled_reward_inf(&self) -> Result<Matrix> {
        let n_mat = &self.fundamental;
        let inner = self.h2.add(&self.h1.multiply(n_mat)?.multiply(&self.r)?)?;
        let c = n_mat.multiply(&inner)?;
        let zero = Matrix::zeros(self.n_transient, self.n_transient);
        Ok(self.assemble(&zero, &c, false))
    }

    /// Expected accumulated rewards per initial state, optionally averaged
    /// over a prior on the initial state.
    pub fn unscaled_rewards(
        &self,
        horizon: Horizon,
        prior: Option<&[f64]>,
    ) -> Result<RewardSummary> {
        if let Some(p) = prior {
            validate_prior(p, self.num_states())?;
        }
        let canonical = match horizon {
            Horizon::Steps(n) => self.scaled_reward_n(n)?,
            Horizon::Infinite => self.scaled_reward_inf()?,
        };
        let scaled = self.to_original(&canonical);
        let per_state = scaled.row_sums();
        let with_prior = prior.map(|p| p.iter().zip(&per_state).map(|(a, b)| a * b).sum());
        let conditional = match horizon {
            Horizon::Infinite => {
                let limit = self.absorption_probabilities()?;
                let mut out = Vec::new();
                for (ti, &i) in self.transient_states().iter().enumerate() {
                    for (aj, &j) in self.absorbing_states().iter().enumerate() {
                        let p = limit[(ti, aj)];
                        if p >= UNREACHABLE_TOL {
                            out.push((i, j, canonical[(ti, self.n_transient + aj)] / p));
                        }
                    }
                }
                Some(out)
            }
            Horizon::Steps(_) => None,
        };
        Ok(RewardSummary {
            horizon,
            scaled,
            per_state,
            with_prior,
            conditional,
        })
    }

    /// Expected reward accumulated from transient `i` given absorption in `j`.
    pub fn conditional_absorption_reward(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.num_states();
        if i >= n || j >= n {
            return Err(Error::InvalidInput(format!(
                "state out of range (|Ω| = {n})"
            )));
        }
        if !self.is_transient(i) {
            return Err(Error::InvalidInput(format!("state {i} is not transient")));
        }
        if self.is_transient(j) {
            return Err(Error::InvalidInput(format!("state {j} is not absorbing")));
        }
        let ti = self.position[i];
        let aj = self.position[j] - self.n_transient;
        let p = self.absorption_probabilities()?[(ti, aj)];
        if p < UNREACHABLE_TOL {
            return Err(Error::UnreachableAbsorption { from: i, to: j });
        }
        let scaled = self.scaled_reward_inf()?;
        Ok(scaled[(ti, self.n_transient + aj)] / p)
    }

    /// Spectral radius of `Q` via Gelfand's formula on repeated squares.
    pub fn spectral_radius_estimate(&self) -> f64 {
        spectral_radius_estimate(&self.q)
    }
}

fn validate_prior(prior: &[f64], n: usize) -> Result<()> {
    if prior.len() != n {
        return Err(Error::InvalidInput(format!(
            "prior has {} entries for {n} states",
            prior.len()
        )));
    }
    if prior.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::InvalidInput(
            "prior entries must be nonnegative".into(),
        ));
    }
    let s: f64 = prior.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::InvalidInput(format!("prior sums to {s}, not 1")));
    }
    Ok(())
}

/// `lim ‖A^(2^k)‖^(1/2^k)` in the max-row-sum norm, with rescaling so the
/// squares never under- or overflow.
pub fn spectral_radius_estimate(a: &Matrix) -> f64 {
    let norm = |m: &Matrix| {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let s0 = norm(a);
    if s0 == 0.0 {
        return 0.0;
    }
    let mut m = a.scale(1.0 / s0);
    let mut log_scale = s0.ln();
    let mut estimate = s0;
    for k in 1..=40 {
        let sq = m.multiply(&m).expect("square");
        let s = norm(&sq);
        if s == 0.0 {
            return 0.0;
        }
        m = sq.scale(1.0 / s);
        log_scale = 2.0 * log_scale + s.ln();
        estimate = (log_scale / 2f64.powi(k)).exp();
    }
    estimate
}

/// Sum of path reward times path probability over every length-`n` path
/// from `i` to `j`, together with the total probability of those paths.
pub fn enumerate_reward(spec: &MrpSpec, n: u64, i: usize, j: usize) -> Result<(f64, f64)> {
    let states = spec.num_states();
    if states > ENUMERATION_MAX_STATES || n > ENUMERATION_MAX_STEPS || n == 0 {
        return Err(Error::InvalidInput(format!(
            "enumeration limited to 1 <= n <= {ENUMERATION_MAX_STEPS} and |Ω| <= \
             {ENUMERATION_MAX_STATES}, got n = {n}, |Ω| = {states}"
        )));
    }
    if i >= states || j >= states {
        return Err(Error::InvalidInput("state out of range".into()));
    }
    let p = spec.transition();
    let theta = spec.reward();
    let absorbing: Vec<bool> = (0..states).map(|s| spec.is_absorbing_state(s)).collect();
    // Rewards out of absorbing states do not count.
    let reward = |a: usize, b: usize| if absorbing[a] { 0.0 } else { theta[(a, b)] };

    fn walk(
        at: usize,
        steps_left: u64,
        target: usize,
        prob: f64,
        acc: f64,
        p: &Matrix,
        reward: &dyn Fn(usize, usize) -> f64,
        out: &mut (f64, f64),
    ) {
        if steps_left == 0 {
            if at == target {
                out.0 += prob * acc;
                out.1 += prob;
            }
            return;
        }
        for next in 0..p.cols() {
            let step = p[(at, next)];
            if step == 0.0 {
                continue;
            }
            walk(
                next,
                steps_left - 1,
                target,
                prob * step,
                acc + reward(at, next),
                p,
                reward,
                out,
            );
        }
    }

    let mut out = (0.0, 0.0);
    walk(i, n, j, 1.0, 0.0, p, &reward, &mut out);
    Ok(out)
}

/// Monte-Carlo run-to-absorption statistics from one initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedReward {
    pub trials: u64,
    pub mean: f64,
    pub std_err: f64,
    /// Original indices of the absorbing states, in canonical order.
    pub absorbing: Vec<usize>,
    /// Runs that ended in each absorbing state.
    pub histogram: Vec<u64>,
    /// Sample mean reward among runs ending in each absorbing state.
    pub conditional_means: Vec<Option<f64>>,
    pub conditional_std_errs: Vec<Option<f64>>,
}

#[derive(Clone, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    fn std_err(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        Some((var / n).sqrt())
    }
}

/// Runs the chain from `start` until absorption `trials` times.
///
/// Trials are cut into shards of [`SHARD_TRIALS`]; shard `s` draws from
/// [`rng::shard_rng`]`(seed, s)`. Shards are merged in index order, so the
/// output is bit-identical for a given seed whatever the thread count.
pub fn simulate_reward(
    spec: &MrpSpec,
    start: usize,
    trials: u64,
    seed: u64,
) -> Result<SimulatedReward> {
    let canon = canonicalize(spec)?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    if start >= spec.num_states() {
        return Err(Error::InvalidInput("start state out of range".into()));
    }
    let absorbing = canon.absorbing_states().to_vec();
    let mut slot = vec![usize::MAX; spec.num_states()];
    for (k, &a) in absorbing.iter().enumerate() {
        slot[a] = k;
    }
    let cumulative: Vec<Vec<f64>> = (0..spec.num_states())
        .map(|i| {
            spec.transition()
                .row(i)
                .iter()
                .scan(0.0, |acc, &p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();

    let shards = trials.div_ceil(SHARD_TRIALS);
    let results: Vec<(Moments, Vec<Moments>)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::shard_rng(seed, s);
            let count = SHARD_TRIALS.min(trials - s * SHARD_TRIALS);
            let mut all = Moments::default();
            let mut per = vec![Moments::default(); absorbing.len()];
            for _ in 0..count {
                let mut state = start;
                let mut total = 0.0;
                while slot[state] == usize::MAX {
                    let u: f64 = rng.random();
                    let row = &cumulative[state];
                    // Guard against the last cumulative entry rounding below 1.
                    let next = row.iter().position(|&c| u < c).unwrap_or(row.len() - 1);
                    total += spec.reward()[(state, next)];
                    state = next;
                }
                all.push(total);
                per[slot[state]].push(total);
            }
            (all, per)
        })
        .collect();

    let mut all = Moments::default();
    let mut per = vec![Moments::default(); absorbing.len()];
    for (a, p) in &results {
        all.merge(a);
        for (acc, m) in per.iter_mut().zip(p) {
            acc.merge(m);
        }
    }
    Ok(SimulatedReward {
        trials,
        mean: all.mean().unwrap_or(0.0),
        std_err: all.std_err().unwrap_or(0.0),
        absorbing,
        histogram: per.iter().map(|m| m.count).collect(),
        conditional_means: per.iter().map(Moments::mean).collect(),
        conditional_std_errs: per.iter().map(Moments::std_err).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// One transient state that loops with probability 1-p earning `s` and
    /// exits with probability p earning `r`.
    pub(crate) fn two_state(p: f64, s: f64, r: f64) -> MrpSpec {
        MrpSpec::new(
            Matrix::from_rows(&[vec![1.0 - p, p], vec![0.0, 1.0]]).unwrap(),
            Matrix::from_rows(&[vec![s, r], vec![0.0, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn canonical_blocks_single_transient() {
        let spec = MrpSpec::new(
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap(),
            Matrix::zeros(2, 2),
        )
        .unwrap();
        let c = canonicalize(&spec).unwrap();
        assert_eq!(c.permutation(), &[1, 0]);
        assert_abs_diff_eq!(c.q()[(0, 0)], 0.7);
        assert_abs_diff_eq!(c.r()[(0, 0)], 0.3);
        assert_abs_diff_eq!(c.fundamental()[(0, 0)], 10.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn unreachable_absorption_rejected() {
        let spec = MrpSpec::new(
            Matrix::from_rows(&[
                vec![0.0, 1.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ])
            .unwrap(),
            Matrix::zeros(3, 3),
        )
        .unwrap();
        assert!(matches!(canonicalize(&spec), Err(Error::NotAbsorbing(_))));

        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let none = MrpSpec::new(swap, Matrix::zeros(2, 2)).unwrap();
        assert!(matches!(canonicalize(&none), Err(Error::NotAbsorbing(_))));
    }

    #[test]
    fn non_stochastic_rows_rejected() {
        let p = Matrix::from_rows(&[vec![0.5, 0.4], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            MrpSpec::new(p, Matrix::zeros(2, 2)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn transition_power_two_steps() {
        let c = canonicalize(&two_state(0.3, 1.0, 2.0)).unwrap();
        let p1 = c.transition_power(1).unwrap();
        assert!(p1.max_abs_diff(&c.canonical_transition()) < 1e-15);
        let p2 = c.transition_power(2).unwrap();
        assert_abs_diff_eq!(p2[(0, 0)], 0.49, epsilon = 1e-15);
        assert_abs_diff_eq!(p2[(0, 1)], 0.51, epsilon = 1e-15);
    }

    #[test]
    fn transition_limit_examples() {
        let c = canonicalize(&two_state(0.3, 1.0, 2.0)).unwrap();
        assert_abs_diff_eq!(c.transition_limit().unwrap()[(0, 1)], 1.0, epsilon = 1e-12);

        let spec = MrpSpec::new(
            Matrix::from_rows(&[
                vec![0.7, 0.1, 0.2],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ])
            .unwrap(),
            Matrix::zeros(3, 3),
        )
        .unwrap();
        let lim = canonicalize(&spec).unwrap().transition_limit().unwrap();
        assert_abs_diff_eq!(lim[(0, 1)], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lim[(0, 2)], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn first_two_scaled_rewards() {
        let c = canonicalize(&two_state(0.3, 1.0, 2.0)).unwrap();
        let h = c.canonical_h();
        let p = c.canonical_transition();
        assert!(c.scaled_reward_n(1).unwrap().max_abs_diff(&h) < 1e-15);
        let hp_ph = h
            .multiply(&p)
            .unwrap()
            .add(&p.multiply(&h).unwrap())
            .unwrap();
        let r2 = c.scaled_reward_n(2).unwrap();
        assert!(r2.max_abs_diff(&hp_ph) < 1e-14);
        // Paths T->T->A (0.7 * 0.3, earns 1 + 2) and T->A->A (0.3, earns 2).
        assert_abs_diff_eq!(r2[(0, 1)], 0.21 * 3.0 + 0.3 * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn scaled_reward_limit_geometric() {
        let c = canonicalize(&two_state(0.3, 1.0, 2.0)).unwrap();
        let inf = c.scaled_reward_inf().unwrap();
        assert_abs_diff_eq!(inf[(0, 1)], 2.0 + 0.7 / 0.3, epsilon = 1e-12);
        let zero = canonicalize(
            &MrpSpec::new(c.spec().transition().clone(), Matrix::zeros(2, 2)).unwrap(),
        )
        .unwrap()
        .scaled_reward_inf()
        .unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn unscaled_with_priors() {
        let c = canonicalize(&two_state(0.3, 1.0, 2.0)).unwrap();
        let s = c
            .unscaled_rewards(Horizon::Infinite, Some(&[0.5, 0.5]))
            .unwrap();
        assert_abs_diff_eq!(s.per_state[0], 13.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.per_state[1], 0.0);
        assert_abs_diff_eq!(s.with_prior.unwrap(), 13.0 / 6.0, epsilon = 1e-12);
        let point = c
            .unscaled_rewards(Horizon::Steps(3), Some(&[1.0, 0.0]))
            .unwrap();
        assert_eq!(point.with_prior.unwrap(), point.per_state[0]);
        assert!(c
            .unscaled_rewards(Horizon::Infinite, Some(&[0.7, 0.7]))
            .is_err());
        assert!(c
            .unscaled_rewards(Horizon::Infinite, Some(&[1.5, -0.5]))
            .is_err());
    }

    #[test]
    fn conditional_reward_cases() {
        let c = canonicalize(&two_state(0.3, 1.0, 2.0)).unwrap();
        let total = c
            .unscaled_rewards(Horizon::Infinite, None)
            .unwrap()
            .per_state[0];
        assert_abs_diff_eq!(
            c.conditional_absorption_reward(0, 1).unwrap(),
            total,
            epsilon = 1e-12
        );

        // State 0 can only be absorbed in 2; state 1 only in 3.
        let spec = MrpSpec::new(
            Matrix::from_rows(&[
                vec![0.5, 0.0, 0.5, 0.0],
                vec![0.0, 0.5, 0.0, 0.5],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ])
            .unwrap(),
            Matrix::zeros(4, 4),
        )
        .unwrap();
        let c = canonicalize(&spec).unwrap();
        assert!(matches!(
            c.conditional_absorption_reward(0, 3),
            Err(Error::UnreachableAbsorption { from: 0, to: 3 })
        ));
        assert!(c.conditional_absorption_reward(2, 3).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let spec = two_state(0.3, 1.0, 2.0);
        let (scaled, prob) = enumerate_reward(&spec, 2, 0, 1).unwrap();
        assert_abs_diff_eq!(scaled, 1.23, epsilon = 1e-14);
        assert_abs_diff_eq!(prob, 0.51, epsilon = 1e-14);
        let (s1, p1) = enumerate_reward(&spec, 1, 0, 1).unwrap();
        assert_abs_diff_eq!(s1, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p1, 0.3, epsilon = 1e-15);
        assert!(enumerate_reward(&spec, 9, 0, 1).is_err());
    }

    #[test]
    fn simulation_is_deterministic_and_close() {
        let spec = two_state(0.3, 1.0, 2.0);
        let a = simulate_reward(&spec, 0, 50_000, 7).unwrap();
        let b = simulate_reward(&spec, 0, 50_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 13.0 / 3.0).abs() < 4.0 * a.std_err);
        assert_eq!(a.histogram, vec![50_000]);
    }

    #[test]
    fn spectral_radius_of_diagonal() {
        let q = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.25]]).unwrap();
        assert_abs_diff_eq!(spectral_radius_estimate(&q), 0.5, epsilon = 1e-9);
        assert_eq!(spectral_radius_estimate(&Matrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = two_state(0.3, 1.0, 2.0);
        let back = MrpSpec::parse(&spec.to_string()).unwrap();
        assert_eq!(spec, back);
        assert!(MrpSpec::parse("1 1\n1\n").is_err());
    }

    #[test]
    fn horizon_parsing() {
        assert_eq!("inf".parse::<Horizon>().unwrap(), Horizon::Infinite);
        assert_eq!("12".parse::<Horizon>().unwrap(), Horizon::Steps(12));
        assert!("0".parse::<Horizon>().is_err());
    }
}
