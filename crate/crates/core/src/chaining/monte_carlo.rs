//! Direct simulation of the noise tables, independent of the matrix model.

use rand::Rng as _;
use rayon::prelude::*;

use super::tables::{self, noise_tables, row_index, RewardKind, NUM_STATES};
use crate::error::{Error, Result};
use crate::rng;

const SHARD_RUNS: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMonteCarlo {
    pub runs: u64,
    /// `transitions[l][m]`: observed `l -> m` steps (0-based states).
    pub transitions: [[u64; NUM_STATES]; NUM_STATES],
    /// Per-run reward totals: `(mean, standard error)` by [`RewardKind::index`].
    pub per_run: [(f64, f64); 7],
    /// Runs ending abandoned and decoded.
    pub endings: [u64; 2],
    /// Equations per run among decoded runs: `(mean, standard error)`.
    pub equations_given_decode: (f64, f64),
}

impl ChainMonteCarlo {
    /// Visits to transient state `l` (0-based).
    pub fn visits(&self, l: usize) -> u64 {
        self.transitions[l].iter().sum()
    }

    /// Empirical `p(l, m)` with its binomial standard error.
    pub fn frequency(&self, l: usize, m: usize) -> (f64, f64) {
        let n = self.visits(l);
        if n == 0 {
            return (0.0, 0.0);
        }
        let p = self.transitions[l][m] as f64 / n as f64;
        (p, (p * (1.0 - p) / n as f64).sqrt())
    }
}

#[derive(Clone)]
struct Acc {
    transitions: [[u64; NUM_STATES]; NUM_STATES],
    sum: [f64; 7],
    sum_sq: [f64; 7],
    endings: [u64; 2],
    eq_sum: f64,
    eq_sum_sq: f64,
}

impl Acc {
    fn new() -> Self {
        Self {
            transitions: [[0; NUM_STATES]; NUM_STATES],
            sum: [0.0; 7],
            sum_sq: [0.0; 7],
            endings: [0; 2],
            eq_sum: 0.0,
            eq_sum_sq: 0.0,
        }
    }

    fn merge(&mut self, o: &Acc) {
        for l in 0..NUM_STATES {
            for m in 0..NUM_STATES {
                self.transitions[l][m] += o.transitions[l][m];
            }
        }
        for r in 0..7 {
            self.sum[r] += o.sum[r];
            self.sum_sq[r] += o.sum_sq[r];
        }
        self.endings[0] += o.endings[0];
        self.endings[1] += o.endings[1];
        self.eq_sum += o.eq_sum;
        self.eq_sum_sq += o.eq_sum_sq;
    }
}

fn mean_se(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Runs the chain-building process from state 1 to absorption `runs` times,
/// drawing each slot's erasures from the role-ordered rates `eps`.
///
/// Sharded like [`crate::absorbing_mrp::simulate_reward`]: the result
/// depends only on `seed`.
pub fn simulate_chain_runs(eps: [f64; 3], runs: u64, seed: u64) -> Result<ChainMonteCarlo> {
    if runs == 0 {
        return Err(Error::InvalidInput("runs must be positive".into()));
    }
    if eps.iter().any(|e| !(0.0..1.0).contains(e)) {
        return Err(Error::InvalidInput(
            "erasure rates must lie in [0, 1)".into(),
        ));
    }
    let tables = noise_tables();
    let shards = runs.div_ceil(SHARD_RUNS);
    let parts: Vec<Acc> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::shard_rng(seed, s);
            let mut acc = Acc::new();
            for _ in 0..SHARD_RUNS.min(runs - s * SHARD_RUNS) {
                let mut state = 1;
                let mut totals = [0u32; 7];
                while state != tables::NON_DECODING && state != tables::DECODING {
                    let z: [u8; 3] =
                        std::array::from_fn(|u| u8::from(rng.random::<f64>() < eps[u]));
                    let row = &tables[state - 1][row_index(z)];
                    acc.transitions[state - 1][row.next - 1] += 1;
                    for (t, r) in totals.iter_mut().zip(row.rewards) {
                        *t += u32::from(r);
                    }
                    state = row.next;
                }
                for r in 0..7 {
                    let x = f64::from(totals[r]);
                    acc.sum[r] += x;
                    acc.sum_sq[r] += x * x;
                }
                if state == tables::DECODING {
                    acc.endings[1] += 1;
                    let e = f64::from(totals[RewardKind::Equations.index()]);
                    acc.eq_sum += e;
                    acc.eq_sum_sq += e * e;
                } else {
                    acc.endings[0] += 1;
                }
            }
            acc
        })
        .collect();
    let mut total = Acc::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(ChainMonteCarlo {
        runs,
        transitions: total.transitions,
        per_run: std::array::from_fn(|r| mean_se(total.sum[r], total.sum_sq[r], runs)),
        endings: total.endings,
        equations_given_decode: mean_se(total.eq_sum, total.eq_sum_sq, total.endings[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_complete() {
        let a = simulate_chain_runs([0.1, 0.4, 0.6], 20_000, 3).unwrap();
        let b = simulate_chain_runs([0.1, 0.4, 0.6], 20_000, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.endings[0] + a.endings[1], 20_000);
        assert_eq!(a.visits(4), 0);
    }
}
