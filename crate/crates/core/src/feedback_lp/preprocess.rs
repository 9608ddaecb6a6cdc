//! Splitting leftover queues into channel-coding inputs.
//!
//! Each variable moves symbols from a source queue to a set of users that
//! must all decode them. Serving a set costs `1 / (1 - max ε)` slots per
//! symbol, the rate of the weakest member.

use super::{
    others, solve_by_vertices, solve_small_lp, ChannelTriple, Constraint, DistortionTriple,
};
use crate::error::{Error, Result};

const DEMAND_TOL: f64 = 1e-12;

/// Leftover queues of the shape `{Q_i, Q_ij, Q_ik}` for builder `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessInstance {
    /// The user present in every remaining queue.
    pub role_i: usize,
    /// `[|Q_i|, |Q_ij|, |Q_ik|]`, normalized by the block length; `j < k`.
    pub queue_sizes: [f64; 3],
    /// Fraction already recovered, indexed by user.
    pub received: [f64; 3],
    pub eps: ChannelTriple,
    pub d: DistortionTriple,
}

/// Variable order of [`PreprocessSolution::deltas`].
pub const DELTA_NAMES: [&str; 7] = [
    "i_to_i", "ij_to_i", "ik_to_i", "ij_to_j", "ik_to_k", "ij_to_ij", "ik_to_ik",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSolution {
    /// Amounts moved, ordered as [`DELTA_NAMES`].
    pub deltas: [f64; 7],
    /// Objective value: normalized slots of the coding phase.
    pub latency: f64,
}

impl PreprocessInstance {
    fn validate(&self) -> Result<()> {
        if self.role_i > 2 {
            return Err(Error::InvalidInput("role_i must be 0, 1 or 2".into()));
        }
        if self
            .queue_sizes
            .iter()
            .any(|&q| !(q >= 0.0 && q.is_finite()))
        {
            return Err(Error::InvalidInput(
                "queue sizes must be nonnegative".into(),
            ));
        }
        if self.received.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidInput(
                "received fractions must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Remaining demand `1 - d_u - r_u` per user.
    pub fn demands(&self) -> [f64; 3] {
        std::array::from_fn(|u| 1.0 - self.d.d(u) - self.received[u])
    }

    /// Objective (to minimize) and constraints over the seven deltas.
    pub fn problem(&self) -> (Vec<f64>, Vec<Constraint>) {
        let i = self.role_i;
        let (j, k) = others(i);
        let e = |u: usize| self.eps.eps(u);
        let cost_i = 1.0 / (1.0 - e(i));
        let cost = vec![
            cost_i,
            cost_i,
            cost_i,
            1.0 / (1.0 - e(j)),
            1.0 / (1.0 - e(k)),
            1.0 / (1.0 - e(i).max(e(j))),
            1.0 / (1.0 - e(i).max(e(k))),
        ];
        let dem = self.demands();
        let [qi, qij, qik] = self.queue_sizes;
        let cons = vec![
            Constraint::le(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], qi),
            Constraint::le(vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0], qik),
            Constraint::le(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0], qij),
            Constraint::ge(vec![1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0], dem[i]),
            Constraint::ge(vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0], dem[j]),
            Constraint::ge(vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0], dem[k]),
        ];
        (cost, cons)
    }
}

/// Cheapest split of the builder-shaped leftover queues.
pub fn solve_preprocess_lp(instance: &PreprocessInstance) -> Result<PreprocessSolution> {
    instance.validate()?;
    let (cost, cons) = instance.problem();
    let neg: Vec<f64> = cost.iter().map(|c| -c).collect();
    let sol = solve_small_lp(&neg, &cons, &[true; 7])?;
    let mut deltas = [0.0; 7];
    for (d, x) in deltas.iter_mut().zip(&sol.x) {
        // Vertex coordinates can land a hair below zero.
        *d = x.max(0.0);
    }
    Ok(PreprocessSolution {
        deltas,
        latency: -sol.value,
    })
}

/// A leftover queue in the general form used by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueClass {
    /// Bit `u` set when user `u` still needs every item of the queue.
    pub members: u8,
    /// Items in the queue, normalized by the block length.
    pub items: f64,
    /// Symbols a member recovers per delivered item (above 1 for items that
    /// unlock a stored chain).
    pub yield_per_item: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueLpSolution {
    /// `(class index, receiving set, items)` for every positive allocation.
    pub allocations: Vec<(usize, u8, f64)>,
    pub latency: f64,
}

/// The same LP for arbitrary leftover queues: every subset of a queue's
/// members that still has demand can be served from it.
///
/// Receiving sets that include a user with no remaining demand are left out;
/// dropping that user never raises the cost, so the optimum is unchanged and
/// the variable count stays small.
pub fn solve_queue_lp(
    classes: &[QueueClass],
    eps: &ChannelTriple,
    demands: [f64; 3],
) -> Result<QueueLpSolution> {
    let demanding: u8 = (0..3)
        .filter(|&u| demands[u] > DEMAND_TOL)
        .fold(0, |m, u| m | 1 << u);
    if demanding == 0 {
        return Ok(QueueLpSolution {
            allocations: Vec::new(),
            latency: 0.0,
        });
    }
    let mut vars: Vec<(usize, u8)> = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        if class.items <= 0.0 {
            continue;
        }
        let avail = class.members & demanding;
        for t in 1..8u8 {
            if t & !avail == 0 {
                vars.push((c, t));
            }
        }
    }
    if vars.is_empty() {
        return Err(Error::Infeasible);
    }
    let n = vars.len();
    let cost: Vec<f64> = vars
        .iter()
        .map(|&(_, t)| {
            let worst = (0..3)
                .filter(|u| t & 1 << u != 0)
                .map(|u| eps.eps(u))
                .fold(0.0, f64::max);
            1.0 / (1.0 - worst)
        })
        .collect();
    let mut cons = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        let row: Vec<f64> = vars
            .iter()
            .map(|&(vc, _)| if vc == c { 1.0 } else { 0.0 })
            .collect();
        if row.iter().any(|&x| x != 0.0) {
            cons.push(Constraint::le(row, class.items));
        }
    }
    for u in (0..3).filter(|&u| demanding & 1 << u != 0) {
        let row: Vec<f64> = vars
            .iter()
            .map(|&(c, t)| {
                if t & 1 << u != 0 {
                    classes[c].yield_per_item
                } else {
                    0.0
                }
            })
            .collect();
        cons.push(Constraint::ge(row, demands[u]));
    }
    let neg: Vec<f64> = cost.iter().map(|c| -c).collect();
    let sol = solve_by_vertices(&neg, &cons, &vec![true; n])?;
    let allocations = vars
        .iter()
        .zip(&sol.x)
        .filter(|(_, &x)| x > DEMAND_TOL)
        .map(|(&(c, t), &x)| (c, t, x))
        .collect();
    Ok(QueueLpSolution {
        allocations,
        latency: -sol.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn instance(sizes: [f64; 3], received: [f64; 3], d: [f64; 3]) -> PreprocessInstance {
        PreprocessInstance {
            role_i: 2,
            queue_sizes: sizes,
            received,
            eps: ChannelTriple::new([0.3, 0.4, 0.9]).unwrap(),
            d: DistortionTriple::new(d).unwrap(),
        }
    }

    #[test]
    fn satisfied_users_cost_nothing() {
        let sol = solve_preprocess_lp(&instance([0.1, 0.1, 0.1], [0.5, 0.5, 0.5], [0.5, 0.5, 0.5]))
            .unwrap();
        assert_eq!(sol.deltas, [0.0; 7]);
        assert_abs_diff_eq!(sol.latency, 0.0);
    }

    #[test]
    fn pair_demand_over_capacity_is_infeasible() {
        // role_i = 2, so j = 0 and Q_ij is queue_sizes[1].
        let r = solve_preprocess_lp(&instance(
            [0.5, 0.05, 0.5],
            [0.0, 1.0, 1.0],
            [0.9, 0.0, 0.0],
        ));
        assert!(matches!(r, Err(Error::Infeasible)));
    }

    #[test]
    fn builder_only_demand_uses_its_rate() {
        let sol = solve_preprocess_lp(&instance([0.2, 0.0, 0.0], [1.0, 1.0, 0.7], [0.0, 0.0, 0.2]))
            .unwrap();
        assert_abs_diff_eq!(sol.deltas[0], 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.latency, 0.1 / 0.1, epsilon = 1e-9);
    }

    #[test]
    fn general_form_agrees_with_builder_form() {
        let inst = instance([0.05, 0.2, 0.15], [0.8, 0.8, 0.6], [0.05, 0.1, 0.2]);
        let specific = solve_preprocess_lp(&inst).unwrap();
        let classes = [
            QueueClass {
                members: 0b100,
                items: 0.05,
                yield_per_item: 1.0,
            },
            QueueClass {
                members: 0b101,
                items: 0.2,
                yield_per_item: 1.0,
            },
            QueueClass {
                members: 0b110,
                items: 0.15,
                yield_per_item: 1.0,
            },
        ];
        let general = solve_queue_lp(&classes, &inst.eps, inst.demands()).unwrap();
        assert_abs_diff_eq!(specific.latency, general.latency, epsilon = 1e-9);
    }
}
