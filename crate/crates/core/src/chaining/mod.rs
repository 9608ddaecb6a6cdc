//! Markov reward model of the chaining algorithm and its sufficiency test.
//!
//! Two targets `j` and `k` are served as if they were alone, by sending sums
//! of one symbol each from the queues they share with the builder `i`. The
//! builder collects the combinations it overhears into chains of linked
//! equations. One chain-building attempt is a run of the six-state absorbing
//! process in [`tables`]; per-run expected rewards come from
//! [`crate::absorbing_mrp`].
//!
//! Everything in this module is in role order: erasure triples are
//! `[ε_i, ε_j, ε_k]` and states are numbered 1 to 6 in docs, 0 to 5 in
//! matrices.

mod monte_carlo;
pub mod tables;

use serde::Serialize;

use crate::absorbing_mrp::{canonicalize, CanonicalMrp, Horizon, MrpSpec};
use crate::error::{Error, Result};
use crate::feedback_lp::{others, ChannelTriple};
use crate::linalg::Matrix;

pub use monte_carlo::{simulate_chain_runs, ChainMonteCarlo};
pub use tables::{noise_probability, noise_tables, NoiseRow, NoiseTable, RewardKind};

/// Transition matrix and the seven conditional-mean reward matrices.
#[derive(Debug, Clone)]
pub struct ChainMrp {
    eps: [f64; 3],
    transition: Matrix,
    rewards: [Matrix; 7],
}

/// Compiles the noise tables into a 6-state process.
///
/// `p(l, m)` sums `Pr(z)` over the rows leading from `l` to `m`; each reward
/// entry is the mean of the row rewards weighted by `Pr(z | l -> m)`, and is
/// zero on impossible transitions. Erasure rates may equal 1 here so that
/// degenerate builders can be modelled; chains that cannot terminate are
/// rejected later by [`canonicalize`].
pub fn build_chain_mrp(eps_i: f64, eps_j: f64, eps_k: f64) -> Result<ChainMrp> {
    let eps = [eps_i, eps_j, eps_k];
    if let Some(e) = eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidInput(format!(
            "erasure probability {e} not in [0, 1]"
        )));
    }
    let n = tables::NUM_STATES;
    let mut p = Matrix::zeros(n, n);
    let mut weighted: [Matrix; 7] = std::array::from_fn(|_| Matrix::zeros(n, n));
    for (l, table) in noise_tables().iter().enumerate() {
        for row in table {
            let pz = noise_probability(row.z, eps);
            let m = row.next - 1;
            p[(l, m)] += pz;
            for kind in RewardKind::ALL {
                weighted[kind.index()][(l, m)] += pz * f64::from(row.rewards[kind.index()]);
            }
        }
    }
    for s in [tables::NON_DECODING, tables::DECODING] {
        p[(s - 1, s - 1)] = 1.0;
    }
    let rewards = weighted.map(|w| {
        let mut r = Matrix::zeros(n, n);
        for l in 0..n {
            for m in 0..n {
                if p[(l, m)] > 0.0 {
                    r[(l, m)] = w[(l, m)] / p[(l, m)];
                }
            }
        }
        r
    });
    Ok(ChainMrp {
        eps,
        transition: p,
        rewards,
    })
}

impl ChainMrp {
    pub fn eps(&self) -> [f64; 3] {
        self.eps
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn reward(&self, kind: RewardKind) -> &Matrix {
        &self.rewards[kind.index()]
    }

    pub fn spec(&self, kind: RewardKind) -> Result<MrpSpec> {
        MrpSpec::new(self.transition.clone(), self.reward(kind).clone())
    }

    pub fn canonical(&self, kind: RewardKind) -> Result<CanonicalMrp> {
        canonicalize(&self.spec(kind)?)
    }

    /// Expected reward of `kind` over one run started in state 1.
    pub fn expected_per_run(&self, kind: RewardKind) -> Result<f64> {
        Ok(self
            .canonical(kind)?
            .unscaled_rewards(Horizon::Infinite, None)?
            .per_state[0])
    }

    /// Probability that a run ends in the decoding state.
    pub fn decode_probability(&self) -> Result<f64> {
        let c = self.canonical(RewardKind::Equations)?;
        Ok(c.transition_limit()?[(0, c.num_states() - 1)])
    }
}

/// Who builds chains and which target is not the bottleneck.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainRoles {
    pub builder: usize,
    /// `(j, k)`, ascending.
    pub targets: (usize, usize),
    /// The target with the smaller single-user latency, `u`.
    pub bottleneck_excluded: usize,
}

impl ChainRoles {
    /// Picks `u` as the target with the smaller `(1 - d̂) / (1 - ε)`; ties go
    /// to the lower index.
    pub fn new(builder: usize, eps: &ChannelTriple, d_hat: [f64; 3]) -> Result<Self> {
        if builder > 2 {
            return Err(Error::InvalidInput("builder must be 0, 1 or 2".into()));
        }
        let (j, k) = others(builder);
        let w = |r: usize| (1.0 - d_hat[r]) / (1.0 - eps.eps(r));
        let u = if w(k) < w(j) { k } else { j };
        Ok(Self {
            builder,
            targets: (j, k),
            bottleneck_excluded: u,
        })
    }

    pub fn with_excluded(builder: usize, u: usize) -> Result<Self> {
        let (j, k) = others(builder);
        if u != j && u != k {
            return Err(Error::InvalidInput(format!(
                "user {u} is not a target of builder {builder}"
            )));
        }
        Ok(Self {
            builder,
            targets: (j, k),
            bottleneck_excluded: u,
        })
    }

    /// `[ε_i, ε_j, ε_k]`.
    pub fn role_eps(&self, eps: &ChannelTriple) -> [f64; 3] {
        [
            eps.eps(self.builder),
            eps.eps(self.targets.0),
            eps.eps(self.targets.1),
        ]
    }

    /// Reward column that counts decodes by `u`.
    pub fn u_kind(&self) -> RewardKind {
        if self.bottleneck_excluded == self.targets.0 {
            RewardKind::TargetJ
        } else {
            RewardKind::TargetK
        }
    }
}

/// How the builder's per-run decode count is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeConvention {
    /// Mean equations per run among runs that end decoded.
    #[default]
    Conditional,
    /// Mean equations per run that end decoded, times the decode
    /// probability: decoded symbols per run on average.
    Unconditional,
}

impl std::str::FromStr for DecodeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conditional" => Ok(Self::Conditional),
            "unconditional" => Ok(Self::Unconditional),
            _ => Err(Error::Parse(format!("unknown decode convention {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerRunRewards {
    /// Expected decodes by `u` per run.
    pub e_reward_u: f64,
    /// Builder decodes per run under the chosen convention.
    pub e_reward_e: f64,
}

pub fn per_run_rewards(
    model: &ChainMrp,
    roles: &ChainRoles,
    convention: DecodeConvention,
) -> Result<PerRunRewards> {
    let e_reward_u = model.expected_per_run(roles.u_kind())?;
    let eq = model.canonical(RewardKind::Equations)?;
    let from = 0;
    let to = tables::DECODING - 1;
    let e_reward_e = match convention {
        DecodeConvention::Conditional => eq.conditional_absorption_reward(from, to)?,
        DecodeConvention::Unconditional => {
            // Still fails when decoding is impossible.
            eq.conditional_absorption_reward(from, to)?;
            let inf = eq.to_original(&eq.scaled_reward_inf()?);
            inf[(from, to)]
        }
    };
    Ok(PerRunRewards {
        e_reward_u,
        e_reward_e,
    })
}

/// `⌊N · demand_u / e_reward_u⌋`, a lower bound on the expected number of
/// runs completed before `u` is served.
pub fn m_lower(n_symbols: u64, demand_u: f64, e_reward_u: f64) -> Result<u64> {
    if !(e_reward_u > 0.0 && e_reward_u.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "per-run reward must be positive, got {e_reward_u}"
        )));
    }
    if !(demand_u >= 0.0 && demand_u.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "demand must be nonnegative, got {demand_u}"
        )));
    }
    Ok((n_symbols as f64 * demand_u / e_reward_u).floor() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficiencyReport {
    pub e_reward_u: f64,
    pub e_reward_e: f64,
    pub m_lower: u64,
    /// `M⁻`.
    pub lhs: f64,
    /// Runs the builder needs: `N (1 - d̂_i) / e_reward_e`.
    pub rhs: f64,
    pub holds: bool,
    /// Smallest builder distortion certified: `1 - M⁻ e_reward_e / N`.
    pub d_i_boundary: f64,
}

/// Checks whether the builder is served within the runs that serve `u`.
/// `residual_demands[r]` is `1 - d̂_r`, indexed by user.
pub fn sufficiency_check(
    model: &ChainMrp,
    roles: &ChainRoles,
    n_symbols: u64,
    residual_demands: [f64; 3],
    convention: DecodeConvention,
) -> Result<SufficiencyReport> {
    if residual_demands.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidInput(
            "residual demands must be nonnegative".into(),
        ));
    }
    if n_symbols == 0 {
        return Err(Error::InvalidInput("N must be positive".into()));
    }
    let r = per_run_rewards(model, roles, convention)?;
    let m = m_lower(
        n_symbols,
        residual_demands[roles.bottleneck_excluded],
        r.e_reward_u,
    )?;
    let n = n_symbols as f64;
    let lhs = m as f64;
    let rhs = n * residual_demands[roles.builder] / r.e_reward_e;
    Ok(SufficiencyReport {
        e_reward_u: r.e_reward_u,
        e_reward_e: r.e_reward_e,
        m_lower: m,
        lhs,
        rhs,
        holds: lhs >= rhs,
        d_i_boundary: 1.0 - lhs * r.e_reward_e / n,
    })
}

/// Finite block length or the floor-free limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Finite(u64),
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub eps_u: f64,
    pub d_hat_u: f64,
    pub e_reward_u: f64,
    pub e_reward_e: f64,
    pub d_i_boundary: f64,
}

/// Certified builder distortion as `ε_u` sweeps, with `d̂_u = demand_u_of(ε_u)`.
/// `base` supplies the other two erasure rates.
pub fn distortion_boundary(
    base: &ChannelTriple,
    roles: &ChainRoles,
    sweep: &[f64],
    demand_u_of: impl Fn(f64) -> f64,
    mode: BoundaryMode,
    convention: DecodeConvention,
) -> Result<Vec<BoundaryPoint>> {
    if sweep.is_empty() {
        return Err(Error::InvalidInput("sweep must be nonempty".into()));
    }
    let u = roles.bottleneck_excluded;
    sweep
        .iter()
        .map(|&eps_u| {
            let mut e = base.get();
            e[u] = eps_u;
            let eps = ChannelTriple::new(e)?;
            let [ei, ej, ek] = roles.role_eps(&eps);
            let model = build_chain_mrp(ei, ej, ek)?;
            let d_hat_u = demand_u_of(eps_u);
            let r = per_run_rewards(&model, roles, convention)?;
            let d_i_boundary = match mode {
                BoundaryMode::Asymptotic => 1.0 - (1.0 - d_hat_u) * r.e_reward_e / r.e_reward_u,
                BoundaryMode::Finite(n) => {
                    let m = m_lower(n, 1.0 - d_hat_u, r.e_reward_u)?;
                    1.0 - m as f64 * r.e_reward_e / n as f64
                }
            };
            Ok(BoundaryPoint {
                eps_u,
                d_hat_u,
                e_reward_u: r.e_reward_u,
                e_reward_e: r.e_reward_e,
                d_i_boundary,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn compiled_rows_are_stochastic() {
        let m = build_chain_mrp(0.1, 0.4, 0.6).unwrap();
        for s in m.transition().row_sums() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        for kind in RewardKind::ALL {
            assert!(m
                .reward(kind)
                .as_slice()
                .iter()
                .all(|&x| (0.0..=2.0).contains(&x)));
        }
        let c = m.canonical(RewardKind::Equations).unwrap();
        assert_eq!((c.num_transient(), c.num_absorbing()), (4, 2));
    }

    #[test]
    fn start_to_abandon_entries() {
        let (ei, ej, ek) = (0.1, 0.4, 0.6);
        let m = build_chain_mrp(ei, ej, ek).unwrap();
        assert_abs_diff_eq!(
            m.transition()[(0, 4)],
            (1.0 - ej) * (1.0 - ek),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            m.reward(RewardKind::Equations)[(0, 4)],
            1.0 - ei,
            epsilon = 1e-15
        );
        let clear = build_chain_mrp(0.3, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(clear.transition()[(0, 4)], 1.0);
    }

    #[test]
    fn deaf_builder_cannot_decode() {
        let m = build_chain_mrp(1.0, 0.3, 0.5).unwrap();
        let roles = ChainRoles::with_excluded(0, 1).unwrap();
        let r = per_run_rewards(&m, &roles, DecodeConvention::Conditional);
        assert!(matches!(r, Err(Error::UnreachableAbsorption { .. })));
        // Target j decodes once per reception until both targets receive together.
        let e_u = m.expected_per_run(RewardKind::TargetJ).unwrap();
        assert_abs_diff_eq!(e_u, 1.0 / (1.0 - 0.5), epsilon = 1e-12);
    }

    #[test]
    fn target_swap_symmetry() {
        let a = build_chain_mrp(0.2, 0.3, 0.7).unwrap();
        let b = build_chain_mrp(0.2, 0.7, 0.3).unwrap();
        let perm = [0, 2, 1, 3, 4, 5];
        assert!(
            a.transition()
                .select(&perm, &perm)
                .max_abs_diff(b.transition())
                < 1e-15
        );
        for kind in RewardKind::ALL {
            let lhs = a.reward(kind).select(&perm, &perm);
            assert!(lhs.max_abs_diff(b.reward(kind.swapped())) < 1e-15);
        }
    }

    #[test]
    fn m_lower_examples() {
        assert_eq!(m_lower(1000, 0.5, 33.4).unwrap(), 14);
        assert_eq!(m_lower(1000, 0.0, 33.4).unwrap(), 0);
        assert!(m_lower(1000, 0.5, 0.0).is_err());
        let a = m_lower(1000, 0.37, 2.3).unwrap();
        let b = m_lower(10_000, 0.37, 2.3).unwrap();
        assert!((b as i64 - 10 * a as i64).abs() <= 10);
    }

    #[test]
    fn builder_without_demand_always_holds() {
        let eps = ChannelTriple::new([0.1, 0.3, 0.6]).unwrap();
        let roles = ChainRoles::new(0, &eps, [0.01, 0.09, 0.36]).unwrap();
        assert_eq!(roles.bottleneck_excluded, 1);
        let [a, b, c] = roles.role_eps(&eps);
        let m = build_chain_mrp(a, b, c).unwrap();
        let r = sufficiency_check(
            &m,
            &roles,
            10_000,
            [0.0, 0.91, 0.64],
            DecodeConvention::Conditional,
        )
        .unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn single_point_boundary_matches_check() {
        let eps = ChannelTriple::new([0.1, 0.3, 0.6]).unwrap();
        let roles = ChainRoles::with_excluded(0, 1).unwrap();
        let pts = distortion_boundary(
            &eps,
            &roles,
            &[0.3],
            |e| e * e,
            BoundaryMode::Finite(100_000),
            DecodeConvention::Conditional,
        )
        .unwrap();
        let m = build_chain_mrp(0.1, 0.3, 0.6).unwrap();
        let r = sufficiency_check(
            &m,
            &roles,
            100_000,
            [0.5, 1.0 - 0.09, 0.64],
            DecodeConvention::Conditional,
        )
        .unwrap();
        assert_abs_diff_eq!(pts[0].d_i_boundary, r.d_i_boundary, epsilon = 1e-12);
    }
}
