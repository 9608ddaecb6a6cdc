//! The chaining algorithm as a six-state Markov reward process: expected
//! rewards per run from the matrices, checked against a direct simulation of
//! the noise tables.

use erasure_bcast::chaining::{
    build_chain_mrp, per_run_rewards, simulate_chain_runs, ChainRoles, DecodeConvention, RewardKind,
};

fn main() -> erasure_bcast::Result<()> {
    let eps = [0.1, 0.4, 0.6];
    let model = build_chain_mrp(eps[0], eps[1], eps[2])?;
    let mc = simulate_chain_runs(eps, 200_000, 1)?;
    println!("builder/targets erasure rates {eps:?}");
    println!(
        "decode probability {:.6} (simulated {:.6})",
        model.decode_probability()?,
        mc.endings[1] as f64 / mc.runs as f64
    );
    for kind in RewardKind::ALL {
        let (mean, se) = mc.per_run[kind.index()];
        println!(
            "  {kind:?}: {:.6} per run (simulated {mean:.6} +- {se:.6})",
            model.expected_per_run(kind)?
        );
    }
    let roles = ChainRoles::with_excluded(0, 1)?;
    for conv in [
        DecodeConvention::Conditional,
        DecodeConvention::Unconditional,
    ] {
        let r = per_run_rewards(&model, &roles, conv)?;
        println!(
            "{conv:?}: E[u decodes] = {:.6}, E[builder equations] = {:.6}",
            r.e_reward_u, r.e_reward_e
        );
    }
    Ok(())
}
