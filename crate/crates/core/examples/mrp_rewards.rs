//! Expected accumulated rewards of a small absorbing Markov reward process,
//! compared against brute-force path enumeration and Monte Carlo.
//!
//! Run with `cargo run --example mrp_rewards [path/to/spec.mrp]`.

use erasure_bcast::absorbing_mrp::{
    canonicalize, enumerate_reward, simulate_reward, Horizon, MrpSpec,
};

fn main() -> erasure_bcast::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/two_state.mrp").to_string()
    });
    let spec = MrpSpec::from_file(&path)?;
    let mrp = canonicalize(&spec)?;
    println!(
        "{} states, {} transient",
        mrp.num_states(),
        mrp.num_transient()
    );
    println!(
        "spectral radius of the transient block ~ {:.6}",
        mrp.spectral_radius_estimate()
    );

    for n in [1, 2, 5] {
        let scaled = mrp.to_original(&mrp.scaled_reward_n(n)?);
        let (brute, prob) = enumerate_reward(&spec, n, 0, spec.num_states() - 1)?;
        println!(
            "n = {n}: R(0 -> last) = {:.10} (enumeration {:.10}, probability {:.6})",
            scaled[(0, spec.num_states() - 1)],
            brute,
            prob
        );
    }

    let summary = mrp.unscaled_rewards(Horizon::Infinite, None)?;
    for (i, v) in summary.per_state.iter().enumerate() {
        println!("expected total reward from state {}: {v:.6}", i + 1);
    }
    let mc = simulate_reward(&spec, 0, 200_000, 7)?;
    println!(
        "Monte Carlo from state 1: {:.4} +- {:.4}",
        mc.mean, mc.std_err
    );
    Ok(())
}
