//! One end-to-end simulation: systematic phase, network coding, then the
//! chosen tail scheme, with the phase breakdown and per-user outcome.
//!
//! `cargo run --release --example simulate -- [N] [seed] [chaining|preprocess_coding]`

use erasure_bcast::feedback_lp::{optimality_report, ChannelTriple, DistortionTriple};
use erasure_bcast::sim::{run_experiment, SimConfig, TailScheme};

fn main() -> erasure_bcast::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let tail: TailScheme = args
        .get(2)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or_default();

    let eps = ChannelTriple::new([0.3, 0.4, 0.5])?;
    let d = DistortionTriple::quadratic(&eps);
    let mut cfg = SimConfig::new(n, eps, d, seed);
    cfg.tail_scheme = tail;
    let r = run_experiment(&cfg)?;
    let rep = optimality_report(&eps, &d)?;

    println!(
        "N = {n}, seed = {seed}, eps = {:?}, d = {:?}",
        eps.get(),
        d.get()
    );
    println!(
        "slots: systematic {}, network coding {}, tail {} ({:?})",
        r.phase_slots.systematic, r.phase_slots.network_coding, r.phase_slots.tail, r.tail
    );
    println!("latency {:.5}  vs  w+ {:.5}", r.latency, rep.bounds.w_plus);
    println!(
        "measured t0 {:.5} (expected {:.5})",
        r.t_hat0, rep.solution.t0
    );
    for (u, o) in r.users.iter().enumerate() {
        println!(
            "user {}: distortion {:.5} (target {:.5}), satisfied at slot {:?}",
            u + 1,
            o.distortion,
            d.d(u),
            o.satisfied_at
        );
    }
    Ok(())
}
