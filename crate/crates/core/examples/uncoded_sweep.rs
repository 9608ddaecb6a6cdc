//! Length of the uncoded phases against the LP prediction `t*` as the third
//! user's channel worsens. Each point averages several seeds.
//!
//! `cargo run --release --example uncoded_sweep -- [N] [seeds]`

use erasure_bcast::cli::{run_sweep, Comparison, SweepAxis, SweepMeasure, SweepSpec};
use erasure_bcast::feedback_lp::{ChannelTriple, DistortionTriple};
use erasure_bcast::sim::SimConfig;

fn main() -> erasure_bcast::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let eps = ChannelTriple::new([0.3, 0.4, 0.5])?;
    let spec = SweepSpec {
        base: SimConfig::new(n, eps, DistortionTriple::quadratic(&eps), 0),
        axis: SweepAxis::Eps(2),
        values: vec![0.5, 0.6, 0.7, 0.8],
        seeds: (1..=seeds).collect(),
        quadratic_d: true,
        measure: SweepMeasure::Uncoded,
        comparisons: vec![Comparison::TStar],
    };
    let out = run_sweep(&spec);
    println!("eps3  measured (+- se)        t*        rel. error");
    for a in &out.aggregate {
        let (m, se) = a.uncoded.unwrap_or((f64::NAN, f64::NAN));
        let t = a.t_star.unwrap_or(f64::NAN);
        println!(
            "{:.2}  {m:.5} (+- {se:.5})   {t:.5}   {:+.3}%",
            a.value,
            100.0 * (m - t) / t
        );
    }
    Ok(())
}
