//! Total latency of the full pipeline against the outer bound `w+` as the
//! third user's channel worsens, for both tail schemes.
//!
//! `cargo run --release --example latency_sweep -- [N] [seeds]`

use erasure_bcast::cli::{run_sweep, Comparison, SweepAxis, SweepMeasure, SweepSpec};
use erasure_bcast::feedback_lp::{ChannelTriple, DistortionTriple};
use erasure_bcast::sim::{SimConfig, TailScheme};

fn main() -> erasure_bcast::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let eps = ChannelTriple::new([0.3, 0.4, 0.5])?;
    for tail in [TailScheme::Chaining, TailScheme::PreprocessCoding] {
        let mut base = SimConfig::new(n, eps, DistortionTriple::quadratic(&eps), 0);
        base.tail_scheme = tail;
        let spec = SweepSpec {
            base,
            axis: SweepAxis::Eps(2),
            values: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95],
            seeds: (1..=seeds).collect(),
            quadratic_d: true,
            measure: SweepMeasure::Full,
            comparisons: vec![Comparison::WPlus],
        };
        let out = run_sweep(&spec);
        println!("{tail:?}");
        println!("  eps3  latency (+- se)        w+");
        for a in &out.aggregate {
            let (m, se) = a.latency.unwrap_or((f64::NAN, f64::NAN));
            println!(
                "  {:.2}  {m:.5} (+- {se:.5})   {:.5}",
                a.value,
                a.w_plus.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
