//! Chaining from prepared queues: the builder (user 1) shares a queue with
//! each target. Where the sufficiency test holds, the measured latency
//! should sit at the outer bound `w+`.

use erasure_bcast::chaining::{build_chain_mrp, sufficiency_check, ChainRoles, DecodeConvention};
use erasure_bcast::feedback_lp::{ChannelTriple, DistortionTriple};
use erasure_bcast::sim::{run_chain_scenario, ChainScenario};

fn main() -> erasure_bcast::Result<()> {
    let n = 50_000;
    println!("eps2  holds  boundary   latency   w+       runs  decoded");
    for e2 in [0.2, 0.3, 0.4, 0.5, 0.6] {
        let eps = ChannelTriple::new([0.1, e2, 0.6])?;
        let d = DistortionTriple::quadratic(&eps).get();
        let roles = ChainRoles::new(0, &eps, d)?;
        let [ei, ej, ek] = roles.role_eps(&eps);
        let model = build_chain_mrp(ei, ej, ek)?;
        let rep = sufficiency_check(
            &model,
            &roles,
            n,
            d.map(|x| 1.0 - x),
            DecodeConvention::default(),
        )?;
        let r = run_chain_scenario(&ChainScenario::new(n, eps.get(), d, 0, 1))?;
        let w_plus = (0..3)
            .map(|u| (1.0 - d[u]) / (1.0 - eps.eps(u)))
            .fold(0.0, f64::max);
        println!(
            "{e2:.1}   {:5}  {:+.5}   {:.5}   {w_plus:.5}  {:5} {:5}",
            rep.holds, rep.d_i_boundary, r.latency, r.chain.runs, r.chain.decoded
        );
    }
    Ok(())
}
