//! Pairing durations of the instantly decodable phase, checked against a
//! vertex-enumeration LP solve, and the resulting latency certificate.

use erasure_bcast::feedback_lp::{
    optimality_report, solve_uncoded_lp, solve_uncoded_lp_by_vertices, ChannelTriple,
    DistortionTriple,
};

fn main() -> erasure_bcast::Result<()> {
    for e in [
        [0.3, 0.4, 0.5],
        [0.3, 0.4, 0.8],
        [0.3, 0.4, 0.95],
        [0.1, 0.1, 0.1],
    ] {
        let eps = ChannelTriple::new(e)?;
        let fixed = solve_uncoded_lp(&eps)?;
        let lp = solve_uncoded_lp_by_vertices(&eps)?;
        let rep = optimality_report(&eps, &DistortionTriple::quadratic(&eps))?;
        println!("eps = {e:?}");
        println!(
            "  t0 = {:.6}, t = [{:.6}, {:.6}, {:.6}], t* = {:.6}",
            fixed.t0, fixed.t[0], fixed.t[1], fixed.t[2], fixed.t_star
        );
        println!(
            "  vertex LP: [{:.6}, {:.6}, {:.6}], unique = {}",
            lp.x[0], lp.x[1], lp.x[2], lp.unique
        );
        println!("  leftover private queues: {:?}", fixed.residual_queues);
        println!(
            "  w- = {:.4}, w+ = {:.4}, latency certified: {:?}",
            rep.bounds.w_minus, rep.bounds.w_plus, rep.achievable_latency
        );
    }
    Ok(())
}
