//! Smallest builder distortion certified by the chaining sufficiency test as
//! the non-bottleneck target's erasure rate grows, with `d = ε²` for the
//! targets. Printed for a finite block and for the floor-free limit.

use erasure_bcast::chaining::{distortion_boundary, BoundaryMode, ChainRoles, DecodeConvention};
use erasure_bcast::feedback_lp::ChannelTriple;

fn main() -> erasure_bcast::Result<()> {
    let base = ChannelTriple::new([0.1, 0.2, 0.6])?;
    let roles = ChainRoles::with_excluded(0, 1)?;
    let sweep = [0.2, 0.3, 0.4, 0.5, 0.6];
    for conv in [
        DecodeConvention::Conditional,
        DecodeConvention::Unconditional,
    ] {
        println!("{conv:?} decode count");
        let finite = distortion_boundary(
            &base,
            &roles,
            &sweep,
            |e| e * e,
            BoundaryMode::Finite(1_000_000),
            conv,
        )?;
        let limit = distortion_boundary(
            &base,
            &roles,
            &sweep,
            |e| e * e,
            BoundaryMode::Asymptotic,
            conv,
        )?;
        println!("  eps_u  d_hat_u  E[u]      E[eq]     N=1e6      limit");
        for (f, a) in finite.iter().zip(&limit) {
            println!(
                "  {:.2}   {:.4}   {:.5}   {:.5}   {:+.5}   {:+.5}",
                f.eps_u, f.d_hat_u, f.e_reward_u, f.e_reward_e, f.d_i_boundary, a.d_i_boundary
            );
        }
    }
    Ok(())
}
