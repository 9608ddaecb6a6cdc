//! Splitting leftover queues between the three users before an idealized
//! channel-coding phase.

use erasure_bcast::feedback_lp::{
    solve_preprocess_lp, solve_queue_lp, ChannelTriple, DistortionTriple, PreprocessInstance,
    QueueClass, DELTA_NAMES,
};

fn main() -> erasure_bcast::Result<()> {
    let eps = ChannelTriple::new([0.3, 0.4, 0.95])?;
    // User 3 is the builder: its private queue and the two pair queues remain.
    let inst = PreprocessInstance {
        role_i: 2,
        queue_sizes: [0.05, 0.2, 0.15],
        received: [0.8, 0.8, 0.6],
        eps,
        d: DistortionTriple::new([0.05, 0.1, 0.2])?,
    };
    let sol = solve_preprocess_lp(&inst)?;
    println!("remaining demands: {:?}", inst.demands());
    for (name, x) in DELTA_NAMES.iter().zip(sol.deltas) {
        println!("  {name:>9}: {x:.6}");
    }
    println!("coding-phase latency: {:.6}", sol.latency);

    // The same problem in the general form used by the simulator.
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
    let general = solve_queue_lp(&classes, &eps, inst.demands())?;
    println!("general form latency: {:.6}", general.latency);
    for (class, set, x) in general.allocations {
        println!(
            "  queue {:03b} -> users {set:03b}: {x:.6}",
            classes[class].members
        );
    }
    Ok(())
}
