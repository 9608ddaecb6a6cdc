#![allow(dead_code)]

use erasure_bcast::absorbing_mrp::MrpSpec;
use erasure_bcast::Matrix;
use rand::Rng;

/// Random absorbing process with `states` states, at least one absorbing and
/// at least one transient. Every transient row sends at least 5% of its mass
/// to an absorbing state, and at most `max_q_mass` to transient states.
/// Some transitions are zeroed so sparse patterns get exercised too.
pub fn random_spec(rng: &mut impl Rng, states: usize, max_q_mass: f64) -> MrpSpec {
    assert!(states >= 2);
    let absorbing = rng.random_range(1..states);
    let transient = states - absorbing;
    let mut p = Matrix::zeros(states, states);
    let mut h = Matrix::zeros(states, states);
    for i in 0..transient {
        let q_mass = rng.random_range(0.0..max_q_mass.min(0.95));
        let mut q: Vec<f64> = (0..transient)
            .map(|_| {
                if rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let mut r: Vec<f64> = (0..absorbing)
            .map(|_| {
                if rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let sq: f64 = q.iter().sum();
        if sq == 0.0 {
            q[rng.random_range(0..transient)] = 1.0;
        }
        let sr: f64 = r.iter().sum();
        if sr == 0.0 {
            r[rng.random_range(0..absorbing)] = 1.0;
        }
        let (sq, sr): (f64, f64) = (q.iter().sum(), r.iter().sum());
        for j in 0..transient {
            p[(i, j)] = q_mass * q[j] / sq;
        }
        for a in 0..absorbing {
            p[(i, transient + a)] = (1.0 - q_mass) * r[a] / sr;
        }
        for j in 0..states {
            if p[(i, j)] > 0.0 {
                h[(i, j)] = rng.random_range(-2.0..5.0);
            }
        }
    }
    for a in transient..states {
        p[(a, a)] = 1.0;
    }
    // Shuffle state labels so canonical reordering is exercised.
    let mut perm: Vec<usize> = (0..states).collect();
    for i in (1..states).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let p = p.select(&perm, &perm);
    let h = h.select(&perm, &perm);
    MrpSpec::new(p, h).expect("rows are stochastic")
}
