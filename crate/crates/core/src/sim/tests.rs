use super::*;
use approx::assert_abs_diff_eq;

fn config(n: u64, eps: [f64; 3], d: [f64; 3], seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(
        n,
        ChannelTriple::new(eps).unwrap(),
        DistortionTriple::new(d).unwrap(),
        seed,
    );
    cfg.check_invariants = true;
    cfg
}

#[test]
fn noiseless_channel_stops_at_the_largest_demand() {
    let r = run_experiment(&config(1000, [0.0; 3], [0.5, 0.2, 0.3], 1)).unwrap();
    assert_eq!(r.phase_slots.total(), 800);
    assert_abs_diff_eq!(r.latency, 0.8);
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    for (u, d) in [0.5, 0.2, 0.3].into_iter().enumerate() {
        assert!(r.users[u].distortion <= d + 1e-12);
    }
}

#[test]
fn noiseless_full_demand_is_one_pass() {
    let r = run_experiment(&config(500, [0.0; 3], [0.0; 3], 1)).unwrap();
    assert_eq!(
        r.phase_slots,
        PhaseSlots {
            systematic: 500,
            network_coding: 0,
            tail: 0
        }
    );
    assert!(r.snapshots[0].sizes.iter().all(|&s| s == 0.0));
}

#[test]
fn same_seed_same_result() {
    let mut cfg = config(3000, [0.3, 0.4, 0.5], [0.09, 0.16, 0.25], 42);
    cfg.trace = true;
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    let trace = a.trace.as_ref().unwrap();
    assert_eq!(trace[0].split(',').count(), 6);
    assert!(trace.len() as u64 >= a.phase_slots.systematic + a.phase_slots.network_coding);
}

#[test]
fn invariants_hold_for_both_tails() {
    for (seed, tail, restricted) in [
        (1, TailScheme::Chaining, false),
        (2, TailScheme::Chaining, true),
        (3, TailScheme::PreprocessCoding, false),
    ] {
        for eps in [
            [0.3, 0.4, 0.5],
            [0.1, 0.4, 0.6],
            [0.5, 0.2, 0.3],
            [0.3, 0.4, 0.95],
        ] {
            let mut cfg = config(2000, eps, [0.0; 3], seed);
            cfg.d = DistortionTriple::quadratic(&cfg.eps);
            cfg.tail_scheme = tail;
            cfg.chaining_restricted = restricted;
            let r = run_experiment(&cfg).unwrap();
            assert!(
                r.violations.is_empty(),
                "{eps:?} {tail:?}: {:?}",
                r.violations
            );
            for u in 0..3 {
                assert!(r.users[u].distortion <= cfg.d.d(u) + 1e-12);
                assert!(r.users[u].satisfied_at.is_some());
            }
        }
    }
}

#[test]
fn profile_stops_in_a_valid_shape() {
    let eps = ChannelTriple::new([0.3, 0.4, 0.5]).unwrap();
    let p = run_uncoded_profile(5000, &eps, 9, true).unwrap();
    assert!(p.stopping_shape_ok);
    assert!(p.violations.is_empty(), "{:?}", p.violations);
    let lp = crate::feedback_lp::solve_uncoded_lp(&eps).unwrap();
    assert!((p.uncoded_count() - lp.t_star).abs() / lp.t_star < 0.05);
}

#[test]
fn first_satisfied_user_hands_over_to_two_users() {
    // User 0 asks for nothing, so everything is served by the two-user scheme.
    let r = run_experiment(&config(20_000, [0.3, 0.3, 0.4], [1.0, 0.0, 0.0], 5)).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert_eq!(r.phase_slots.systematic, 0);
    for (u, eps) in [(1, 0.3), (2, 0.4)] {
        let t = r.users[u].satisfied_at.unwrap() as f64;
        let rate = r.users[u].receptions as f64 / t;
        let sd = (eps * (1.0 - eps) / t).sqrt();
        assert!((rate - (1.0 - eps)).abs() < 3.0 * sd, "user {u}: {rate}");
    }
}

#[test]
fn single_user_coding_tail_costs_its_rate() {
    // Only user 2 is left with demand, so the coding phase serves it alone.
    let mut cfg = config(10_000, [0.3, 0.4, 0.9], [1.0, 1.0, 0.0], 3);
    cfg.tail_scheme = TailScheme::PreprocessCoding;
    let r = run_experiment(&cfg).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert_eq!(r.users[2].distortion, 0.0);
}

#[test]
fn restricted_chain_follows_the_tables() {
    let mut sc = ChainScenario::new(5000, [0.1, 0.4, 0.6], [0.0, 0.4, 0.6], 0, 11);
    sc.restricted = true;
    sc.check_invariants = true;
    let r = run_chain_scenario(&sc).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert!(r.chain.runs > 100);
    assert!(r.chain.decoded > 0);
}

#[test]
fn deaf_builder_never_decodes() {
    let mut sc = ChainScenario::new(4000, [1.0, 0.3, 0.5], [1.0, 0.5, 0.5], 0, 2);
    sc.check_invariants = true;
    let r = run_chain_scenario(&sc).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert_eq!(r.users[0].reconstructed, 0);
    assert_eq!(r.chain.decoded, 0);
    assert_eq!(
        r.chain.rewards[crate::chaining::tables::RewardKind::Equations.index()],
        0
    );
    for (u, eps) in [(1, 0.3), (2, 0.5)] {
        let t = r.users[u].satisfied_at.unwrap() as f64;
        let rate = r.users[u].receptions as f64 / t;
        assert!(
            (rate - (1.0 - eps)).abs() < 3.0 * (eps * (1.0 - eps) / t).sqrt(),
            "user {u}: {rate}"
        );
    }
}

#[test]
fn config_round_trips_through_json() {
    let text = r#"{"n_symbols": 100, "eps": [0.3, 0.4, 0.5], "d": [0.09, 0.16, 0.25], "seed": 7,
        "tail_scheme": "preprocess_coding", "chaining_restricted": true, "trace": false}"#;
    let cfg = SimConfig::from_json(text).unwrap();
    assert_eq!(cfg.tail_scheme, TailScheme::PreprocessCoding);
    let back = SimConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(cfg, back);
    assert!(
        SimConfig::from_json(r#"{"n_symbols": 0, "eps": [0,0,0], "d": [0,0,0], "seed": 1}"#)
            .is_err()
    );
    assert!(
        SimConfig::from_json(r#"{"n_symbols": 5, "eps": [0,0,1], "d": [0,0,0], "seed": 1}"#)
            .is_err()
    );
}
