//! Exit criteria, one test per criterion. Each prints a single
//! `PASS`/`FAIL` line; run with `--nocapture` to see them.

mod common;

use std::time::Instant;

use erasure_bcast::absorbing_mrp::{canonicalize, enumerate_reward, simulate_reward, Horizon};
use erasure_bcast::chaining::{
    build_chain_mrp, distortion_boundary, per_run_rewards, simulate_chain_runs, sufficiency_check,
    BoundaryMode, ChainRoles, DecodeConvention, RewardKind,
};
use erasure_bcast::feedback_lp::{
    latency_bounds, solve_uncoded_lp, solve_uncoded_lp_by_vertices, uncoded_lp_problem,
    ChannelTriple, DistortionTriple,
};
use erasure_bcast::sim::{
    run_chain_scenario, run_experiment, run_uncoded_profile, ChainScenario, SimConfig, TailScheme,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

fn report(criterion: u32, failures: &[String], detail: String, started: Instant) {
    let secs = started.elapsed().as_secs_f64();
    if failures.is_empty() {
        println!("PASS criterion {criterion}: {detail} ({secs:.1} s)");
    } else {
        println!(
            "FAIL criterion {criterion}: {detail} ({secs:.1} s); first: {}",
            failures[0]
        );
    }
    assert!(
        failures.is_empty(),
        "{} failures: {:#?}",
        failures.len(),
        &failures[..failures.len().min(10)]
    );
}

#[test]
fn criterion_1_closed_form_matches_enumeration() {
    let t = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(101);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let states = rng.random_range(2..=5);
        let spec = common::random_spec(&mut rng, states, 0.95);
        let n = rng.random_range(1..=6);
        let canon = canonicalize(&spec).unwrap();
        let closed = canon.to_original(&canon.scaled_reward_n(n).unwrap());
        for i in 0..states {
            for j in 0..states {
                let (brute, _) = enumerate_reward(&spec, n, i, j).unwrap();
                let err = (closed[(i, j)] - brute).abs();
                worst = worst.max(err);
                if err > 1e-9 {
                    failures.push(format!(
                        "case {case}, n = {n}, ({i}, {j}): {} vs {brute}",
                        closed[(i, j)]
                    ));
                }
            }
        }
    }
    report(
        1,
        &failures,
        format!("100 specs, worst |closed - enumerated| = {worst:.2e}"),
        t,
    );
}

#[test]
fn criterion_2_absorption_rewards_match_monte_carlo() {
    let t = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(202);
    let specs: Vec<_> = (0..20)
        .map(|_| {
            let states = rng.random_range(2..=5);
            common::random_spec(&mut rng, states, 0.9)
        })
        .collect();
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut comparisons = 0;
    for (case, spec) in specs.iter().enumerate() {
        let canon = canonicalize(spec).unwrap();
        let start = canon.transient_states()[0];
        let summary = canon.unscaled_rewards(Horizon::Infinite, None).unwrap();
        let sim = simulate_reward(spec, start, 1_000_000, 9000 + case as u64).unwrap();
        let mut check = |what: String, exact: f64, mean: f64, se: f64| {
            comparisons += 1;
            let z = (mean - exact).abs() / se.max(1e-300);
            worst_z = worst_z.max(z);
            if z > 3.0 {
                failures.push(format!(
                    "case {case} {what}: exact {exact}, simulated {mean} +- {se}"
                ));
            }
        };
        check(
            "total".into(),
            summary.per_state[start],
            sim.mean,
            sim.std_err,
        );
        for (a, &j) in sim.absorbing.iter().enumerate() {
            if sim.histogram[a] < 100 {
                continue;
            }
            let (Some(mean), Some(se)) = (sim.conditional_means[a], sim.conditional_std_errs[a])
            else {
                continue;
            };
            let exact = canon.conditional_absorption_reward(start, j).unwrap();
            check(format!("given absorption in {j}"), exact, mean, se);
        }
    }
    report(
        2,
        &failures,
        format!("20 specs, {comparisons} comparisons at 1e6 trials, worst |z| = {worst_z:.2}"),
        t,
    );
}

#[test]
fn criterion_3_recurrence_and_vanishing_transient_block() {
    let t = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(303);
    let mut failures = Vec::new();
    let mut worst_rec: f64 = 0.0;
    let mut worst_tail: f64 = 0.0;
    for case in 0..50 {
        let states = rng.random_range(2..=6);
        let spec = common::random_spec(&mut rng, states, 0.9);
        let canon = canonicalize(&spec).unwrap();
        let p = canon.canonical_transition();
        let h = canon.canonical_h();
        let mut prev = canon.scaled_reward_n(1).unwrap();
        if prev.max_abs_diff(&h) > 1e-10 {
            failures.push(format!("case {case}: first-step reward differs from P∘Θ"));
        }
        for n in 2..=10 {
            let cur = canon.scaled_reward_n(n).unwrap();
            let rec = prev
                .multiply(&p)
                .unwrap()
                .add(&canon.transition_power(n - 1).unwrap().multiply(&h).unwrap())
                .unwrap();
            let err = cur.max_abs_diff(&rec);
            worst_rec = worst_rec.max(err);
            if err > 1e-10 {
                failures.push(format!("case {case}, n = {n}: recurrence off by {err:.2e}"));
            }
            prev = cur;
        }
        let tr = canon.num_transient();
        let far = canon.scaled_reward_n(500).unwrap();
        let block = (0..tr)
            .flat_map(|i| (0..tr).map(move |j| (i, j)))
            .map(|(i, j)| far[(i, j)].abs())
            .fold(0.0, f64::max);
        worst_tail = worst_tail.max(block);
        if block >= 1e-8 {
            failures.push(format!(
                "case {case}: transient block {block:.2e} at n = 500"
            ));
        }
    }
    report(
        3,
        &failures,
        format!("50 specs, worst recurrence error {worst_rec:.2e}, worst transient entry at n = 500 {worst_tail:.2e}"),
        t,
    );
}

/// Right-hand side of the stopping equation, from the raw erasure rates.
fn pairing_map(e: [f64; 3], t: [f64; 3]) -> [f64; 3] {
    let t0 = 1.0 / (1.0 - e[0] * e[1] * e[2]);
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let single =
            e[i] * (t0 * (1.0 - e[j]) * (1.0 - e[k]) + (1.0 - e[k]) * t[j] + (1.0 - e[j]) * t[k]);
        let pair = t0 * (1.0 - e[i]) * e[j] * e[k];
        (single / (1.0 - e[i])).min(pair / (1.0 - e[j] * e[k]))
    })
}

#[test]
fn criterion_4_fixed_point_is_the_unique_lp_optimum() {
    let t = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(404);
    let mut failures = Vec::new();
    let (mut worst_fp, mut worst_lp): (f64, f64) = (0.0, 0.0);
    for case in 0..200 {
        let e: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..0.9));
        let eps = ChannelTriple::new(e).unwrap();
        let sol = solve_uncoded_lp(&eps).unwrap();
        let image = pairing_map(e, sol.t);
        for i in 0..3 {
            let err = (image[i] - sol.t[i]).abs();
            worst_fp = worst_fp.max(err);
            if err > 1e-9 {
                failures.push(format!(
                    "case {case} {e:?}: component {i} off the fixed point by {err:.2e}"
                ));
            }
        }
        let (_, cons) = uncoded_lp_problem(&eps);
        for c in &cons {
            let lhs: f64 = c.coeffs.iter().zip(&sol.t).map(|(a, x)| a * x).sum();
            if lhs > c.bound + 1e-9 {
                failures.push(format!(
                    "case {case} {e:?}: LP constraint violated by {:.2e}",
                    lhs - c.bound
                ));
            }
        }
        let lp = solve_uncoded_lp_by_vertices(&eps).unwrap();
        let err = (0..3)
            .map(|i| (lp.x[i] - sol.t[i]).abs())
            .fold(0.0, f64::max);
        worst_lp = worst_lp.max(err);
        if err > 1e-8 {
            failures.push(format!(
                "case {case} {e:?}: vertex optimum {:?} vs fixed point {:?}",
                lp.x, sol.t
            ));
        }
        if !lp.unique {
            failures.push(format!("case {case} {e:?}: optimum vertex not unique"));
        }
    }
    report(
        4,
        &failures,
        format!(
            "200 triples, worst fixed-point residual {worst_fp:.2e}, worst LP gap {worst_lp:.2e}"
        ),
        t,
    );
}

#[test]
fn criterion_5_uncoded_transmissions_track_t_star() {
    let t = Instant::now();
    let n = 100_000;
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for e3 in [0.5, 0.6, 0.7, 0.8] {
        let eps = ChannelTriple::new([0.3, 0.4, e3]).unwrap();
        let t_star = solve_uncoded_lp(&eps).unwrap().t_star;
        let counts: Vec<f64> = (1..=20u64)
            .into_par_iter()
            .map(|seed| {
                run_uncoded_profile(n, &eps, seed, false)
                    .unwrap()
                    .uncoded_count()
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let rel = (mean - t_star) / t_star;
        lines.push(format!(
            "eps3 {e3}: {mean:.4} vs {t_star:.4} ({:+.2}%)",
            100.0 * rel
        ));
        if rel.abs() > 0.02 {
            failures.push(format!("eps3 = {e3}: measured {mean} vs t* {t_star}"));
        }
    }
    report(5, &failures, lines.join(", "), t);
}

#[test]
fn criterion_6_chain_model_matches_table_simulation() {
    let t = Instant::now();
    let eps = [0.1, 0.4, 0.6];
    let model = build_chain_mrp(eps[0], eps[1], eps[2]).unwrap();
    let mc = simulate_chain_runs(eps, 1_000_000, 606).unwrap();
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut z_check = |what: String, exact: f64, observed: f64, sigma: f64| {
        if sigma == 0.0 {
            if (observed - exact).abs() > 1e-12 {
                failures.push(format!("{what}: exact {exact}, observed {observed}"));
            }
            return;
        }
        let z = (observed - exact).abs() / sigma;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            failures.push(format!(
                "{what}: exact {exact}, observed {observed} (sigma {sigma:.2e})"
            ));
        }
    };
    let p = model.transition();
    for l in 0..4 {
        let visits = mc.visits(l) as f64;
        for m in 0..6 {
            let exact = p[(l, m)];
            let (freq, _) = mc.frequency(l, m);
            z_check(
                format!("p({}, {})", l + 1, m + 1),
                exact,
                freq,
                (exact * (1.0 - exact) / visits).sqrt(),
            );
        }
    }
    for kind in RewardKind::ALL {
        let (mean, se) = mc.per_run[kind.index()];
        z_check(
            format!("{kind:?} per run"),
            model.expected_per_run(kind).unwrap(),
            mean,
            se,
        );
    }
    let roles = ChainRoles::with_excluded(0, 1).unwrap();
    let r = per_run_rewards(&model, &roles, DecodeConvention::Conditional).unwrap();
    let (eq_mean, eq_se) = mc.equations_given_decode;
    z_check(
        "builder equations given decode".into(),
        r.e_reward_e,
        eq_mean,
        eq_se,
    );
    let decoded = mc.endings[1] as f64 / mc.runs as f64;
    let pd = model.decode_probability().unwrap();
    z_check(
        "decode probability".into(),
        pd,
        decoded,
        (pd * (1.0 - pd) / mc.runs as f64).sqrt(),
    );
    report(
        6,
        &failures,
        format!("1e6 runs at eps = {eps:?}, worst |z| = {worst_z:.2}"),
        t,
    );
}

#[test]
fn criterion_7_boundary_monotone_and_chaining_meets_outer_bound() {
    let t = Instant::now();
    let n = 50_000;
    let sweep = [0.2, 0.3, 0.4, 0.5, 0.6];
    let base = ChannelTriple::new([0.1, 0.4, 0.6]).unwrap();
    let roles = ChainRoles::with_excluded(0, 1).unwrap();
    let conv = DecodeConvention::default();
    let mut failures = Vec::new();
    for mode in [BoundaryMode::Finite(n), BoundaryMode::Asymptotic] {
        let b = distortion_boundary(&base, &roles, &sweep, |e| e * e, mode, conv).unwrap();
        for w in b.windows(2) {
            if w[1].d_i_boundary > w[0].d_i_boundary + 1e-12 {
                failures.push(format!(
                    "{mode:?}: boundary rises from {} to {} between eps2 = {} and {}",
                    w[0].d_i_boundary, w[1].d_i_boundary, w[0].eps_u, w[1].eps_u
                ));
            }
        }
    }
    let mut certified = Vec::new();
    for &e2 in &sweep {
        let eps = ChannelTriple::new([0.1, e2, 0.6]).unwrap();
        let d = DistortionTriple::quadratic(&eps);
        let roles = ChainRoles::new(0, &eps, d.get()).unwrap();
        let [ei, ej, ek] = roles.role_eps(&eps);
        let model = build_chain_mrp(ei, ej, ek).unwrap();
        let rep = sufficiency_check(&model, &roles, n, d.get().map(|x| 1.0 - x), conv).unwrap();
        if !rep.holds {
            continue;
        }
        let w_plus = latency_bounds(&eps, &d).w_plus;
        for seed in 1..=3 {
            let r =
                run_chain_scenario(&ChainScenario::new(n, eps.get(), d.get(), 0, seed)).unwrap();
            let rel = (r.latency - w_plus) / w_plus;
            if rel.abs() > 0.02 {
                failures.push(format!(
                    "eps2 = {e2}, seed {seed}: latency {} vs w+ {w_plus}",
                    r.latency
                ));
            }
        }
        certified.push(e2);
    }
    if certified.is_empty() {
        failures.push("sufficiency holds nowhere on the sweep".into());
    }
    report(
        7,
        &failures,
        format!("boundary nonincreasing over eps2 in {sweep:?}; sufficiency holds at {certified:?}, latency checked at 3 seeds each"),
        t,
    );
}

#[test]
fn criterion_8_invariants_over_random_configurations() {
    let t = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(808);
    let configs: Vec<SimConfig> = (0..50)
        .map(|i| {
            let e: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..0.9));
            let eps = ChannelTriple::new(e).unwrap();
            let d = if i % 2 == 0 {
                DistortionTriple::quadratic(&eps)
            } else {
                DistortionTriple::new(std::array::from_fn(|_| rng.random_range(0.0..0.6))).unwrap()
            };
            let mut cfg = SimConfig::new(rng.random_range(200..3000), eps, d, rng.random());
            cfg.tail_scheme = if i % 3 == 0 {
                TailScheme::PreprocessCoding
            } else {
                TailScheme::Chaining
            };
            cfg.chaining_restricted = i % 5 == 1;
            cfg.check_invariants = true;
            cfg
        })
        .collect();
    let failures: Vec<String> = configs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, cfg)| {
            let mut bad = Vec::new();
            let tag = format!(
                "config {i} (eps {:?}, d {:?}, N {})",
                cfg.eps.get(),
                cfg.d.get(),
                cfg.n_symbols
            );
            match run_experiment(cfg) {
                Err(err) => bad.push(format!("{tag}: {err}")),
                Ok(r) => {
                    for v in r.violations.iter().take(3) {
                        bad.push(format!("{tag}: {v}"));
                    }
                    if r.stopping_shape_ok == Some(false) {
                        bad.push(format!("{tag}: invalid stopping shape"));
                    }
                    for (u, o) in r.users.iter().enumerate() {
                        if o.distortion > cfg.d.d(u) + 1e-12 {
                            bad.push(format!(
                                "{tag}: user {u} ends at distortion {}",
                                o.distortion
                            ));
                        }
                    }
                    if run_experiment(cfg).ok().as_ref() != Some(&r) {
                        bad.push(format!("{tag}: rerun with the same seed differs"));
                    }
                }
            }
            match run_uncoded_profile(cfg.n_symbols, &cfg.eps, cfg.seed, true) {
                Err(err) => bad.push(format!("{tag} profile: {err}")),
                Ok(p) => {
                    if !p.stopping_shape_ok || !p.violations.is_empty() {
                        bad.push(format!(
                            "{tag} profile: shape {} violations {:?}",
                            p.stopping_shape_ok, p.violations
                        ));
                    }
                }
            }
            let mut sc =
                ChainScenario::new(cfg.n_symbols, cfg.eps.get(), cfg.d.get(), i % 3, cfg.seed);
            sc.restricted = true;
            sc.check_invariants = true;
            match run_chain_scenario(&sc) {
                Err(err) => bad.push(format!("{tag} chain scenario: {err}")),
                Ok(r) => {
                    for v in r.violations.iter().take(3) {
                        bad.push(format!("{tag} chain scenario: {v}"));
                    }
                }
            }
            bad
        })
        .collect();
    report(
        8,
        &failures,
        "50 configurations: conservation, decodability, stopping shape, chain tables, determinism"
            .into(),
        t,
    );
}
