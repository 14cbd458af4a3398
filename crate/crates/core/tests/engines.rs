mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use thqaoa::search::{find_threshold, is_unimodal, threshold_profile, SearchMode, ThresholdSearchOptions};
use thqaoa::standard::{evolve_collapsed, expectation_std, optimize_angles, OptimizerOptions, StdEvaluator};
use thqaoa::statevec::{sample, PhaseKind, StateVectorSim};
use thqaoa::thresh::evolve_two_level;
use thqaoa::{AngleSchedule, Graph, ObjectiveSpectrum, ProblemInstance, ProblemKind};

use common::{desk_suite, grid_max_p1, random_schedule, rng, spectrum};

fn k3_cut() -> ProblemInstance {
    ProblemInstance::new(Graph::complete(3).unwrap(), ProblemKind::MaxCut, None).unwrap()
}

#[test]
fn k3_collapsed_matches_statevec() {
    let inst = k3_cut();
    let spec = spectrum(&inst);
    let sim = StateVectorSim::new(&inst, 1 << 10).unwrap();
    let mut rng = rng(3);
    for _ in 0..200 {
        let p = rng.gen_range(0..=6);
        let s = random_schedule(&mut rng, p);
        let dense = sim.expectation(&sim.run(PhaseKind::Standard, &s));
        let fast = expectation_std(&spec, &s).unwrap().expectation;
        assert!((dense - fast).abs() <= 1e-10, "{dense} {fast}");
    }
}

#[test]
fn k3_p1_grid_optimum_reproduced() {
    let spec = spectrum(&k3_cut());
    let grid = grid_max_p1(&spec, 360);
    let (_, res) = optimize_angles(&spec, 1, &OptimizerOptions::default()).unwrap();
    assert!(res.expectation >= grid - 1e-3, "{} < {grid}", res.expectation);
    assert!((res.expectation - grid).abs() <= 1e-3);
}

#[test]
fn small_instances_p1_beat_grid() {
    let mut checked = 0;
    for (i, kind) in ProblemKind::ALL.into_iter().enumerate() {
        for n in [6, 8] {
            let k = if kind == ProblemKind::MaxBisection || kind == ProblemKind::MaxCut { None } else { Some(n / 2) };
            let g = Graph::erdos_renyi(n, 0.5, 40 + i as u64 * 7 + n as u64).unwrap();
            let inst = ProblemInstance::new(g, kind, k).unwrap();
            let spec = spectrum(&inst);
            if spec.c_max() == 0 {
                continue;
            }
            let grid = grid_max_p1(&spec, 360);
            let opts = OptimizerOptions { seed: i as u64, ..Default::default() };
            let (_, res) = optimize_angles(&spec, 1, &opts).unwrap();
            assert!(res.expectation >= grid - 1e-3, "{kind} n={n}: {} < {grid}", res.expectation);
            checked += 1;
        }
    }
    assert_eq!(checked, 8);
}

#[test]
fn equal_values_share_amplitudes() {
    let mut rng = rng(17);
    for inst in desk_suite().into_iter().filter(|i| i.feasible_count() <= 5000).take(12) {
        let spec = spectrum(&inst);
        let sim = StateVectorSim::new(&inst, 1 << 16).unwrap();
        let index: BTreeMap<u32, usize> = spec.entries().iter().enumerate().map(|(i, &(g, _))| (g, i)).collect();
        for _ in 0..3 {
            let p = rng.gen_range(1..=5);
            let s = random_schedule(&mut rng, p);
            let dense = sim.run(PhaseKind::Standard, &s);
            let coll = evolve_collapsed(&spec, &s);
            for (a, &c) in dense.amps.iter().zip(sim.values()) {
                let want = coll.coeffs[index[&c]];
                assert!((a - want).norm() <= 1e-10, "value {c}: {a} vs {want}");
            }
        }
    }
}

#[test]
fn threshold_groups_match_two_level() {
    let mut rng = rng(5);
    for inst in desk_suite().into_iter().filter(|i| i.feasible_count() <= 5000).take(12) {
        let spec = spectrum(&inst);
        let sim = StateVectorSim::new(&inst, 1 << 16).unwrap();
        for th in spec.threshold_candidates() {
            let p = rng.gen_range(0..=6);
            let s = random_schedule(&mut rng, p);
            let dense = sim.run(PhaseKind::Threshold(th), &s);
            let two = evolve_two_level(&spec.split_at(th), &s);
            for (prob, &c) in dense.probabilities().iter().zip(sim.values()) {
                let want = if i64::from(c) > th { two.c1.norm_sqr() } else { two.c0.norm_sqr() };
                assert!((prob - want).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn m_cubed_shots_estimate_within_one() {
    let g = Graph::erdos_renyi(10, 0.4, 77).unwrap();
    let inst = ProblemInstance::new(g, ProblemKind::KDensestSubgraph, Some(5)).unwrap();
    let m = inst.m();
    let sim = StateVectorSim::new(&inst, 1 << 16).unwrap();
    let s = AngleSchedule::explicit(vec![1.1, 2.4], vec![0.7, 1.9]).unwrap();
    let state = sim.run(PhaseKind::Standard, &s);
    let exact = sim.expectation(&state);
    let shots = m * m * m;
    let good = (0..100)
        .filter(|&rep| {
            let xs = sample(&state, shots, rep).unwrap();
            let mean = xs.iter().map(|x| inst.objective(x).unwrap() as f64).sum::<f64>() / shots as f64;
            (mean - exact).abs() <= 1.0
        })
        .count();
    assert!(good >= 95, "{good}/100 within 1 (m = {m})");
}

#[test]
fn observation_two_inequality_on_grid() {
    // sin b sin g + (2 + e) sin^2(b/2) sin^2(g/2) <= 2 + e with e = 8r - 6
    for i in 0..=20 {
        let r = 0.75 + 0.25 * i as f64 / 20.0;
        let eps = 8.0 * r - 6.0;
        for a in 0..100 {
            for b in 0..100 {
                let beta = 2.0 * PI * a as f64 / 100.0;
                let gamma = 2.0 * PI * b as f64 / 100.0;
                let lhs = beta.sin() * gamma.sin()
                    + (2.0 + eps) * (beta / 2.0).sin().powi(2) * (gamma / 2.0).sin().powi(2);
                assert!(lhs <= 2.0 + eps + 1e-12, "r={r} beta={beta} gamma={gamma}");
            }
        }
    }
}

#[test]
fn std_unitarity_long_schedules() {
    let mut rng = rng(8);
    for l in [1usize, 10, 100, 10_000] {
        let entries: Vec<(u32, u64)> = (0..l as u32).map(|g| (g * 3 + 1, rng.gen_range(1..1000))).collect();
        let spec = ObjectiveSpectrum::from_entries(20, Some(10), ProblemKind::KDensestSubgraph, entries).unwrap();
        let p = if l == 10_000 { 32 } else { 256 };
        let st = evolve_collapsed(&spec, &random_schedule(&mut rng, p));
        assert!((st.norm_sqr(&spec) - 1.0).abs() <= 1e-12, "l={l}");
    }
}

#[test]
fn evaluation_cost_linear_in_l() {
    let mut rng = rng(9);
    let sched = random_schedule(&mut rng, 200);
    let mut per_value = Vec::new();
    for l in [100usize, 1000, 10_000] {
        let entries: Vec<(u32, u64)> = (0..l as u32).map(|g| (g, 1 + u64::from(g) % 7)).collect();
        let spec = ObjectiveSpectrum::from_entries(20, Some(10), ProblemKind::KDensestSubgraph, entries).unwrap();
        let mut ev = StdEvaluator::new(&spec);
        let best = (0..7)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(ev.evaluate(sched.rounds()));
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min);
        per_value.push(best / l as f64);
    }
    let hi = per_value.iter().cloned().fold(0.0, f64::max);
    let lo = per_value.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo <= 2.0, "cost per value {per_value:?}");
}

#[test]
fn unimodality_survey() {
    // violations are reported, not failures; the search falls back to a scan
    let mut violations = 0;
    let mut profiles = 0;
    for inst in desk_suite().iter().filter(|i| i.n() <= 12) {
        let spec = spectrum(inst);
        if spec.c_max() == 0 {
            continue;
        }
        for p in 1..=32 {
            let ratios: Vec<f64> = threshold_profile(&spec, p).unwrap().into_iter().map(|(_, r)| r).collect();
            profiles += 1;
            if !is_unimodal(&ratios) {
                violations += 1;
                println!("not single-peaked: {} n={} k={:?} p={p}", inst.kind(), inst.n(), inst.k());
            }
            let fast = find_threshold(&spec, p, &ThresholdSearchOptions::default()).unwrap();
            let scan = find_threshold(&spec, p, &ThresholdSearchOptions { exhaustive: true, ..Default::default() }).unwrap();
            assert_eq!(fast.th, scan.th);
        }
    }
    println!("{violations} of {profiles} threshold profiles were not single-peaked");
}

#[test]
fn oracle_threshold_search_is_logarithmic() {
    const K: f64 = 24.0;
    for inst in desk_suite().iter().step_by(3) {
        let spec = spectrum(inst);
        if spec.c_max() == 0 {
            continue;
        }
        for p in [1usize, 4, 16, 64] {
            let opts = ThresholdSearchOptions { mode: SearchMode::Oracle, ..Default::default() };
            let out = find_threshold(&spec, p, &opts).unwrap();
            let lg = |x: f64| x.log2().ceil() + 1.0;
            let bound = K * lg(p as f64 + 2.0) * lg(f64::from(spec.c_max()) + 2.0);
            assert!((out.result.evals as f64) <= bound, "{} evals > {bound}", out.result.evals);
        }
    }
}
