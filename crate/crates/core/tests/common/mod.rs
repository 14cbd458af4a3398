#![allow(dead_code)]

use thqaoa::spectrum::{build_spectrum, DEFAULT_ENUMERATION_CAP};
use thqaoa::{AngleSchedule, Graph, ObjectiveSpectrum, ProblemInstance, ProblemKind};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 60 instances with at most 2^16 feasible states: every problem kind,
/// n in {8, 10, 12, 14, 16}, edge probabilities 0.25, 0.5, 0.75.
pub fn desk_suite() -> Vec<ProblemInstance> {
    let mut out = Vec::new();
    let mut seed = 1000;
    for kind in ProblemKind::ALL {
        for n in [8, 10, 12, 14, 16] {
            for prob in [0.25, 0.5, 0.75] {
                seed += 1;
                let k = match kind {
                    ProblemKind::MaxCut | ProblemKind::MaxBisection => None,
                    _ => Some(n / 2 - 1 + (seed as usize % 3)),
                };
                let g = Graph::erdos_renyi(n, prob, seed).unwrap();
                out.push(ProblemInstance::new(g, kind, k).unwrap());
            }
        }
    }
    out
}

pub fn spectrum(inst: &ProblemInstance) -> ObjectiveSpectrum {
    build_spectrum(inst, DEFAULT_ENUMERATION_CAP).unwrap()
}

pub fn random_schedule(rng: &mut ChaCha8Rng, p: usize) -> AngleSchedule {
    let mut angles = || (0..p).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect::<Vec<_>>();
    let betas = angles();
    AngleSchedule::explicit(betas, angles()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Expectation maximum over an `m x m` grid on `[0, 2pi)^2` at one round.
pub fn grid_max_p1(spectrum: &ObjectiveSpectrum, m: usize) -> f64 {
    let mut ev = thqaoa::standard::StdEvaluator::new(spectrum);
    let step = std::f64::consts::TAU / m as f64;
    let mut best = f64::NEG_INFINITY;
    for i in 0..m {
        for j in 0..m {
            let (e, _) = ev.evaluate([(i as f64 * step, j as f64 * step)]);
            best = best.max(e);
        }
    }
    best
}
