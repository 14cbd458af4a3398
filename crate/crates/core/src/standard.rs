//! Standard (objective-valued) phase separator with the Grover mixer,
//! evaluated over the `l` distinct objective values.
//!
//! With `w_j = d_j / |S|`, one round updates every collapsed coefficient as
//!
//! ```text
//! c_i' = c_i e^{-i gamma g_i} - (1 - e^{-i beta}) sum_j w_j c_j e^{-i gamma g_j}
//! ```
//!
//! which costs `O(l)` per round.

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::schedule::AngleSchedule;
use crate::spectrum::ObjectiveSpectrum;
use crate::thresh::{finish, RunResult};

/// One amplitude per distinct objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedState {
    /// Amplitude of each state with value `g_i`, aligned with the spectrum.
    pub coeffs: Vec<Complex64>,
    pub round: usize,
}

impl CollapsedState {
    /// `sum_i d_i |c_i|^2`.
    pub fn norm_sqr(&self, spectrum: &ObjectiveSpectrum) -> f64 {
        spectrum.entries().iter().zip(&self.coeffs).map(|(&(_, d), c)| d as f64 * c.norm_sqr()).sum()
    }
}

/// Reusable evaluator holding the spectrum in floating point.
#[derive(Debug, Clone)]
pub struct StdEvaluator {
    values: Vec<f64>,
    weights: Vec<f64>,
    c_max: f64,
    buf: Vec<Complex64>,
}

impl StdEvaluator {
    pub fn new(spectrum: &ObjectiveSpectrum) -> Self {
        let total = spectrum.total() as f64;
        let values = spectrum.entries().iter().map(|&(g, _)| g as f64).collect();
        let weights = spectrum.entries().iter().map(|&(_, d)| d as f64 / total).collect();
        StdEvaluator {
            values,
            weights,
            c_max: spectrum.c_max() as f64,
            buf: vec![Complex64::new(0.0, 0.0); spectrum.l()],
        }
    }

    /// Leaves unit-scaled coefficients (`c_i |S|^{1/2}`) in `self.buf`.
    fn evolve<I: IntoIterator<Item = (f64, f64)>>(&mut self, rounds: I) {
        let one = Complex64::new(1.0, 0.0);
        self.buf.iter_mut().for_each(|c| *c = one);
        for (beta, gamma) in rounds {
            let mut overlap = Complex64::new(0.0, 0.0);
            for ((c, &g), &w) in self.buf.iter_mut().zip(&self.values).zip(&self.weights) {
                *c *= Complex64::from_polar(1.0, -gamma * g);
                overlap += *c * w;
            }
            let shift = (one - Complex64::from_polar(1.0, -beta)) * overlap;
            self.buf.iter_mut().for_each(|c| *c -= shift);
        }
    }

    /// `(expectation, mass on optimal states)`.
    pub fn evaluate<I: IntoIterator<Item = (f64, f64)>>(&mut self, rounds: I) -> (f64, f64) {
        self.evolve(rounds);
        let mut e = 0.0;
        for ((c, &g), &w) in self.buf.iter().zip(&self.values).zip(&self.weights) {
            e += w * g * c.norm_sqr();
        }
        let last = self.buf.len() - 1;
        (e, self.weights[last] * self.buf[last].norm_sqr())
    }

    /// Expectation for interleaved `[beta_1, gamma_1, ...]` angles.
    pub fn expectation_flat(&mut self, params: &[f64]) -> f64 {
        self.evaluate(params.chunks_exact(2).map(|c| (c[0], c[1]))).0
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }
}

pub fn evolve_collapsed(spectrum: &ObjectiveSpectrum, schedule: &AngleSchedule) -> CollapsedState {
    let mut ev = StdEvaluator::new(spectrum);
    ev.evolve(schedule.rounds());
    let scale = (spectrum.total() as f64).sqrt().recip();
    CollapsedState { coeffs: ev.buf.iter().map(|c| c * scale).collect(), round: schedule.len() }
}

pub fn expectation_std(spectrum: &ObjectiveSpectrum, schedule: &AngleSchedule) -> Result<RunResult> {
    let start = Instant::now();
    let (e, p_opt) = StdEvaluator::new(spectrum).evaluate(schedule.rounds());
    finish(spectrum, e, p_opt, 1, start)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub restarts: usize,
    /// Evaluations allowed per restart.
    pub budget_per_restart: u64,
    pub seed: u64,
    /// Simplex size at which a local search stops.
    pub step_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { restarts: 20, budget_per_restart: 20_000, seed: 0, step_tol: 1e-6 }
    }
}

/// Multi-restart Nelder–Mead maximisation of the standard expectation over
/// `[0, 2pi)^{2p}`.
///
/// Start points are drawn up front from one ChaCha8 stream seeded with
/// `seed`, so the result does not depend on how restarts are scheduled. The
/// best restart wins; ties go to the lower restart index.
pub fn optimize_angles(
    spectrum: &ObjectiveSpectrum,
    p: usize,
    opts: &OptimizerOptions,
) -> Result<(AngleSchedule, RunResult)> {
    if p == 0 {
        return Err(Error::input("optimize_angles needs p >= 1"));
    }
    if opts.restarts == 0 {
        return Err(Error::input("optimize_angles needs at least one restart"));
    }
    let start = Instant::now();
    let dim = 2 * p;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> =
        (0..opts.restarts).map(|_| (0..dim).map(|_| rng.gen_range(0.0..TAU)).collect()).collect();

    let base = StdEvaluator::new(spectrum);
    let outcomes: Vec<LocalOutcome> = starts
        .into_par_iter()
        .map(|x0| {
            let mut ev = base.clone();
            nelder_mead_max(|x| ev.expectation_flat(x), x0, opts.budget_per_restart, opts.step_tol)
        })
        .collect();

    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = i;
        }
    }
    let evals = outcomes.iter().map(|o| o.evals).sum();
    let truncated = outcomes.iter().any(|o| o.truncated);
    let angles: Vec<f64> = outcomes[best].x.iter().map(|a| a.rem_euclid(TAU)).collect();
    let schedule = AngleSchedule::from_flat(&angles)?;
    let (e, p_opt) = base.clone().evaluate(schedule.rounds());
    let mut result = finish(spectrum, e, p_opt, evals, start)?;
    result.truncated = truncated;
    Ok((schedule, result))
}

#[derive(Debug, Clone)]
struct LocalOutcome {
    x: Vec<f64>,
    value: f64,
    evals: u64,
    truncated: bool,
}

/// Nelder–Mead on `-f` with standard coefficients. The simplex is rebuilt
/// around the incumbent once after convergence to escape early collapse.
fn nelder_mead_max(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: Vec<f64>,
    budget: u64,
    tol: f64,
) -> LocalOutcome {
    const INIT_STEP: f64 = 0.4;
    let dim = x0.len();
    let mut evals = 0u64;
    let mut cost = |x: &[f64], evals: &mut u64| {
        *evals += 1;
        -f(x)
    };

    let mut best_x = x0;
    let mut best_v = cost(&best_x, &mut evals);
    let mut rebuilds = 0;
    loop {
        // simplex: vertices and costs
        let mut pts: Vec<Vec<f64>> = vec![best_x.clone()];
        let mut vals = vec![best_v];
        for i in 0..dim {
            let mut x = best_x.clone();
            x[i] += INIT_STEP;
            vals.push(cost(&x, &mut evals));
            pts.push(x);
        }
        let mut converged = false;
        while evals < budget {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let size = pts[1..]
                .iter()
                .map(|x| x.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size < tol {
                converged = true;
                break;
            }

            let centroid: Vec<f64> =
                (0..dim).map(|j| pts[..dim].iter().map(|x| x[j]).sum::<f64>() / dim as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&pts[dim]).map(|(c, w)| c + t * (c - w)).collect()
            };

            let xr = along(1.0);
            let vr = cost(&xr, &mut evals);
            if vr < vals[0] {
                let xe = along(2.0);
                let ve = cost(&xe, &mut evals);
                if ve < vr {
                    pts[dim] = xe;
                    vals[dim] = ve;
                } else {
                    pts[dim] = xr;
                    vals[dim] = vr;
                }
                continue;
            }
            if vr < vals[dim - 1] {
                pts[dim] = xr;
                vals[dim] = vr;
                continue;
            }
            let (xc, vc) = if vr < vals[dim] {
                let xc = along(0.5);
                let vc = cost(&xc, &mut evals);
                (xc, vc)
            } else {
                let xc = along(-0.5);
                let vc = cost(&xc, &mut evals);
                (xc, vc)
            };
            if vc < vals[dim].min(vr) {
                pts[dim] = xc;
                vals[dim] = vc;
                continue;
            }
            // shrink towards the best vertex
            for i in 1..=dim {
                let x: Vec<f64> = pts[i].iter().zip(&pts[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                vals[i] = cost(&x, &mut evals);
                pts[i] = x;
            }
        }
        let i = (0..=dim).min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b))).unwrap();
        let improved = vals[i] < best_v - tol;
        if vals[i] < best_v {
            best_v = vals[i];
            best_x = pts[i].clone();
        }
        if !converged {
            return LocalOutcome { x: best_x, value: -best_v, evals, truncated: true };
        }
        rebuilds += 1;
        if !improved || rebuilds > 3 {
            return LocalOutcome { x: best_x, value: -best_v, evals, truncated: false };
        }
    }
}
