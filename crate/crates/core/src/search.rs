//! Outer-loop parameter searches for the threshold engine.
//!
//! [`find_angles_oracle`] treats the expectation as a black box over
//! schedules. It grows an all-pi round count geometrically until the
//! expectation drops, locates the best all-pi length `p'` inside the last
//! bracket by a peak search, then tries a closed-form final round at
//! transition rounds `p'` and `p' + 1` for each candidate marked fraction.
//!
//! [`find_threshold`] searches the threshold for a fixed round budget. It
//! relies on the ratio being single-peaked in the threshold and falls back to
//! a full scan when the probes contradict that.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::schedule::AngleSchedule;
use crate::spectrum::{ObjectiveSpectrum, ThresholdSplit};
use crate::thresh::{
    capped_expectation, capped_schedule, expectation_thresh, final_angles_units, finish,
    min_rounds_units, pi_prefix_units, RunResult,
};

/// Candidate marked fractions for the final-round scan.
#[derive(Debug, Clone, PartialEq)]
pub enum FractionGrid {
    /// Exact `(r, 1 - r)` pairs, e.g. from a known spectrum.
    Known(Vec<(f64, f64)>),
    /// `points` evenly spaced fractions over the regimes compatible with the
    /// best all-pi length, refined once around the winner.
    Uniform { points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSearchOptions {
    /// Growth factor of the round-count sequence; must exceed 1.
    pub lambda: f64,
    /// Maximum number of black-box evaluations.
    pub budget: u64,
    /// Round cap; `None` leaves the round count unbounded.
    pub max_rounds: Option<usize>,
    pub grid: FractionGrid,
}

impl Default for AngleSearchOptions {
    fn default() -> Self {
        AngleSearchOptions {
            lambda: 2.0,
            budget: 100_000,
            max_rounds: None,
            grid: FractionGrid::Uniform { points: 512 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSearchOutcome {
    pub schedule: AngleSchedule,
    pub result: RunResult,
    /// Best all-pi round count found by the peak search.
    pub best_pi_rounds: usize,
}

struct Budgeted<F> {
    eval: F,
    used: u64,
    budget: u64,
    exhausted: bool,
    best: Option<(AngleSchedule, RunResult)>,
}

impl<F: FnMut(&AngleSchedule) -> RunResult> Budgeted<F> {
    fn call(&mut self, schedule: AngleSchedule) -> Option<RunResult> {
        if self.used >= self.budget {
            self.exhausted = true;
            return None;
        }
        self.used += 1;
        let res = (self.eval)(&schedule);
        // ties keep the earlier (shorter) candidate
        if self.best.as_ref().is_none_or(|(_, b)| res.expectation > b.expectation) {
            self.best = Some((schedule, res));
        }
        Some(res)
    }
}

/// Angle search for a fixed threshold through a black-box expectation.
pub fn find_angles_oracle<F>(eval: F, opts: &AngleSearchOptions) -> Result<AngleSearchOutcome>
where
    F: FnMut(&AngleSchedule) -> RunResult,
{
    if opts.lambda.is_nan() || opts.lambda <= 1.0 {
        return Err(Error::input(format!("lambda must exceed 1, got {}", opts.lambda)));
    }
    if opts.budget == 0 {
        return Err(Error::input("angle search needs a positive budget"));
    }
    let start = Instant::now();
    let cap = opts.max_rounds.unwrap_or(usize::MAX);
    let mut bx = Budgeted { eval, used: 0, budget: opts.budget, exhausted: false, best: None };
    let mut pi_memo: BTreeMap<usize, f64> = BTreeMap::new();
    let mut pi_eval = |bx: &mut Budgeted<F>, p: usize| -> Option<f64> {
        if let Some(&e) = pi_memo.get(&p) {
            return Some(e);
        }
        let e = bx.call(AngleSchedule::all_pi(p))?.expectation;
        pi_memo.insert(p, e);
        Some(e)
    };

    // Exponential phase over 0, ceil(lambda^0), ceil(lambda^1), ...
    let mut seq = vec![0usize];
    let mut power = 1.0f64;
    let mut bracket = None;
    let mut i = 0;
    'grow: loop {
        while seq.len() <= i + 1 {
            let last = *seq.last().unwrap();
            if last >= cap {
                break;
            }
            let next = (power.ceil() as usize).min(cap);
            power *= opts.lambda;
            if next > last {
                seq.push(next);
            }
        }
        let Some(here) = pi_eval(&mut bx, seq[i]) else { break 'grow };
        if i + 1 >= seq.len() {
            // reached the round cap while still improving
            bracket = Some((seq[i.saturating_sub(1)], seq[i]));
            break;
        }
        let Some(next) = pi_eval(&mut bx, seq[i + 1]) else { break 'grow };
        if next <= here {
            bracket = Some((seq[i.saturating_sub(1)], seq[i + 1]));
            break;
        }
        i += 1;
    }

    let mut best_pi = None;
    if let Some((mut lo, mut hi)) = bracket {
        // Peak search: move towards the larger of two neighbours.
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let (Some(a), Some(b)) = (pi_eval(&mut bx, mid), pi_eval(&mut bx, mid + 1)) else {
                break;
            };
            if a >= b {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo == hi {
            best_pi = Some(lo);
        }
    }
    let best_pi_rounds = best_pi
        .or_else(|| {
            // budget ran out: use the best all-pi length seen so far
            pi_memo.iter().fold(None, |acc: Option<(usize, f64)>, (&p, &e)| match acc {
                Some((_, be)) if be >= e => acc,
                _ => Some((p, e)),
            })
            .map(|(p, _)| p)
        })
        .unwrap_or(0);

    // Final-round scan at transition rounds p' and p' + 1.
    if best_pi.is_some() {
        let transitions: Vec<usize> = [best_pi_rounds, best_pi_rounds + 1]
            .into_iter()
            .filter(|&t| t >= 1 && t <= cap)
            .collect();
        match &opts.grid {
            FractionGrid::Known(fracs) => {
                for &t in &transitions {
                    for &(r, q) in fracs {
                        if let Some(s) = transition_schedule(r, q, t) {
                            bx.call(s);
                        }
                    }
                }
            }
            FractionGrid::Uniform { points } => {
                uniform_scan(&mut bx, &transitions, best_pi_rounds, (*points).max(2));
            }
        }
    }

    let truncated = bx.exhausted;
    let evals = bx.used;
    let (schedule, mut result) =
        bx.best.ok_or_else(|| Error::input("angle search made no evaluations"))?;
    result.evals = evals;
    result.truncated = truncated;
    result.wall_ns = start.elapsed().as_nanos();
    Ok(AngleSearchOutcome { schedule, result, best_pi_rounds })
}

fn transition_schedule(r: f64, q: f64, t: usize) -> Option<AngleSchedule> {
    let (a, b) = pi_prefix_units(r, q, t - 1);
    let (beta, gamma) = final_angles_units(r, q, a, b).ok()?;
    AngleSchedule::pi_prefix(t, t, beta, gamma).ok()
}

fn uniform_scan<F: FnMut(&AngleSchedule) -> RunResult>(
    bx: &mut Budgeted<F>,
    transitions: &[usize],
    best_pi: usize,
    points: usize,
) {
    // fractions whose minimal round count is within one of p'
    let lo = regime_boundary(best_pi.saturating_sub(2));
    let hi = regime_boundary(best_pi + 1);
    let scan = |bx: &mut Budgeted<F>, a: f64, b: f64| -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for i in 0..points {
            let r = a + (b - a) * i as f64 / (points - 1) as f64;
            for &t in transitions {
                if let Some(s) = transition_schedule(r, 1.0 - r, t) {
                    let e = bx.call(s)?.expectation;
                    if best.is_none_or(|(_, be)| e > be) {
                        best = Some((r, e));
                    }
                }
            }
        }
        best
    };
    if let Some((r, _)) = scan(bx, lo, hi) {
        let step = (hi - lo) / (points - 1) as f64;
        scan(bx, (r - step).max(lo), (r + step).min(hi));
    }
}

/// Smallest fraction `r` whose minimal round count exceeds `rounds`
/// (`0` for `rounds = 0`).
pub fn regime_boundary(rounds: usize) -> f64 {
    if rounds == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if min_rounds_units(mid, 1.0 - mid, rounds).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Closed-form schedules, capped at the round budget.
    Analytic,
    /// [`find_angles_oracle`] per threshold with the exact marked fraction.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOutcome {
    pub th: i64,
    pub schedule: AngleSchedule,
    pub result: RunResult,
    /// False when the probed ratios were not single-peaked and a full scan
    /// was used.
    pub unimodal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearchOptions {
    pub mode: SearchMode,
    pub lambda: f64,
    /// Evaluation budget of each per-threshold angle search (oracle mode).
    pub angle_budget: u64,
    /// Scan every candidate instead of the peak search.
    pub exhaustive: bool,
}

impl Default for ThresholdSearchOptions {
    fn default() -> Self {
        ThresholdSearchOptions {
            mode: SearchMode::Analytic,
            lambda: 2.0,
            angle_budget: 10_000,
            exhaustive: false,
        }
    }
}

struct Scored {
    expectation: f64,
    p_above: f64,
    evals: u64,
    truncated: bool,
    schedule: AngleSchedule,
}

fn score(
    spectrum: &ObjectiveSpectrum,
    split: &ThresholdSplit,
    p: usize,
    opts: &ThresholdSearchOptions,
) -> Result<Scored> {
    match opts.mode {
        SearchMode::Analytic => {
            let (expectation, p_above) = capped_expectation(split, p);
            Ok(Scored {
                expectation,
                p_above,
                evals: 1,
                truncated: false,
                schedule: capped_schedule(split, p),
            })
        }
        SearchMode::Oracle => {
            let angle_opts = AngleSearchOptions {
                lambda: opts.lambda,
                budget: opts.angle_budget,
                max_rounds: Some(p),
                grid: FractionGrid::Known(vec![(split.r(), split.q())]),
            };
            let out = find_angles_oracle(
                |s| expectation_thresh(spectrum, split.th, s).expect("c_max checked by caller"),
                &angle_opts,
            )?;
            Ok(Scored {
                expectation: out.result.expectation,
                p_above: out.result.p_above,
                evals: out.result.evals,
                truncated: out.result.truncated,
                schedule: out.schedule.padded_to(p),
            })
        }
    }
}

/// Threshold maximising the ratio at round budget `p`.
///
/// Candidates are `g_i - 1` for every distinct value `g_i`, so each one marks
/// a different set of states. Ties go to the smaller threshold.
pub fn find_threshold(
    spectrum: &ObjectiveSpectrum,
    p: usize,
    opts: &ThresholdSearchOptions,
) -> Result<ThresholdOutcome> {
    if spectrum.c_max() == 0 {
        return Err(Error::DegenerateInstance);
    }
    let start = Instant::now();
    let candidates = spectrum.threshold_candidates();
    let mut memo: BTreeMap<usize, Scored> = BTreeMap::new();
    let probe = |i: usize, memo: &mut BTreeMap<usize, Scored>| -> Result<f64> {
        if let Some(s) = memo.get(&i) {
            return Ok(s.expectation);
        }
        let s = score(spectrum, &spectrum.split_at(candidates[i]), p, opts)?;
        let e = s.expectation;
        memo.insert(i, s);
        Ok(e)
    };

    let mut unimodal = true;
    let best = if opts.exhaustive {
        linear_argmax(candidates.len(), |i| probe(i, &mut memo))?
    } else {
        let (mut lo, mut hi) = (0, candidates.len() - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if probe(mid, &mut memo)? >= probe(mid + 1, &mut memo)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        probe(lo, &mut memo)?;
        let probed: Vec<f64> = memo.values().map(|s| s.expectation).collect();
        let top = memo.values().map(|s| s.expectation).fold(f64::NEG_INFINITY, f64::max);
        if is_unimodal(&probed) && memo[&lo].expectation >= top {
            lo
        } else {
            unimodal = false;
            linear_argmax(candidates.len(), |i| probe(i, &mut memo))?
        }
    };

    let evals = memo.values().map(|s| s.evals).sum();
    let truncated = memo.values().any(|s| s.truncated);
    let chosen = memo.remove(&best).expect("best candidate was probed");
    let mut result = finish(spectrum, chosen.expectation, chosen.p_above, evals, start)?;
    result.truncated = truncated;
    Ok(ThresholdOutcome { th: candidates[best], schedule: chosen.schedule, result, unimodal })
}

fn linear_argmax(len: usize, mut f: impl FnMut(usize) -> Result<f64>) -> Result<usize> {
    let mut best = (0, f(0)?);
    for i in 1..len {
        let v = f(i)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}

/// Non-decreasing then non-increasing (ties allowed).
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut falling = false;
    for w in values.windows(2) {
        if w[1] < w[0] {
            falling = true;
        } else if w[1] > w[0] && falling {
            return false;
        }
    }
    true
}

/// Analytic ratio for every threshold candidate at round budget `p`.
pub fn threshold_profile(spectrum: &ObjectiveSpectrum, p: usize) -> Result<Vec<(i64, f64)>> {
    if spectrum.c_max() == 0 {
        return Err(Error::DegenerateInstance);
    }
    let c_max = spectrum.c_max() as f64;
    Ok(spectrum
        .threshold_candidates()
        .into_iter()
        .map(|th| (th, capped_expectation(&spectrum.split_at(th), p).0 / c_max))
        .collect())
}
