//! Threshold phase separator with the Grover mixer.
//!
//! All states at or below the threshold share one amplitude `c0` and all
//! states above it share `c1`, so a run reduces to a 2-dimensional
//! recursion. With `r = d0 / |S|` one round maps
//!
//! ```text
//! mix = r c0 + (1 - r) c1 e^{-i gamma}
//! c0' = c0          - (1 - e^{-i beta}) mix
//! c1' = c1 e^{-i gamma} - (1 - e^{-i beta}) mix
//! ```
//!
//! Internally amplitudes are carried in units of `|S|^{-1/2}` (both start at
//! 1), which makes every closed form here independent of `|S|`.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schedule::AngleSchedule;
use crate::spectrum::{ObjectiveSpectrum, ThresholdSplit};

/// Relative slack on the final-round feasibility test `4(1-r) - c0^2 >= 0`.
/// Absorbs rounding at the exact regime boundaries.
const FEASIBILITY_SLACK: f64 = 1e-14;

/// Amplitudes after a threshold run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    /// Amplitude of each state with `C(x) <= th`.
    pub c0: Complex64,
    /// Amplitude of each state with `C(x) > th`.
    pub c1: Complex64,
    pub round: usize,
    pub split: ThresholdSplit,
}

impl TwoLevelState {
    /// `d0 |c0|^2 + d1 |c1|^2`, which stays 1.
    pub fn norm_sqr(&self) -> f64 {
        self.split.d0 as f64 * self.c0.norm_sqr() + self.split.d1 as f64 * self.c1.norm_sqr()
    }

    /// Probability of measuring a state above the threshold.
    pub fn p_above(&self) -> f64 {
        self.split.d1 as f64 * self.c1.norm_sqr()
    }

    pub fn expectation(&self) -> f64 {
        self.c0.norm_sqr() * self.split.sum_low as f64 + self.c1.norm_sqr() * self.split.sum_high as f64
    }
}

/// Outcome of one evaluation or of a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunResult {
    /// Expected objective value.
    pub expectation: f64,
    /// `expectation / c_max`.
    pub ratio: f64,
    /// Probability mass above the threshold. For standard runs this is the
    /// mass on optimal states.
    pub p_above: f64,
    /// Expectation evaluations consumed.
    pub evals: u64,
    pub wall_ns: u128,
    /// Set when a search stopped on its evaluation budget.
    pub truncated: bool,
}

/// Unit-scaled amplitudes `(c0, c1) * |S|^{1/2}` after `schedule`.
pub(crate) fn evolve_units(r: f64, q: f64, schedule: &AngleSchedule) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let (mut c0, mut c1) = (one, one);
    for (beta, gamma) in schedule.rounds() {
        let phase = Complex64::from_polar(1.0, -gamma);
        let kick = one - Complex64::from_polar(1.0, -beta);
        let shifted = c1 * phase;
        let mix = kick * (c0 * r + shifted * q);
        c0 -= mix;
        c1 = shifted - mix;
    }
    (c0, c1)
}

pub fn evolve_two_level(split: &ThresholdSplit, schedule: &AngleSchedule) -> TwoLevelState {
    let (u0, u1) = evolve_units(split.r(), split.q(), schedule);
    let scale = (split.total as f64).sqrt().recip();
    TwoLevelState { c0: u0 * scale, c1: u1 * scale, round: schedule.len(), split: *split }
}

/// Two-level expectation and ratio for threshold `th`.
pub fn expectation_thresh(
    spectrum: &ObjectiveSpectrum,
    th: i64,
    schedule: &AngleSchedule,
) -> Result<RunResult> {
    let start = Instant::now();
    let split = spectrum.split_at(th);
    let (expectation, p_above) = unit_expectation(&split, schedule);
    finish(spectrum, expectation, p_above, 1, start)
}

/// `(expectation, p_above)` for a split, computed in unit scaling.
pub(crate) fn unit_expectation(split: &ThresholdSplit, schedule: &AngleSchedule) -> (f64, f64) {
    let (u0, u1) = evolve_units(split.r(), split.q(), schedule);
    let total = split.total as f64;
    let expectation =
        (u0.norm_sqr() * split.sum_low as f64 + u1.norm_sqr() * split.sum_high as f64) / total;
    (expectation, u1.norm_sqr() * split.q())
}

pub(crate) fn finish(
    spectrum: &ObjectiveSpectrum,
    expectation: f64,
    p_above: f64,
    evals: u64,
    start: Instant,
) -> Result<RunResult> {
    if spectrum.c_max() == 0 {
        return Err(Error::DegenerateInstance);
    }
    Ok(RunResult {
        expectation,
        ratio: expectation / spectrum.c_max() as f64,
        p_above,
        evals,
        wall_ns: start.elapsed().as_nanos(),
        truncated: false,
    })
}

/// Round-1 `(|c0|^2, |c1|^2)` from the closed trigonometric forms, with the
/// `|S|^{-1}` prefactor that normalisation requires.
pub fn first_round_magnitudes(r: f64, beta: f64, gamma: f64, total: u64) -> (f64, f64) {
    let core = beta.sin() * gamma.sin()
        + 4.0 * (2.0 * r - 1.0) * (beta / 2.0).sin().powi(2) * (gamma / 2.0).sin().powi(2);
    let inv = (total as f64).recip();
    (inv * (1.0 + 2.0 * (r - 1.0) * core), inv * (1.0 + 2.0 * r * core))
}

/// Equal angles `beta = gamma` that empty the low level in one round.
/// Valid for `0 <= r < 3/4`.
pub fn first_round_angles(r: f64) -> Result<(f64, f64)> {
    if !(0.0..0.75).contains(&r) {
        return Err(Error::OutOfRange(r));
    }
    let theta = (-(3.0 - 4.0 * r).sqrt()).atan2(1.0 - 2.0 * r);
    Ok((theta, theta))
}

/// Unit-scaled coefficients after `j` rounds of `beta = gamma = pi`.
/// Multiply by `|S|^{-1/2}` for amplitudes.
pub fn pi_prefix_coeff(r: f64, j: usize) -> (f64, f64) {
    pi_prefix_units(r, 1.0 - r, j)
}

pub(crate) fn pi_prefix_units(r: f64, q: f64, j: usize) -> (f64, f64) {
    let (mut a, mut b) = (1.0, 1.0);
    for _ in 0..j {
        (a, b) = pi_step(r, q, a, b);
    }
    (a, b)
}

#[inline]
fn pi_step(r: f64, q: f64, a: f64, b: f64) -> (f64, f64) {
    let m = 2.0 * (r * a - q * b);
    (a - m, -b - m)
}

/// `4(1-r) - c0^2` in unit scaling, with slack snapped to zero.
fn delta_sqr(q: f64, a: f64) -> f64 {
    let d2 = 4.0 * q - a * a;
    if d2 < 0.0 && d2 >= -FEASIBILITY_SLACK * 4.0 * q.max(a * a) {
        0.0
    } else {
        d2
    }
}

/// Final-round angles appended to a real prefix `(c0_prev, c1_prev)` given
/// as true amplitudes over `total` feasible states.
pub fn final_round_angles(r: f64, c0_prev: f64, c1_prev: f64, total: u64) -> Result<(f64, f64)> {
    let s = (total as f64).sqrt();
    final_angles_units(r, 1.0 - r, c0_prev * s, c1_prev * s)
}

/// Final-round angles in unit scaling; `q = 1 - r` supplied separately.
pub(crate) fn final_angles_units(r: f64, q: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let d2 = delta_sqr(q, a);
    if d2 < 0.0 {
        return Err(Error::Infeasible(d2));
    }
    let delta = d2.sqrt();
    let sign = if a < 0.0 { -1.0 } else { 1.0 };
    let beta = atan2_pos_zero(-delta * a.abs(), 2.0 * q - a * a);
    // Both arguments are scaled by c1^2 > 0 so the quadrant is kept without
    // dividing by c1. With c1 = 0 the phase is irrelevant and gamma = 0.
    let gamma = atan2_pos_zero(-delta * b * sign, a * b * (q - r));
    Ok((beta, gamma))
}

/// `atan2` with a signed-zero ordinate treated as +0, so a boundary kill
/// returns `pi` rather than `-pi`.
fn atan2_pos_zero(y: f64, x: f64) -> f64 {
    let y = if y == 0.0 { 0.0 } else { y };
    y.atan2(x)
}

fn check_fraction(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::input(format!("fraction r = {r} outside [0, 1]")));
    }
    if r == 1.0 {
        return Err(Error::NoMarkedStates);
    }
    Ok(())
}

/// Fewest rounds after which the low level can be emptied exactly: the
/// smallest `p` whose `(p-1)`-round pi prefix passes the final-round
/// feasibility test.
pub fn min_rounds(r: f64) -> Result<usize> {
    check_fraction(r)?;
    Ok(min_rounds_units(r, 1.0 - r, usize::MAX).expect("unbounded search terminates for r < 1"))
}

/// [`min_rounds`] from exact counts, returning `None` past `cap` rounds.
pub(crate) fn min_rounds_units(r: f64, q: f64, cap: usize) -> Option<usize> {
    let (mut a, mut b) = (1.0, 1.0);
    let mut p = 1;
    while p <= cap {
        if delta_sqr(q, a) >= 0.0 {
            return Some(p);
        }
        (a, b) = pi_step(r, q, a, b);
        p += 1;
    }
    None
}

pub fn min_rounds_for_split(split: &ThresholdSplit) -> Result<usize> {
    if split.d1 == 0 {
        return Err(Error::NoMarkedStates);
    }
    Ok(min_rounds_units(split.r(), split.q(), usize::MAX).expect("d1 > 0 terminates"))
}

/// Pi prefix of `min_rounds - 1` rounds followed by the closed-form final
/// round. Empties the low level exactly.
pub fn optimal_schedule(split: &ThresholdSplit) -> Result<AngleSchedule> {
    let p = min_rounds_for_split(split)?;
    optimal_schedule_with_rounds(split.r(), split.q(), p)
}

fn optimal_schedule_with_rounds(r: f64, q: f64, p: usize) -> Result<AngleSchedule> {
    let (a, b) = pi_prefix_units(r, q, p - 1);
    let (beta, gamma) = final_angles_units(r, q, a, b)?;
    AngleSchedule::pi_prefix(p, p, beta, gamma)
}

/// Best schedule of at most `p` rounds under the capped rule: the exact
/// kill when it fits in `p` rounds, otherwise `p` rounds of pi.
pub fn capped_schedule(split: &ThresholdSplit, p: usize) -> AngleSchedule {
    if split.d1 == 0 || p == 0 {
        return AngleSchedule::zeros(p);
    }
    match min_rounds_units(split.r(), split.q(), p) {
        Some(m) => optimal_schedule_with_rounds(split.r(), split.q(), m)
            .expect("feasible by construction")
            .padded_to(p),
        None => AngleSchedule::all_pi(p),
    }
}

/// Expectation of [`capped_schedule`] without materialising it.
pub(crate) fn capped_expectation(split: &ThresholdSplit, p: usize) -> (f64, f64) {
    if split.d1 == 0 || p == 0 {
        let total = split.total as f64;
        return ((split.sum_low + split.sum_high) as f64 / total, split.q());
    }
    let (r, q) = (split.r(), split.q());
    let (mut a, mut b) = (1.0, 1.0);
    for _ in 0..p {
        if delta_sqr(q, a) >= 0.0 {
            // exact kill: all mass uniformly on the marked states
            return (split.sum_high as f64 / split.d1 as f64, 1.0);
        }
        (a, b) = pi_step(r, q, a, b);
    }
    let total = split.total as f64;
    let expectation = (a * a * split.sum_low as f64 + b * b * split.sum_high as f64) / total;
    (expectation, b * b * q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{Graph, ProblemInstance, ProblemKind};
    use crate::spectrum::build_spectrum;
    use std::f64::consts::PI;

    fn split(d0: u64, d1: u64) -> ThresholdSplit {
        ThresholdSplit::from_counts(d0, d1).unwrap()
    }

    fn angle_eq(a: f64, b: f64) -> bool {
        let d = (a - b).rem_euclid(2.0 * PI);
        d < 1e-12 || 2.0 * PI - d < 1e-12
    }

    fn k3_cut() -> ObjectiveSpectrum {
        let inst = ProblemInstance::new(Graph::complete(3).unwrap(), ProblemKind::MaxCut, None).unwrap();
        build_spectrum(&inst, 1 << 10).unwrap()
    }

    #[test]
    fn zero_rounds_is_uniform() {
        let st = evolve_two_level(&split(3, 5), &AngleSchedule::empty());
        let u = 8f64.sqrt().recip();
        assert_eq!(st.c0, Complex64::new(u, 0.0));
        assert_eq!(st.c1, Complex64::new(u, 0.0));
        let st = evolve_two_level(&split(3, 5), &AngleSchedule::zeros(7));
        assert!((st.c0 - u).norm() < 1e-15 && (st.c1 - u).norm() < 1e-15);
    }

    #[test]
    fn grover_one_of_four() {
        let st = evolve_two_level(&split(3, 1), &AngleSchedule::all_pi(1));
        assert!(st.c0.norm_sqr() <= 1e-24);
        assert!((st.p_above() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k3_uniform_expectation() {
        let s = k3_cut();
        for th in -1..=2 {
            let res = expectation_thresh(&s, th, &AngleSchedule::empty()).unwrap();
            assert!((res.expectation - 1.5).abs() < 1e-15);
            assert!((res.ratio - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_phase_when_nothing_marked() {
        let s = k3_cut();
        let sched = AngleSchedule::explicit(vec![0.3, 1.9], vec![2.2, -0.4]).unwrap();
        let res = expectation_thresh(&s, 2, &sched).unwrap();
        assert!((res.expectation - s.uniform_mean()).abs() < 1e-14);
    }

    #[test]
    fn exact_kill_concentrates_on_marked_states() {
        let s = k3_cut();
        let sp = s.split_at(0);
        let sched = optimal_schedule(&sp).unwrap();
        let res = expectation_thresh(&s, 0, &sched).unwrap();
        assert!((res.expectation - sp.sum_high as f64 / sp.d1 as f64).abs() < 1e-12);
        assert!((res.p_above - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_instance() {
        let inst = ProblemInstance::new(Graph::empty(4).unwrap(), ProblemKind::MaxCut, None).unwrap();
        let s = build_spectrum(&inst, 1 << 10).unwrap();
        assert!(matches!(
            expectation_thresh(&s, 0, &AngleSchedule::empty()),
            Err(Error::DegenerateInstance)
        ));
    }

    #[test]
    fn first_round_angle_values() {
        let (b, g) = first_round_angles(0.5).unwrap();
        assert!(angle_eq(b, -PI / 2.0) && b == g);
        let (b, _) = first_round_angles(0.0).unwrap();
        assert!(angle_eq(b, -PI / 3.0));
        let (b, _) = first_round_angles(0.75 - 1e-12).unwrap();
        assert!(angle_eq(b, PI) || (b.abs() - PI).abs() < 1e-5);
        assert!(matches!(first_round_angles(0.75), Err(Error::OutOfRange(_))));
        assert!(first_round_angles(-0.1).is_err());
    }

    #[test]
    fn first_round_angles_kill() {
        for i in 0..75 {
            let r = i as f64 / 100.0;
            let (b, g) = first_round_angles(r).unwrap();
            let (u0, _) = evolve_units(r, 1.0 - r, &AngleSchedule::explicit(vec![b], vec![g]).unwrap());
            assert!(u0.norm_sqr() <= 1e-24, "r = {r}: {}", u0.norm_sqr());
        }
    }

    #[test]
    fn pi_prefix_values() {
        assert_eq!(pi_prefix_coeff(0.3, 0), (1.0, 1.0));
        for r in [0.1, 0.4, 0.9] {
            assert!((pi_prefix_coeff(r, 1).0 - (3.0 - 4.0 * r)).abs() < 1e-15);
        }
        assert_eq!(pi_prefix_coeff(0.75, 1).0, 0.0);
    }

    #[test]
    fn pi_prefix_matches_complex_evolution() {
        for r in [0.2, 0.77, 0.93] {
            for j in 0..12 {
                let (a, b) = pi_prefix_coeff(r, j);
                let (u0, u1) = evolve_units(r, 1.0 - r, &AngleSchedule::all_pi(j));
                assert!((u0 - a).norm() < 1e-12 && (u1 - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn final_round_reduces_to_first_round() {
        for r in [0.0, 0.2, 0.5, 0.7] {
            let total = 1000;
            let u = (total as f64).sqrt().recip();
            let (b, g) = final_round_angles(r, u, u, total).unwrap();
            let (b1, g1) = first_round_angles(r).unwrap();
            assert!(angle_eq(b, b1) && angle_eq(g, g1), "r = {r}");
        }
    }

    #[test]
    fn final_round_boundary_is_pi() {
        let r = (5.0 + 5f64.sqrt()) / 8.0;
        let (a, b) = pi_prefix_coeff(r, 1);
        let (beta, gamma) = final_angles_units(r, 1.0 - r, a, b).unwrap();
        assert!(angle_eq(beta, PI) && angle_eq(gamma, PI), "{beta} {gamma}");
    }

    #[test]
    fn final_round_kill_after_one_pi() {
        let r = 0.9;
        let (a, b) = pi_prefix_coeff(r, 1);
        let total = 10_000u64;
        let s = (total as f64).sqrt();
        let (beta, gamma) = final_round_angles(r, a / s, b / s, total).unwrap();
        let sched = AngleSchedule::pi_prefix(2, 2, beta, gamma).unwrap();
        let (u0, _) = evolve_units(r, 1.0 - r, &sched);
        assert!(u0.norm_sqr() / total as f64 <= 1e-20);
    }

    #[test]
    fn final_round_infeasible() {
        // r = 0.9 cannot be killed in a single round
        assert!(matches!(final_angles_units(0.9, 0.1, 1.0, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn min_rounds_table() {
        assert_eq!(min_rounds(0.5).unwrap(), 1);
        assert_eq!(min_rounds(0.8).unwrap(), 2);
        assert_eq!(min_rounds(0.93).unwrap(), 3);
        assert_eq!(min_rounds(0.96).unwrap(), 4);
        assert!(matches!(min_rounds(1.0), Err(Error::NoMarkedStates)));
        assert!(min_rounds(1.5).is_err());
    }

    #[test]
    fn optimal_schedule_examples() {
        let s = optimal_schedule(&split(1, 1)).unwrap();
        assert_eq!(s.len(), 1);
        assert!(angle_eq(s.betas()[0], -PI / 2.0) && angle_eq(s.gammas()[0], -PI / 2.0));

        let s = optimal_schedule(&split(3, 1)).unwrap();
        assert_eq!(s.len(), 1);
        assert!(angle_eq(s.betas()[0], PI) && angle_eq(s.gammas()[0], PI));

        let sp = split(9, 1);
        let s = optimal_schedule(&sp).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s.betas()[0], s.gammas()[0]), (PI, PI));
        let st = evolve_two_level(&sp, &s);
        assert!(st.c0.norm_sqr() <= 1e-20);
        assert!(st.p_above() >= 1.0 - 1e-12);
        assert!(matches!(optimal_schedule(&split(4, 0)), Err(Error::NoMarkedStates)));
    }

    #[test]
    fn closed_form_first_round_magnitudes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let d0 = rng.gen_range(0..1000u64);
            let d1 = rng.gen_range(1..1000u64);
            let sp = split(d0, d1);
            let (b, g) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
            let st = evolve_two_level(&sp, &AngleSchedule::explicit(vec![b], vec![g]).unwrap());
            let (m0, m1) = first_round_magnitudes(sp.r(), b, g, sp.total);
            assert!((st.c0.norm_sqr() - m0).abs() < 1e-12);
            assert!((st.c1.norm_sqr() - m1).abs() < 1e-12);
        }
    }

    #[test]
    fn capped_expectation_matches_schedule() {
        let s = k3_cut();
        for th in -1..=2 {
            let sp = s.split_at(th);
            for p in 0..5 {
                let (e, pa) = capped_expectation(&sp, p);
                let (e2, pa2) = unit_expectation(&sp, &capped_schedule(&sp, p));
                assert!((e - e2).abs() < 1e-12 && (pa - pa2).abs() < 1e-12, "th {th} p {p}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalisation_preserved(
                d0 in 0u64..100_000, d1 in 1u64..100_000,
                angles in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 0..200),
            ) {
                let (b, g): (Vec<f64>, Vec<f64>) = angles.into_iter().unzip();
                let st = evolve_two_level(&split(d0, d1), &AngleSchedule::explicit(b, g).unwrap());
                prop_assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn optimal_schedule_kills(d0 in 0u64..1_000_000, d1 in 1u64..1000) {
                let sp = split(d0, d1);
                let s = optimal_schedule(&sp).unwrap();
                let st = evolve_two_level(&sp, &s);
                prop_assert!(st.c0.norm_sqr() <= 1e-20, "|c0|^2 = {}", st.c0.norm_sqr());
                prop_assert!(st.p_above() >= 1.0 - 1e-12);
            }

            #[test]
            fn min_rounds_independent_of_total(r in 0.0f64..0.995) {
                let base = min_rounds(r).unwrap();
                for total in [10u64, 1000, 1_000_000] {
                    // feasibility evaluated on true amplitudes over `total` states
                    let s = total as f64;
                    let mut p = 1;
                    let (mut c0, mut c1) = (s.sqrt().recip(), s.sqrt().recip());
                    while 4.0 * (1.0 - r) / s - c0 * c0 < -1e-14 * 4.0 * (1.0 - r) / s {
                        let m = 2.0 * (r * c0 - (1.0 - r) * c1);
                        (c0, c1) = (c0 - m, -c1 - m);
                        p += 1;
                    }
                    prop_assert_eq!(p, base, "total {}", total);
                }
            }
        }
    }
}
