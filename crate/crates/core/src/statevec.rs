//! Dense reference simulator over the feasible basis.
//!
//! Nothing here relies on amplitude collapse: every feasible state carries
//! its own amplitude, the phase separator is applied state by state, and the
//! Grover mixer is applied as the rank-one update
//! `v <- v - (1 - e^{-i beta}) <S|v> |S>`. It is the independent check for
//! the collapsed and two-level engines.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::enumerate::lex_masks;
use crate::error::{Error, Result};
use crate::graphs::{BitString, ProblemInstance};
use crate::schedule::AngleSchedule;

pub const DEFAULT_STATEVEC_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    /// `e^{-i gamma C(x)}`.
    Standard,
    /// `e^{-i gamma [C(x) > th]}`.
    Threshold(i64),
}

/// Amplitudes over the feasible states in increasing mask order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleStateVector {
    pub n: usize,
    pub basis: Vec<u64>,
    pub amps: Vec<Complex64>,
}

impl FeasibleStateVector {
    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amps.iter().map(|a| a.norm_sqr()))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies the Grover mixer with angle `beta`.
    pub fn apply_mixer(&mut self, beta: f64) {
        let len = self.amps.len() as f64;
        let sum = Complex64::new(
            compensated_sum(self.amps.iter().map(|a| a.re)),
            compensated_sum(self.amps.iter().map(|a| a.im)),
        );
        let shift = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -beta)) * sum / len;
        self.amps.iter_mut().for_each(|a| *a -= shift);
    }
}

/// Feasible basis with objective values, reusable across schedules.
#[derive(Debug, Clone)]
pub struct StateVectorSim {
    n: usize,
    basis: Vec<u64>,
    values: Vec<u32>,
}

impl StateVectorSim {
    pub fn new(instance: &ProblemInstance, cap: u64) -> Result<Self> {
        let required = instance.feasible_count();
        if required > cap as u128 {
            return Err(Error::CapExceeded { required, cap });
        }
        let n = instance.n();
        let basis: Vec<u64> = match instance.k() {
            None => (0..1u64 << n).collect(),
            Some(k) => lex_masks(n, k).collect(),
        };
        let values = basis.iter().map(|&x| instance.objective_mask(x)).collect();
        Ok(StateVectorSim { n, basis, values })
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn uniform(&self) -> FeasibleStateVector {
        let a = Complex64::new((self.basis.len() as f64).sqrt().recip(), 0.0);
        FeasibleStateVector { n: self.n, basis: self.basis.clone(), amps: vec![a; self.basis.len()] }
    }

    pub fn run(&self, phase: PhaseKind, schedule: &AngleSchedule) -> FeasibleStateVector {
        let mut state = self.uniform();
        for (beta, gamma) in schedule.rounds() {
            for (a, &c) in state.amps.iter_mut().zip(&self.values) {
                let h = match phase {
                    PhaseKind::Standard => c as f64,
                    PhaseKind::Threshold(th) => f64::from(u8::from(c as i64 > th)),
                };
                *a *= Complex64::from_polar(1.0, -gamma * h);
            }
            state.apply_mixer(beta);
        }
        state
    }

    /// `sum_x |amp_x|^2 C(x)`.
    pub fn expectation(&self, state: &FeasibleStateVector) -> f64 {
        compensated_sum(state.amps.iter().zip(&self.values).map(|(a, &c)| a.norm_sqr() * c as f64))
    }
}

pub fn simulate_full(
    instance: &ProblemInstance,
    phase: PhaseKind,
    schedule: &AngleSchedule,
    cap: u64,
) -> Result<FeasibleStateVector> {
    Ok(StateVectorSim::new(instance, cap)?.run(phase, schedule))
}

pub fn expectation_full(state: &FeasibleStateVector, instance: &ProblemInstance) -> f64 {
    compensated_sum(
        state.basis.iter().zip(&state.amps).map(|(&x, a)| a.norm_sqr() * instance.objective_mask(x) as f64),
    )
}

/// Neumaier summation. Sums run over up to 2^24 terms, where plain
/// accumulation loses several digits.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Draws `shots` basis states from `|amp|^2` with a ChaCha8 stream seeded by
/// `seed` (one uniform `f64` per shot, inverted through the cumulative
/// distribution).
pub fn sample(state: &FeasibleStateVector, shots: usize, seed: u64) -> Result<Vec<BitString>> {
    if shots == 0 {
        return Err(Error::input("sample needs at least one shot"));
    }
    let mut cdf = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..shots)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            BitString::from_mask(state.n, state.basis[i])
        })
        .collect()
}
