use std::f64::consts::PI;

use crate::error::{Error, Result};

/// How a schedule was built. A pi-prefix schedule of length `p` has
/// `beta = gamma = pi` before the transition round `t` (1-based), the stored
/// pair at round `t`, and zeros after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleShape {
    Explicit,
    PiPrefix { t: usize, beta: f64, gamma: f64 },
}

/// Per-round mixer (`beta`) and phase-separator (`gamma`) angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    betas: Vec<f64>,
    gammas: Vec<f64>,
    shape: ScheduleShape,
}

impl AngleSchedule {
    pub fn explicit(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.len() != gammas.len() {
            return Err(Error::input(format!(
                "schedule has {} betas but {} gammas",
                betas.len(),
                gammas.len()
            )));
        }
        Ok(AngleSchedule { betas, gammas, shape: ScheduleShape::Explicit })
    }

    pub fn empty() -> Self {
        AngleSchedule { betas: Vec::new(), gammas: Vec::new(), shape: ScheduleShape::Explicit }
    }

    /// `p` rounds of `beta = gamma = pi`.
    pub fn all_pi(p: usize) -> Self {
        AngleSchedule { betas: vec![PI; p], gammas: vec![PI; p], shape: ScheduleShape::Explicit }
    }

    pub fn zeros(p: usize) -> Self {
        AngleSchedule::explicit(vec![0.0; p], vec![0.0; p]).unwrap()
    }

    /// Requires `1 <= t <= p`.
    pub fn pi_prefix(p: usize, t: usize, beta: f64, gamma: f64) -> Result<Self> {
        if t == 0 || t > p {
            return Err(Error::input(format!("transition round {t} outside 1..={p}")));
        }
        let mut betas = vec![PI; t - 1];
        let mut gammas = vec![PI; t - 1];
        betas.push(beta);
        gammas.push(gamma);
        betas.resize(p, 0.0);
        gammas.resize(p, 0.0);
        Ok(AngleSchedule { betas, gammas, shape: ScheduleShape::PiPrefix { t, beta, gamma } })
    }

    /// Interleaved `[beta_1, gamma_1, beta_2, ...]`.
    pub fn from_flat(params: &[f64]) -> Result<Self> {
        if params.len() % 2 != 0 {
            return Err(Error::input("flat angle vector must have even length"));
        }
        let betas = params.iter().step_by(2).copied().collect();
        let gammas = params.iter().skip(1).step_by(2).copied().collect();
        AngleSchedule::explicit(betas, gammas)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.rounds().flat_map(|(b, g)| [b, g]).collect()
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn shape(&self) -> ScheduleShape {
        self.shape
    }

    pub fn rounds(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.betas.iter().copied().zip(self.gammas.iter().copied())
    }

    /// Appends identity rounds up to length `p`. Never truncates.
    pub fn padded_to(mut self, p: usize) -> Self {
        if p > self.len() {
            self.betas.resize(p, 0.0);
            self.gammas.resize(p, 0.0);
        }
        self
    }

    /// Drops the structure tag, keeping the same angles.
    pub fn into_explicit(mut self) -> Self {
        self.shape = ScheduleShape::Explicit;
        self
    }
}
