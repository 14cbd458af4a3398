//! Objective spectra: the distinct objective values over the feasible set
//! and how many feasible states take each one.
//!
//! Building a spectrum is the only step whose cost grows with `|S|`; every
//! engine downstream works on the `l` distinct values. Enumeration walks the
//! feasible set in minimal-change order (revolving door for weight-`k` sets,
//! Gray code for MaxCut) and updates the objective with one or two popcounts
//! per step. The walk is split into independent tasks by fixing the
//! membership of the highest-numbered vertices; per-task histograms are
//! summed, so the result does not depend on scheduling.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::enumerate::{lex_masks, GrayCode, RevolvingDoor};
use crate::error::{Error, Result};
use crate::graphs::{ProblemInstance, ProblemKind};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 32;

/// Vertices fixed per parallel task (at most).
const SPLIT_BITS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveSpectrum {
    n: usize,
    k: Option<usize>,
    kind: ProblemKind,
    entries: Vec<(u32, u64)>,
    total: u64,
}

/// Partition of a spectrum by the strict rule `C(x) > th`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdSplit {
    pub th: i64,
    /// States with `C(x) <= th`.
    pub d0: u64,
    /// States with `C(x) > th`.
    pub d1: u64,
    pub sum_low: u128,
    pub sum_high: u128,
    pub total: u64,
}

impl ThresholdSplit {
    /// Builds a split directly from counts, for two-level instances that do
    /// not come from a graph. Objective sums are set as if the low states
    /// score 0 and the high states score 1.
    pub fn from_counts(d0: u64, d1: u64) -> Result<Self> {
        let total = d0.checked_add(d1).filter(|&t| t > 0).ok_or_else(|| {
            Error::input(format!("split counts d0 = {d0}, d1 = {d1} need a positive sum"))
        })?;
        Ok(ThresholdSplit { th: 0, d0, d1, sum_low: 0, sum_high: d1 as u128, total })
    }

    /// Fraction of states at or below the threshold.
    pub fn r(&self) -> f64 {
        self.d0 as f64 / self.total as f64
    }

    /// `1 - r`, computed from `d1` so it stays accurate when few states are
    /// marked.
    pub fn q(&self) -> f64 {
        self.d1 as f64 / self.total as f64
    }
}

impl ObjectiveSpectrum {
    /// Validates and wraps a histogram. Entries must be strictly ascending in
    /// value with positive counts.
    pub fn from_entries(
        n: usize,
        k: Option<usize>,
        kind: ProblemKind,
        entries: Vec<(u32, u64)>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::input("spectrum needs at least one entry"));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::input("spectrum values must be strictly increasing"));
        }
        if entries.iter().any(|e| e.1 == 0) {
            return Err(Error::input("spectrum degeneracies must be positive"));
        }
        let total = entries
            .iter()
            .try_fold(0u64, |acc, e| acc.checked_add(e.1))
            .ok_or_else(|| Error::input("spectrum total overflows u64"))?;
        Ok(ObjectiveSpectrum { n, k, kind, entries, total })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// `(g_i, d_i)` pairs in ascending `g_i`.
    pub fn entries(&self) -> &[(u32, u64)] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct objective values.
    pub fn l(&self) -> usize {
        self.entries.len()
    }

    pub fn c_min(&self) -> u32 {
        self.entries[0].0
    }

    pub fn c_max(&self) -> u32 {
        self.entries[self.entries.len() - 1].0
    }

    /// `sum_i d_i g_i`.
    pub fn weighted_sum(&self) -> u128 {
        self.entries.iter().map(|&(g, d)| g as u128 * d as u128).sum()
    }

    /// Expectation of the objective under the uniform superposition.
    pub fn uniform_mean(&self) -> f64 {
        self.weighted_sum() as f64 / self.total as f64
    }

    pub fn split_at(&self, th: i64) -> ThresholdSplit {
        let (mut d0, mut d1, mut sum_low, mut sum_high) = (0u64, 0u64, 0u128, 0u128);
        for &(g, d) in &self.entries {
            let w = g as u128 * d as u128;
            if g as i64 > th {
                d1 += d;
                sum_high += w;
            } else {
                d0 += d;
                sum_low += w;
            }
        }
        ThresholdSplit { th, d0, d1, sum_low, sum_high, total: self.total }
    }

    /// Threshold candidates `g_i - 1`, ascending. Candidate `i` marks exactly
    /// the entries `i..l`.
    pub fn threshold_candidates(&self) -> Vec<i64> {
        self.entries.iter().map(|&(g, _)| g as i64 - 1).collect()
    }

    pub fn to_cache_string(&self) -> String {
        let mut s = format!(
            "SPECTRUM v1 {} {} {} {} {}\n",
            self.n,
            self.k.unwrap_or(0),
            self.kind,
            self.total,
            self.l()
        );
        for &(g, d) in &self.entries {
            let _ = writeln!(s, "{g} {d}");
        }
        s
    }

    pub fn parse_cache(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::input(format!("spectrum cache: {msg}"));
        let mut lines = text.lines();
        let header: Vec<&str> =
            lines.next().ok_or_else(|| bad("empty file"))?.split_whitespace().collect();
        if header.len() != 7 || header[0] != "SPECTRUM" || header[1] != "v1" {
            return Err(bad("expected header 'SPECTRUM v1 n k kind total l'"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|e| bad(&format!("bad number {s:?}: {e}")));
        let n = num(header[2])? as usize;
        let k = match num(header[3])? {
            0 => None,
            k => Some(k as usize),
        };
        let kind: ProblemKind = header[4].parse()?;
        let total = num(header[5])?;
        let l = num(header[6])? as usize;
        let mut entries = Vec::with_capacity(l);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let g = num(it.next().ok_or_else(|| bad("missing value"))?)?;
            let d = num(it.next().ok_or_else(|| bad("missing count"))?)?;
            if it.next().is_some() {
                return Err(bad("trailing tokens"));
            }
            entries.push((u32::try_from(g).map_err(|_| bad("value too large"))?, d));
        }
        if entries.len() != l {
            return Err(bad(&format!("header declares {l} entries, found {}", entries.len())));
        }
        let spec = ObjectiveSpectrum::from_entries(n, k, kind, entries)?;
        if spec.total != total {
            return Err(bad(&format!("header total {total} != sum of counts {}", spec.total)));
        }
        Ok(spec)
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        ObjectiveSpectrum::parse_cache(&std::fs::read_to_string(path)?)
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_cache_string())?;
        Ok(())
    }

    /// Whether this spectrum was built for `instance`'s problem shape.
    pub fn matches(&self, instance: &ProblemInstance) -> bool {
        self.n == instance.n() && self.k == instance.k() && self.kind == instance.kind()
    }
}

fn check_cap(instance: &ProblemInstance, cap: u64) -> Result<u64> {
    let required = instance.feasible_count();
    if required > cap as u128 {
        return Err(Error::CapExceeded { required, cap });
    }
    Ok(required as u64)
}

/// Exact objective histogram over the feasible set using incremental
/// minimal-change enumeration.
pub fn build_spectrum(instance: &ProblemInstance, cap: u64) -> Result<ObjectiveSpectrum> {
    check_cap(instance, cap)?;
    let n = instance.n();
    let split = SPLIT_BITS.min(n);
    let low = n - split;
    let m = instance.m();
    let hist = (0u64..1 << split)
        .into_par_iter()
        .filter_map(|hi| {
            let low_weight = match instance.k() {
                None => None,
                Some(k) => {
                    let w = hi.count_ones() as usize;
                    if w > k || k - w > low {
                        return None;
                    }
                    Some(k - w)
                }
            };
            Some(walk_task(instance, hi << low, low, low_weight))
        })
        .reduce(
            || vec![0u64; m + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    from_histogram(instance, hist)
}

/// Histogram by evaluating every feasible state from scratch, in increasing
/// mask order. Kept as an independent check on [`build_spectrum`].
pub fn build_spectrum_naive(instance: &ProblemInstance, cap: u64) -> Result<ObjectiveSpectrum> {
    check_cap(instance, cap)?;
    let n = instance.n();
    let mut hist = vec![0u64; instance.m() + 1];
    match instance.k() {
        None => (0..1u64 << n).for_each(|x| hist[instance.objective_mask(x) as usize] += 1),
        Some(k) => lex_masks(n, k).for_each(|x| hist[instance.objective_mask(x) as usize] += 1),
    }
    from_histogram(instance, hist)
}

fn from_histogram(instance: &ProblemInstance, hist: Vec<u64>) -> Result<ObjectiveSpectrum> {
    let entries = hist
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d > 0)
        .map(|(g, d)| (g as u32, d))
        .collect();
    let spec = ObjectiveSpectrum::from_entries(instance.n(), instance.k(), instance.kind(), entries)?;
    if spec.total as u128 != instance.feasible_count() {
        return Err(Error::Invariant(format!(
            "enumerated {} states, expected {}",
            spec.total,
            instance.feasible_count()
        )));
    }
    Ok(spec)
}

/// Walks all states `fixed | y` where `y` ranges over subsets of the lowest
/// `low` vertices (of weight `low_weight` when constrained).
fn walk_task(
    instance: &ProblemInstance,
    fixed: u64,
    low: usize,
    low_weight: Option<usize>,
) -> Vec<u64> {
    let mut hist = vec![0u64; instance.m() + 1];
    let start = fixed | low_weight.map_or(0, |w| (1u64 << w) - 1);
    let mut t = Tracker {
        adj: instance.adjacency(),
        kind: instance.kind(),
        mask: start,
        value: instance.objective_mask(start) as i64,
    };
    hist[t.value as usize] += 1;
    match low_weight {
        Some(w) => {
            let mut rd = RevolvingDoor::new(low, w);
            while let Some(sw) = rd.advance() {
                t.flip(sw.out);
                t.flip(sw.inp);
                hist[t.value as usize] += 1;
            }
        }
        None => {
            let mut gray = GrayCode::new(low);
            while let Some(b) = gray.advance() {
                t.flip(b);
                hist[t.value as usize] += 1;
            }
        }
    }
    hist
}

/// Objective value of a state kept up to date under single-vertex flips.
struct Tracker<'a> {
    adj: &'a [u64],
    kind: ProblemKind,
    mask: u64,
    value: i64,
}

impl Tracker<'_> {
    fn flip(&mut self, v: usize) {
        let nb = self.adj[v];
        let sel = (nb & self.mask).count_ones() as i64;
        let unsel = (nb & !self.mask).count_ones() as i64;
        let inside = self.mask >> v & 1 == 1;
        self.value += match (self.kind, inside) {
            (ProblemKind::KDensestSubgraph, false) => sel,
            (ProblemKind::KDensestSubgraph, true) => -sel,
            (ProblemKind::KVertexCover, false) => unsel,
            (ProblemKind::KVertexCover, true) => -unsel,
            (ProblemKind::MaxCut | ProblemKind::MaxBisection, false) => unsel - sel,
            (ProblemKind::MaxCut | ProblemKind::MaxBisection, true) => sel - unsel,
        };
        self.mask ^= 1 << v;
    }
}
