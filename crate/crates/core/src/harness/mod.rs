//! Experiment matrix, CSV rows and spectrum caching.
//!
//! A cell is one `(problem, n, k, edge_prob)` combination. Each cell runs
//! `graphs_per_cell` seeded Erdős–Rényi graphs, and for every graph each
//! round count and method yields one [`ResultRow`]. Rows are written in
//! config order: cells, then replicates ascending, then rounds, then methods.

mod config;

pub use config::{parse_key_values, ExperimentConfig, KRule, Method, CONFIG_KEYS};

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::{binomial, Graph, ProblemInstance, ProblemKind};
use crate::schedule::AngleSchedule;
use crate::search::{find_threshold, ThresholdSearchOptions};
use crate::spectrum::{build_spectrum, ObjectiveSpectrum};
use crate::standard::{expectation_std, optimize_angles, OptimizerOptions};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "THRESH_QAOA_THREADS";

/// CSV column order.
pub const CSV_HEADER: [&str; 13] = [
    "problem",
    "n",
    "k",
    "edge_prob",
    "graph_seed",
    "p",
    "method",
    "threshold",
    "expectation",
    "opt_value",
    "ratio",
    "evals",
    "wall_ns",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub problem: ProblemKind,
    pub n: usize,
    /// 0 for MaxCut.
    pub k: usize,
    pub edge_prob: f64,
    pub graph_seed: u64,
    pub p: usize,
    pub method: Method,
    /// -1 for the standard method.
    pub threshold: i64,
    pub expectation: f64,
    pub opt_value: u32,
    pub ratio: f64,
    pub evals: u64,
    pub wall_ns: u128,
}

/// Columns identifying a row for `--resume`.
pub type RowKey = (String, String, String, String, String, String, String);

impl ResultRow {
    pub fn to_record(&self) -> [String; 13] {
        [
            self.problem.as_str().to_string(),
            self.n.to_string(),
            self.k.to_string(),
            fmt_g17(self.edge_prob),
            self.graph_seed.to_string(),
            self.p.to_string(),
            self.method.as_str().to_string(),
            self.threshold.to_string(),
            fmt_g17(self.expectation),
            self.opt_value.to_string(),
            fmt_g17(self.ratio),
            self.evals.to_string(),
            self.wall_ns.to_string(),
        ]
    }

    pub fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::input(format!("expected {} columns, got {}", CSV_HEADER.len(), rec.len())));
        }
        fn num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
            rec[i].parse().map_err(|_| Error::input(format!("column {}: bad value '{}'", CSV_HEADER[i], &rec[i])))
        }
        Ok(ResultRow {
            problem: rec[0].parse()?,
            n: num(rec, 1)?,
            k: num(rec, 2)?,
            edge_prob: num(rec, 3)?,
            graph_seed: num(rec, 4)?,
            p: num(rec, 5)?,
            method: rec[6].parse()?,
            threshold: num(rec, 7)?,
            expectation: num(rec, 8)?,
            opt_value: num(rec, 9)?,
            ratio: num(rec, 10)?,
            evals: num(rec, 11)?,
            wall_ns: num(rec, 12)?,
        })
    }

    pub fn key(&self) -> RowKey {
        let r = self.to_record();
        (r[0].clone(), r[1].clone(), r[2].clone(), r[3].clone(), r[4].clone(), r[5].clone(), r[6].clone())
    }
}

/// `%.17g`: shortest of fixed or scientific notation with 17 significant
/// digits, trailing zeros removed. Round-trips every finite `f64`.
pub fn fmt_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..17).contains(&exp) {
        trim(&format!("{:.*}", (16 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

/// FNV-1a (64-bit) over the little-endian bytes of
/// `master_seed, problem tag, n, k, edge_prob bits, replicate`, where the
/// problem tag is the UTF-8 name (`maxcut`, `kvc`, `kds`, `bisection`) and
/// every integer is widened to `u64`.
pub fn replicate_seed(
    master_seed: u64,
    problem: ProblemKind,
    n: usize,
    k: usize,
    edge_prob: f64,
    replicate: usize,
) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(&master_seed.to_le_bytes());
    feed(problem.as_str().as_bytes());
    feed(&(n as u64).to_le_bytes());
    feed(&(k as u64).to_le_bytes());
    feed(&edge_prob.to_bits().to_le_bytes());
    feed(&(replicate as u64).to_le_bytes());
    h
}

/// Builds the global rayon pool with [`THREADS_ENV`] threads if it is set.
/// Only the first call in a process has an effect.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::input(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    // a second call finds the pool already built, which is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub problem: ProblemKind,
    pub n: usize,
    /// 0 for MaxCut.
    pub k: usize,
    pub edge_prob: f64,
}

impl Cell {
    fn k_arg(&self) -> Option<usize> {
        match self.problem {
            ProblemKind::MaxCut => None,
            _ => Some(self.k),
        }
    }

    pub fn feasible_count(&self) -> u128 {
        match self.problem {
            ProblemKind::MaxCut => 1u128.checked_shl(self.n as u32).unwrap_or(u128::MAX),
            _ => binomial(self.n as u64, self.k as u64),
        }
    }
}

/// Cells in config order: problems, sizes, k rules, edge probabilities.
/// k rules collapse for MaxCut and MaxBisection, and duplicate `k` values are
/// dropped. Returns the cells and warnings for rules giving an invalid `k`.
pub fn expand_cells(cfg: &ExperimentConfig) -> (Vec<Cell>, Vec<String>) {
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for &problem in &cfg.problems {
        for &n in &cfg.sizes {
            let ks: Vec<usize> = match problem {
                ProblemKind::MaxCut => vec![0],
                ProblemKind::MaxBisection => {
                    if n % 2 == 1 {
                        warnings.push(format!("skip {problem} n={n}: bisection needs even n"));
                        continue;
                    }
                    vec![n / 2]
                }
                _ => {
                    let mut ks = Vec::new();
                    for rule in &cfg.k_rules {
                        let k = rule.resolve(n);
                        if k == 0 || k >= n {
                            warnings.push(format!("skip {problem} n={n} {rule}: k={k} outside 1..n"));
                        } else if !ks.contains(&k) {
                            ks.push(k);
                        }
                    }
                    ks
                }
            };
            for k in ks {
                for &edge_prob in &cfg.edge_probs {
                    cells.push(Cell { problem, n, k, edge_prob });
                }
            }
        }
    }
    (cells, warnings)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentSummary {
    pub rows_written: usize,
    pub rows_resumed: usize,
    pub rows_skipped: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plan {
    pub cells: usize,
    pub rows: usize,
    /// Rows dropped because the feasible set exceeds `enum_cap`.
    pub capped_rows: usize,
}

/// Row count without running anything. Rows of degenerate graphs (optimum
/// 0) are only discovered at run time and are not subtracted here.
pub fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    cfg.validate()?;
    let (cells, _) = expand_cells(cfg);
    let per_cell = cfg.graphs_per_cell * cfg.rounds.len() * cfg.methods.len();
    let capped = cells.iter().filter(|c| c.feasible_count() > cfg.enum_cap as u128).count();
    Ok(Plan { cells: cells.len(), rows: (cells.len() - capped) * per_cell, capped_rows: capped * per_cell })
}

fn cache_path(dir: &Path, cell: &Cell, seed: u64) -> PathBuf {
    dir.join(format!("{}_n{}_k{}_{seed:016x}.spectrum", cell.problem, cell.n, cell.k))
}

/// Spectrum for one replicate, read from or written to `cache_dir` if set.
fn replicate_spectrum(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<ObjectiveSpectrum> {
    let graph = Graph::erdos_renyi(cell.n, cell.edge_prob, seed)?;
    let instance = ProblemInstance::new(graph, cell.problem, cell.k_arg())?;
    if let Some(dir) = &cfg.cache_dir {
        let path = cache_path(dir, cell, seed);
        if path.exists() {
            let s = ObjectiveSpectrum::read_cache(&path)?;
            if s.matches(&instance) {
                return Ok(s);
            }
        }
        let s = build_spectrum(&instance, cfg.enum_cap)?;
        std::fs::create_dir_all(dir)?;
        s.write_cache(&path)?;
        return Ok(s);
    }
    build_spectrum(&instance, cfg.enum_cap)
}

fn run_one(
    cfg: &ExperimentConfig,
    spectrum: &ObjectiveSpectrum,
    cell: &Cell,
    seed: u64,
    p: usize,
    method: Method,
) -> Result<ResultRow> {
    let (threshold, result) = match method {
        Method::Thresh => {
            let opts = ThresholdSearchOptions {
                mode: cfg.search_mode,
                lambda: cfg.lambda,
                angle_budget: cfg.angle_budget,
                exhaustive: false,
            };
            let out = find_threshold(spectrum, p, &opts)?;
            (out.th, out.result)
        }
        Method::Standard if p == 0 => (-1, expectation_std(spectrum, &AngleSchedule::empty())?),
        Method::Standard => {
            let opts = OptimizerOptions {
                restarts: cfg.restarts,
                budget_per_restart: cfg.budget_per_restart,
                seed: seed ^ (p as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                ..OptimizerOptions::default()
            };
            (-1, optimize_angles(spectrum, p, &opts)?.1)
        }
    };
    Ok(ResultRow {
        problem: cell.problem,
        n: cell.n,
        k: cell.k,
        edge_prob: cell.edge_prob,
        graph_seed: seed,
        p,
        method,
        threshold,
        expectation: result.expectation,
        opt_value: spectrum.c_max(),
        ratio: result.ratio,
        evals: result.evals,
        wall_ns: if cfg.timing { result.wall_ns } else { 0 },
    })
}

enum ReplicateOutcome {
    Rows(Vec<ResultRow>),
    Skipped { rows: usize, reason: String },
}

/// Runs the matrix and streams rows to `sink` one cell at a time, in
/// deterministic order. Replicates of a cell run in parallel. Rows whose key
/// is in `done` are not recomputed or emitted. Cap overruns and degenerate
/// graphs skip rows with a warning; other errors abort.
pub fn run_experiment<F>(cfg: &ExperimentConfig, done: &HashSet<RowKey>, mut sink: F) -> Result<ExperimentSummary>
where
    F: FnMut(&ResultRow) -> Result<()>,
{
    cfg.validate()?;
    let (cells, warnings) = expand_cells(cfg);
    let mut summary = ExperimentSummary { warnings, ..Default::default() };
    let per_graph = cfg.rounds.len() * cfg.methods.len();

    for cell in &cells {
        if cell.feasible_count() > cfg.enum_cap as u128 {
            summary.rows_skipped += per_graph * cfg.graphs_per_cell;
            summary.warnings.push(format!(
                "skip {} n={} k={} prob={}: {} feasible states exceed cap {}",
                cell.problem,
                cell.n,
                cell.k,
                cell.edge_prob,
                cell.feasible_count(),
                cfg.enum_cap
            ));
            continue;
        }
        let outcomes: Vec<Result<ReplicateOutcome>> = (0..cfg.graphs_per_cell)
            .into_par_iter()
            .map(|rep| {
                let seed = replicate_seed(cfg.seed, cell.problem, cell.n, cell.k, cell.edge_prob, rep);
                let todo: Vec<(usize, Method)> = cfg
                    .rounds
                    .iter()
                    .flat_map(|&p| cfg.methods.iter().map(move |&m| (p, m)))
                    .filter(|&(p, m)| !done.contains(&key_of(cell, seed, p, m)))
                    .collect();
                if todo.is_empty() {
                    return Ok(ReplicateOutcome::Rows(Vec::new()));
                }
                let spectrum = match replicate_spectrum(cfg, cell, seed) {
                    Ok(s) => s,
                    Err(e @ Error::CapExceeded { .. }) => {
                        return Ok(ReplicateOutcome::Skipped { rows: todo.len(), reason: e.to_string() })
                    }
                    Err(e) => return Err(e),
                };
                if spectrum.c_max() == 0 {
                    return Ok(ReplicateOutcome::Skipped {
                        rows: todo.len(),
                        reason: "optimum is 0, ratio undefined".into(),
                    });
                }
                todo.into_iter()
                    .map(|(p, m)| run_one(cfg, &spectrum, cell, seed, p, m))
                    .collect::<Result<Vec<_>>>()
                    .map(ReplicateOutcome::Rows)
            })
            .collect();
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome? {
                ReplicateOutcome::Rows(rows) => {
                    for row in &rows {
                        sink(row)?;
                    }
                    summary.rows_written += rows.len();
                }
                ReplicateOutcome::Skipped { rows, reason } => {
                    summary.rows_skipped += rows;
                    summary.warnings.push(format!(
                        "skip {} n={} k={} prob={} replicate {rep}: {reason}",
                        cell.problem, cell.n, cell.k, cell.edge_prob
                    ));
                }
            }
        }
    }
    summary.rows_resumed = done.len();
    Ok(summary)
}

fn key_of(cell: &Cell, seed: u64, p: usize, method: Method) -> RowKey {
    (
        cell.problem.as_str().to_string(),
        cell.n.to_string(),
        cell.k.to_string(),
        fmt_g17(cell.edge_prob),
        seed.to_string(),
        p.to_string(),
        method.as_str().to_string(),
    )
}

/// Reads rows from a CSV written by [`write_experiment_csv`].
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::input(format!("{}: unexpected CSV header", path.display())));
    }
    rdr.records().map(|r| ResultRow::from_record(&r?)).collect()
}

/// Runs the experiment into `out`. With `resume`, rows already in an
/// existing file are kept and only the missing ones are appended.
pub fn write_experiment_csv(cfg: &ExperimentConfig, out: &Path, resume: bool) -> Result<ExperimentSummary> {
    let existing = resume && out.exists() && std::fs::metadata(out)?.len() > 0;
    let done: HashSet<RowKey> =
        if existing { read_rows(out)?.iter().map(ResultRow::key).collect() } else { HashSet::new() };
    let file = if existing {
        OpenOptions::new().append(true).open(out)?
    } else {
        File::create(out)?
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(io::BufWriter::new(file));
    if !existing {
        w.write_record(CSV_HEADER)?;
    }
    let summary = run_experiment(cfg, &done, |row| {
        w.write_record(row.to_record())?;
        Ok(())
    })?;
    w.flush()?;
    Ok(summary)
}

/// Writes rows with header to any writer.
pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.to_record())?;
    }
    w.flush()?;
    Ok(())
}
