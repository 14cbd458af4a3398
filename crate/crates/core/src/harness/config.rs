use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graphs::ProblemKind;
use crate::search::SearchMode;
use crate::spectrum::DEFAULT_ENUMERATION_CAP;

/// How `k` is chosen for the cardinality-constrained problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    /// `k = ceil(f * n)`.
    Fraction(f64),
    /// `k = n - offset`.
    Offset(usize),
}

impl KRule {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            // the small epsilon keeps 0.5 * 12 from rounding up to 7
            KRule::Fraction(f) => (f * n as f64 - 1e-9).ceil().max(0.0) as usize,
            KRule::Offset(o) => n.saturating_sub(o),
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    /// Accepts `frac:0.5`, a bare fraction `0.5`, `offset:10` or `n-10`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::input(format!("bad k rule '{s}' (use frac:F, offset:O or n-O)"));
        if let Some(o) = s.strip_prefix("offset:").or_else(|| s.strip_prefix("n-")) {
            return o.trim().parse().map(KRule::Offset).map_err(|_| bad());
        }
        let f: f64 = s.strip_prefix("frac:").unwrap_or(s).trim().parse().map_err(|_| bad())?;
        if !(f > 0.0 && f < 1.0) {
            return Err(bad());
        }
        Ok(KRule::Fraction(f))
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Fraction(x) => write!(f, "frac:{x}"),
            KRule::Offset(o) => write!(f, "offset:{o}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Thresh,
    Standard,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Thresh => "thresh",
            Method::Standard => "standard",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thresh" | "threshold" => Ok(Method::Thresh),
            "standard" | "std" => Ok(Method::Standard),
            other => Err(Error::input(format!("unknown method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problems: Vec<ProblemKind>,
    pub sizes: Vec<usize>,
    /// Ignored for MaxCut (no `k`) and MaxBisection (`k = n/2`).
    pub k_rules: Vec<KRule>,
    pub edge_probs: Vec<f64>,
    pub rounds: Vec<usize>,
    pub graphs_per_cell: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Standard method: Nelder-Mead restarts and evaluations per restart.
    pub restarts: usize,
    pub budget_per_restart: u64,
    /// Threshold method.
    pub search_mode: SearchMode,
    pub lambda: f64,
    pub angle_budget: u64,
    /// Largest feasible set that will be enumerated.
    pub enum_cap: u64,
    /// Record wall-clock times. Off by default so reruns are byte-identical.
    pub timing: bool,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problems: ProblemKind::ALL.to_vec(),
            sizes: vec![12],
            k_rules: vec![KRule::Fraction(0.5)],
            edge_probs: vec![0.25, 0.5, 0.75],
            rounds: vec![1, 3, 5, 8],
            graphs_per_cell: 30,
            methods: vec![Method::Thresh, Method::Standard],
            seed: 0,
            restarts: 20,
            budget_per_restart: 20_000,
            search_mode: SearchMode::Analytic,
            lambda: 2.0,
            angle_budget: 10_000,
            enum_cap: DEFAULT_ENUMERATION_CAP,
            timing: false,
            cache_dir: None,
        }
    }
}

/// Keys understood by [`ExperimentConfig::apply`].
pub const CONFIG_KEYS: &[&str] = &[
    "problems",
    "sizes",
    "k_rules",
    "edge_probs",
    "rounds",
    "graphs_per_cell",
    "methods",
    "seed",
    "restarts",
    "budget_per_restart",
    "search_mode",
    "lambda",
    "angle_budget",
    "enum_cap",
    "timing",
    "cache_dir",
];

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// later keys replace earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::input(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::input(format!("line {}: empty key", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| Error::input(format!("{key}: '{s}': {e}"))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::input(format!("{key} must not be empty")));
    }
    Ok(items)
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim().parse().map_err(|e| Error::input(format!("{key}: '{v}': {e}")))
}

fn parse_mode(v: &str) -> Result<SearchMode> {
    match v.trim().to_ascii_lowercase().as_str() {
        "analytic" => Ok(SearchMode::Analytic),
        "oracle" => Ok(SearchMode::Oracle),
        other => Err(Error::input(format!("search_mode: unknown mode '{other}'"))),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::input(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

impl ExperimentConfig {
    /// Overrides fields from a key/value map. Unknown keys are errors.
    pub fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        for (key, v) in kv {
            match key.as_str() {
                "problems" => self.problems = list(key, v)?,
                "sizes" => self.sizes = list(key, v)?,
                "k_rules" => self.k_rules = list(key, v)?,
                "edge_probs" => self.edge_probs = list(key, v)?,
                "rounds" => self.rounds = list(key, v)?,
                "graphs_per_cell" => self.graphs_per_cell = scalar(key, v)?,
                "methods" => self.methods = list(key, v)?,
                "seed" => self.seed = scalar(key, v)?,
                "restarts" => self.restarts = scalar(key, v)?,
                "budget_per_restart" => self.budget_per_restart = scalar(key, v)?,
                "search_mode" => self.search_mode = parse_mode(v)?,
                "lambda" => self.lambda = scalar(key, v)?,
                "angle_budget" => self.angle_budget = scalar(key, v)?,
                "enum_cap" => self.enum_cap = scalar(key, v)?,
                "timing" => self.timing = parse_bool(key, v)?,
                "cache_dir" => self.cache_dir = Some(PathBuf::from(v.trim())),
                other => return Err(Error::input(format!("unknown config key '{other}'"))),
            }
        }
        self.validate()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&parse_key_values(text)?)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::input(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        empty("problems", self.problems.len())?;
        empty("sizes", self.sizes.len())?;
        empty("k_rules", self.k_rules.len())?;
        empty("edge_probs", self.edge_probs.len())?;
        empty("rounds", self.rounds.len())?;
        empty("methods", self.methods.len())?;
        if self.graphs_per_cell == 0 {
            return Err(Error::input("graphs_per_cell must be at least 1"));
        }
        if let Some(&p) = self.edge_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::input(format!("edge probability {p} outside [0, 1]")));
        }
        if self.restarts == 0 || self.budget_per_restart == 0 || self.angle_budget == 0 {
            return Err(Error::input("restarts and budgets must be positive"));
        }
        if self.lambda.is_nan() || self.lambda <= 1.0 {
            return Err(Error::input(format!("lambda must exceed 1, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Renders the config in the file format accepted by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        fn join<T: fmt::Display>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let mode = match self.search_mode {
            SearchMode::Analytic => "analytic",
            SearchMode::Oracle => "oracle",
        };
        let mut s = String::new();
        s += &format!("problems = {}\n", join(&self.problems));
        s += &format!("sizes = {}\n", join(&self.sizes));
        s += &format!("k_rules = {}\n", join(&self.k_rules));
        s += &format!("edge_probs = {}\n", join(&self.edge_probs));
        s += &format!("rounds = {}\n", join(&self.rounds));
        s += &format!("graphs_per_cell = {}\n", self.graphs_per_cell);
        s += &format!("methods = {}\n", join(&self.methods));
        s += &format!("seed = {}\n", self.seed);
        s += &format!("restarts = {}\n", self.restarts);
        s += &format!("budget_per_restart = {}\n", self.budget_per_restart);
        s += &format!("search_mode = {mode}\n");
        s += &format!("lambda = {}\n", self.lambda);
        s += &format!("angle_budget = {}\n", self.angle_budget);
        s += &format!("enum_cap = {}\n", self.enum_cap);
        s += &format!("timing = {}\n", self.timing);
        if let Some(dir) = &self.cache_dir {
            s += &format!("cache_dir = {}\n", dir.display());
        }
        s
    }
}
