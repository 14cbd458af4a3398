use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thqaoa::harness::{self, ExperimentConfig};
use thqaoa::search::{
    find_angles_oracle, find_threshold, threshold_profile, AngleSearchOptions, FractionGrid, SearchMode,
    ThresholdSearchOptions,
};
use thqaoa::spectrum::{build_spectrum, DEFAULT_ENUMERATION_CAP};
use thqaoa::standard::{expectation_std, optimize_angles, OptimizerOptions};
use thqaoa::statevec::{PhaseKind, StateVectorSim, DEFAULT_STATEVEC_CAP};
use thqaoa::thresh::{capped_schedule, evolve_two_level, expectation_thresh};
use thqaoa::{AngleSchedule, Error, Graph, ObjectiveSpectrum, ProblemInstance, ProblemKind, Result, RunResult};

#[derive(Parser)]
#[command(name = "thqaoa", about = "Threshold and standard Grover-mixer QAOA simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph and print or write its edge list.
    Gen {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build (or load) an objective spectrum.
    Spectrum {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Write the spectrum cache file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one schedule and print the run result.
    Simulate {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Thresh)]
        method: MethodArg,
        /// Threshold (thresh method); defaults to the best one for `p`.
        #[arg(long, allow_hyphen_values = true)]
        th: Option<i64>,
        /// Comma-separated mixer angles; without them the closed-form
        /// (thresh) or optimised (standard) schedule is used.
        #[arg(long, allow_hyphen_values = true)]
        betas: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        gammas: Option<String>,
        /// Run the dense state-vector simulator instead.
        #[arg(long)]
        statevec: bool,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Black-box angle search for a fixed threshold.
    FindAngles {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, allow_hyphen_values = true)]
        th: i64,
        /// Round cap.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// Scan a uniform fraction grid with this many points instead of
        /// using the instance's exact marked fraction.
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Best threshold for a round budget.
    FindThreshold {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        p: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Analytic)]
        mode: ModeArg,
        #[arg(long)]
        exhaustive: bool,
        /// Also print the ratio of every threshold candidate.
        #[arg(long)]
        profile: bool,
    },
    /// Compare the collapsed engines with the state-vector simulator.
    OracleCheck {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        max_p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run the experiment matrix into a CSV file.
    Experiment(ExperimentArgs),
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Thresh,
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Oracle,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analytic => SearchMode::Analytic,
            ModeArg::Oracle => SearchMode::Oracle,
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    /// Read the graph from an edge-list file.
    #[arg(long, conflicts_with_all = ["n", "complete"])]
    graph: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    complete: bool,
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GraphArgs {
    fn build(&self) -> Result<Graph> {
        if let Some(path) = &self.graph {
            return Graph::read_edge_list(path);
        }
        let n = self.n.ok_or_else(|| Error::Input("--n or --graph is required".into()))?;
        if self.complete {
            Graph::complete(n)
        } else {
            Graph::erdos_renyi(n, self.edge_prob, self.seed)
        }
    }
}

#[derive(Args)]
struct InstanceArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "kds")]
    problem: ProblemKind,
    /// Subset size; defaults to ceil(n/2).
    #[arg(long)]
    k: Option<usize>,
    /// Spectrum cache: read if present and matching, written otherwise.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

impl InstanceArgs {
    fn instance(&self) -> Result<ProblemInstance> {
        let g = self.graph.build()?;
        let k = match self.problem {
            ProblemKind::MaxBisection => self.k,
            _ => Some(self.k.unwrap_or(g.n().div_ceil(2))),
        };
        ProblemInstance::new(g, self.problem, k)
    }

    fn spectrum(&self, inst: &ProblemInstance) -> Result<ObjectiveSpectrum> {
        if let Some(path) = &self.cache {
            if path.exists() {
                let s = ObjectiveSpectrum::read_cache(path)?;
                if s.matches(inst) {
                    return Ok(s);
                }
                eprintln!("warning: {} does not match the instance; rebuilding", path.display());
            }
            let s = build_spectrum(inst, self.cap)?;
            s.write_cache(path)?;
            return Ok(s);
        }
        build_spectrum(inst, self.cap)
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key = value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Print the planned row count and exit without writing.
    #[arg(long)]
    dry_run: bool,
    /// Keep rows already in --out and append the missing ones.
    #[arg(long)]
    resume: bool,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    problems: Option<String>,
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    k_rules: Option<String>,
    #[arg(long)]
    edge_probs: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    graphs_per_cell: Option<String>,
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    budget_per_restart: Option<String>,
    #[arg(long)]
    search_mode: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    angle_budget: Option<String>,
    #[arg(long)]
    enum_cap: Option<String>,
    #[arg(long)]
    timing: Option<String>,
    #[arg(long)]
    cache_dir: Option<String>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("problems", &self.problems),
            ("sizes", &self.sizes),
            ("k_rules", &self.k_rules),
            ("edge_probs", &self.edge_probs),
            ("rounds", &self.rounds),
            ("graphs_per_cell", &self.graphs_per_cell),
            ("methods", &self.methods),
            ("seed", &self.seed),
            ("restarts", &self.restarts),
            ("budget_per_restart", &self.budget_per_restart),
            ("search_mode", &self.search_mode),
            ("lambda", &self.lambda),
            ("angle_budget", &self.angle_budget),
            ("enum_cap", &self.enum_cap),
            ("timing", &self.timing),
            ("cache_dir", &self.cache_dir),
        ];
        let overrides: BTreeMap<String, String> =
            flags.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect();
        cfg.apply(&overrides)?;
        Ok(cfg)
    }
}

fn parse_angles(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Input(format!("bad angle '{t}'"))))
        .collect()
}

fn print_result(r: &RunResult) {
    println!("expectation = {}", r.expectation);
    println!("ratio = {}", r.ratio);
    println!("p_above = {}", r.p_above);
    println!("evals = {}", r.evals);
    println!("wall_ns = {}", r.wall_ns);
    println!("truncated = {}", r.truncated);
}

fn print_schedule(s: &AngleSchedule) {
    let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    println!("betas = {}", join(s.betas()));
    println!("gammas = {}", join(s.gammas()));
}

fn simulate(
    inst: &InstanceArgs,
    p: usize,
    method: MethodArg,
    th: Option<i64>,
    betas: Option<&str>,
    gammas: Option<&str>,
    statevec: bool,
    restarts: usize,
) -> Result<()> {
    let instance = inst.instance()?;
    let spectrum = inst.spectrum(&instance)?;
    let explicit = match (betas, gammas) {
        (Some(b), Some(g)) => Some(AngleSchedule::explicit(parse_angles(b)?, parse_angles(g)?)?),
        (None, None) => None,
        _ => return Err(Error::Input("--betas and --gammas go together".into())),
    };
    if explicit.as_ref().is_some_and(|s| s.len() != p) {
        return Err(Error::Input(format!("--p {p} does not match the number of angles")));
    }
    let (th, schedule) = match method {
        MethodArg::Thresh => {
            let th = match th {
                Some(t) => t,
                None => find_threshold(&spectrum, p, &ThresholdSearchOptions::default())?.th,
            };
            let sched = explicit.unwrap_or_else(|| capped_schedule(&spectrum.split_at(th), p));
            (Some(th), sched)
        }
        MethodArg::Standard => {
            let sched = match explicit {
                Some(s) => s,
                None if p == 0 => AngleSchedule::empty(),
                None => optimize_angles(&spectrum, p, &OptimizerOptions { restarts, ..Default::default() })?.0,
            };
            (None, sched)
        }
    };
    let result = if statevec {
        let sim = StateVectorSim::new(&instance, DEFAULT_STATEVEC_CAP)?;
        let phase = th.map_or(PhaseKind::Standard, PhaseKind::Threshold);
        let start = std::time::Instant::now();
        let state = sim.run(phase, &schedule);
        let e = sim.expectation(&state);
        let c_max = f64::from(spectrum.c_max());
        if c_max == 0.0 {
            return Err(Error::DegenerateInstance);
        }
        let p_above = match th {
            Some(t) => state.amps.iter().zip(sim.values()).filter(|(_, &c)| i64::from(c) > t).map(|(a, _)| a.norm_sqr()).sum(),
            None => state.amps.iter().zip(sim.values()).filter(|(_, &c)| f64::from(c) == c_max).map(|(a, _)| a.norm_sqr()).sum(),
        };
        RunResult { expectation: e, ratio: e / c_max, p_above, evals: 1, wall_ns: start.elapsed().as_nanos(), truncated: false }
    } else {
        match th {
            Some(t) => expectation_thresh(&spectrum, t, &schedule)?,
            None => expectation_std(&spectrum, &schedule)?,
        }
    };
    if let Some(t) = th {
        println!("threshold = {t}");
    }
    print_schedule(&schedule);
    print_result(&result);
    Ok(())
}

fn oracle_check(n: usize, trials: usize, max_p: usize, seed: u64, tol: f64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_std, mut worst_th) = (0.0f64, 0.0f64);
    for t in 0..trials {
        let kind = ProblemKind::ALL[t % 4];
        let g = Graph::erdos_renyi(n, rng.gen_range(0.2..0.9), rng.gen())?;
        let k = match kind {
            ProblemKind::MaxCut | ProblemKind::MaxBisection => None,
            _ => Some(rng.gen_range(1..n)),
        };
        let instance = ProblemInstance::new(g, kind, k)?;
        let spectrum = build_spectrum(&instance, DEFAULT_ENUMERATION_CAP)?;
        let sim = StateVectorSim::new(&instance, DEFAULT_STATEVEC_CAP)?;
        let p = rng.gen_range(0..=max_p);
        let angles = |rng: &mut ChaCha8Rng| (0..p).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect::<Vec<_>>();
        let schedule = AngleSchedule::explicit(angles(&mut rng), angles(&mut rng))?;

        let collapsed = thqaoa::standard::evolve_collapsed(&spectrum, &schedule);
        let e_std: f64 = collapsed
            .coeffs
            .iter()
            .zip(spectrum.entries())
            .map(|(c, &(g, d))| c.norm_sqr() * d as f64 * f64::from(g))
            .sum();
        let dense = sim.expectation(&sim.run(PhaseKind::Standard, &schedule));
        let d_std = (e_std - dense).abs();

        let cands = spectrum.threshold_candidates();
        let th = cands[rng.gen_range(0..cands.len())];
        let two = evolve_two_level(&spectrum.split_at(th), &schedule).expectation();
        let dense_th = sim.expectation(&sim.run(PhaseKind::Threshold(th), &schedule));
        let d_th = (two - dense_th).abs();
        let k = instance.k().unwrap_or(0);
        println!("trial {t:>3} {:<9} k={k:<2} p={p} th={th:<3} std |d|={d_std:.3e} thresh |d|={d_th:.3e}", kind.as_str());
        worst_std = worst_std.max(d_std);
        worst_th = worst_th.max(d_th);
    }
    let worst = worst_std.max(worst_th);
    println!("max |delta| standard = {worst_std:.3e}");
    println!("max |delta| threshold = {worst_th:.3e}");
    println!("max |delta| = {worst:.3e} (tolerance {tol:e}): {}", if worst <= tol { "ok" } else { "FAIL" });
    Ok(worst <= tol)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Gen { graph, out } => {
            let g = graph.build()?;
            match out {
                Some(path) => g.write_edge_list(&path)?,
                None => print!("{}", g.to_edge_list()),
            }
        }
        Cmd::Spectrum { inst, out } => {
            let instance = inst.instance()?;
            let s = inst.spectrum(&instance)?;
            match out {
                Some(path) => s.write_cache(&path)?,
                None => print!("{}", s.to_cache_string()),
            }
        }
        Cmd::Simulate { inst, p, method, th, betas, gammas, statevec, restarts } => {
            simulate(&inst, p, method, th, betas.as_deref(), gammas.as_deref(), statevec, restarts)?
        }
        Cmd::FindAngles { inst, th, p, lambda, budget, grid_points } => {
            let instance = inst.instance()?;
            let spectrum = inst.spectrum(&instance)?;
            let split = spectrum.split_at(th);
            let grid = match grid_points {
                Some(points) => FractionGrid::Uniform { points },
                None => FractionGrid::Known(vec![(split.r(), split.q())]),
            };
            let opts = AngleSearchOptions { lambda, budget, max_rounds: p, grid };
            let mut failure = None;
            let out = find_angles_oracle(
                |s| match expectation_thresh(&spectrum, th, s) {
                    Ok(r) => r,
                    Err(e) => {
                        failure.get_or_insert(e);
                        RunResult { expectation: f64::NEG_INFINITY, ratio: 0.0, p_above: 0.0, evals: 1, wall_ns: 0, truncated: false }
                    }
                },
                &opts,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            println!("threshold = {th}");
            println!("rounds = {}", out.schedule.len());
            println!("best_pi_rounds = {}", out.best_pi_rounds);
            print_schedule(&out.schedule);
            print_result(&out.result);
        }
        Cmd::FindThreshold { inst, p, mode, exhaustive, profile } => {
            let instance = inst.instance()?;
            let spectrum = inst.spectrum(&instance)?;
            let opts = ThresholdSearchOptions { mode: mode.into(), exhaustive, ..Default::default() };
            let out = find_threshold(&spectrum, p, &opts)?;
            if profile {
                for (th, ratio) in threshold_profile(&spectrum, p)? {
                    println!("profile {th} {ratio}");
                }
            }
            if !out.unimodal {
                eprintln!("warning: threshold profile probes were not single-peaked; used a full scan");
            }
            println!("threshold = {}", out.th);
            print_schedule(&out.schedule);
            print_result(&out.result);
        }
        Cmd::OracleCheck { n, trials, max_p, seed, tol } => {
            if !oracle_check(n, trials, max_p, seed, tol)? {
                return Err(Error::Invariant(format!("engines disagree beyond {tol:e}")));
            }
        }
        Cmd::Experiment(args) => {
            let cfg = args.config()?;
            if args.print_config {
                print!("{}", cfg.to_text());
                return Ok(());
            }
            if args.dry_run {
                let plan = harness::plan(&cfg)?;
                println!("cells = {}", plan.cells);
                println!("planned rows = {}", plan.rows);
                println!("rows skipped by cap = {}", plan.capped_rows);
                return Ok(());
            }
            let summary = harness::write_experiment_csv(&cfg, &args.out, args.resume)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} rows to {} ({} already present, {} skipped)",
                summary.rows_written,
                args.out.display(),
                summary.rows_resumed,
                summary.rows_skipped
            );
        }
        Cmd::Version => println!("thqaoa {}", env!("CARGO_PKG_VERSION")),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = harness::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
