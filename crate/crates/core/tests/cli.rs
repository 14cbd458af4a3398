use std::process::{Command, Output};

fn thqaoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thqaoa")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

#[test]
fn k3_uniform_mean() {
    let o = thqaoa(&["simulate", "--problem", "maxcut", "--n", "3", "--complete", "--p", "0", "--method", "thresh", "--th", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "expectation").parse::<f64>().unwrap(), 1.5);
}

#[test]
fn oracle_check_passes() {
    let o = thqaoa(&["oracle-check", "--n", "10", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("max |delta| = ")).unwrap().to_string();
    let v: f64 = line["max |delta| = ".len()..].split_whitespace().next().unwrap().parse().unwrap();
    assert!(v <= 1e-9);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = thqaoa(&["experiment", "--dry-run", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    // 4 problems x 3 probabilities x 30 graphs x 4 round counts x 2 methods
    assert_eq!(field(&stdout(&o), "planned rows"), "2880");
    assert!(!out.exists());
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "problems = kds\nsizes = 8\nedge_probs = 0.5\nrounds = 1, 2\ngraphs_per_cell = 5\nmethods = thresh\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = thqaoa(&["experiment", "--config", c, "--dry-run"]);
    assert_eq!(field(&stdout(&o), "planned rows"), "10");
    let o = thqaoa(&["experiment", "--config", c, "--graphs-per-cell", "2", "--dry-run"]);
    assert_eq!(field(&stdout(&o), "planned rows"), "4");

    let out = dir.path().join("r.csv");
    let o = thqaoa(&["experiment", "--config", c, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("problem,n,k,edge_prob,graph_seed,p,method,threshold,expectation,opt_value,ratio,evals,wall_ns\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(thqaoa(&["version"]).status.code(), Some(0));
    assert_eq!(thqaoa(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(thqaoa(&["simulate", "--bogus-flag"]).status.code(), Some(1));
    assert_eq!(thqaoa(&["simulate", "--problem", "kds", "--n", "6", "--k", "9"]).status.code(), Some(1));
    assert_eq!(thqaoa(&["spectrum", "--problem", "kds", "--n", "20", "--k", "10", "--cap", "1000"]).status.code(), Some(2));
    assert_eq!(thqaoa(&["experiment", "--dry-run", "--sizes", ""]).status.code(), Some(1));
}

#[test]
fn statevec_and_collapsed_agree() {
    let base = ["simulate", "--problem", "kvc", "--n", "9", "--k", "4", "--seed", "11", "--p", "3", "--th", "9", "--betas", "0.3,2.0,1.1", "--gammas", "1.7,0.2,2.9"];
    let a: f64 = field(&stdout(&thqaoa(&base)), "expectation").parse().unwrap();
    let mut sv = base.to_vec();
    sv.push("--statevec");
    let b: f64 = field(&stdout(&thqaoa(&sv)), "expectation").parse().unwrap();
    assert!((a - b).abs() < 1e-10, "{a} {b}");
}

#[test]
fn gen_and_spectrum_cache() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let cache = dir.path().join("s.spectrum");
    assert!(thqaoa(&["gen", "--n", "8", "--edge-prob", "0.4", "--seed", "2", "--out", g.to_str().unwrap()]).status.success());
    let args = ["spectrum", "--problem", "kds", "--graph", g.to_str().unwrap(), "--k", "3", "--cache", cache.to_str().unwrap()];
    let first = stdout(&thqaoa(&args));
    assert!(cache.exists());
    assert_eq!(first, stdout(&thqaoa(&args)));
    assert!(first.starts_with("SPECTRUM v1 8 3 kds 56 "));
}
