use std::path::Path;
use std::process::{Command, Output};

fn hrlmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrlmc")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sample_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chains.csv");
    let o = hrlmc(&[
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1", "--h", "0.05", "--steps", "20", "--chains", "3",
        "--seed", "1", "--x0", "0.2", "--thin", "5", "--out", arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "chain,step,h,x_1");
    // Steps 0, 5, 10, 15, 20 for each of 3 chains.
    assert_eq!(lines.len(), 1 + 3 * 5);
    assert!(lines[1].starts_with("0,0,"));
}

#[test]
fn step_outside_the_window_exits_with_gate_code() {
    let o = hrlmc(&["sample", "--entropy", "burg", "--target", "gamma:a=5,b=1", "--h", "0.5", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = hrlmc(&[
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1", "--h", "0.5", "--steps", "5", "--override-gate",
    ]);
    assert!(o.status.success());
}

#[test]
fn inadmissible_entropy_exits_with_gate_code() {
    let o = hrlmc(&["sample", "--entropy", "shannon", "--target", "gamma:a=5,b=1", "--h", "0.05", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_input_exits_with_code_one() {
    let o = hrlmc(&["sample", "--entropy", "nope", "--target", "gamma:a=5,b=1", "--h", "0.05", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = hrlmc(&["sample", "--entropy", "burg", "--target", "gamma:a=2,b=1", "--h", "0.05", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn distance_between_clouds() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "x_1\n1.0\n0.5\n").unwrap();
    std::fs::write(&b, "x_1\n0.25\n2.0\n").unwrap();
    let out = dir.path().join("d.json");
    let o = hrlmc(&["distance", "--entropy", "burg", "--a", arg(&a), "--b", arg(&b), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&out);
    assert_eq!(d["method"], "exact-1d");
    assert!((d["value"].as_f64().unwrap() - (4.25f64 / 2.0).sqrt()).abs() < 1e-15);
}

#[test]
fn distance_from_a_sampled_trace() {
    let dir = tempfile::tempdir().unwrap();
    let chains = dir.path().join("chains.csv");
    let o = hrlmc(&[
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1", "--h", "0.05", "--steps", "0", "--chains", "4",
        "--out", arg(&chains),
    ]);
    assert!(o.status.success());
    let o = hrlmc(&["distance", "--entropy", "burg", "--a", arg(&chains), "--b", arg(&chains)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(d["value"].as_f64(), Some(0.0));
}

#[test]
fn check_then_bound() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let bh = dir.path().join("bh.json");
    let o = hrlmc(&[
        "check", "--entropy", "burg", "--target", "gamma:a=5,b=1", "--pairs", "2000", "--seed", "3", "--out",
        arg(&report), "--bh-out", arg(&bh),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&report);
    for key in ["kappa", "m", "M", "delta", "R", "kappa_tilde", "admissible", "K1", "formulas"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["admissible"], true);
    assert_eq!(json(&bh)["passed"], true);

    let bound = dir.path().join("bound.json");
    let o = hrlmc(&["bound", "--report", arg(&report), "--h", "0.05", "--eps", "0.01", "--out", arg(&bound)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b = json(&bound);
    assert!((b["bound"]["rho"].as_f64().unwrap() - 0.74f64.sqrt()).abs() < 1e-12);
    assert!((b["bound"]["step_window"][1].as_f64().unwrap() - 0.375).abs() < 1e-12);
    assert!(b["iteration_complexity"].is_object());

    let o = hrlmc(&["bound", "--report", arg(&report), "--h", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_and_sweep_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small run\nentropy = burg\ntarget = gamma:a=5,b=1\nschedule = 0.05\nsteps = 20\nchains = 64\n\
         seed = 4\ninit = 0.2\ncheckpoint_every = 10\nrepetitions = 3\npairs = 500\n",
    )
    .unwrap();
    let trace = dir.path().join("trace.csv");
    let report = dir.path().join("res.json");
    let o = hrlmc(&["experiment", "--config", arg(&cfg), "--out", arg(&trace), "--report", arg(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next(), Some("k,w2phi_median,w2phi_iqr,bound_value,floor"));
    assert_eq!(text.lines().count(), 1 + 3);
    assert!(json(&report)["bound"]["rho"].is_number());

    let sweep = dir.path().join("sweep.csv");
    let o = hrlmc(&["sweep", "--config", arg(&cfg), "--dims", "1,2", "--out", arg(&sweep)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&sweep).unwrap();
    assert_eq!(text.lines().count(), 1 + 2);
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "entropy = burg\nsteps = ten\n").unwrap();
    let o = hrlmc(&["experiment", "--config", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}
