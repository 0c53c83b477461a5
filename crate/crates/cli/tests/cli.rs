use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scgrade::format::{parse_distribution, MatrixFile};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scgrade"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn grade_zero_memory_prints_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.txt");
    let o = run(&["grade", "--gamma", "3", "--kappa", "7", "--memory", "0", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "1.0\n");
    assert_eq!(json(&o)["distribution"], serde_json::json!([1.0]));
}

#[test]
fn grade_distribution_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.txt");
    let o = run(&[
        "grade", "--gamma", "3", "--kappa", "7", "--memory", "4", "--objective", "cycles6", "--out",
        path(&out),
    ]);
    assert!(o.status.success());
    let p = parse_distribution(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(p.len(), 5);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for t in 0..5 {
        assert!((p[t] - p[4 - t]).abs() < 1e-3);
    }
    let report = json(&o);
    assert!(report["objective_final"].as_f64().unwrap() <= report["objective_initial"].as_f64().unwrap());
}

#[test]
fn pattern_search_reports_ranking() {
    let o = run(&[
        "grade", "--gamma", "4", "--kappa", "17", "--memory", "4", "--pseudo-memory", "2", "--out",
        "/dev/null",
    ]);
    assert!(o.status.success());
    let report = json(&o);
    assert_eq!(report["pattern"], serde_json::json!([0, 1, 4]));
    assert_eq!(report["ranking"].as_array().unwrap().len(), 3);
}

#[test]
fn iteration_cap_exits_three() {
    let o = run(&[
        "grade", "--gamma", "3", "--kappa", "7", "--memory", "4", "--max-iters", "2", "--out", "/dev/null",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn invalid_arguments_exit_two() {
    let o = run(&["grade", "--gamma", "3", "--kappa", "7", "--pattern", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["grade", "--gamma", "3", "--kappa", "7", "--memory", "2", "--step", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "construct", "--gamma", "3", "--kappa", "7", "--memory", "2", "--circulant", "7", "--replicas",
        "5", "--restarts", "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_inputs_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# only a comment\n").unwrap();
    let o = run(&["count", "--p", path(&empty)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let o = run(&["count", "--p", path(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_flags_entries_outside_the_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    std::fs::write(&file, "2 3 4 1 1\n0 1 5\n2 3 4\n").unwrap();
    let o = run(&["verify", "--p", path(&file)]);
    assert_eq!(o.status.code(), Some(5));
    let report = json(&o);
    assert_eq!(report["ok"], Value::Bool(false));
    assert_eq!(report["violations"][0]["value"], 5);
    assert_eq!(report["violations"][0]["col"], 2);

    std::fs::write(&file, "2 4 4 1 1\n0 1 4 0\n0 4 1 0\n").unwrap();
    let reference = dir.path().join("r.txt");
    std::fs::write(&reference, "0.5 0.25 0 0 0.25\n").unwrap();
    let o = run(&["verify", "--p", path(&file), "--pattern", "0,1,4"]);
    assert!(o.status.success());
    let o = run(&["verify", "--p", path(&file), "--reference", path(&reference)]);
    assert!(o.status.success());
    let report = json(&o);
    assert_eq!(report["l1"].as_f64().unwrap(), 0.0);
}

#[test]
fn count_reproduces_gd24_two_one_two_objects() {
    let o = run(&[
        "count",
        "--p",
        path(&data("gd24_p.txt")),
        "--l",
        path(&data("gd24_l.txt")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&o);
    assert_eq!(report["lifted"]["t212"], 1751);
    assert_eq!(report["lifted"]["cycles4"], 0);
    assert_eq!(report["replicas"], 40);
}

#[test]
fn construct_is_deterministic_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let build = |tag: &str, threads: &str| {
        let p = dir.path().join(format!("p{tag}.txt"));
        let l = dir.path().join(format!("l{tag}.txt"));
        let o = run(&[
            "--threads", threads, "construct", "--gamma", "3", "--kappa", "7", "--memory", "2",
            "--circulant", "7", "--replicas", "5", "--restarts", "4", "--seed", "9", "--out-p",
            path(&p), "--out-l", path(&l),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("seed: 9"));
        (std::fs::read_to_string(&p).unwrap(), std::fs::read_to_string(&l).unwrap(), json(&o))
    };
    let (p1, l1, stats) = build("a", "1");
    let (p2, l2, _) = build("b", "3");
    assert_eq!((&p1, &l1), (&p2, &l2));

    let pf = MatrixFile::parse(&p1).unwrap();
    assert_eq!(pf.serialize(), p1);
    assert_eq!((pf.gamma, pf.kappa, pf.memory, pf.circulant, pf.replicas), (3, 7, 2, 7, 5));
    let trace: Vec<f64> = stats["trace"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(trace.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(stats["lifted"]["cycles4"], stats["lift"]["cycles4"]);

    let o = run(&["verify", "--p", path(&dir.path().join("pa.txt"))]);
    assert!(o.status.success());
    let o = run(&[
        "count",
        "--p",
        path(&dir.path().join("pa.txt")),
        "--l",
        path(&dir.path().join("la.txt")),
        "--no-objects",
    ]);
    assert!(o.status.success());
    assert_eq!(json(&o)["protograph"], stats["protograph"]);
}

#[test]
fn oracle_finds_cycle_free_partition() {
    let o = run(&["oracle", "--gamma", "2", "--kappa", "3", "--memory", "2"]);
    assert!(o.status.success());
    let report = json(&o);
    assert_eq!(report["objective"].as_f64().unwrap(), 0.0);
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn closed_stdout_is_not_an_error() {
    use std::process::Stdio;
    let mut child = bin()
        .args(["oracle", "--gamma", "3", "--kappa", "3", "--memory", "1"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
}
