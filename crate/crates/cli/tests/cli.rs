use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use snowsat::plan::read_records;
use snowsat::{BoundStatus, Formula};

fn snowsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snowsat")).args(args).env_remove("SNOWSAT_MODE").output().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_single_push() {
    let dir = tempfile::tempdir().unwrap();
    let lvl = write(dir.path(), "push.xsb", "#####\n#@$.#\n#####\n");
    let o = snowsat(&["solve", lvl.to_str().unwrap(), "--mode", "collapsed"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("R"));
    let rec = &read_records(lines.next().unwrap().as_bytes()).unwrap()[0];
    assert_eq!((rec.ub, rec.status, rec.instance.as_str()), (Some(1), BoundStatus::Optimal, "push"));
}

#[test]
fn solve_at_goal_prints_empty_solution() {
    let dir = tempfile::tempdir().unwrap();
    let lvl = write(dir.path(), "done.snow", "#####\n#p7-#\n#####\n");
    let o = snowsat(&["solve", lvl.to_str().unwrap(), "--emit", "lurd"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "\n");
}

#[test]
fn solve_hybrid_reaches_oracle_optimum() {
    let o = snowsat(&["solve", &fixture("snow_tiny.snow"), "--mode", "hybrid", "--reach", "tree", "--emit", "record"]);
    assert_eq!(o.status.code(), Some(0));
    let rec = &read_records(o.stdout.as_slice()).unwrap()[0];
    assert_eq!(rec.ub, Some(3));
    assert_eq!(rec.reach, "tree+path");
}

#[test]
fn bounded_run_exits_two() {
    let o = snowsat(&["solve", &fixture("sok_corridor.xsb"), "--mode", "collapsed", "--horizon-cap", "1", "--emit", "record"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = &read_records(o.stdout.as_slice()).unwrap()[0];
    assert_eq!((rec.status, rec.last_horizon, rec.solution.clone()), (BoundStatus::Bounded, Some(1), None));
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.xsb", "#####\n#@$ #\n#####\n");
    assert_eq!(snowsat(&["solve", bad.to_str().unwrap()]).status.code(), Some(1));
    let unknown = write(dir.path(), "level.txt", "#####\n#@$.#\n#####\n");
    let o = snowsat(&["solve", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--game"));
    assert_eq!(snowsat(&["solve", unknown.to_str().unwrap(), "--game", "sokoban"]).status.code(), Some(0));
    assert_eq!(snowsat(&["solve", "/nonexistent.xsb"]).status.code(), Some(1));
}

#[test]
fn mode_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_snowsat"))
        .args(["solve", &fixture("sok_push1.xsb"), "--emit", "record"])
        .env("SNOWSAT_MODE", "full")
        .output()
        .unwrap();
    assert_eq!(read_records(o.stdout.as_slice()).unwrap()[0].mode, "full");
    // flags win over the environment
    let o = Command::new(env!("CARGO_BIN_EXE_snowsat"))
        .args(["solve", &fixture("sok_push1.xsb"), "--emit", "record", "--mode", "collapsed"])
        .env("SNOWSAT_MODE", "full")
        .output()
        .unwrap();
    assert_eq!(read_records(o.stdout.as_slice()).unwrap()[0].mode, "collapsed");
}

#[test]
fn validate_reports_problems() {
    let lvl = fixture("sok_walk.xsb");
    let ok = snowsat(&["validate", &lvl, "rR"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("goal_reached=true moves=2 object_actions=1"));
    let wrong_case = snowsat(&["validate", &lvl, "RR"]);
    assert_ne!(wrong_case.status.code(), Some(0));
    assert!(stdout(&wrong_case).contains("case mismatch at move 0"));
    let truncated = snowsat(&["validate", &lvl, "r"]);
    assert_ne!(truncated.status.code(), Some(0));
    assert!(stdout(&truncated).contains("goal_reached=false"));
    let rejected = snowsat(&["validate", &lvl, "rRR"]);
    assert!(stdout(&rejected).contains("rejected at move 2"));
    assert_eq!(snowsat(&["validate", &lvl, "rx"]).status.code(), Some(1));
}

#[test]
fn external_backend_matches_embedded() {
    let cmd = format!("{} sat {{input}}", env!("CARGO_BIN_EXE_snowsat"));
    let lvl = fixture("snow_pop.snow");
    let ext = snowsat(&["solve", &lvl, "--mode", "collapsed", "--solver-cmd", &cmd, "--emit", "record"]);
    let emb = snowsat(&["solve", &lvl, "--mode", "collapsed", "--emit", "record"]);
    let (e, m) = (&read_records(ext.stdout.as_slice()).unwrap()[0], &read_records(emb.stdout.as_slice()).unwrap()[0]);
    assert_eq!(e.backend, "snowsat");
    assert_eq!(m.backend, "cadical-embedded");
    assert_eq!((e.ub, e.lb, e.status), (m.ub, m.lb, m.status));
    let broken = snowsat(&["solve", &lvl, "--mode", "collapsed", "--solver-cmd", "/nonexistent-solver {input}"]);
    assert_eq!(broken.status.code(), Some(1));
}

#[test]
fn encode_then_sat() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    let lvl = fixture("sok_push1.xsb");
    for (horizon, expect) in [("0", "s UNSATISFIABLE"), ("1", "s SATISFIABLE")] {
        let o = snowsat(&["encode", &lvl, "--horizon", horizon, "--reach", "dag", "-o", cnf.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let f = Formula::from_dimacs(&std::fs::read_to_string(&cnf).unwrap()).unwrap();
        assert!(f.num_clauses() > 0);
        let s = snowsat(&["sat", cnf.to_str().unwrap()]);
        assert_eq!(stdout(&s).lines().next(), Some(expect));
    }
    let piped = snowsat(&["encode", &lvl, "--horizon", "1", "--mode", "parallel"]);
    assert!(stdout(&piped).starts_with("p cnf "));
}

#[test]
fn freeze_writes_level_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = snowsat(&["freeze", &fixture("sok_turn.xsb"), "--dir", dir.path().to_str().unwrap(), "--name", "turn"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"moves_optimum\":5"));
    assert!(dir.path().join("turn.xsb").exists() && dir.path().join("turn.toml").exists());
}

#[test]
fn bench_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = snowsat(&["bench", dir.path().to_str().unwrap(), "--reach", "tree"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["par2"], 0.0);
    assert_eq!(summary["instances"], 0);
}

#[test]
fn bench_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.xsb", "#####\n#@$.#\n#####\n");
    write(dir.path(), "b.xsb", "#####\n#@$ #\n#####\n");
    let o = snowsat(&["bench", dir.path().to_str().unwrap(), "--reach", "path,tree", "--mode", "collapsed", "--timeout", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!((l["solved"].as_u64(), l["errors"].as_u64()), (Some(1), Some(1)));
        assert!(l["par2"].as_f64().unwrap() >= 10.0);
    }
}
