use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ugv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ugv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ugv(args);
    assert!(
        out.status.success(),
        "ugv {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_solve_baseline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("scenario.json");
    let sc2 = dir.path().join("again.json");
    ok(&["gen", "--out", path(&sc), "--k", "6", "--m", "6", "--seed", "3"]);
    ok(&["gen", "--out", path(&sc2), "--k", "6", "--m", "6", "--seed", "3"]);
    assert_eq!(fs::read(&sc).unwrap(), fs::read(&sc2).unwrap());

    let report = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    ok(&[
        "solve",
        path(&sc),
        "--init",
        "local-search",
        "--ls-iters",
        "5",
        "--out",
        path(&report),
        "--trace",
        path(&trace),
    ]);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["users"].as_array().unwrap().len(), 6);
    assert!(r["objective"].as_f64().unwrap() > 0.0);
    let trace = fs::read_to_string(&trace).unwrap();
    assert!(trace.starts_with("iteration,pool_nodes,candidates,incumbent"));

    let naive: serde_json::Value = serde_json::from_str(&ok(&["solve", path(&sc)])).unwrap();
    assert_eq!(naive["objective"], r["objective"]);

    let nm: serde_json::Value =
        serde_json::from_str(&ok(&["baseline", path(&sc), "--scheme", "no-move"])).unwrap();
    assert_eq!(nm["motion_energy_j"].as_f64().unwrap(), 0.0);
    assert!(r["objective"].as_f64().unwrap() <= nm["objective"].as_f64().unwrap());
}

#[test]
fn infeasible_full_path_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("tight.json");
    // A 1-second budget cannot cover any tour across a 20 m square.
    ok(&["gen", "--out", path(&sc), "--k", "2", "--m", "5", "--t", "1", "--seed", "1"]);
    let out = ok(&["baseline", path(&sc), "--scheme", "full-path"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["feasible"], false);
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        ok(&[
            "sweep", "--kind", "noise", "--grid", "-120,-90", "--runs", "3", "--k", "5", "--m", "5",
            "--seed", "4", "--out", path(out),
        ]);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("sweep,x,run,proposed"));
    assert_eq!(text.matches("aggregate").count(), 2);
    assert_eq!(text.lines().count(), 1 + 2 * 4);

    let trace = dir.path().join("trace.csv");
    ok(&[
        "sweep", "--kind", "pool-trace", "--grid", "6", "--runs", "2", "--k", "5", "--seed", "4",
        "--out", path(&trace),
    ]);
    let t = fs::read_to_string(&trace).unwrap();
    assert!(t.contains("local-search") && t.contains("naive"));
}

#[test]
fn verify_and_errors() {
    let out = ok(&["verify", "--max-m", "5", "--cases", "6", "--seed", "2"]);
    assert_eq!(out.lines().count(), 4);
    assert!(out.lines().all(|l| l.starts_with("ok")));

    let missing = ugv(&["solve", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("reading"));
}
