use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgp-design"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_windmill_writes_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.txt");
    let o = run(&["generate", "--gen", "windmill:2,6", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let edges = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .count();
    // two 6-cliques sharing the hub
    assert_eq!(edges, 2 * 15);
}

#[test]
fn design_windmill_3_21_needs_23_slots() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["design", "--gen", "windmill:3,21", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "tau"), "23");
    for f in ["design.json", "schedule.json", "links.txt", "mixing.txt"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("design.json")).unwrap()).unwrap();
    assert_eq!(report["tau"], 23);
    assert_eq!(report["n"], 61);
}

#[test]
fn two_node_design() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("pair.txt");
    fs::write(&topo, "0 1\n").unwrap();
    let o = run(&["design", "--topology", p(&topo)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert_eq!(field(&line, "links"), "2");
    assert_eq!(field(&line, "tau"), "2");
    assert_eq!(field(&line, "diameter"), "1");
}

#[test]
fn disconnected_topology_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("split.txt");
    fs::write(&topo, "0 1\n2 3\n").unwrap();
    let o = run(&["design", "--topology", p(&topo)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("{0, 1}") && err.contains("{2, 3}"), "{err}");
}

#[test]
fn rescheduling_designed_links_reproduces_tau_and_objective() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["design", "--gen", "windmill:2,6", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let design = stdout(&o);
    let links = dir.path().join("links.txt");
    let o = run(&["schedule", "--gen", "windmill:2,6", "--links", p(&links)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sched = stdout(&o);
    assert_eq!(field(&design, "tau"), field(&sched, "tau"));
    assert_eq!(field(&design, "objective"), field(&sched, "objective"));
}

#[test]
fn sweep_writes_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep-k",
        "--gen",
        "windmill:2,6",
        "--k-max",
        "3",
        "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(stdout(&o).contains("best K=0"));
}

#[test]
fn simulate_without_eps_names_the_setting() {
    let o = run(&["simulate", "--gen", "windmill:2,3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--eps"), "{}", stderr(&o));
}

#[test]
fn config_missing_required_field_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"topology": {"generator": "windmill:2,3"}, "algorithm": "sgp", "seed": 1}"#,
    )
    .unwrap();
    let o = run(&["simulate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--gen",
        "windmill:2,3",
        "--eps",
        "1e-3",
        "--seed",
        "3",
        "--eta",
        "0.3",
        "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("sgp-designed: converged"),
        "{}",
        stdout(&o)
    );
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn verify_quick_passes() {
    let o = run(&["verify", "--level", "quick"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
