use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use consensus_cluster::fixtures;
use consensus_cluster::graph::{render_adjacency, render_edge_list};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_consensus-cluster"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: TempDir::new().unwrap(),
        };
        ws.put("ex1.txt", &render_edge_list(&fixtures::example1_graph()));
        ws.put("ex2.csv", &render_adjacency(&fixtures::example2_graph()));
        ws.put("ex1.dyn", &fixtures::example1_dynamics().render());
        ws.put("ex2.dyn", &fixtures::example2_dynamics().render());
        ws.put("split.txt", &render_edge_list(&fixtures::two_triangles()));
        ws.put("k3.txt", "1 2 1\n2 3 1\n1 3 1\n");
        ws
    }

    fn put(&self, name: &str, text: &str) -> PathBuf {
        write(self.dir.path(), name, text)
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_string()
    }

    fn run(&self, args: &[&str]) -> Output {
        let args: Vec<String> = args
            .iter()
            .map(|a| match a.strip_prefix('@') {
                Some(name) => self.path(name),
                None => a.to_string(),
            })
            .collect();
        bin().args(&args).output().expect("binary runs")
    }
}

fn clusters(v: &Value) -> Vec<Vec<usize>> {
    serde_json::from_value(v["clusters"].clone()).unwrap()
}

#[test]
fn spectrum_of_example1() {
    let ws = Workspace::new();
    let o = ws.run(&["spectrum", "@ex1.txt"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let vals: Vec<f64> = lines.next().unwrap().split(", ").map(|v| v.parse().unwrap()).collect();
    let want = [0.0, 0.2, 1.095, 3.0, 3.105, 3.2];
    for (v, w) in vals.iter().zip(want) {
        assert!((v - w).abs() < 1e-3, "{vals:?}");
    }
    assert_eq!(lines.next(), Some("connected: true"));
}

#[test]
fn spectrum_of_disconnected_graph() {
    let ws = Workspace::new();
    let o = ws.run(&["spectrum", "@split.txt"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("0, 0, "), "{text}");
    assert!(text.contains("connected: false"));
    assert!(text.contains("components: 2"));
}

#[test]
fn cluster_example2_with_dynamics_and_h() {
    let ws = Workspace::new();
    for mode in [["--dynamics", "@ex2.dyn"], ["--h", "3"]] {
        let o = ws.run(&["cluster", "@ex2.csv", mode[0], mode[1]]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["h"], 3);
        assert_eq!(v["method"], "theorem1");
        assert_eq!(clusters(&v), vec![vec![1, 2], vec![3], vec![4], vec![5, 6]]);
        assert_eq!(v["agreement_pairs"], serde_json::json!([[1, 2], [5, 6]]));
    }
}

#[test]
fn cluster_with_h2_is_consensus() {
    let ws = Workspace::new();
    let out = ws.path("report.json");
    let o = ws.run(&["cluster", "@ex1.txt", "--h", "2", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(clusters(&v), vec![vec![1, 2, 3, 4, 5, 6]]);
}

#[test]
fn cluster_scan_is_ordered_and_distinct() {
    let ws = Workspace::new();
    let o = ws.run(&["cluster", "@ex1.txt", "--scan"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let parts = v["partitions"].as_array().unwrap();
    assert_eq!(parts[0]["h_min"], 2);
    let mut prev_max = 1;
    let mut seen = Vec::new();
    for p in parts {
        let lo = p["h_min"].as_u64().unwrap();
        let hi = p["h_max"].as_u64().unwrap();
        assert!(lo > prev_max && hi >= lo);
        prev_max = hi;
        assert!(!seen.contains(&p["clusters"]), "duplicate partition");
        seen.push(p["clusters"].clone());
    }
    assert_eq!(prev_max, 6);
    assert!(seen.contains(&serde_json::json!([[1, 2, 3], [4, 5, 6]])));
}

#[test]
fn cluster_rejects_disconnected_graph() {
    let ws = Workspace::new();
    let o = ws.run(&["cluster", "@split.txt", "--h", "3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn input_errors_exit_2() {
    let ws = Workspace::new();
    ws.put("loop.txt", "1 1 1\n1 2 1\n");
    ws.put("dup.txt", "1 2 1\n2 3 1\n2 1 1\n");
    ws.put("bad.dyn", "d 2\n1 0\n0 1\n");
    assert_eq!(ws.run(&["spectrum", "@loop.txt"]).status.code(), Some(2));
    let dup = ws.run(&["spectrum", "@dup.txt"]);
    assert_eq!(dup.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&dup.stderr).contains("line 3"));
    assert_eq!(ws.run(&["spectrum", "@missing.txt"]).status.code(), Some(2));
    assert_eq!(
        ws.run(&["cluster", "@ex1.txt", "--dynamics", "@bad.dyn"]).status.code(),
        Some(2)
    );
    assert_eq!(ws.run(&["cluster", "@ex1.txt", "--h", "9"]).status.code(), Some(2));
    assert_eq!(run(&["cluster"]).status.code(), Some(2));
}

#[test]
fn design_realizes_requested_h() {
    let ws = Workspace::new();
    for g in ["@ex1.txt", "@ex2.csv"] {
        let out = ws.path("gains.dyn");
        let o = ws.run(&["design", g, "--h", "3", "--out", &out]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("realized h = 3"));
        let c = ws.run(&["cluster", g, "--dynamics", &out]);
        let v: Value = serde_json::from_str(&stdout(&c)).unwrap();
        assert_eq!(v["h"], 3);
    }
}

#[test]
fn design_infeasible_on_complete_graph() {
    let ws = Workspace::new();
    let o = ws.run(&["design", "@k3.txt", "--h", "3"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_short_run_has_two_rows() {
    let ws = Workspace::new();
    let o = ws.run(&["simulate", "@ex1.txt", "--dynamics", "@ex1.dyn", "--t-end", "0.001"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("t,x_1_1,x_1_2,"));
    assert!(lines[2].starts_with("0.001,"));
}

#[test]
fn simulate_then_plot() {
    let ws = Workspace::new();
    let csv = ws.path("traj.csv");
    let report = ws.path("quasi.json");
    let o = ws.run(&[
        "simulate",
        "@ex2.csv",
        "--dynamics",
        "@ex2.dyn",
        "--t-end",
        "3",
        "--seed",
        "1",
        "--out",
        &csv,
        "--report",
        &report,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["method"], "trajectory");
    assert!(v["gap_ratio"].as_f64().unwrap() >= 1.0);

    let svg1 = ws.path("a.svg");
    let svg2 = ws.path("b.svg");
    for out in [&svg1, &svg2] {
        let p = ws.run(&["plot", &csv, "--pair", "2", "3", "--coord", "1", "--out", out]);
        assert_eq!(p.status.code(), Some(0));
    }
    let a = fs::read(&svg1).unwrap();
    assert_eq!(a, fs::read(&svg2).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("<svg"));

    let phase = ws.run(&["plot", &csv, "--phase"]);
    assert_eq!(phase.status.code(), Some(0));
    assert_eq!(stdout(&phase).matches("<circle").count(), 6);

    // a vertex against itself is a flat zero line
    let same = ws.run(&["plot", &csv, "--pair", "4", "4"]);
    let svg = stdout(&same);
    let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
    let ys: Vec<&str> = line
        .split("points=\"")
        .nth(1)
        .unwrap()
        .trim_end_matches("\"/>")
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap())
        .collect();
    assert!(ys.windows(2).all(|w| w[0] == w[1]));

    let bad = ws.run(&["plot", &csv, "--pair", "1", "7"]);
    assert_eq!(bad.status.code(), Some(2));
}
