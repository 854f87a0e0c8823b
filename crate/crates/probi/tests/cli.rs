use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use probi::formats::{self, NodeReader, NodeRecord};
use probi::synthetic::{random_nodes, BlobSpec};
use probi_core::eval::aggregate;
use serde_json::Value;
use tempfile::TempDir;

fn probi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probi"))
        .args(args)
        .env_remove("PROBI_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = probi(args);
    assert!(
        out.status.success(),
        "probi {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    v["error"]["kind"].as_str().unwrap().to_owned()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, body: &str) -> String {
        fs::write(self.path(name), body).unwrap();
        self.arg(name)
    }

    /// A 100-point file from two groups.
    fn points(&self) -> String {
        let mut body = String::from("# two groups\n");
        for i in 0..100 {
            let base = if (i / 10) % 2 == 0 { 0.0 } else { 20.0 };
            body.push_str(&format!(
                "{},{}\n",
                base + (i % 7) as f64 * 0.3,
                base - (i % 5) as f64 * 0.2
            ));
        }
        self.write("points.txt", &body)
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn smoke_pipeline() {
    let ws = Workspace::new();
    let points = ws.points();
    ok(&[
        "synth",
        "--points",
        &points,
        "--out",
        &ws.arg("nodes.jsonl"),
    ]);
    assert_eq!(
        fs::read_to_string(ws.path("nodes.jsonl"))
            .unwrap()
            .lines()
            .count(),
        10
    );
    ok(&[
        "coreset",
        "--nodes",
        &ws.arg("nodes.jsonl"),
        "--out",
        &ws.arg("core.jsonl"),
        "--k",
        "2",
        "--bucket-capacity",
        "4",
        "--seed",
        "3",
    ]);
    ok(&[
        "solve",
        "--input",
        &ws.arg("core.jsonl"),
        "--k",
        "2",
        "--seed",
        "3",
        "--out",
        &ws.arg("centers.txt"),
    ]);
    ok(&[
        "eval",
        "--nodes",
        &ws.arg("nodes.jsonl"),
        "--summary",
        &ws.arg("core.jsonl"),
        "--centers",
        &ws.arg("centers.txt"),
        "--out",
        &ws.arg("report.json"),
    ]);
    let report = read_json(&ws.path("report.json"));
    assert!(report["cost_on_full"].as_f64().unwrap().is_finite());
    assert!(report["cost_on_summary"].as_f64().unwrap().is_finite());
    assert!(report["rel_diff"].is_number());
    assert_eq!(report["node_count"], 10);

    let centers = formats::read_points(&ws.path("centers.txt")).unwrap();
    assert_eq!(centers.len(), 2);
}

#[test]
fn solve_accepts_plain_node_files() {
    let ws = Workspace::new();
    ok(&[
        "synth",
        "--points",
        &ws.points(),
        "--out",
        &ws.arg("n.jsonl"),
        "--chunk",
        "5",
    ]);
    ok(&[
        "solve",
        "--input",
        &ws.arg("n.jsonl"),
        "--k",
        "2",
        "--out",
        &ws.arg("c.txt"),
    ]);
    ok(&[
        "eval",
        "--nodes",
        &ws.arg("n.jsonl"),
        "--centers",
        &ws.arg("c.txt"),
        "--out",
        &ws.arg("r.json"),
    ]);
    let r = read_json(&ws.path("r.json"));
    assert_eq!(r["rel_diff"], 0.0);
    assert_eq!(r["node_count"], 20);
}

#[test]
fn coreset_file_keeps_weight_and_meta() {
    let ws = Workspace::new();
    let nodes = BlobSpec::census_like(120, 2).generate();
    let mut buf = Vec::new();
    formats::write_nodes(&mut buf, &nodes).unwrap();
    fs::write(ws.path("n.jsonl"), buf).unwrap();
    ok(&[
        "coreset",
        "--nodes",
        &ws.arg("n.jsonl"),
        "--out",
        &ws.arg("c.jsonl"),
        "--k",
        "3",
        "--bucket-capacity",
        "25",
        "--sample-constant",
        "20",
        "--seed",
        "1",
    ]);
    let set = formats::read_nodes(&ws.path("c.jsonl")).unwrap();
    let meta = set.meta.unwrap();
    assert_eq!(meta.source_nodes, 120);
    assert_eq!(meta.k, 3);
    assert_eq!(meta.seed, 1);
    assert_eq!(meta.coreset_size, set.nodes.len());
    assert!((meta.total_weight - 120.0).abs() < 1e-9 * 120.0);
}

#[test]
fn tampered_coreset_meta_is_rejected() {
    let ws = Workspace::new();
    ok(&[
        "synth",
        "--points",
        &ws.points(),
        "--out",
        &ws.arg("n.jsonl"),
    ]);
    ok(&[
        "coreset",
        "--nodes",
        &ws.arg("n.jsonl"),
        "--out",
        &ws.arg("c.jsonl"),
        "--k",
        "1",
    ]);
    let body = fs::read_to_string(ws.path("c.jsonl")).unwrap();
    let first_node = body.lines().nth(1).unwrap().to_owned();
    fs::write(ws.path("c.jsonl"), format!("{body}{first_node}\n")).unwrap();
    let out = probi(&[
        "solve",
        "--input",
        &ws.arg("c.jsonl"),
        "--k",
        "1",
        "--out",
        &ws.arg("x.txt"),
    ]);
    assert_eq!(error_kind(&out), "parse");
}

#[test]
fn every_subcommand_is_byte_deterministic() {
    let ws = Workspace::new();
    let points = ws.points();
    let run = |tag: &str| {
        let f = |name: &str| ws.arg(&format!("{tag}-{name}"));
        ok(&[
            "generate",
            "--count",
            "30",
            "--seed",
            "4",
            "--out",
            &f("gen.txt"),
        ]);
        ok(&["synth", "--points", &points, "--out", &f("n.jsonl")]);
        ok(&[
            "coreset",
            "--nodes",
            &f("n.jsonl"),
            "--out",
            &f("c.jsonl"),
            "--k",
            "2",
            "--bucket-capacity",
            "3",
            "--seed",
            "9",
        ]);
        ok(&[
            "solve",
            "--input",
            &f("c.jsonl"),
            "--k",
            "2",
            "--restarts",
            "3",
            "--seed",
            "9",
            "--out",
            &f("s.txt"),
        ]);
        ok(&[
            "eval",
            "--nodes",
            &f("n.jsonl"),
            "--summary",
            &f("c.jsonl"),
            "--centers",
            &f("s.txt"),
            "--out",
            &f("r.json"),
        ]);
        ok(&[
            "bench",
            "--nodes",
            &f("n.jsonl"),
            "--k",
            "2",
            "--reps",
            "3",
            "--bucket-capacity",
            "3",
            "--seed",
            "9",
            "--no-timing",
            "--out",
            &f("b.json"),
        ]);
    };
    run("a");
    run("b");
    for name in ["gen.txt", "n.jsonl", "c.jsonl", "s.txt", "r.json", "b.json"] {
        let a = fs::read(ws.path(&format!("a-{name}"))).unwrap();
        let b = fs::read(ws.path(&format!("b-{name}"))).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn bench_statistics_match_individual_reports() {
    let ws = Workspace::new();
    ok(&[
        "synth",
        "--points",
        &ws.points(),
        "--out",
        &ws.arg("n.jsonl"),
        "--chunk",
        "2",
    ]);
    ok(&[
        "bench",
        "--nodes",
        &ws.arg("n.jsonl"),
        "--k",
        "2",
        "--reps",
        "3",
        "--seed",
        "5",
        "--out",
        &ws.arg("b.json"),
    ]);
    let v = read_json(&ws.path("b.json"));
    let reports: Vec<probi_core::eval::EvalReport> =
        serde_json::from_value(v["reports"].clone()).unwrap();
    assert_eq!(reports.len(), 3);
    let expected = serde_json::to_value(aggregate(&reports).unwrap()).unwrap();
    for metric in [
        "cost_on_summary",
        "cost_on_full",
        "runtime_coreset_ms",
        "runtime_solve_ms",
    ] {
        for field in ["mean", "median", "variance_coefficient"] {
            let got = v["statistics"][metric][field].as_f64().unwrap();
            let want = expected[metric][field].as_f64().unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "{metric}.{field}"
            );
        }
    }
}

#[test]
fn node_files_round_trip() {
    let nodes = random_nodes(200, 4, 6, 77);
    let mut buf = Vec::new();
    formats::write_nodes(&mut buf, &nodes).unwrap();
    let back: Vec<_> = NodeReader::new(buf.as_slice(), "mem")
        .map(|n| n.unwrap())
        .collect();
    assert_eq!(back.len(), nodes.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    for (a, b) in nodes.iter().zip(&back) {
        let (a, b) = (
            NodeRecord::from_node(a, None),
            NodeRecord::from_node(b.node(), None),
        );
        assert_eq!(a.id, b.id);
        assert!(close(a.weight, b.weight));
        assert_eq!(a.realizations.len(), b.realizations.len());
        for (ra, rb) in a.realizations.iter().zip(&b.realizations) {
            assert!(close(ra.p, rb.p));
            assert!(ra.x.iter().zip(&rb.x).all(|(x, y)| close(*x, *y)));
        }
    }
}

#[test]
fn environment_supplies_flags_and_flags_win() {
    let ws = Workspace::new();
    ok(&[
        "synth",
        "--points",
        &ws.points(),
        "--out",
        &ws.arg("n.jsonl"),
    ]);
    let run = |seed_env: &str, extra: &[&str], out: &str| {
        let mut args = vec!["solve", "--input", ws.path("n.jsonl").to_str().unwrap()]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        args.extend(["--out".into(), ws.arg(out)]);
        args.extend(extra.iter().map(|s| s.to_string()));
        let status = Command::new(env!("CARGO_BIN_EXE_probi"))
            .args(&args)
            .env("PROBI_K", "2")
            .env("PROBI_SEED", seed_env)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        fs::read_to_string(ws.path(out)).unwrap()
    };
    let from_env = run("6", &[], "a.txt");
    let from_flag = run("999", &["--seed", "6"], "b.txt");
    assert_eq!(from_env, from_flag);
    assert!(from_env.contains("k=2"));
}

#[test]
fn errors_are_json_objects() {
    let ws = Workspace::new();
    let missing = ws.arg("nope.jsonl");
    let out = probi(&[
        "solve",
        "--input",
        &missing,
        "--k",
        "2",
        "--out",
        &ws.arg("c.txt"),
    ]);
    assert_eq!(error_kind(&out), "missing_file");

    let ragged = ws.write("ragged.txt", "1,2\n3,4\n5\n");
    let out = probi(&["synth", "--points", &ragged, "--out", &ws.arg("n.jsonl")]);
    assert_eq!(error_kind(&out), "dimension_mismatch");
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["line"], 3);

    let bad_p = ws.write(
        "bad.jsonl",
        "{\"id\":\"a\",\"weight\":1,\"realizations\":[{\"p\":0.8,\"x\":[0]},{\"p\":0.8,\"x\":[1]}]}\n",
    );
    let out = probi(&[
        "coreset",
        "--nodes",
        &bad_p,
        "--out",
        &ws.arg("c.jsonl"),
        "--k",
        "1",
    ]);
    assert_eq!(error_kind(&out), "invalid_probability");

    let good = ws.write(
        "good.jsonl",
        "{\"id\":\"a\",\"realizations\":[{\"p\":1,\"x\":[0,1]}]}\n",
    );
    let out = probi(&[
        "solve",
        "--input",
        &good,
        "--k",
        "0",
        "--out",
        &ws.arg("c.txt"),
    ]);
    assert_eq!(error_kind(&out), "invalid_argument");

    let centers = ws.write("c3.txt", "1,2,3\n");
    let out = probi(&[
        "eval",
        "--nodes",
        &good,
        "--centers",
        &centers,
        "--out",
        &ws.arg("r.json"),
    ]);
    assert_eq!(error_kind(&out), "dimension_mismatch");

    let out = probi(&["solve", "--k", "1"]);
    assert_eq!(error_kind(&out), "usage");
}
