use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbt"))
        .args(args)
        .env("ROT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json(p: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_echoes_options() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, out) = (path(dir.path(), "a.json"), path(dir.path(), "r.json"));
    assert!(rbt(&["example", "--name", "non_existence", "--out", &inst])
        .status
        .success());
    let o = rbt(&[
        "solve",
        "--model",
        "eulerian",
        "--instance",
        &inst,
        "--seed",
        "7",
        "--out",
        &out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = json(&out);
    assert_eq!(r["format"], 1);
    assert_eq!(r["options"]["seed"], 7);
    assert_eq!(r["options"]["model"], "eulerian");
}

#[test]
fn distance_masses_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, out) = (path(dir.path(), "d.json"), path(dir.path(), "r.json"));
    assert!(
        rbt(&["example", "--name", "distance", "--levels", "3", "--out", &inst])
            .status
            .success()
    );
    let o = rbt(&[
        "solve",
        "--model",
        "lagrangian",
        "--instance",
        &inst,
        "--delta",
        "1/8",
        "--out",
        &out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = json(&out);
    let plan = r["competitor"]["plan"].as_array().unwrap();
    let levels = [1, 2, 2, 3, 3, 3, 3];
    for (i, j) in levels.iter().enumerate() {
        let mass: f64 = plan
            .iter()
            .map(|p| p["sub_weights"][i].as_f64().unwrap())
            .sum();
        assert_eq!(mass, 0.5f64.powi(*j), "curve {i}");
    }
}

#[test]
fn oracle_size_guard_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, out) = (path(dir.path(), "l.json"), path(dir.path(), "o.json"));
    // two loops give 11 edges
    assert!(
        rbt(&["example", "--name", "limit", "--loops", "2", "--out", &inst])
            .status
            .success()
    );
    let o = rbt(&[
        "oracle",
        "--model",
        "eulerian",
        "--instance",
        &inst,
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("size guard"));
    assert!(!Path::new(&out).exists());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(rbt(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(rbt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        rbt(&["example", "--name", "nope", "--out", "x.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        rbt(&["solve", "--instance", "a", "--out", "b", "--delta", "1/0"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn missing_instance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbt(&["validate", "--instance", &path(dir.path(), "missing.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_energy_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "a.json");
    let report = path(dir.path(), "r.json");
    let svg = path(dir.path(), "r.svg");
    assert!(rbt(&["example", "--name", "non_existence", "--out", &inst])
        .status
        .success());
    let v = rbt(&["validate", "--instance", &inst]);
    assert!(v.status.success());
    let v: Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["ok"], true);
    assert!(rbt(&["solve", "--instance", &inst, "--out", &report])
        .status
        .success());
    let e = rbt(&["energy", "--instance", &inst, &report]);
    assert!(e.status.success());
    let e: Value = serde_json::from_slice(&e.stdout).unwrap();
    assert_eq!(e["energy"]["energy"], json(&report)["energy"]["energy"]);
    assert!(rbt(&["plot", "--instance", &inst, &report, "--svg", &svg])
        .status
        .success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains(r#"<g id="scenario-0""#) && text.contains(r#"<g id="scenario-1""#));
}

#[test]
fn verify_reports_the_phenomenon() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "v.json");
    let o = rbt(&["verify", "--name", "non_existence", "--out", &out]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = json(&out);
    assert_eq!(r["holds"], true);
    assert_eq!(r["name"], "non_existence");
}

#[test]
fn pipeline_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let inst = path(dir.path(), &format!("a{run}.json"));
        let report = path(dir.path(), &format!("r{run}.json"));
        let svg = path(dir.path(), &format!("r{run}.svg"));
        assert!(rbt(&["example", "--name", "non_existence", "--out", &inst])
            .status
            .success());
        let args = [
            "solve",
            "--model",
            "eulerian-oriented",
            "--instance",
            &inst,
            "--seed",
            "3",
            "--out",
            &report,
        ];
        assert!(rbt(&args).status.success());
        assert!(rbt(&["plot", "--instance", &inst, &report, "--svg", &svg])
            .status
            .success());
        outputs.push([inst, report, svg].map(|p| std::fs::read(p).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn plot_rejects_other_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "line.json");
    let doc = serde_json::json!({
        "format": 1,
        "dimension": 1,
        "vertices": [{"id": 0, "pos": [0.0]}, {"id": 1, "pos": [1.0]}],
        "edges": [{"id": 0, "u": 0, "v": 1}],
        "boundary": [{"vertex": 0, "mass": -1.0}, {"vertex": 1, "mass": 1.0}],
        "phi": {"kind": "power", "alpha": 0.5},
        "scenarios": [{"id": 0, "prob": 1.0, "edge_mask": [true]}],
        "payoff": {"kind": "constant", "value": 1.0}
    });
    std::fs::write(&inst, doc.to_string()).unwrap();
    assert!(
        rbt(&["validate", "--instance", &inst]).status.success(),
        "fixture must load"
    );
    let o = rbt(&[
        "plot",
        "--instance",
        &inst,
        "--svg",
        &path(dir.path(), "x.svg"),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
