// SPDX-License-Identifier: MIT
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scg_core::{fixtures, FtDagTemplate};
use tempfile::TempDir;

fn scg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scg"))
        .args(args)
        .env_remove("SCG_TEMPLATE_CAP")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn graph_file(dir: &TempDir, name: &str) -> PathBuf {
    write(
        dir,
        &format!("{name}.json"),
        &fixtures::by_name(name).unwrap().to_json(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identify_reports_condition_c() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "two_cycle_confounded");
    let o = scg(&[
        "identify",
        "--graph",
        s(&g),
        "--treatment",
        "X",
        "--outcome",
        "Y",
        "--gamma",
        "1",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o)["verdict"], "CondC");

    let o = scg(&[
        "identify",
        "--graph",
        s(&g),
        "--treatment",
        "X",
        "--outcome",
        "Y",
        "--gamma",
        "2",
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout(&o)["verdict"], "NotIdentifiable");
}

#[test]
fn check_names_the_item_or_the_violation() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "confounded_chain");
    let base = [
        "check",
        "--graph",
        s(&g),
        "--treatment",
        "X",
        "--outcome",
        "Y",
        "--gamma",
        "1",
    ];
    let ok = scg(&[&base[..], &["--set", r#"[["X",-2],["W",-2],["W",-1]]"#]].concat());
    assert_eq!(code(&ok), 0);
    assert!(String::from_utf8_lossy(&ok.stderr).contains("item A.1"));
    assert_eq!(stdout(&ok)["item"], "A.1");
    assert!(stdout(&ok)["estimand"]["formula"].as_str().unwrap().starts_with("sum_"));

    let bad = scg(&[&base[..], &["--set", r#"[["Y",0]]"#]].concat());
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("possible descendant of treatment"));
}

#[test]
fn input_errors_exit_four() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "single_edge");
    let broken = write(&dir, "broken.json", "{\"nodes\": [\"A\"], \"edges\": [[\"A\", \"B\"]]}");
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "identify",
            "--graph",
            s(&broken),
            "--treatment",
            "A",
            "--outcome",
            "A",
            "--gamma",
            "0",
        ],
        vec![
            "identify",
            "--graph",
            s(&g),
            "--treatment",
            "Q",
            "--outcome",
            "Y",
            "--gamma",
            "0",
        ],
        vec!["identify", "--graph", s(&g), "--treatment", "X", "--outcome", "Y"],
        vec![
            "identify",
            "--graph",
            "/nonexistent.json",
            "--treatment",
            "X",
            "--outcome",
            "Y",
            "--gamma",
            "0",
        ],
        vec![
            "check",
            "--graph",
            s(&g),
            "--treatment",
            "X",
            "--outcome",
            "Y",
            "--gamma",
            "0",
            "--set",
            "not json",
        ],
    ];
    for args in cases {
        let o = scg(&args);
        assert_eq!(code(&o), 4, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn qopt_and_sets() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "confounded_chain");
    let q = ["--graph", s(&g), "--treatment", "X", "--outcome", "Y", "--gamma", "1"];
    let o = scg(&[&["qopt"][..], &q[..]].concat());
    assert_eq!(code(&o), 0);
    let v = stdout(&o);
    assert_eq!(v["qopt"], serde_json::json!([["X", -2], ["W", -1], ["W", 0]]));
    let o = scg(&[&["sets"][..], &q[..], &["--format", "csv"]].concat());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("name,set\n"));
    assert!(text.contains("a1,"));
}

#[test]
fn unroll_lists_the_edges() {
    let dir = TempDir::new().unwrap();
    let g = fixtures::single_edge();
    let t = FtDagTemplate::from_named(&g, 1, &[("X", "Y", &[1])]).unwrap();
    let tf = write(&dir, "t.json", &t.to_json());
    let o = scg(&["unroll", "--template", s(&tf), "--lo", "-2"]);
    assert_eq!(code(&o), 0);
    let v = stdout(&o);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 6);
    assert_eq!(v["edges"], serde_json::json!([["X@-2", "Y@-1"], ["X@-1", "Y@0"]]));
}

#[test]
fn over_cap_exits_five_and_honours_the_environment() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "two_cycle_confounded");
    let args = [
        "probe",
        "--graph",
        s(&g),
        "--treatment",
        "X",
        "--outcome",
        "Y",
        "--gamma",
        "1",
    ];
    let o = scg(&[&args[..], &["--template-cap", "1"]].concat());
    assert_eq!(code(&o), 5);
    let o = Command::new(env!("CARGO_BIN_EXE_scg"))
        .args(args)
        .env("SCG_TEMPLATE_CAP", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 5);
    assert_eq!(code(&scg(&args)), 0);
}

#[test]
fn validate_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.csv");
    let args = [
        "validate",
        "--n-graphs",
        "10",
        "--min-nodes",
        "3",
        "--max-nodes",
        "4",
        "--seed",
        "3",
    ];
    assert_eq!(code(&scg(&[&args[..], &["--out", s(&a)]].concat())), 0);
    let first = std::fs::read(&a).unwrap();
    assert_eq!(code(&scg(&[&args[..], &["--out", s(&a)]].concat())), 0);
    assert_eq!(first, std::fs::read(&a).unwrap());
    assert_eq!(
        code(&scg(&[&args[..], &["--out", s(&b), "--format", "csv"]].concat())),
        0
    );
    assert_eq!(std::fs::read_to_string(&b).unwrap().lines().count(), 11);
}

#[test]
fn validate_flags_counterexamples_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = scg(&["validate", "--n-graphs", "200", "--seed", "7", "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let found = v["counterexamples"].as_array().unwrap();
    assert!(!found.is_empty());
    assert!(found.iter().all(|c| c["source"] == "canonical:B.2-core"));
    let o = scg(&[
        "validate",
        "--n-graphs",
        "200",
        "--seed",
        "7",
        "--horizon",
        "floor",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn simulate_emits_data_and_experiments() {
    let dir = TempDir::new().unwrap();
    let g = fixtures::confounded_chain();
    let t = FtDagTemplate::from_named(
        &g,
        1,
        &[
            ("W", "X", &[0, 1]),
            ("X", "Y", &[0, 1]),
            ("W", "W", &[1]),
            ("X", "X", &[1]),
        ],
    )
    .unwrap();
    let tf = write(&dir, "t.json", &t.to_json());
    let o = scg(&[
        "simulate",
        "--template",
        s(&tf),
        "--replicates",
        "3",
        "--horizon",
        "4",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 3 * 4 * 3);

    let args = [
        "simulate",
        "--template",
        s(&tf),
        "--treatment",
        "X",
        "--outcome",
        "Y",
        "--gamma",
        "1",
        "--n",
        "300",
        "--reps",
        "10",
        "--seed",
        "2",
    ];
    let o = scg(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout(&o);
    assert!(v["sets"]["qopt"]["empirical_variance"].as_f64().unwrap() > 0.0);
    assert_eq!(scg(&args).stdout, o.stdout);

    let o = scg(&["simulate", "--template", s(&tf), "--outcome", "Y"]);
    assert_eq!(code(&o), 4);
}
