use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use uncertain::format::CircuitJson;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uncertain"))
        .args(args)
        .env_remove("UNCERTAIN_MAX_EVENTS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

#[test]
fn manning_prints_the_rounded_probability() {
    let out = ok(&[
        "prob",
        &data("manning.json"),
        "exists x. Label(x, Manning)",
        "--oracle",
        "--exact-rational",
    ]);
    assert_eq!(out, "0.9\nexact: 9/10\noracle: 0.9\n");
}

#[test]
fn trips_departure_agrees_with_the_oracle() {
    let out = ok(&["prob", &data("trips.json"), "Trip(CDG, MEL)", "--oracle"]);
    assert_eq!(out.lines().next(), Some("0.5"));
    assert!(out.contains("oracle: 0.5"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"schema\": [").unwrap();
    let o = run(&["prob", bad.to_str().unwrap(), "exists x. R(x)"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["prob", &data("path.json"), "exists x. Nope(x)"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "decompose",
        &dir.path().join("missing.json").to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn guards_exit_1() {
    let q = "exists x y z. R(x, y) & R(y, z)";
    let o = run(&["prob", &data("path.json"), q, "--max-bag", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("message passing"));
    let o = run(&[
        "--max-events",
        "4",
        "prob",
        &data("path.json"),
        q,
        "--oracle",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_uncertain"))
        .args(["prob", &data("path.json"), q, "--oracle"])
        .env("UNCERTAIN_MAX_EVENTS", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["decompose", &data("path.json"), "--exact"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["poset", "count", &data("antichain4.json"), "--cap", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn path_decomposes_with_width_1() {
    let v: Value = serde_json::from_str(&ok(&["decompose", &data("path.json")])).unwrap();
    assert_eq!(v["width"], 1);
    assert!(ok(&["decompose", &data("path.json"), "--dot"]).starts_with("graph decomposition {"));
}

#[test]
fn poset_commands() {
    assert_eq!(ok(&["poset", "count", &data("antichain4.json")]), "24\n");
    let dir = tempfile::tempdir().unwrap();
    let union = dir.path().join("union.json");
    std::fs::write(
        &union,
        ok(&[
            "poset",
            "union",
            &data("chain_ab.json"),
            &data("chain_cd.json"),
        ]),
    )
    .unwrap();
    assert_eq!(ok(&["poset", "count", union.to_str().unwrap()]), "6\n");
    let ext: Vec<Vec<Vec<String>>> =
        serde_json::from_str(&ok(&["poset", "extensions", union.to_str().unwrap()])).unwrap();
    assert_eq!(ext.len(), 6);
    let member = |seq: &str| ok(&["poset", "member", union.to_str().unwrap(), seq]);
    assert_eq!(
        member(r#"[["a","x"],["c","x"],["b","y"],["d","y"]]"#).trim(),
        "true"
    );
    assert_eq!(
        member(r#"[["b","y"],["a","x"],["c","x"],["d","y"]]"#),
        "false\n"
    );
    let proj = dir.path().join("proj.json");
    std::fs::write(
        &proj,
        ok(&[
            "poset",
            "project",
            union.to_str().unwrap(),
            "--columns",
            "0",
        ]),
    )
    .unwrap();
    let ext: Vec<Vec<Vec<String>>> =
        serde_json::from_str(&ok(&["poset", "extensions", proj.to_str().unwrap()])).unwrap();
    assert!(ext.iter().all(|s| s.iter().all(|l| l.len() == 1)));
    let prod = ok(&[
        "poset",
        "product",
        &data("chain_ab.json"),
        &data("chain_cd.json"),
    ]);
    let prod_path = dir.path().join("prod.json");
    std::fs::write(&prod_path, prod).unwrap();
    assert_eq!(ok(&["poset", "count", prod_path.to_str().unwrap()]), "2\n");
}

#[test]
fn manning_scopes_and_worlds() {
    let v: Value = serde_json::from_str(&ok(&["prxml", "scopes", &data("manning.json")])).unwrap();
    assert_eq!(v["max_node_scope"], 1);
    assert_eq!(
        v["event_scopes"]["e_Jane"],
        serde_json::json!([5, 6, 7, 8, 9, 10])
    );
    let worlds: Vec<Value> =
        serde_json::from_str(&ok(&["prxml", "worlds", &data("manning.json")])).unwrap();
    let total: f64 = worlds.iter().map(|w| w["prob"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let enc: Value =
        serde_json::from_str(&ok(&["prxml", "encode", &data("manning.json")])).unwrap();
    assert!(!enc["facts"].as_array().unwrap().is_empty());
}

#[test]
fn report_is_deterministic_apart_from_timings() {
    let q = "exists x y z. R(x, y) & R(y, z)";
    let report = || {
        let mut v: Value = serde_json::from_str(
            ok(&["prob", &data("path.json"), q, "--report", "-"])
                .split_once('\n')
                .unwrap()
                .1,
        )
        .unwrap();
        assert!(v["timings"]["lineage_ms"].is_number());
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    let a = report();
    assert_eq!(a, report());
    assert_eq!(a["instance_width"], 1);
    assert_eq!(a["construction"], "monotone");
}

#[test]
fn dot_and_lineage_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("lineage.dot");
    let report = dir.path().join("report.json");
    ok(&[
        "prob",
        &data("trips.json"),
        "exists x. Trip(x, PDX)",
        "--dot",
        dot.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(std::fs::read_to_string(&dot)
        .unwrap()
        .starts_with("digraph"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((v["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let text = ok(&["lineage", &data("trips.json"), "exists x. Trip(x, PDX)"]);
    let c: CircuitJson = serde_json::from_str(&text).unwrap();
    let back =
        serde_json::to_string_pretty(&CircuitJson::from_circuit(&c.to_circuit().unwrap())).unwrap();
    assert_eq!(back.trim(), text.trim());
    assert!(ok(&[
        "lineage",
        &data("trips.json"),
        "!(exists x. Trip(x, PDX))",
        "--dot"
    ])
    .starts_with("digraph"));
}
