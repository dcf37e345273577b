use std::process::{Command, Output};

use serde_json::Value;

fn pascal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pascal")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn gamma_graph_json() {
    let o = pascal(&["graph", "build", "--family", "gamma", "--level", "1"]);
    assert!(o.status.success());
    let g = json(&o);
    assert_eq!(g["level"], 1);
    assert_eq!(g["vertices"].as_array().unwrap().len(), 12);
    assert_eq!(g["edges"].as_array().unwrap().len(), 18);
    let v = &g["vertices"][0];
    for key in ["id", "address", "side", "boundary"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn dot_export_marks_boundary() {
    let o = pascal(&["graph", "export-dot", "--family", "triangle", "--level", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("graph"));
    assert_eq!(s.matches("doublecircle").count(), 3);
    let o = pascal(&["--format", "dot", "graph", "build", "--family", "pascal-ball", "--level", "2"]);
    assert_eq!(stdout(&o), stdout(&pascal(&["graph", "export-dot", "--family", "pascal-ball", "--level", "2"])));
}

#[test]
fn oversized_graph_is_a_usage_error() {
    let o = pascal(&["graph", "build", "--family", "gamma", "--level", "9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pascal(&["verify", "--suite", "no-such-suite"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pascal(&["graph", "frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn charpoly_of_k4() {
    let o = pascal(&["spectra", "charpoly", "--family", "gamma", "--level", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[-3,-8,-6,0,1]") || json(&o).to_string().contains("-8"));
}

#[test]
fn eigenspace_dimensions() {
    let o = pascal(&["--format", "json", "spectra", "eigenspace", "--family", "gamma", "--level", "2", "--x", "-2"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["dimension"], 7);
    assert_eq!(v["vectors"].as_array().unwrap().len(), 7);
    assert_eq!(v["vectors"][0].as_array().unwrap().len(), 36);
    let o = pascal(&["--format", "json", "spectra", "eigenspace", "--family", "gamma", "--level", "1", "--x", "1,1,2,13"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["dimension"], 0);
}

#[test]
fn julia_commands() {
    let o = pascal(&["julia", "point", "--code", "3"]);
    assert!(o.status.success());
    assert!((json(&o)["value"].as_f64().unwrap() - 3.0).abs() < 1e-15);
    let o = pascal(&["--format", "csv", "julia", "preimages", "--of", "0", "--depth", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 8);
    let o = pascal(&["julia", "member", "--x", "0.5"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["member"], false);
}

#[test]
fn moment_tables_have_one_row_per_order() {
    let o = pascal(&["measure", "compare-phi0", "--max", "12"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "n,graph,transfer,rel_err,depth");
    assert_eq!(lines.len(), 14);
    assert!(lines[1].starts_with("0,2,"));
    assert!(lines[2].starts_with("1,-2,"));
    assert!(lines[3].starts_with("2,6,"));

    let o = pascal(&["compact", "moments-e1", "--count", "8", "--v", "1,-1,0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 10);

    let o = pascal(&["sierpinski", "moments-theta0", "--count", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("0,4,"));
}

#[test]
fn compact_model_json_keys() {
    let o = pascal(&["compact", "model", "--level", "2", "--out", "json"]);
    assert!(o.status.success());
    let m = json(&o);
    assert!(m.get("atoms").is_some());
    assert!(m.get("adjacency").is_some());
    let atoms = m["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 9 - 3 + 6);
}

#[test]
fn compact_charpoly_level_2() {
    let o = pascal(&["compact", "charpoly", "--symmetry", "invariant", "--level", "2"]);
    assert!(o.status.success());
    let r = json(&o);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["report"]["computed"], "X^2 - 3X");
    assert_eq!(r["report"]["factored"], "(X - 3) (X)");
}

#[test]
fn erratum_candidates_do_not_fail() {
    let o = pascal(&["verify", "--suite", "q0-constant"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["status"], "erratum-candidate");
    assert_eq!(r["checks"][0]["status"], "erratum-candidate");
    assert_eq!(r["checks"][0]["values"]["report"]["beta"], "-1/2");
}

#[test]
fn verify_is_deterministic() {
    let a = pascal(&["verify", "--suite", "decimation", "--level", "2"]);
    let b = pascal(&["verify", "--suite", "decimation", "--level", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["status"], "pass");
}

#[test]
fn seeded_probes_are_logged_and_reproducible() {
    let a = pascal(&["--seed", "7", "verify", "--suite", "decimation", "--level", "2"]);
    let b = pascal(&["--seed", "7", "verify", "--suite", "decimation", "--level", "2"]);
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    let probes: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["values"]["seed"] == 7).collect();
    assert_eq!(probes.len(), 3);
    assert!(probes.iter().all(|c| c["status"] == "pass" && c["values"]["vector"].is_array()));
}

#[test]
fn csv_verify_output() {
    let o = pascal(&["--format", "csv", "verify", "--suite", "plane", "--max-level", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.lines().next().unwrap().contains("status"));
    assert_eq!(s.lines().count(), 1 + 2);
}

#[test]
fn out_file_is_written() {
    let path = std::env::temp_dir().join(format!("pascal-cli-test-{}.json", std::process::id()));
    let o = pascal(&["graph", "build", "--family", "triangle", "--level", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let g: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(g["vertices"].as_array().unwrap().len(), 3);
}
