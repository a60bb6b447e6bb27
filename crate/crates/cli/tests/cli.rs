use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use grm::corrector::plant_errors;
use grm::generic::BlockProductSpec;
use grm::oracle::random_codeword;
use grm::stats::stream_rng;
use grm::{build_spec, derive_params, Field};
use serde_json::Value;
use tempfile::TempDir;

fn grm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grm"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn f4() -> Field {
    Field::new(2, 2, None).unwrap()
}

#[test]
fn field_check() {
    for name in ["2^1", "2^2", "3^2", "2^4"] {
        let v = json(&grm(&["field", "--field", name]));
        assert_eq!(v["axioms_ok"], true, "{name}");
    }
    assert_eq!(grm(&["field", "--field", "4^1"]).status.code(), Some(3));
}

#[test]
fn spec_and_report() {
    let v = json(&grm(&["spec", "--d", "4"]));
    assert_eq!(
        (v["s"].as_u64(), v["t"].as_u64(), v["supp_h"].as_u64()),
        (Some(2), Some(4), Some(2304))
    );
    let v = json(&grm(&["report", "--d", "3"]));
    assert_eq!(v["supp_h"].as_u64(), Some(256));
    assert_eq!(v["full_flat"].as_u64(), Some(256));
    assert_eq!(
        grm(&["spec", "--d", "4", "--t", "2"]).status.code(),
        Some(3)
    );
}

#[test]
fn test_codeword_and_far_function() {
    let dir = TempDir::new().unwrap();
    let fs = f4();
    let code = random_codeword(&fs, 6, 3, 1);
    let path = write(&dir, "code.txt", &code.to_text());
    let args = [
        "test",
        "--d",
        "3",
        "--n",
        "6",
        "--fn",
        s(&path),
        "--trials",
        "200",
        "--seed",
        "5",
    ];
    let out = grm(&args);
    let v = json(&out);
    assert_eq!(v["rate"].as_f64(), Some(0.0));
    assert_eq!(v["seed"].as_u64(), Some(5));
    assert_eq!(grm(&args).stdout, out.stdout);

    let (bad, _) = plant_errors(&fs, &code, 40, &mut stream_rng(2, 0));
    let path = write(&dir, "bad.txt", &bad.to_text());
    let v = json(&grm(&[
        "test",
        "--d",
        "3",
        "--fn",
        s(&path),
        "--trials",
        "200",
    ]));
    assert!(v["rate"].as_f64().unwrap() > 0.0);

    let wrong_n = grm(&["test", "--d", "3", "--n", "5", "--fn", s(&path)]);
    assert_eq!(wrong_n.status.code(), Some(3));
}

#[test]
fn sweep_csv() {
    let out = grm(&[
        "sweep", "--d", "3", "--n", "5", "--deltas", "0,0.004", "--trials", "200", "--seed", "9",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("delta_target,"));
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[3], "0.000000");
    assert_eq!(first.last(), Some(&"9"));
    let again = grm(&[
        "sweep", "--d", "3", "--n", "5", "--deltas", "0,0.004", "--trials", "200", "--seed", "9",
    ]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn oracle_commands_and_budget_exit() {
    let dir = TempDir::new().unwrap();
    let fs = f4();
    let code = random_codeword(&fs, 2, 2, 3);
    let (bad, _) = plant_errors(&fs, &code, 1, &mut stream_rng(4, 0));
    let path = write(&dir, "f.txt", &bad.to_text());
    let v = json(&grm(&["oracle", "distance", "--fn", s(&path), "--d", "2"]));
    assert_eq!(v["errors"].as_u64(), Some(1));
    let v = json(&grm(&[
        "oracle",
        "degree",
        "--fn",
        s(&code_path(&dir, &code)),
    ]));
    assert!(v["degree"].as_u64().unwrap() <= 2);
    let out = grm(&[
        "oracle",
        "distance",
        "--fn",
        s(&path),
        "--d",
        "2",
        "--budget",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn code_path(dir: &TempDir, code: &grm::EvalTable) -> PathBuf {
    write(dir, "code.txt", &code.to_text())
}

#[test]
fn decode_writes_table() {
    let dir = TempDir::new().unwrap();
    let fs = f4();
    let code = random_codeword(&fs, 5, 3, 7);
    let (bad, _) = plant_errors(&fs, &code, 1, &mut stream_rng(8, 0));
    let path = write(&dir, "bad.txt", &bad.to_text());
    let out_path = dir.path().join("fixed.txt");
    let v = json(&grm(&[
        "decode",
        "--fn",
        s(&path),
        "--d",
        "3",
        "--seed",
        "1",
        "--out",
        s(&out_path),
    ]));
    assert_eq!(v["trace"]["verdict"], "codeword");
    let fixed = grm::EvalTable::parse(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(fixed, code);
}

#[test]
fn graph_commands() {
    let v = json(&grm(&[
        "graph", "phi", "--field", "2^1", "--n", "2", "--l", "1",
    ]));
    assert_eq!(v["injective"], true);
    assert_eq!(v["image_characterized"], true);
    let v = json(&grm(&[
        "graph",
        "expansion",
        "--field",
        "2^1",
        "--zoom",
        "in",
        "--n",
        "2",
        "--l",
        "1",
    ]));
    assert!(v["stats"]["phi"].as_f64().unwrap() > 0.0);

    let dir = TempDir::new().unwrap();
    let fs = f4();
    let (bad, _) = plant_errors(
        &fs,
        &random_codeword(&fs, 5, 3, 2),
        3,
        &mut stream_rng(3, 0),
    );
    let path = write(&dir, "bad.txt", &bad.to_text());
    let v = json(&grm(&[
        "graph",
        "shadow",
        "--fn",
        s(&path),
        "--d",
        "3",
        "--trials",
        "300",
    ]));
    assert!(v["shadow"]["mu_s"]["rate"].as_f64().unwrap() > 0.0);
    let v = json(&grm(&[
        "graph",
        "persistence",
        "--fn",
        s(&path),
        "--d",
        "3",
        "--trials",
        "100",
    ]));
    assert!(v["stay"]["rate"].as_f64().unwrap() > 0.0);
    let v = json(&grm(&[
        "graph",
        "zoom",
        "--fn",
        s(&path),
        "--d",
        "3",
        "--kind",
        "in",
        "--trials",
        "100",
    ]));
    assert!(v["density"]["trials"].as_u64().unwrap() > 0);
}

#[test]
fn generic_matches_reed_muller() {
    let dir = TempDir::new().unwrap();
    let fs = f4();
    let spec = build_spec(&fs, derive_params(&fs, 3, None).unwrap()).unwrap();
    let spec_path = write(
        &dir,
        "spec.txt",
        &BlockProductSpec::reed_muller(&spec).to_text(),
    );
    let (bad, _) = plant_errors(
        &fs,
        &random_codeword(&fs, 5, 3, 2),
        3,
        &mut stream_rng(3, 0),
    );
    let path = write(&dir, "bad.txt", &bad.to_text());
    let generic = json(&grm(&[
        "generic",
        "test",
        "--spec",
        s(&spec_path),
        "--fn",
        s(&path),
        "--trials",
        "300",
    ]));
    assert_eq!(generic["queries"].as_u64(), Some(256));
    assert!(generic["rate"].as_f64().unwrap() > 0.0);
}
