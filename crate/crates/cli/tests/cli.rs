//! End-to-end tests of the binary: exit codes, file handling, and the
//! reference examples each subcommand must reproduce.

use std::path::Path;
use std::process::{Command, Output};

fn npoint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npoint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_pair(dir: &Path, n: usize) -> (String, String) {
    let f = dir.join("f.json");
    let g = dir.join("g.json");
    let run = |part: &str, path: &Path| {
        let out = npoint(&[
            "catalog",
            "gauged",
            "--n",
            &n.to_string(),
            "--part",
            part,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "catalog gauged failed: {out:?}");
    };
    run("f", &f);
    run("g", &g);
    (f.to_str().unwrap().into(), g.to_str().unwrap().into())
}

#[test]
fn compare_reproduces_the_gauged_gap() {
    let dir = tempfile::tempdir().unwrap();
    let (f, g) = write_pair(dir.path(), 5);
    let report_path = dir.path().join("report.json");
    let out = npoint(&[
        "compare",
        &f,
        &g,
        "--gauged",
        "--seed",
        "3",
        "--json",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("1.78885438"), "quotient missing from: {text}");
    assert!(
        text.contains("StrictGapWitness"),
        "certificate missing from: {text}"
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["certificate"], "StrictGapWitness");
    assert_eq!(report["n"], 5);
    assert!((report["d_quotient"].as_f64().unwrap() - 1.7888543819998317).abs() < 1e-9);
}

#[test]
fn compare_certifies_negative_type_metric_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, seed) in [(&a, "4"), (&b, "5")] {
        assert!(npoint(&[
            "catalog",
            "random",
            "--n",
            "4",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap()
        ])
        .status
        .success());
    }
    let out = npoint(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("EqualityByNegativeType"));
}

#[test]
fn compare_rejects_non_metric_without_gauged_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (f, g) = write_pair(dir.path(), 4);
    let out = npoint(&["compare", &f, &g]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("not a metric"), "unexpected stderr: {err}");
}

#[test]
fn negtype_rejects_k32_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let k32 = dir.path().join("k32.json");
    assert!(npoint(&["catalog", "k32", "--out", k32.to_str().unwrap()])
        .status
        .success());
    let out = npoint(&["negtype", k32.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("NOT negative type"));
    assert!(text.contains("witness"));
}

#[test]
fn embed_power_half_on_four_point_metric() {
    let dir = tempfile::tempdir().unwrap();
    let metric = dir.path().join("m.json");
    assert!(npoint(&[
        "catalog",
        "random",
        "--n",
        "4",
        "--seed",
        "12",
        "--out",
        metric.to_str().unwrap()
    ])
    .status
    .success());
    let points = dir.path().join("points.json");
    let out = npoint(&[
        "embed",
        metric.to_str().unwrap(),
        "--power",
        "0.5",
        "--out",
        points.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let embedding: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&points).unwrap()).unwrap();
    let dim = embedding["dim"].as_u64().unwrap();
    assert!(
        dim <= 3,
        "4-point sqrt metric must embed in dim <= 3, got {dim}"
    );
}

#[test]
fn embed_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let k32 = dir.path().join("k32.json");
    assert!(npoint(&["catalog", "k32", "--out", k32.to_str().unwrap()])
        .status
        .success());
    let out = npoint(&["embed", k32.to_str().unwrap(), "--power", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not embeddable"));
}

#[test]
fn catalog_outputs_parse_as_matrix_json() {
    for args in [
        vec!["catalog", "k32"],
        vec!["catalog", "mr", "--r", "5"],
        vec!["catalog", "gauged", "--n", "3"],
        vec!["catalog", "random", "--n", "4", "--seed", "1"],
        vec!["catalog", "cloud", "--n", "4", "--dim", "2", "--seed", "1"],
    ] {
        let out = npoint(&args);
        assert!(out.status.success(), "{args:?}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        let n = v["n"].as_u64().unwrap() as usize;
        assert_eq!(v["entries"].as_array().unwrap().len(), n);
    }
    // the theorem hypothesis r > 4 is enforced
    assert_eq!(
        npoint(&["catalog", "mr", "--r", "4"]).status.code(),
        Some(2)
    );
}

#[test]
fn search_reports_are_reproducible_and_control_fires() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = npoint(&[
            "search",
            "--n",
            "5",
            "--trials",
            "6",
            "--seed",
            "9",
            "--control",
            "--restarts",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
        assert!(stdout(&out).contains("witnesses  : 1"));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same seed must produce byte-identical reports"
    );
}

#[test]
fn outputs_refuse_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let args = ["catalog", "k32", "--out", path.to_str().unwrap()];
    assert!(npoint(&args).status.success());
    let again = npoint(&args);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let forced = npoint(&["catalog", "k32", "--out", path.to_str().unwrap(), "--force"]);
    assert!(forced.status.success());
}

#[test]
fn missing_file_is_a_usage_error() {
    let out = npoint(&["negtype", "/nonexistent/matrix.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_inputs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(&path, "0,1,1\n1,0,1\n1,1,0\n").unwrap();
    let out = npoint(&["negtype", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("negative type"));
}
