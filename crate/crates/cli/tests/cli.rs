//! End-to-end CLI tests: exit-code contract, deterministic reports,
//! structured diagnostics, file outputs.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-t"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn criterion_exit_codes() {
    let ok = run(&["criterion", "--steinberg", "3", "1", "1031"]);
    assert_eq!(ok.status.code(), Some(0));
    let refused = run(&["criterion", "--steinberg", "3", "1", "5"]);
    assert_eq!(refused.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&refused)).unwrap();
    assert_eq!(report["verdict"], "not_certified");
    assert!(report["failed_inequality"]
        .as_str()
        .unwrap()
        .contains("threshold"));
}

#[test]
fn errors_emit_structured_diagnostics() {
    let out = run(&["criterion", "--scheme", "/nonexistent/scheme.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let diag: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert!(diag["code"].is_string());
    assert!(diag["message"].is_string());
    assert!(diag["context"].is_array());

    // A domain error carries its module error code.
    let out = run(&["group", "build", "--kind", "heisenberg", "--q", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let diag: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(diag["code"], "not_prime");
}

#[test]
fn golden_reports_are_byte_identical() {
    for args in [
        vec!["criterion", "--steinberg", "3", "1", "1031", "--seed", "42"],
        vec![
            "angle",
            "report",
            "--group",
            "heisenberg",
            "--q",
            "3",
            "--seed",
            "42",
        ],
        vec![
            "expander",
            "--n",
            "3",
            "--q",
            "2",
            "--k",
            "1",
            "--seed",
            "42",
            "--restarts",
            "4",
        ],
    ] {
        let first = run(&args);
        let second = run(&args);
        assert_eq!(first.status.code(), second.status.code(), "{args:?}");
        assert_eq!(stdout_str(&first), stdout_str(&second), "{args:?}");
        assert!(!first.stdout.is_empty());
    }
}

#[test]
fn out_flag_writes_the_same_bytes_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let direct = run(&["criterion", "--steinberg", "3", "1", "1031", "--seed", "7"]);
    let to_file = bin()
        .args(["criterion", "--steinberg", "3", "1", "1031", "--seed", "7"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout_str(&direct));
    assert!(!dir.path().join("report.tmp").exists());
}

#[test]
fn floats_are_rendered_with_seventeen_digits() {
    let out = run(&["criterion", "--steinberg", "3", "1", "1031"]);
    let text = stdout_str(&out);
    assert!(text.contains("\"threshold\":4.7619047619047616e-2"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let out_path = dir.path().join("from_config.json");
    std::fs::write(
        &config,
        format!("seed = 42\nout = {:?}\n", out_path.display()),
    )
    .unwrap();
    let out = bin()
        .args(["criterion", "--steinberg", "3", "1", "1031"])
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_path.exists());

    // Unknown keys are rejected.
    std::fs::write(&config, "sed = 42\n").unwrap();
    let out = bin()
        .args(["criterion", "--steinberg", "3", "1", "1031"])
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn group_build_then_custom_angle_report_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let group_path = dir.path().join("d8.json");
    let built = bin()
        .args(["group", "build", "--kind", "dihedral", "--m", "4"])
        .arg("--out")
        .arg(&group_path)
        .output()
        .unwrap();
    assert_eq!(built.status.code(), Some(0));
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&group_path).unwrap()).unwrap();
    assert_eq!(table["order"], 8);

    let custom = bin()
        .args([
            "angle", "report", "--group", "custom", "--k1", "s", "--k2", "t",
        ])
        .arg("--file")
        .arg(&group_path)
        .output()
        .unwrap();
    let builtin = run(&["angle", "report", "--group", "dihedral", "--m", "4"]);
    assert_eq!(custom.status.code(), Some(0));
    assert_eq!(stdout_str(&custom), stdout_str(&builtin));
}

#[test]
fn angle_dump_matrix_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("defect.csv");
    let out = bin()
        .args(["angle", "report", "--group", "sym"])
        .arg("--dump-matrix")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 6);
}

fn write_family(path: &Path, family: &serde_json::Value) {
    std::fs::write(path, serde_json::to_string_pretty(family).unwrap()).unwrap();
}

#[test]
fn iterate_certifies_coordinate_planes_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("planes.json");
    write_family(
        &path,
        &serde_json::json!({
            "space": {"dim": 3, "p": 2},
            "projections": [
                [[1, 0, 0], [0, 1, 0], [0, 0, 0]],
                [[0, 0, 0], [0, 1, 0], [0, 0, 1]],
            ],
        }),
    );
    let out = bin()
        .args(["iterate", "--max-n", "80", "--tol", "1e-13"])
        .arg("--family")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(cert["mode"], "certified");
    assert_eq!(cert["r_prime"].as_f64().unwrap(), 0.5);
    assert_eq!(cert["c_prime"].as_f64().unwrap(), 1.0);
    assert!(cert["max_violation"].as_f64().unwrap() <= 1e-10);
    assert_eq!(cert["common_image_rank_match"], true);
}

#[test]
fn iterate_without_meets_on_lp_space_is_observe_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oblique.json");
    // Two rank-1 projections on an l^3 space; no meets supplied.
    write_family(
        &path,
        &serde_json::json!({
            "space": {"dim": 2, "p": 3},
            "projections": [
                [[1, 0], [0, 0]],
                [[0.5, 0.5], [0.5, 0.5]],
            ],
        }),
    );
    let out = bin()
        .args(["iterate", "--max-n", "200"])
        .arg("--family")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let cert: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(cert["mode"], "observe_only");
    assert!(cert["max_violation"].is_null());
}

#[test]
fn kms_and_links_sources() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("triangle.json");
    std::fs::write(
        &graph_path,
        serde_json::json!({"vertices": 3, "edges": [[1, 2], [2, 3], [1, 3]]}).to_string(),
    )
    .unwrap();
    let out = bin()
        .args(["criterion"])
        .arg("--kms")
        .arg(&graph_path)
        .arg("1009")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let links_path = dir.path().join("links.json");
    std::fs::write(
        &links_path,
        serde_json::json!([
            {"pair": [1, 2], "eta2": 0.9, "v1_size": 10, "v2_size": 12},
        ])
        .to_string(),
    )
    .unwrap();
    let out = bin()
        .args(["criterion", "--n", "2"])
        .arg("--links")
        .arg(&links_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((report["cos_max_hilbert"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn expander_exports_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let csv = dir.path().join("g.csv");
    let json = dir.path().join("g.json");
    let out = bin()
        .args([
            "expander",
            "--n",
            "3",
            "--q",
            "2",
            "--k",
            "1",
            "--restarts",
            "2",
        ])
        .arg("--export-dot")
        .arg(&dot)
        .arg("--export-csv")
        .arg(&csv)
        .arg("--export-json")
        .arg(&json)
        .env("ROBUST_T_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["order"], 168);
    assert!(report["gap"].as_f64().unwrap() > 0.0);
    assert!(report["c_l2"].as_f64().unwrap() > 0.0);

    // CSV: one line per edge, "u,v" with u < v.
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_text.lines().count(), 168 * 3 / 2);
    for line in csv_text.lines() {
        let (a, b) = line.split_once(',').expect("two fields");
        let (a, b): (u32, u32) = (a.parse().unwrap(), b.parse().unwrap());
        assert!(a < b);
    }

    // DOT grammar smoke test: every line is a header, node, edge or
    // closing brace.
    let dot_text = std::fs::read_to_string(&dot).unwrap();
    let mut lines = dot_text.lines();
    assert_eq!(lines.next(), Some("graph cayley {"));
    for line in lines {
        let node = line.trim_start();
        let ok = node == "}"
            || (node.starts_with('v') && node.contains("[label=\"") && node.ends_with("\"];"))
            || (node.starts_with('v') && node.contains(" -- ") && node.ends_with(';'));
        assert!(ok, "unexpected DOT line: {line:?}");
    }

    // JSON export round-trips through the vertex count.
    let graph: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(graph["order"], 168);
    assert_eq!(graph["vertices"].as_array().unwrap().len(), 168);
}

#[test]
fn expander_rejects_cap_violation() {
    let out = run(&[
        "expander",
        "--n",
        "3",
        "--q",
        "2",
        "--k",
        "2",
        "--cayley-cap",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let diag: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(diag["code"], "vertex_cap_exceeded");
}
