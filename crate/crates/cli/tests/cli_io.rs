//! End-to-end checks of the command-line surface: file formats, sidecars,
//! and the exit-code contract (0 ok, 2 certification failure, 3 input
//! error, 4 resource/non-convergence).

use paraselect_core::fixtures::v_graph;
use paraselect_core::geom::{Point, PointCloud};
use paraselect_core::multimap::{DomainComplex, SetValue, SetValuedMap};
use paraselect_core::selection::VertexFunction;
use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_paraselect")
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("paraselect runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_v_graph(dir: &Path) {
    let (phi, g) = v_graph(21, 41);
    std::fs::write(dir.join("vgraph.json"), serde_json::to_string(&phi).unwrap()).unwrap();
    std::fs::write(dir.join("g.json"), serde_json::to_string(&g).unwrap()).unwrap();
}

#[test]
fn analyze_two_point_has_high_defect() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("two_point.json"),
        r#"{"dim": 1, "points": [[0.0], [1.0]]}"#,
    )
    .unwrap();
    let (code, stdout, _) = run_in(dir.path(), &["analyze", "--set", "two_point.json"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let alpha = report["result"]["report"]["alpha_hat"].as_f64().unwrap();
    assert!(alpha >= 0.95, "alpha_hat {alpha}");
}

#[test]
fn select_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_v_graph(dir.path());
    let (code, _, stderr) = run_in(
        dir.path(),
        &[
            "select",
            "--map",
            "vgraph.json",
            "--g",
            "g.json",
            "--gamma",
            "0.7",
            "--r0",
            "1.2",
            "--out",
            "trace.json",
            "--format",
            "csv",
        ],
    );
    assert_eq!(code, 0, "select failed: {stderr}");
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("iteration,max_residual,max_step,bound_gamma_n_r"));

    let (code, stdout, stderr) = run_in(
        dir.path(),
        &["verify", "--trace", "trace.json", "--map", "vgraph.json"],
    );
    assert_eq!(code, 0, "verify failed: {stderr}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["result"]["certified"], serde_json::Value::Bool(true));
}

#[test]
fn select_on_two_point_map_reports_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = PointCloud::from_scalars(&[0.0, 1.0]).unwrap();
    let domain = DomainComplex::grid_1d(3, 0.0, 1.0).unwrap();
    let phi = SetValuedMap::new(domain, vec![SetValue::Cloud(cloud); 3], 1).unwrap();
    let g = VertexFunction::new(vec![Point::scalar(0.5); 3]).unwrap();
    std::fs::write(dir.path().join("map.json"), serde_json::to_string(&phi).unwrap()).unwrap();
    std::fs::write(dir.path().join("g.json"), serde_json::to_string(&g).unwrap()).unwrap();
    let (code, _, _) = run_in(
        dir.path(),
        &[
            "select",
            "--map",
            "map.json",
            "--g",
            "g.json",
            "--gamma",
            "0.7",
            "--alpha",
            "0.5",
            "--r0",
            "0.55",
            "--out",
            "trace.json",
        ],
    );
    assert_eq!(code, 2);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.json")).unwrap())
            .unwrap();
    assert!(report["result"]["violation"].is_object());

    // The emitted trace replays to the same verdict.
    let (code, stdout, _) = run_in(
        dir.path(),
        &["verify", "--trace", "trace.json", "--map", "map.json"],
    );
    assert_eq!(code, 2);
    let verify: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(verify["result"]["certified"], serde_json::Value::Bool(false));
}

#[test]
fn demo_detects_discontinuity_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &[
            "demo-glue-failure",
            "--n-max",
            "50",
            "--step",
            "1e-4",
            "--out",
            "demo.json",
            "--format",
            "csv",
        ],
    );
    assert_eq!(code, 2, "stderr: {stderr}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo.json")).unwrap())
            .unwrap();
    let osc = report["result"]["naive"]["discontinuity_witness"]["oscillation"]
        .as_f64()
        .unwrap();
    assert!(osc >= 1.9);
    assert!(report["result"]["repaired"]["discontinuity_witness"].is_null());
    let csv = std::fs::read_to_string(dir.path().join("demo.csv")).unwrap();
    assert!(csv.starts_with("x,value"));
}

#[test]
fn glue_command_emits_chain_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (phi, g) = paraselect_core::fixtures::v_graph_shifted(11, 21, 2.5);
    std::fs::write(dir.path().join("map.json"), serde_json::to_string(&phi).unwrap()).unwrap();
    std::fs::write(dir.path().join("g.json"), serde_json::to_string(&g).unwrap()).unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &[
            "glue", "--map", "map.json", "--g", "g.json", "--beta", "2", "--gamma", "0.7",
            "--r0", "1.2", "--out", "glue.json",
        ],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("glue.json")).unwrap())
            .unwrap();
    assert_eq!(
        report["result"]["glue"]["certified"],
        serde_json::Value::Bool(true)
    );
    assert!(report["result"]["chain"]["levels"].as_array().unwrap().len() >= 2);
}

#[test]
fn checkps_rejects_non_strict_domination() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run_in(
        dir.path(),
        &["checkps", "--h", "0.5", "--H", "0.5", "--t-grid", "1"],
    );
    assert_eq!(code, 2);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["result"]["satisfied"], serde_json::Value::Bool(false));

    let (code, _, _) = run_in(
        dir.path(),
        &["checkps", "--h", "0.4", "--H", "0.5", "--t-grid", "0.5,1,2"],
    );
    assert_eq!(code, 0);
}

#[test]
fn functional_select_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    write_v_graph(dir.path());
    let (code, _, stderr) = run_in(
        dir.path(),
        &[
            "select",
            "--map",
            "vgraph.json",
            "--g",
            "g.json",
            "--h",
            "0.4",
            "--H",
            "0.5",
            "--r0",
            "1.2",
            "--out",
            "ftrace.json",
        ],
    );
    assert_eq!(code, 0, "stderr: {stderr}");

    // The functional trace replays through verify: the radius schedule is
    // regenerated from the stored h and H definitions.
    let (code, stdout, stderr) = run_in(
        dir.path(),
        &["verify", "--trace", "ftrace.json", "--map", "vgraph.json"],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["result"]["certified"], serde_json::Value::Bool(true));

    // Only one of the pair is an input error.
    let (code, _, _) = run_in(
        dir.path(),
        &[
            "select", "--map", "vgraph.json", "--g", "g.json", "--h", "0.4", "--r0", "1.2",
        ],
    );
    assert_eq!(code, 3);
}

#[test]
fn thread_cap_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("two_point.json"),
        r#"{"dim": 1, "points": [[0.0], [1.0]]}"#,
    )
    .unwrap();
    let out = std::process::Command::new(bin())
        .current_dir(dir.path())
        .env("PARASELECT_THREADS", "1")
        .args(["analyze", "--set", "two_point.json", "--out", "capped.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    // Same bytes as an uncapped run: parallelism never changes results.
    let (code, _, _) = run_in(
        dir.path(),
        &["analyze", "--set", "two_point.json", "--out", "free.json"],
    );
    assert_eq!(code, 0);
    let capped = std::fs::read(dir.path().join("capped.json")).unwrap();
    let free = std::fs::read(dir.path().join("free.json")).unwrap();
    assert_eq!(capped, free);
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["analyze", "--set", "missing.json"]);
    assert_eq!(code, 3);
    assert!(stderr.contains("error"));

    std::fs::write(dir.path().join("bad.json"), "{\"dim\": 1}").unwrap();
    let (code, _, _) = run_in(dir.path(), &["analyze", "--set", "bad.json"]);
    assert_eq!(code, 3);

    // Mismatched declared dimension.
    std::fs::write(
        dir.path().join("mismatch.json"),
        r#"{"dim": 2, "points": [[0.0], [1.0]]}"#,
    )
    .unwrap();
    let (code, _, _) = run_in(dir.path(), &["analyze", "--set", "mismatch.json"]);
    assert_eq!(code, 3);
}

#[test]
fn demo_resolution_error_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["demo-glue-failure", "--n-max", "50", "--step", "0.01"],
    );
    assert_eq!(code, 4, "stderr: {stderr}");
}

#[test]
fn hseries_and_profile_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run_in(
        dir.path(),
        &[
            "hseries", "--H", "0.5", "--t", "1", "--n-max", "8", "--out", "series.json",
            "--format", "csv",
        ],
    );
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert!(csv.starts_with("n,h_n,partial_sum"));

    std::fs::write(
        dir.path().join("two_point.json"),
        r#"{"dim": 1, "points": [[0.0], [1.0]]}"#,
    )
    .unwrap();
    let (code, _, _) = run_in(
        dir.path(),
        &[
            "profile",
            "--set",
            "two_point.json",
            "--radii",
            "0.6,2.0",
            "--out",
            "profile.json",
            "--format",
            "csv",
        ],
    );
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("r,h_hat"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("profile.json")).unwrap())
            .unwrap();
    let h0 = report["result"]["h_hat"][0].as_f64().unwrap();
    assert!((h0 - 0.5 / 0.6).abs() < 0.02, "profile at 0.6: {h0}");

    // SVG sidecar.
    let (code, _, _) = run_in(
        dir.path(),
        &[
            "profile",
            "--set",
            "two_point.json",
            "--radii",
            "0.6,1.0,2.0",
            "--out",
            "plot.json",
            "--format",
            "svg",
        ],
    );
    assert_eq!(code, 0);
    let svg = std::fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn sidecar_without_out_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run_in(
        dir.path(),
        &["hseries", "--H", "0.5", "--t", "1", "--format", "csv"],
    );
    assert_eq!(code, 3);
}
