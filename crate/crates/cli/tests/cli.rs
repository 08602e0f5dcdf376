use std::fs;
use std::process::{Command, Output};

fn zoll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zoll"))
        .args(args)
        .output()
        .expect("zoll runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn catalog_lists_every_example() {
    let o = zoll(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in [
        "flat_disk",
        "flat_band",
        "flat_moebius",
        "spherical_cap",
        "spherical_band",
        "euclidean_ball",
        "ellipse",
        "mapping_torus",
        "index_ladder",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn catalog_emits_a_manifold_manifest() {
    let o = zoll(&["catalog", "flat_band", "--param", "L=0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["name"], "flat_band");
    assert_eq!(v["annotations"]["half_length"], 0.5);
}

#[test]
fn analyze_flat_disk_exits_zero_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = zoll(&["analyze", "--example", "flat_disk", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "certified");
    assert_eq!(report["k"], 1);
    assert!(dir.path().join("soul.csv").is_file());
}

#[test]
fn certify_ellipse_is_an_expected_refutation() {
    let o = zoll(&["certify", "--example", "ellipse"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Refuted"));
}

#[test]
fn too_few_launches_is_a_usage_error() {
    let o = zoll(&["certify", "--example", "flat_disk", "--launches", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N below certification minimum"));
}

#[test]
fn unknown_example_is_a_usage_error() {
    let o = zoll(&["certify", "--example", "torus_knot"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown catalog name"));
}

#[test]
fn tightened_tolerance_flags_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&[
        "certify",
        "--example",
        "flat_band",
        "--seed",
        "4",
        "--tol-len",
        "1e-9",
        "--tol-orth",
        "1e-8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["tolerances"]["length"], 1e-9);
    assert_eq!(report["tolerances"]["orthogonality"], 1e-8);
    assert_eq!(report["seed"], 4);
}

#[test]
fn manifest_file_runs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moebius.json");
    fs::write(
        &path,
        r#"{"manifold": {"example": {"name": "flat_moebius"}}, "launches": 48, "seed": 2,
            "sampling": "low-discrepancy", "analyses": ["soul", "fibers"]}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = zoll(&[
            "analyze",
            "--manifest",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn matrix_without_manifests_is_a_usage_error() {
    assert_eq!(zoll(&["matrix"]).status.code(), Some(2));
}

#[test]
fn matrix_over_a_manifest_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("list.json");
    fs::write(
        &path,
        r#"[{"manifold": {"example": {"name": "flat_band"}}, "analyses": ["splitting"]},
            {"manifold": {"example": {"name": "ellipse"}}, "analyses": ["certify"]}]"#,
    )
    .unwrap();
    let o = zoll(&[
        "matrix",
        "--manifest",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("metric-splitting") && text.contains("refutation"));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("matrix.json")).unwrap()).unwrap();
    assert!(m["rows"].as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn failing_matrix_row_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"manifold": {"example": {"name": "flat_disk"}}, "launches": 4}"#,
    )
    .unwrap();
    let o = zoll(&["matrix", "--manifest", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
