use std::fs;

use zoll_core::catalog::catalog;
use zoll_core::geometry::ExampleRef;
use zoll_core::run::{run, theorem_matrix, ManifoldSource, RunManifest, RunStatus, Stage};
use zoll_core::verify::Verdict;
use zoll_core::ZollError;

fn manifest(name: &str) -> RunManifest {
    RunManifest::example(ExampleRef::new(name))
}

#[test]
fn flat_disk_full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&manifest("flat_disk"), Some(dir.path())).unwrap();
    assert_eq!(out.status, RunStatus::Expected);
    assert_eq!(out.status.exit_code(), 0);
    assert_eq!(out.report.verdict, Verdict::Certified);
    assert_eq!(out.report.k, Some(1));
    for f in [
        "report.json",
        "manifold.json",
        "geodesics.csv",
        "polylines.csv",
        "soul.csv",
        "spectrum.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "certified");
    assert_eq!(report["k"], 1);
    let geo = fs::read_to_string(dir.path().join("geodesics.csv")).unwrap();
    assert_eq!(geo.lines().count(), 65);
    assert!(geo.starts_with("launch,p0,p1,return_time,q0,q1,delta_perp,grazing,error"));
    let poly = fs::read_to_string(dir.path().join("polylines.csv")).unwrap();
    assert_eq!(poly.lines().count(), 1 + 64 * 33);
}

#[test]
fn certify_only_run_skips_structure_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest("flat_band").with_analyses(&[Stage::Certify]);
    let out = run(&m, Some(dir.path())).unwrap();
    assert_eq!(out.status, RunStatus::Expected);
    assert!(out.report.k.is_none());
    assert!(!dir.path().join("soul.csv").exists());
    assert!(!dir.path().join("spectrum.csv").exists());
}

#[test]
fn ellipse_refutation_is_the_expected_outcome() {
    let out = run(&manifest("ellipse").with_analyses(&[Stage::Certify]), None).unwrap();
    assert_eq!(out.report.verdict, Verdict::Refuted);
    assert_eq!(out.status.exit_code(), 0);
}

#[test]
fn contradicting_annotations_give_exit_one() {
    let spec = zoll_core::catalog::make_example(&ExampleRef::new("flat_disk")).unwrap();
    let mut inline = spec.manifest.clone();
    inline.annotations.as_mut().unwrap().index = Some(0);
    let mut m = manifest("flat_disk").with_analyses(&[Stage::Jacobi]);
    m.manifold = ManifoldSource::Inline(inline);
    let out = run(&m, None).unwrap();
    assert_eq!(out.report.verdict, Verdict::Certified);
    assert!(!out.report.check("annotations").unwrap().passed);
    assert_eq!(out.status, RunStatus::Contradiction);
    assert_eq!(out.status.exit_code(), 1);
}

#[test]
fn too_few_launches_fail_validation() {
    let mut m = manifest("flat_disk");
    m.launches = 8;
    let err = run(&m, None).unwrap_err();
    assert!(err.to_string().contains("N below certification minimum"));
}

#[test]
fn unknown_example_is_reported() {
    assert!(matches!(
        run(&manifest("klein_bottle"), None),
        Err(ZollError::UnknownExample(_))
    ));
}

#[test]
fn manifest_json_round_trip_and_defaults() {
    let m = RunManifest::from_json(r#"{"manifold": {"example": {"name": "flat_disk"}}}"#).unwrap();
    assert_eq!(m, manifest("flat_disk"));
    let text = r#"{"manifold": {"example": {"name": "flat_band", "params": {"L": 0.5}}},
        "launches": 48, "seed": 3, "sampling": "low-discrepancy",
        "tolerances": {"length": 1e-9}, "analyses": ["jacobi", "soul"]}"#;
    let m = RunManifest::from_json(text).unwrap();
    assert_eq!(m.launches, 48);
    assert_eq!(m.tolerances.length, 1e-9);
    assert_eq!(m.tolerances.orthogonality, 1e-7);
    assert_eq!(m.analyses, vec![Stage::Jacobi, Stage::Soul]);
    assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
    assert!(RunManifest::from_json(r#"{"manifold": {"example": {"name": "x"}}, "bogus": 1}"#).is_err());
}

#[test]
fn inline_manifold_manifest_runs() {
    let spec = zoll_core::catalog::make_example(&ExampleRef::new("flat_moebius")).unwrap();
    let mut m = manifest("flat_moebius").with_analyses(&[Stage::Certify]);
    m.manifold = ManifoldSource::Inline(spec.manifest.clone());
    let out = run(&m, None).unwrap();
    assert_eq!(out.report.verdict, Verdict::Certified);
    assert!((out.report.half_length - 1.0).abs() < 1e-9);
}

#[test]
fn same_manifest_gives_byte_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut m = manifest("spherical_cap");
    m.seed = 9;
    run(&m, Some(a.path())).unwrap();
    run(&m, Some(b.path())).unwrap();
    for f in ["report.json", "geodesics.csv", "soul.csv", "spectrum.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn matrix_over_catalog_minus_ellipse_splitting_only_passes() {
    let list: Vec<RunManifest> = catalog()
        .into_iter()
        .filter(|e| e.name != "ellipse")
        .map(|e| RunManifest::example(e).with_analyses(&[Stage::Splitting]))
        .collect();
    let m = theorem_matrix(&list).unwrap();
    assert!(m.all_pass(), "{}", m.to_table());
    assert_eq!(m.exit_code(), 0);
    assert!(m.rows.iter().any(|r| r.check == "metric-splitting"));
}

#[test]
fn matrix_marks_failures_and_rejects_empty_lists() {
    let mut bad = manifest("flat_disk");
    bad.launches = 4;
    let m = theorem_matrix(&[manifest("ellipse").with_analyses(&[Stage::Certify]), bad]).unwrap();
    assert_eq!(m.rows[0].check, "refutation");
    assert!(m.rows[0].passed);
    assert_eq!(m.rows[1].check, "run");
    assert!(!m.rows[1].passed);
    assert_eq!(m.exit_code(), 1);
    assert!(theorem_matrix(&[]).is_err());
}
