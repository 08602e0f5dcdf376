use std::f64::consts::PI;

use zoll_core::catalog::make_example;
use zoll_core::geodesic::SamplingStrategy;
use zoll_core::geometry::{ExampleRef, ManifoldSpec};
use zoll_core::verify::{
    analyze, boundary_components, build_soul, certify, fiber_analysis, slice_distance_check, soul_dimension_check,
    splitting_residual, Analyses, CertifyOptions, Verdict, VerifyTolerances,
};
use zoll_core::ZollError;

fn example(name: &str) -> ManifoldSpec {
    make_example(&ExampleRef::new(name)).unwrap()
}

fn opts(launches: usize) -> CertifyOptions {
    CertifyOptions {
        launches,
        ..CertifyOptions::default()
    }
}

#[test]
fn flat_disk_certifies_with_unit_half_length() {
    let c = certify(&example("flat_disk"), &opts(64)).unwrap();
    assert_eq!(c.report.verdict, Verdict::Certified);
    // chords through the center of the unit disk have length 2
    assert!((c.report.half_length - 1.0).abs() < 1e-9);
    assert_eq!(c.report.components, Some(1));
    assert!(c.report.relative_length_spread <= 1e-8);
    assert!(c.report.max_delta_perp <= 1e-7);
    assert_eq!(c.report.grazing, 0);
}

#[test]
fn flat_band_has_two_components_swapped_by_the_involution() {
    let spec = example("flat_band");
    let c = certify(&spec, &opts(64)).unwrap();
    assert_eq!(c.report.verdict, Verdict::Certified);
    assert!((c.report.half_length - 1.0).abs() < 1e-9);
    let part = boundary_components(&spec, &c.table).unwrap();
    assert_eq!(part.count, 2);
    assert!(part.pairing_consistent);
    assert_eq!(part.pairing, vec![(0, 1), (1, 0)]);
}

#[test]
fn spherical_band_components_are_latitude_circles() {
    let spec = example("spherical_band");
    let c = certify(&spec, &opts(64)).unwrap();
    let part = boundary_components(&spec, &c.table).unwrap();
    assert_eq!(part.count, 2);
    for (x, &l) in c.table.launches.iter().zip(&part.labels) {
        let same: Vec<f64> = c
            .table
            .launches
            .iter()
            .zip(&part.labels)
            .filter(|(_, &m)| m == l)
            .map(|(y, _)| y[1])
            .collect();
        assert!(same.iter().all(|lat| (lat - x[1]).abs() < 1e-9));
    }
}

#[test]
fn disk_and_moebius_have_one_component() {
    for name in ["flat_disk", "flat_moebius"] {
        let spec = example(name);
        let c = certify(&spec, &opts(64)).unwrap();
        assert_eq!(boundary_components(&spec, &c.table).unwrap().count, 1, "{name}");
    }
}

#[test]
fn ellipse_is_refuted() {
    let c = certify(&example("ellipse"), &opts(64)).unwrap();
    assert_eq!(c.report.verdict, Verdict::Refuted);
    assert!(c.report.max_delta_perp >= 1e-3);
    assert!(c.report.relative_length_spread > 1e-3);
}

#[test]
fn too_few_launches_is_rejected() {
    let err = certify(&example("flat_disk"), &opts(8)).unwrap_err();
    assert!(matches!(err, ZollError::TooFewLaunches { found: 8, .. }));
    assert!(err.to_string().contains("N below certification minimum"));
}

#[test]
fn non_positive_tolerances_are_rejected() {
    let bad = VerifyTolerances {
        length: 0.0,
        ..VerifyTolerances::default()
    };
    let o = CertifyOptions {
        tolerances: bad,
        ..CertifyOptions::default()
    };
    assert!(matches!(
        certify(&example("flat_disk"), &o),
        Err(ZollError::InvalidInput(_))
    ));
}

#[test]
fn low_discrepancy_sampling_also_certifies() {
    let o = CertifyOptions {
        strategy: SamplingStrategy::LowDiscrepancy,
        seed: 11,
        ..CertifyOptions::default()
    };
    for name in ["flat_disk", "flat_moebius", "mapping_torus"] {
        let a = analyze(&example(name), &o, Analyses::ALL).unwrap();
        assert_eq!(a.report.verdict, Verdict::Certified, "{name}");
        assert!(a.report.all_checks_pass(), "{name}: {:#?}", a.report.checks);
    }
}

#[test]
fn disk_soul_is_the_center() {
    let spec = example("flat_disk");
    let c = certify(&spec, &opts(64)).unwrap();
    let soul = build_soul(&spec, &c.table, c.report.half_length).unwrap();
    assert!(soul.points.iter().all(|p| p.norm() < 1e-7));
    assert_eq!(soul.dimension, 0);
    assert!(soul_dimension_check(&soul, 2, 1).is_ok());
}

#[test]
fn moebius_soul_is_the_core_circle() {
    let spec = example("flat_moebius");
    let c = certify(&spec, &opts(64)).unwrap();
    let soul = build_soul(&spec, &c.table, c.report.half_length).unwrap();
    assert!(soul.points.iter().all(|p| p[0].abs() < 1e-9));
    assert_eq!(soul.dimension, 1);
    assert!(soul_dimension_check(&soul, 2, 0).is_ok());
    assert!(soul_dimension_check(&soul, 2, 1).is_err());

    // core length c = 3 against boundary length 2c, both as closed polygons
    let closed_length = |mut ts: Vec<f64>, period: f64| {
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let gaps: f64 = ts.windows(2).map(|w| w[1] - w[0]).sum();
        gaps + (ts[0] + period - ts[ts.len() - 1])
    };
    let soul_len = closed_length(soul.points.iter().map(|p| p[1].rem_euclid(3.0)).collect(), 3.0);
    assert!((soul_len - 3.0).abs() < 1e-9);
    let unrolled: Vec<f64> = c
        .table
        .launches
        .iter()
        .map(|p| {
            if p[0] > 0.0 {
                p[1].rem_euclid(3.0)
            } else {
                3.0 + p[1].rem_euclid(3.0)
            }
        })
        .collect();
    assert!((closed_length(unrolled, 6.0) - 6.0).abs() < 1e-9);
}

#[test]
fn ball_soul_dimension_is_zero() {
    let spec = example("euclidean_ball");
    let c = certify(&spec, &opts(64)).unwrap();
    let soul = build_soul(&spec, &c.table, c.report.half_length).unwrap();
    assert!(soul_dimension_check(&soul, 3, 2).is_ok());
}

#[test]
fn moebius_fibers_are_involution_pairs() {
    let spec = example("flat_moebius");
    let o = opts(128);
    let c = certify(&spec, &o).unwrap();
    let f = fiber_analysis(&spec, &c.table, &o.shoot_options(&spec), c.report.half_length, 0).unwrap();
    assert_eq!(f.clusters, 64);
    assert_eq!(f.cluster_sizes, vec![(2, 64)]);
    assert_eq!(f.partners_paired, Some(true));
    assert_eq!(f.nontrivial_cover, Some(true));
    assert!(f.passed, "{}", f.detail);
}

#[test]
fn band_fibers_pair_opposite_circles() {
    let spec = example("flat_band");
    let o = opts(64);
    let c = certify(&spec, &o).unwrap();
    let f = fiber_analysis(&spec, &c.table, &o.shoot_options(&spec), 1.0, 0).unwrap();
    assert_eq!(f.cluster_sizes, vec![(2, 32)]);
    assert_eq!(f.boundary_components, Some(2));
    assert_eq!(f.nontrivial_cover, Some(false));
    assert!(f.passed, "{}", f.detail);
}

#[test]
fn disk_boundary_is_one_circle_fiber() {
    let spec = example("flat_disk");
    let o = opts(128);
    let c = certify(&spec, &o).unwrap();
    let f = fiber_analysis(&spec, &c.table, &o.shoot_options(&spec), 1.0, 1).unwrap();
    assert_eq!(f.clusters, 1);
    assert_eq!(f.cluster_sizes, vec![(128, 1)]);
    assert_eq!(f.fiber_dimensions, vec![(1, 1)]);
    assert!(f.passed);
}

#[test]
fn solid_torus_fibers_are_circles_over_a_circle() {
    let a = analyze(&example("mapping_torus"), &opts(64), Analyses::ALL).unwrap();
    let fibers = a.report.fibers.unwrap();
    assert!(fibers.clusters > 1);
    assert!(fibers.fiber_dimensions.iter().all(|&(d, _)| d == 1));
    assert_eq!(a.report.soul.unwrap().dimension, 1);
}

#[test]
fn flat_band_splits_exactly() {
    let spec = example("flat_band");
    let s = splitting_residual(&spec, &CertifyOptions::default().shoot_options(&spec), 1.0).unwrap();
    assert!(s.max_residual <= 1e-8, "{}", s.max_residual);
    // every slice of the flat band has the circumference of the boundary circle
    assert!(s.slice_lengths.iter().all(|l| (l.length - 4.0).abs() < 1e-6));
}

#[test]
fn flat_disk_splits_in_polar_coordinates() {
    let spec = example("flat_disk");
    let s = splitting_residual(&spec, &CertifyOptions::default().shoot_options(&spec), 1.0).unwrap();
    assert!(s.max_residual <= 1e-7, "{}", s.max_residual);
    // the slice at time t is the circle of radius 1 − t
    for l in &s.slice_lengths {
        assert!((l.length - 2.0 * PI * (1.0 - l.t)).abs() < 1e-5, "{l:?}");
    }
}

#[test]
fn spherical_band_slice_circumference_follows_latitude() {
    let spec = example("spherical_band");
    let theta0 = PI / 6.0;
    let s = splitting_residual(&spec, &CertifyOptions::default().shoot_options(&spec), theta0).unwrap();
    assert!(s.max_residual <= 1e-6);
    assert!(!s.slice_lengths.is_empty());
    for l in &s.slice_lengths {
        let lat = theta0 - l.t;
        assert!((l.length - 2.0 * PI * lat.cos()).abs() <= 1e-5, "{l:?}");
    }
}

#[test]
fn slices_at_half_length_pass() {
    for name in ["flat_band", "flat_moebius", "flat_disk"] {
        let spec = example(name);
        let o = opts(64);
        let c = certify(&spec, &o).unwrap();
        let l = c.report.half_length;
        let s = slice_distance_check(&spec, &c.table, &o.shoot_options(&spec), l, 0.5 * l, 0).unwrap();
        assert!(s.hausdorff <= 1e-6 * l, "{name}: {s:?}");
        assert!(s.distance_error <= 1e-6 * l, "{name}: {s:?}");
    }
}

#[test]
fn disk_slice_at_half_length_is_the_half_radius_circle() {
    let spec = example("flat_disk");
    let o = opts(64);
    let c = certify(&spec, &o).unwrap();
    for path in c.table.paths() {
        let (x, _) = path.state_at(&spec, 0.5).unwrap();
        assert!((x.norm() - 0.5).abs() < 1e-9);
    }
}

#[test]
fn analysis_is_deterministic() {
    let spec = example("flat_moebius");
    let o = CertifyOptions {
        strategy: SamplingStrategy::LowDiscrepancy,
        seed: 5,
        ..CertifyOptions::default()
    };
    let a = analyze(&spec, &o, Analyses::ALL).unwrap().report.to_json();
    let b = analyze(&spec, &o, Analyses::ALL).unwrap().report.to_json();
    assert_eq!(a, b);
}

#[test]
fn refuted_runs_skip_the_structure_stages() {
    let a = analyze(&example("ellipse"), &opts(64), Analyses::ALL).unwrap();
    assert_eq!(a.report.verdict, Verdict::Refuted);
    assert!(a.report.index.is_none() && a.report.soul.is_none());
}
