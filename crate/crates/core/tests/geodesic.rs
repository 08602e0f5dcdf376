use std::f64::consts::PI;

use zoll_core::catalog::{catalog, make_example};
use zoll_core::geodesic::{first_return_map, involution, shoot, trace, LaunchSet, SamplingStrategy, ShootOptions};
use zoll_core::geometry::{ExampleRef, ManifoldManifest, ManifoldSpec, Point};
use zoll_core::ZollError;

fn example(name: &str) -> ManifoldSpec {
    make_example(&ExampleRef::new(name)).unwrap()
}

fn p2(a: f64, b: f64) -> Point {
    Point::from_vec(vec![a, b])
}

#[test]
fn disk_diameters_have_length_two() {
    let spec = example("flat_disk");
    let opts = ShootOptions::for_spec(&spec);
    let p = p2((0.3f64).cos(), (0.3f64).sin());
    let path = shoot(&spec, &p, &opts).unwrap();
    assert!((path.return_time - 2.0).abs() < 1e-12);
    assert!((&path.arrival + &p).norm() < 1e-12);
    assert!(path.delta_perp < 1e-9);
    assert!(!path.is_grazing());
}

#[test]
fn disk_sweep_is_constant() {
    let spec = example("flat_disk");
    let launches = LaunchSet::sample(&spec, 64, SamplingStrategy::UniformParameter, 0).unwrap();
    let table = first_return_map(&spec, &launches, &ShootOptions::for_spec(&spec));
    let s = table.summary();
    assert_eq!(s.returned, 64);
    assert!(s.length_spread <= 1e-9);
}

#[test]
fn cap_meridians_pass_through_the_pole() {
    let spec = example("spherical_cap");
    let opts = ShootOptions::for_spec(&spec);
    let launches = LaunchSet::sample(&spec, 8, SamplingStrategy::UniformParameter, 0).unwrap();
    for p in launches.points() {
        let path = shoot(&spec, &p, &opts).unwrap();
        assert!((path.return_time - 2.0 * PI / 3.0).abs() < 1e-9, "{}", path.return_time);
        let (pole, _) = path.state_at(&spec, PI / 3.0).unwrap();
        assert!(pole.norm() < 1e-8, "{pole:?}");
        assert!(path.delta_perp < 1e-8);
    }
}

/// Straight chord along the inward normal of the ellipse and the sine of its
/// arrival angle, solved in closed form.
fn ellipse_chord(a: f64, b: f64, angle: f64) -> (f64, f64) {
    let p = [a * angle.cos(), b * angle.sin()];
    let n = [-p[0] / (a * a), -p[1] / (b * b)];
    let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
    let d = [n[0] / len, n[1] / len];
    // (p + s d) on the ellipse: A s² + B s = 0
    let aa = d[0] * d[0] / (a * a) + d[1] * d[1] / (b * b);
    let bb = 2.0 * (p[0] * d[0] / (a * a) + p[1] * d[1] / (b * b));
    let s = -bb / aa;
    let q = [p[0] + s * d[0], p[1] + s * d[1]];
    let m = [q[0] / (a * a), q[1] / (b * b)];
    let ml = (m[0] * m[0] + m[1] * m[1]).sqrt();
    let sin = (d[0] * m[1] - d[1] * m[0]).abs() / ml;
    (s, sin)
}

#[test]
fn ellipse_axis_chord_is_orthogonal_and_generic_chord_is_not() {
    let spec = example("ellipse");
    let opts = ShootOptions::for_spec(&spec);
    let axis = shoot(&spec, &p2(2.0, 0.0), &opts).unwrap();
    assert!((axis.return_time - 4.0).abs() < 1e-10);
    assert!(axis.delta_perp < 1e-9);

    let angle: f64 = 0.7;
    let p = spec.project_to_boundary(&p2(2.0 * angle.cos(), angle.sin())).unwrap();
    let path = shoot(&spec, &p, &opts).unwrap();
    let (len, sin) = ellipse_chord(2.0, 1.0, angle);
    assert!((path.return_time - len).abs() < 1e-9);
    assert!((path.delta_perp - sin).abs() < 1e-8);
    assert!(path.delta_perp > 1e-3);
}

#[test]
fn ellipse_sweep_spread_is_large() {
    let spec = example("ellipse");
    let launches = LaunchSet::sample(&spec, 64, SamplingStrategy::UniformParameter, 0).unwrap();
    let s = first_return_map(&spec, &launches, &ShootOptions::for_spec(&spec)).summary();
    assert!(s.length_spread > 1e-2);
    assert!(s.max_delta_perp > 1e-3);
}

#[test]
fn band_vertical_geodesics_arrive_orthogonally() {
    let spec = example("flat_band");
    let opts = ShootOptions::for_spec(&spec);
    let path = shoot(&spec, &p2(1.3, 0.0), &opts).unwrap();
    assert!(path.delta_perp <= 1e-12);
    assert!((path.arrival - p2(1.3, 2.0)).norm() < 1e-12);
}

#[test]
fn spherical_band_meridians() {
    let spec = example("spherical_band");
    let theta0 = PI / 6.0;
    let launches = LaunchSet::sample(&spec, 64, SamplingStrategy::UniformParameter, 0).unwrap();
    let table = first_return_map(&spec, &launches, &ShootOptions::for_spec(&spec));
    for (p, path) in table.launches.iter().zip(table.paths()) {
        assert!((path.return_time - 2.0 * theta0).abs() < 1e-9);
        assert!((path.arrival[1] + p[1]).abs() < 1e-9);
        assert!((path.arrival[0] - p[0]).abs() < 1e-9);
    }
}

#[test]
fn involutions() {
    let disk = example("flat_disk");
    let opts = ShootOptions::for_spec(&disk);
    let p = p2((1.1f64).cos(), (1.1f64).sin());
    let q = involution(&disk, &p, &opts).unwrap();
    assert!((&q + &p).norm() < 1e-9);
    assert!((involution(&disk, &q, &opts).unwrap() - &p).norm() < 1e-9);

    // flat chord across the strip: (w, t) ↦ (−w, t)
    let moebius = example("flat_moebius");
    let opts = ShootOptions::for_spec(&moebius);
    let p = p2(1.0, 2.2);
    let q = involution(&moebius, &p, &opts).unwrap();
    assert!((q - p2(-1.0, 2.2)).norm() < 1e-9);
    let back = involution(&moebius, &involution(&moebius, &p, &opts).unwrap(), &opts).unwrap();
    assert!(moebius.chart_distance(&back, &p) < 1e-7);

    // the band involution swaps the two circles
    let band = example("flat_band");
    let opts = ShootOptions::for_spec(&band);
    let q = involution(&band, &p2(0.5, 2.0), &opts).unwrap();
    assert!(q[1].abs() < 1e-12);
}

#[test]
fn time_reversal_retraces_the_launch() {
    for ex in [
        ExampleRef::new("spherical_cap"),
        ExampleRef::new("spherical_band"),
        ExampleRef::new("flat_moebius"),
        ExampleRef::new("mapping_torus"),
    ] {
        let spec = make_example(&ex).unwrap();
        let opts = ShootOptions::for_spec(&spec);
        let launches = LaunchSet::sample(&spec, 5, SamplingStrategy::LowDiscrepancy, 3).unwrap();
        for p in launches.points() {
            let path = shoot(&spec, &p, &opts).unwrap();
            let back = trace(&spec, &path.arrival, &(-&path.arrival_velocity), &opts).unwrap();
            let err = spec.chart_distance(&back.arrival, &p);
            assert!(err < 1e-7, "{}: {err}", ex.name);
        }
    }
}

#[test]
fn unit_speed_and_arc_length_on_every_zoll_example() {
    for ex in catalog() {
        let spec = make_example(&ex).unwrap();
        let opts = ShootOptions::for_spec(&spec);
        let launches = LaunchSet::sample(&spec, 4, SamplingStrategy::LowDiscrepancy, 1).unwrap();
        for p in launches.points() {
            let path = shoot(&spec, &p, &opts).unwrap();
            assert!(path.max_speed_drift(&spec) <= 1e-8, "{}", ex.name);
            let arc = path.arc_length(&spec);
            assert!((arc - path.return_time).abs() <= 1e-8, "{}: {arc}", ex.name);
            for s in &path.samples {
                assert!(spec.boundary_value(&s.x) > -spec.boundary.eps);
            }
            assert!(spec.boundary_value(&path.arrival).abs() <= spec.boundary.eps);
        }
    }
}

#[test]
fn halving_the_tolerance_moves_return_times_below_1e8() {
    for ex in catalog() {
        let spec = make_example(&ex).unwrap();
        let opts = ShootOptions::for_spec(&spec);
        let finer = opts.with_rtol(0.5 * opts.tol.rtol);
        let launches = LaunchSet::sample(&spec, 4, SamplingStrategy::LowDiscrepancy, 2).unwrap();
        for p in launches.points() {
            let a = shoot(&spec, &p, &opts).unwrap().return_time;
            let b = shoot(&spec, &p, &finer).unwrap().return_time;
            assert!((a - b).abs() < 1e-8, "{}: {a} vs {b}", ex.name);
        }
    }
}

#[test]
fn short_horizon_reports_no_return() {
    let spec = example("flat_disk");
    let mut opts = ShootOptions::for_spec(&spec);
    opts.t_max = 1.0;
    let err = shoot(&spec, &p2(1.0, 0.0), &opts).unwrap_err();
    assert_eq!(err, ZollError::NoReturn(1.0));
    assert!(err.to_string().contains("no return"));
}

#[test]
fn launches_off_the_boundary_are_rejected() {
    let spec = example("flat_disk");
    let err = shoot(&spec, &p2(0.5, 0.0), &ShootOptions::for_spec(&spec)).unwrap_err();
    assert!(matches!(err, ZollError::NotBoundaryPoint(_)));
}

/// Sphere band `−θ₀/2 ≤ λ ≤ θ₀`; a great circle whose top latitude sits just
/// below `θ₀` skims the upper edge before leaving through the lower one.
#[test]
fn skimming_great_circle_is_flagged_tangential() {
    let t0 = 0.5;
    let t1 = 0.25;
    let json = format!(
        r#"{{
        "name": "lopsided_band", "dimension": 2,
        "metric": {{"kind": "expression", "components": [["cos(x1)^2", "0"], ["0", "1"]]}},
        "boundary": {{"kind": "expression",
            "function": "(x1 + {t1}) * ({t0} - x1) / ({t0} + {t1})",
            "pieces": [{{"param_dim": 1, "point": ["2*PI*u0", "-{t1}"]}},
                       {{"param_dim": 1, "point": ["2*PI*u0", "{t0}"]}}]}},
        "deck_maps": [{{"axis": 0, "matrix": [[1, 0], [0, 1]], "shift": [-6.283185307179586, 0]}}],
        "domain": {{"lower": [0, -0.4], "upper": [6.283185307179586, 0.6]}}
    }}"#
    );
    let spec = ManifoldManifest::from_json(&json).unwrap().build().unwrap();
    let opts = ShootOptions::for_spec(&spec);
    let inclination: f64 = t0 - 2e-7;
    let x0 = p2(0.0, 0.0);
    let v0 = p2(inclination.cos(), inclination.sin());
    let path = trace(&spec, &x0, &v0, &opts).unwrap();
    assert!(path.is_grazing());
    let g = &path.grazing[0];
    assert!((g.t - PI / 2.0).abs() < 1e-6, "{g:?}");
    assert!(g.b_min > 0.0 && g.b_min < 1e-6);
    // first crossing: the lower edge, on the descending half
    assert!((path.arrival[1] + t1).abs() < 1e-9);
    assert!(path.return_time > PI);

    let tame = trace(&spec, &x0, &p2((0.3f64).cos(), (0.3f64).sin()), &opts);
    assert!(!tame.unwrap().is_grazing());
}
