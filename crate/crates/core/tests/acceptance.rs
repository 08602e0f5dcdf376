//! Acceptance suite: one PASS/FAIL line per criterion on stderr, then a
//! single assertion over all of them.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use zoll_core::catalog::make_example;
use zoll_core::geodesic::SamplingStrategy;
use zoll_core::geometry::{ExampleRef, ManifoldSpec};
use zoll_core::run::{run, RunManifest};
use zoll_core::verify::{
    analyze, certify, fiber_analysis, Analyses, Analysis, CertifyOptions, Verdict, ZollReport, INDEX_MESH, NULLITY_MESH,
};

/// Closed-form values: half-length, index, boundary components, soul
/// dimension.
struct Truth {
    label: &'static str,
    example: ExampleRef,
    n: usize,
    l: f64,
    k: usize,
    components: usize,
    soul: Option<usize>,
}

fn truths() -> Vec<Truth> {
    let t = |label, example, n, l, k, components, soul| Truth {
        label,
        example,
        n,
        l,
        k,
        components,
        soul,
    };
    vec![
        // diameters of the unit disk and ball have length 2
        t("disk", ExampleRef::new("flat_disk"), 2, 1.0, 1, 1, Some(0)),
        // [0, 2] × circle
        t("band", ExampleRef::new("flat_band"), 2, 1.0, 0, 2, None),
        t("moebius", ExampleRef::new("flat_moebius"), 2, 1.0, 0, 1, Some(1)),
        // unit-sphere cap of geodesic radius π/3
        t("cap", ExampleRef::new("spherical_cap"), 2, PI / 3.0, 1, 1, Some(0)),
        // |latitude| ≤ π/6 on the unit sphere
        t(
            "spherical band",
            ExampleRef::new("spherical_band"),
            2,
            PI / 6.0,
            0,
            2,
            None,
        ),
        t("ball", ExampleRef::new("euclidean_ball"), 3, 1.0, 2, 1, Some(0)),
        t(
            "solid torus (α = 2π/5)",
            ExampleRef::new("mapping_torus").with("angle", 2.0 * PI / 5.0),
            3,
            1.0,
            1,
            1,
            Some(1),
        ),
        t(
            "solid torus (α = 0)",
            ExampleRef::new("mapping_torus").with("angle", 0.0),
            3,
            1.0,
            1,
            1,
            Some(1),
        ),
    ]
}

struct Line {
    passed: bool,
    text: String,
}

fn line(out: &mut Vec<Line>, id: usize, name: &str, passed: bool, detail: String) {
    let text = format!("[{}] {id:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    // written past the test harness capture so the lines always show
    let _ = writeln!(std::io::stderr(), "{text}");
    out.push(Line { passed, text });
}

struct Run {
    truth: Truth,
    certify_secs: f64,
    certify: ZollReport,
    analysis_secs: f64,
    analysis: Analysis,
}

fn opts(launches: usize) -> CertifyOptions {
    CertifyOptions {
        launches,
        ..CertifyOptions::default()
    }
}

fn runs() -> Vec<Run> {
    truths()
        .into_iter()
        .map(|truth| {
            let spec = make_example(&truth.example).unwrap();
            let t = Instant::now();
            let certify = certify(&spec, &opts(64)).unwrap().report;
            let certify_secs = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let analysis = analyze(&spec, &opts(64), Analyses::ALL).unwrap();
            let analysis_secs = t.elapsed().as_secs_f64();
            Run {
                truth,
                certify_secs,
                certify,
                analysis_secs,
                analysis,
            }
        })
        .collect()
}

#[test]
fn acceptance() {
    let runs = runs();
    let mut out = Vec::new();
    let _ = writeln!(std::io::stderr(), "\nacceptance criteria");

    // 1. constant length
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for r in &runs {
        let c = &r.certify;
        ok &= c.verdict == Verdict::Certified
            && c.relative_length_spread <= 1e-8
            && r.certify_secs <= 10.0
            && (c.half_length - r.truth.l).abs() <= 1e-8 * r.truth.l;
        worst = worst.max(c.relative_length_spread);
        slowest = slowest.max(r.certify_secs);
    }
    line(
        &mut out,
        1,
        "constant length",
        ok,
        format!(
            "{} examples, max relative spread {worst:.2e} (≤ 1e-8), slowest certify {slowest:.2}s (≤ 10s)",
            runs.len()
        ),
    );

    // 2. orthogonal arrival, with the ellipse as the refutation control
    let ellipse = certify(&make_example(&ExampleRef::new("ellipse")).unwrap(), &opts(64))
        .unwrap()
        .report;
    let max_perp = runs.iter().map(|r| r.certify.max_delta_perp).fold(0.0, f64::max);
    line(
        &mut out,
        2,
        "orthogonal arrival",
        max_perp <= 1e-7 && ellipse.max_delta_perp >= 1e-3 && ellipse.verdict == Verdict::Refuted,
        format!(
            "certified max δ⊥ {max_perp:.2e} (≤ 1e-7); ellipse δ⊥ {:.3} (≥ 1e-3), verdict {:?}",
            ellipse.max_delta_perp, ellipse.verdict
        ),
    );

    // 3. component bound and distance minimization
    let mut ok = true;
    let mut detail = Vec::new();
    for r in &runs {
        let rep = &r.analysis.report;
        let comps = rep.components;
        ok &= comps == Some(r.truth.components);
        if r.truth.components == 2 {
            let d = rep.distance_minimizing.as_ref();
            let err = d.map_or(f64::INFINITY, |d| d.max_length_error);
            ok &= rep.k == Some(0) && err <= 1e-6;
            detail.push(format!(
                "{} {comps:?} (k {:?}, |2L − d| {err:.1e})",
                r.truth.label, rep.k
            ));
        } else {
            detail.push(format!("{} {comps:?}", r.truth.label));
        }
    }
    line(&mut out, 3, "component bound", ok, detail.join(", "));

    // 4. Morse index two ways at mesh 256
    let mut ok = true;
    let mut detail = Vec::new();
    for r in &runs {
        let idx = r.analysis.report.index.as_ref();
        let quad: Vec<usize> = idx.map_or(vec![], |i| i.spot_checks.iter().map(|s| s.index).collect());
        let agree = idx.is_some_and(|i| i.methods_agree)
            && quad.iter().all(|&q| q == r.truth.k)
            && r.analysis.report.k == Some(r.truth.k)
            && r.analysis_secs <= 30.0;
        ok &= agree;
        detail.push(format!("{} {:?}/{quad:?}", r.truth.label, r.analysis.report.k));
    }
    let slowest = runs.iter().map(|r| r.analysis_secs).fold(0.0, f64::max);
    line(
        &mut out,
        4,
        "Morse index two ways",
        ok,
        format!(
            "focal/quadratic (mesh {INDEX_MESH}): {}; slowest analysis {slowest:.2}s (≤ 30s)",
            detail.join(", ")
        ),
    );

    // 5. midpoint focal law
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut two_sided_instants = 0;
    for r in &runs {
        let Some(idx) = r.analysis.report.index.as_ref() else {
            ok = false;
            continue;
        };
        if r.truth.components == 2 {
            two_sided_instants += idx.focal_instants;
            ok &= idx.focal_instants == 0;
        } else if r.truth.k > 0 {
            ok &= idx.max_midpoint_offset <= 1e-6 && idx.multiplicities == vec![r.truth.k] && idx.focal_instants > 0;
            worst = worst.max(idx.max_midpoint_offset);
        }
    }
    line(
        &mut out,
        5,
        "midpoint focal law",
        ok,
        format!("max |t* − L|/L {worst:.2e} (≤ 1e-6), multiplicity = k; {two_sided_instants} focal instants with two components"),
    );

    // 6. maximal degeneracy
    let mut ok = true;
    let mut min_excess = i64::MAX;
    let mut a_norm: f64 = 0.0;
    for r in &runs {
        let spots = &r.analysis.spot_checks;
        ok &= spots.len() == 3;
        for s in spots {
            ok &= s.nullity_estimate + 1 >= r.truth.n && s.a_form_norm <= 1e-6;
            min_excess = min_excess.min(s.nullity_estimate as i64 - (r.truth.n as i64 - 1));
            a_norm = a_norm.max(if s.a_form_norm.is_nan() {
                f64::INFINITY
            } else {
                s.a_form_norm
            });
        }
    }
    line(
        &mut out,
        6,
        "maximal degeneracy",
        ok,
        format!("nullity − (n − 1) ≥ {min_excess} at mesh {NULLITY_MESH} on 3 geodesics each, max |𝒜| {a_norm:.2e} (≤ 1e-6)"),
    );

    // 7. soul dimension, bands skipped
    let mut ok = true;
    let mut detail = Vec::new();
    for r in runs.iter().filter(|r| r.truth.soul.is_some()) {
        let d = r.analysis.report.soul.as_ref().map(|s| s.dimension);
        ok &= d == r.truth.soul && d == Some(r.truth.n - 1 - r.truth.k);
        detail.push(format!("{} {d:?}", r.truth.label));
    }
    line(&mut out, 7, "soul dimension", ok, detail.join(", "));

    // 8. fiber structure
    let moebius = make_example(&ExampleRef::new("flat_moebius")).unwrap();
    let disk = make_example(&ExampleRef::new("flat_disk")).unwrap();
    let fibers = |spec: &ManifoldSpec, k| {
        let o = opts(128);
        let c = certify(spec, &o).unwrap();
        fiber_analysis(spec, &c.table, &o.shoot_options(spec), c.report.half_length, k).unwrap()
    };
    let fm = fibers(&moebius, 0);
    let fd = fibers(&disk, 1);
    let torus = runs.iter().find(|r| r.truth.label.starts_with("solid torus")).unwrap();
    let ft = torus.analysis.report.fibers.clone().unwrap();
    let torus_soul = torus.analysis.report.soul.as_ref().map(|s| s.dimension);
    let ok = fm.cluster_sizes.len() == 1
        && fm.cluster_sizes[0].0 == 2
        && fm.partners_paired == Some(true)
        && fm.nontrivial_cover == Some(true)
        && fd.clusters == 1
        && fd.fiber_dimensions == vec![(1, 1)]
        && !ft.fiber_dimensions.is_empty()
        && ft.fiber_dimensions.iter().all(|&(d, _)| d == 1)
        && torus_soul == Some(1);
    line(
        &mut out,
        8,
        "fiber structure",
        ok,
        format!(
            "Möbius sizes {:?}, paired {:?}, nontrivial {:?}; disk {} cluster(s) of dimension {:?}; solid torus fibers {:?} over soul {torus_soul:?}",
            fm.cluster_sizes, fm.partners_paired, fm.nontrivial_cover, fd.clusters, fd.fiber_dimensions, ft.fiber_dimensions
        ),
    );

    // 9. metric splitting, spherical band circumference 2π cos(latitude)
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for r in &runs {
        let s = r.analysis.report.splitting.as_ref();
        let res = s.map_or(f64::INFINITY, |s| s.max_residual);
        ok &= res <= 1e-6;
        worst = worst.max(res);
    }
    let sb = runs.iter().find(|r| r.truth.label == "spherical band").unwrap();
    let lengths = &sb.analysis.report.splitting.as_ref().unwrap().slice_lengths;
    let circ = lengths
        .iter()
        .map(|s| (s.length - 2.0 * PI * (sb.truth.l - s.t).cos()).abs())
        .fold(0.0, f64::max);
    ok &= !lengths.is_empty() && circ <= 1e-5;
    line(
        &mut out,
        9,
        "metric splitting",
        ok,
        format!(
            "max residual {worst:.2e} (≤ 1e-6) for t ≤ 0.95L; spherical band circumference error {circ:.2e} (≤ 1e-5)"
        ),
    );

    // 10. slice symmetry on one-boundary examples
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for r in runs.iter().filter(|r| r.truth.components == 1) {
        let slices = r.analysis.report.slices.as_ref();
        let l = r.analysis.report.half_length;
        let ts: Vec<f64> = slices.map_or(vec![], |s| s.iter().map(|c| c.t / l).collect());
        let h = slices.map_or(f64::INFINITY, |s| s.iter().map(|c| c.hausdorff).fold(0.0, f64::max));
        ok &= ts.len() == 3
            && ts.iter().zip([0.25, 0.5, 0.75]).all(|(a, b)| (a - b).abs() < 1e-12)
            && h <= 1e-6 * r.truth.l;
        worst = worst.max(h / r.truth.l);
    }
    line(
        &mut out,
        10,
        "slice symmetry",
        ok,
        format!("max Hausdorff(Σ_t, Σ_(2L−t)) / L {worst:.2e} (≤ 1e-6) at t ∈ {{L/4, L/2, 3L/4}}"),
    );

    // 11. mapping tori and the index ladder
    let disk_l = runs[0].certify.half_length;
    let mut ok = true;
    let mut detail = Vec::new();
    for r in runs.iter().filter(|r| r.truth.label.starts_with("solid torus")) {
        let rep = &r.analysis.report;
        let drift = (rep.half_length - disk_l).abs();
        ok &= rep.verdict == Verdict::Certified && drift <= 1e-8 && rep.k == Some(1);
        detail.push(format!("{} drift {drift:.1e} k {:?}", r.truth.label, rep.k));
    }
    let t = Instant::now();
    let mut ladder = Vec::new();
    for n in 2..=4usize {
        for k in 0..n {
            let spec = make_example(&ExampleRef::new("index_ladder").with("n", n).with("k", k)).unwrap();
            let rep = analyze(&spec, &opts(64), Analyses::ALL).unwrap().report;
            let good = rep.verdict == Verdict::Certified && rep.k == Some(k) && rep.all_checks_pass();
            if !good {
                ladder.push(format!("({n},{k}) failed"));
            }
            ok &= good;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs <= 300.0;
    line(
        &mut out,
        11,
        "mapping torus",
        ok,
        format!(
            "{}; index ladder 9 examples in {secs:.1}s (≤ 300s){}",
            detail.join(", "),
            if ladder.is_empty() {
                String::new()
            } else {
                format!(": {}", ladder.join(", "))
            }
        ),
    );

    // 12. determinism of report.json
    let mut manifests: Vec<RunManifest> = runs
        .iter()
        .map(|r| RunManifest::example(r.truth.example.clone()))
        .collect();
    let mut ld = RunManifest::example(ExampleRef::new("flat_moebius"));
    ld.sampling = SamplingStrategy::LowDiscrepancy;
    ld.seed = 17;
    manifests.push(ld);
    let mut ok = true;
    for m in &manifests {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(m, Some(a.path())).unwrap();
        run(m, Some(b.path())).unwrap();
        let ra = std::fs::read(a.path().join("report.json")).unwrap();
        let rb = std::fs::read(b.path().join("report.json")).unwrap();
        ok &= ra == rb;
    }
    line(
        &mut out,
        12,
        "determinism",
        ok,
        format!("{} manifests re-run, report.json byte-identical", manifests.len()),
    );

    let failed: Vec<&str> = out.iter().filter(|l| !l.passed).map(|l| l.text.as_str()).collect();
    assert_eq!(out.len(), 12);
    assert!(failed.is_empty(), "failing criteria:\n{}", failed.join("\n"));
}
