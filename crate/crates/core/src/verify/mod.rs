//! Zoll certification and the global structure checks built on a sweep.

mod components;
mod fibers;
mod index;
mod soul;
mod splitting;

pub use components::{boundary_components, ComponentPartition};
pub use fibers::{fiber_analysis, FiberSummary};
pub use index::{index_analysis, IndexSummary, SpotCheck, INDEX_MESH, NULLITY_MESH};
pub use soul::{
    build_soul, local_dimensions, soul_dimension_check, DimensionMismatch, SoulCloud, SoulSummary, PCA_NEIGHBORS,
    PCA_THRESHOLD,
};
pub use splitting::{
    distance_minimizing, non_intersection, slice_distance_check, splitting_residual, DistanceMinimizing,
    NonIntersection, SliceCheck, SliceLength, SplittingSummary,
};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZollError};
use crate::geodesic::{first_return_map, LaunchSet, ReturnTable, SamplingStrategy, ShootOptions};
use crate::geometry::{ManifoldSpec, Point};

pub const MIN_LAUNCHES: usize = 32;
/// Failures within this factor of a tolerance give `inconclusive`, beyond it
/// `refuted`.
pub const INCONCLUSIVE_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyTolerances {
    /// Relative spread `(max R_p − min R_p) / mean R_p`.
    pub length: f64,
    pub orthogonality: f64,
    /// Integrator relative tolerance for the sweep.
    pub rtol: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            length: 1e-8,
            orthogonality: 1e-7,
            rtol: 1e-10,
        }
    }
}

impl VerifyTolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("orthogonality", self.orthogonality),
            ("rtol", self.rtol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ZollError::InvalidInput(format!(
                    "tolerance `{name}` must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub launches: usize,
    pub seed: u64,
    pub strategy: SamplingStrategy,
    pub tolerances: VerifyTolerances,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            launches: 64,
            seed: 0,
            strategy: SamplingStrategy::UniformParameter,
            tolerances: VerifyTolerances::default(),
        }
    }
}

impl CertifyOptions {
    pub fn shoot_options(&self, spec: &ManifoldSpec) -> ShootOptions {
        ShootOptions::for_spec(spec).with_rtol(self.tolerances.rtol)
    }
}

/// One row of the theorem matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZollReport {
    pub name: String,
    pub dimension: usize,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub launches: usize,
    pub seed: u64,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub length_spread: f64,
    pub relative_length_spread: f64,
    pub max_delta_perp: f64,
    pub grazing: usize,
    pub components: Option<usize>,
    pub k: Option<usize>,
    pub index_methods_agree: Option<bool>,
    pub component_detail: Option<ComponentPartition>,
    pub index: Option<IndexSummary>,
    pub soul: Option<SoulSummary>,
    pub fibers: Option<FiberSummary>,
    pub splitting: Option<SplittingSummary>,
    pub slices: Option<Vec<SliceCheck>>,
    pub non_intersection: Option<NonIntersection>,
    pub distance_minimizing: Option<DistanceMinimizing>,
    pub checks: Vec<Check>,
    pub caveats: Vec<String>,
    pub tolerances: VerifyTolerances,
}

impl ZollReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Sweep plus verdict; `table` keeps the per-launch geodesics for later stages.
#[derive(Clone, Debug)]
pub struct Certification {
    pub report: ZollReport,
    pub launches: LaunchSet,
    pub table: ReturnTable,
}

/// Runs the first-return sweep and decides the verdict:
/// certified iff every launch returns without grazing, the relative spread of
/// `R_p` is within `ε_len` and every `δ⊥` within `ε⊥`; refuted if a launch
/// never returns or a check misses by more than 10×; inconclusive otherwise.
pub fn certify(spec: &ManifoldSpec, opts: &CertifyOptions) -> Result<Certification> {
    if opts.launches < MIN_LAUNCHES {
        return Err(ZollError::TooFewLaunches {
            found: opts.launches,
            minimum: MIN_LAUNCHES,
        });
    }
    opts.tolerances.validate()?;
    let tol = opts.tolerances;
    let launches = LaunchSet::sample(spec, opts.launches, opts.strategy, opts.seed)?;
    let table = first_return_map(spec, &launches, &opts.shoot_options(spec));
    let summary = table.summary();

    let mut refuted = Vec::new();
    let mut soft = Vec::new();
    for (p, o) in table.launches.iter().zip(&table.outcomes) {
        match o {
            Err(e @ ZollError::NoReturn(_)) => refuted.push(format!("launch {}: {e}", fmt_point(p))),
            Err(e) => soft.push(format!("launch {}: {e}", fmt_point(p))),
            Ok(_) => {}
        }
    }
    if summary.grazing > 0 {
        soft.push(format!("{} geodesics graze the boundary", summary.grazing));
    }
    let mean = summary.mean_return_time;
    let rel_spread = if summary.returned > 0 {
        summary.length_spread / mean
    } else {
        f64::NAN
    };
    if summary.returned > 0 {
        grade(
            &mut refuted,
            &mut soft,
            "relative length spread",
            rel_spread,
            tol.length,
        );
        grade(
            &mut refuted,
            &mut soft,
            "max δ⊥",
            summary.max_delta_perp,
            tol.orthogonality,
        );
    }
    let verdict = if !refuted.is_empty() {
        Verdict::Refuted
    } else if !soft.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Certified
    };
    let reasons = refuted.into_iter().chain(soft).collect();

    let mut report = ZollReport {
        name: spec.name.clone(),
        dimension: spec.dimension(),
        verdict,
        reasons,
        launches: launches.len(),
        seed: opts.seed,
        half_length: 0.5 * mean,
        length_spread: summary.length_spread,
        relative_length_spread: rel_spread,
        max_delta_perp: summary.max_delta_perp,
        grazing: summary.grazing,
        components: None,
        k: None,
        index_methods_agree: None,
        component_detail: None,
        index: None,
        soul: None,
        fibers: None,
        splitting: None,
        slices: None,
        non_intersection: None,
        distance_minimizing: None,
        checks: Vec::new(),
        caveats: vec![format!(
            "the verdict holds up to the stated tolerances on {} sampled launches",
            launches.len()
        )],
        tolerances: tol,
    };
    if table.all_returned() {
        report.checks.push(Check::new(
            "constant-length",
            rel_spread <= tol.length,
            format!("relative spread {rel_spread:.3e} (tolerance {:.1e})", tol.length),
        ));
        report.checks.push(Check::new(
            "orthogonal-arrival",
            summary.max_delta_perp <= tol.orthogonality,
            format!(
                "max δ⊥ {:.3e} (tolerance {:.1e})",
                summary.max_delta_perp, tol.orthogonality
            ),
        ));
        match boundary_components(spec, &table) {
            Ok(part) => {
                report.components = Some(part.count);
                report.checks.push(Check::new(
                    "component-pairing",
                    part.pairing_consistent,
                    format!("classes {}, pairing {:?}", part.count, part.pairing),
                ));
                report.component_detail = Some(part);
            }
            Err(e) => {
                if verdict == Verdict::Certified {
                    report.reasons.push(format!("contradiction: {e}"));
                }
                report.checks.push(Check::new("component-bound", false, e.to_string()));
            }
        }
    }
    Ok(Certification {
        report,
        launches,
        table,
    })
}

fn grade(refuted: &mut Vec<String>, soft: &mut Vec<String>, what: &str, value: f64, tol: f64) {
    if value > INCONCLUSIVE_FACTOR * tol || value.is_nan() {
        refuted.push(format!("{what} {value:.3e} exceeds 10 × {tol:.1e}"));
    } else if value > tol {
        soft.push(format!("{what} {value:.3e} exceeds {tol:.1e}"));
    }
}

pub(crate) fn fmt_point(p: &Point) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// Which stages `analyze` runs after certification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Analyses {
    pub jacobi: bool,
    pub soul: bool,
    pub fibers: bool,
    pub splitting: bool,
}

impl Analyses {
    pub const ALL: Analyses = Analyses {
        jacobi: true,
        soul: true,
        fibers: true,
        splitting: true,
    };
    pub const NONE: Analyses = Analyses {
        jacobi: false,
        soul: false,
        fibers: false,
        splitting: false,
    };
}

/// Full pipeline output: the report plus the bulk data behind it.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub report: ZollReport,
    pub launches: LaunchSet,
    pub table: ReturnTable,
    pub soul: Option<SoulCloud>,
    pub spot_checks: Vec<SpotCheck>,
}

/// Certification followed by the requested structure checks. Stages beyond
/// the sweep only run on certified inputs.
pub fn analyze(spec: &ManifoldSpec, opts: &CertifyOptions, which: Analyses) -> Result<Analysis> {
    let Certification {
        mut report,
        launches,
        table,
    } = certify(spec, opts)?;
    let mut out = Analysis {
        report: report.clone(),
        launches,
        table,
        soul: None,
        spot_checks: Vec::new(),
    };
    if report.verdict != Verdict::Certified {
        out.report = report;
        return Ok(out);
    }
    let shoot = opts.shoot_options(spec);
    let l = report.half_length;
    let n = spec.dimension();
    let two_sided = report.components == Some(2);

    let needs_k = which.jacobi || which.soul || which.fibers;
    let mut k = None;
    if needs_k {
        let picks = spot_indices(out.table.launches.len(), 3, opts.seed);
        let idx = index_analysis(spec, &out.table, &shoot, &picks, l);
        k = idx.focal_index;
        report.k = k;
        report.index_methods_agree = Some(idx.methods_agree);
        report.checks.extend(idx.checks(n, two_sided));
        out.spot_checks = idx.spot_checks.clone();
        report.index = Some(idx);
    }

    if which.soul {
        match build_soul(spec, &out.table, l) {
            Ok(cloud) => {
                let summary = cloud.summary(spec, &shoot);
                if let Some(kk) = k {
                    let check = soul_dimension_check(&cloud, n, kk);
                    report.checks.push(Check::new(
                        "soul-dimension",
                        check.is_ok(),
                        match &check {
                            Ok(()) => format!("d̂ = {} = n − 1 − k", cloud.dimension),
                            Err(m) => m.to_string(),
                        },
                    ));
                }
                if let Some(err) = summary.boundary_distance_error {
                    report.checks.push(Check::new(
                        "soul-distance",
                        err <= 2e-6 * l,
                        format!("max |dist(γ_p(L), ∂M) − L| = {err:.3e}"),
                    ));
                }
                report.soul = Some(summary);
                out.soul = Some(cloud);
            }
            Err(e) => report.checks.push(Check::new("soul-dimension", false, e.to_string())),
        }
        report.caveats.push(
            "the soul is reconstructed as a point cloud: embeddedness is only supported by the absence of detected self-intersection at sampling resolution".into(),
        );
    }

    if which.fibers {
        if let Some(kk) = k {
            match fiber_analysis(spec, &out.table, &shoot, l, kk) {
                Ok(f) => {
                    report
                        .checks
                        .push(Check::new("fiber-structure", f.passed, f.detail.clone()));
                    report.fibers = Some(f);
                }
                Err(e) => report.checks.push(Check::new("fiber-structure", false, e.to_string())),
            }
        }
        if k == Some(0) {
            match non_intersection(spec, &out.table, l) {
                Ok(ni) => {
                    report.checks.push(Check::new(
                        "non-intersection",
                        ni.passed,
                        format!("min separation of distinct geodesics {:.3e}", ni.min_separation),
                    ));
                    report.non_intersection = Some(ni);
                }
                Err(e) => report.checks.push(Check::new("non-intersection", false, e.to_string())),
            }
        }
    }

    if which.splitting {
        match splitting_residual(spec, &shoot, l) {
            Ok(s) => {
                report.checks.push(Check::new(
                    "metric-splitting",
                    s.max_residual <= 1e-6,
                    format!("max residual {:.3e} for t ≤ 0.95 L", s.max_residual),
                ));
                report.splitting = Some(s);
            }
            Err(e) => report.checks.push(Check::new("metric-splitting", false, e.to_string())),
        }
        let mut slices = Vec::new();
        for frac in [0.25, 0.5, 0.75] {
            match slice_distance_check(spec, &out.table, &shoot, l, frac * l, opts.seed) {
                Ok(s) => slices.push(s),
                Err(e) => report.checks.push(Check::new("slice-symmetry", false, e.to_string())),
            }
        }
        if !slices.is_empty() {
            let sym = slices.iter().map(|s| s.hausdorff).fold(0.0, f64::max);
            let dist = slices.iter().map(|s| s.distance_error).fold(0.0, f64::max);
            report.checks.push(Check::new(
                "slice-symmetry",
                sym <= 1e-6 * l,
                format!("max Hausdorff(Σ_t, Σ_(2L−t)) {sym:.3e}"),
            ));
            report.checks.push(Check::new(
                "slice-distance",
                dist <= 1e-5 * l,
                format!("max |dist(Σ_t, ∂M) − t| {dist:.3e}"),
            ));
            report.slices = Some(slices);
        }
        if two_sided {
            if let Some(part) = &report.component_detail {
                match distance_minimizing(spec, &out.table, part, &shoot, opts.seed) {
                    Ok(d) => {
                        report.checks.push(Check::new(
                            "distance-minimizing",
                            d.max_length_error <= 1e-6,
                            format!(
                                "measured distance {:.10}, max |R_p − d| {:.3e}",
                                d.measured_distance, d.max_length_error
                            ),
                        ));
                        report.distance_minimizing = Some(d);
                    }
                    Err(e) => report
                        .checks
                        .push(Check::new("distance-minimizing", false, e.to_string())),
                }
            }
        }
    }

    annotate(spec, &mut report);
    out.report = report;
    Ok(out)
}

/// Compares measured values with the catalog ground truth, when present.
fn annotate(spec: &ManifoldSpec, report: &mut ZollReport) {
    let Some(truth) = &spec.annotations else {
        return;
    };
    let mut mismatches = Vec::new();
    if let Some(l) = truth.half_length {
        if (report.half_length - l).abs() > 1e-6 * l {
            mismatches.push(format!("L = {} vs {l}", report.half_length));
        }
    }
    if let (Some(k), Some(kk)) = (truth.index, report.k) {
        if k != kk {
            mismatches.push(format!("k = {kk} vs {k}"));
        }
    }
    if let (Some(c), Some(cc)) = (truth.components, report.components) {
        if c != cc {
            mismatches.push(format!("components = {cc} vs {c}"));
        }
    }
    if let (Some(d), Some(s)) = (truth.soul_dimension, &report.soul) {
        if d != s.dimension {
            mismatches.push(format!("soul dimension = {} vs {d}", s.dimension));
        }
    }
    report.checks.push(Check::new(
        "annotations",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "measured L, k, components and soul dimension match".to_string()
        } else {
            mismatches.join("; ")
        },
    ));
}

/// `count` distinct launch indices chosen from the seed, in increasing order.
pub fn spot_indices(len: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut v = sample(&mut rng, len, count.min(len)).into_vec();
    v.sort_unstable();
    v
}

/// Union–find over `0..n`.
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so labels do not depend on merge order
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }

    /// Class labels numbered by first appearance.
    pub fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let r = self.find(i);
            if map[r] == usize::MAX {
                map[r] = next;
                next += 1;
            }
            out.push(map[r]);
        }
        (out, next)
    }
}

/// Single-linkage classes of `points` at chart distance `radius`.
pub(crate) fn cluster(spec: &ManifoldSpec, points: &[Point], radius: f64) -> (Vec<usize>, usize) {
    let mut dsu = Dsu::new(points.len());
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if spec.chart_distance(&points[i], &points[j]) <= radius {
                dsu.union(i, j);
            }
        }
    }
    dsu.labels()
}

/// Sweep extended by the arrival points, so that it is closed under `ℐ`
/// up to duplicates within `merge` chart distance. Returns the table and,
/// per entry, the index of its partner.
pub(crate) fn involution_closure(
    spec: &ManifoldSpec,
    table: &ReturnTable,
    shoot: &ShootOptions,
    merge: f64,
) -> Result<(ReturnTable, Vec<usize>)> {
    let paths: Vec<_> = table
        .outcomes
        .iter()
        .cloned()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut points: Vec<Point> = table.launches.clone();
    let mut extra = Vec::new();
    for p in &paths {
        let known = points
            .iter()
            .chain(extra.iter())
            .any(|q| spec.chart_distance(q, &p.arrival) <= merge);
        if !known {
            extra.push(p.arrival.clone());
        }
    }
    let mut outcomes: Vec<_> = paths.into_iter().map(Ok).collect();
    if !extra.is_empty() {
        let set = LaunchSet::explicit(spec, &extra)?;
        let more = first_return_map(spec, &set, shoot);
        points.extend(more.launches);
        outcomes.extend(more.outcomes);
    }
    let closed = ReturnTable {
        launches: points,
        outcomes,
    };
    let mut partner = Vec::with_capacity(closed.launches.len());
    for o in &closed.outcomes {
        let path = o.as_ref().map_err(|e| e.clone())?;
        let (j, d) = nearest(spec, &closed.launches, &path.arrival);
        if d > merge {
            return Err(ZollError::InvalidInput(format!(
                "arrival {} has no partner launch within {merge:.1e}",
                fmt_point(&path.arrival)
            )));
        }
        partner.push(j);
    }
    Ok((closed, partner))
}

pub(crate) fn nearest(spec: &ManifoldSpec, points: &[Point], x: &Point) -> (usize, f64) {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, spec.chart_distance(p, x)))
        .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}
