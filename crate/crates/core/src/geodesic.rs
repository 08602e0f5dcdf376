//! Unit-speed geodesics launched along the inward normal and their first
//! return to the boundary.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZollError};
use crate::geometry::connection::christoffel_symbols;
use crate::geometry::{BoundaryPiece, ManifoldSpec, Point};
use crate::ode::{dense_step, fixed_step, DenseSegment, Dopri5, OdeSystem, Tolerances};

/// Local minima of `b` below this without a sign change count as tangential
/// approaches.
pub const GRAZING_THRESHOLD: f64 = 1e-6;
const SCAN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions {
    pub tol: Tolerances,
    pub t_max: f64,
    pub grazing_threshold: f64,
}

impl ShootOptions {
    pub fn for_spec(spec: &ManifoldSpec) -> Self {
        let diam = spec.domain.diameter();
        let shortest = spec.deck_maps.iter().map(|d| spec.period(d.axis)).fold(diam, f64::min);
        ShootOptions {
            tol: Tolerances {
                rtol: 1e-10,
                atol: 1e-12,
                h_max: 0.1 * shortest,
            },
            t_max: 50.0 * diam,
            grazing_threshold: GRAZING_THRESHOLD,
        }
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.tol.rtol = rtol;
        self.tol.atol = rtol * 1e-2;
        self
    }
}

/// `x' = v`, `v'^k = −Γ^k_ij v^i v^j` on the state `(x, v)`.
pub struct GeodesicSystem<'a> {
    pub spec: &'a ManifoldSpec,
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.spec.dimension()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.spec.dimension();
        let x = Point::from_column_slice(&y[..n]);
        self.spec.check_chart(&x)?;
        dy[..n].copy_from_slice(&y[n..]);
        if self.spec.metric.is_flat() {
            dy[n..].fill(0.0);
            return Ok(());
        }
        let gamma = christoffel_symbols(self.spec.metric.as_ref(), &x)?;
        gamma.contract(&y[n..], &y[n..], &mut dy[n..]);
        for d in &mut dy[n..] {
            *d = -*d;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub x: Point,
    pub v: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grazing {
    pub t: f64,
    pub b_min: f64,
}

/// Geodesic from its launch to its first return, with dense output.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub launch: Point,
    pub launch_velocity: Point,
    /// Accepted step endpoints, in the fundamental domain.
    pub samples: Vec<PathSample>,
    segments: Vec<DenseSegment>,
    pub return_time: f64,
    pub arrival: Point,
    pub arrival_velocity: Point,
    /// `g(γ′(R_p), ν_q)`; −1 for an exactly orthogonal arrival.
    pub arrival_cosine: f64,
    pub delta_perp: f64,
    pub grazing: Vec<Grazing>,
}

impl GeodesicPath {
    pub fn dimension(&self) -> usize {
        self.launch.len()
    }

    pub fn is_grazing(&self) -> bool {
        !self.grazing.is_empty()
    }

    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    /// Position and velocity at time `t ∈ [0, R_p]`, in the fundamental domain.
    pub fn state_at(&self, spec: &ManifoldSpec, t: f64) -> Result<(Point, Point)> {
        let t = t.clamp(0.0, self.return_time);
        let i = self
            .segments
            .partition_point(|s| s.t1() < t)
            .min(self.segments.len() - 1);
        let y = self.segments[i].eval(t);
        let n = self.dimension();
        let x = Point::from_column_slice(&y[..n]);
        let v = Point::from_column_slice(&y[n..]);
        let (x, d) = spec.normalize_transform(&x)?;
        Ok((x, d * v))
    }

    pub fn midpoint(&self, spec: &ManifoldSpec) -> Result<Point> {
        Ok(self.state_at(spec, 0.5 * self.return_time)?.0)
    }

    pub fn max_speed_drift(&self, spec: &ManifoldSpec) -> f64 {
        self.samples
            .iter()
            .map(|s| (spec.inner(&s.x, &s.v, &s.v) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Sum over steps of `∫ |γ′|_g dt` by 3-point Gauss–Legendre on the
    /// dense output.
    pub fn arc_length(&self, spec: &ManifoldSpec) -> f64 {
        let n = self.dimension();
        let nodes = [
            (0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
            (0.5, 8.0 / 18.0),
            (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
        ];
        self.segments
            .iter()
            .map(|s| {
                s.h * nodes
                    .iter()
                    .map(|(th, w)| {
                        let y = s.eval_theta(*th);
                        let x = Point::from_column_slice(&y[..n]);
                        let v = Point::from_column_slice(&y[n..]);
                        w * spec.norm(&x, &v)
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// CSV with columns `t, x1..xn, v1..vn` over the accepted steps.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let n = self.dimension();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("v{i}")));
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![format!("{:.17e}", s.t)];
            row.extend(s.x.iter().map(|c| format!("{c:.17e}")));
            row.extend(s.v.iter().map(|c| format!("{c:.17e}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Chart polyline resampled at `count` equal time steps.
    pub fn polyline(&self, spec: &ManifoldSpec, count: usize) -> Result<Polyline> {
        let count = count.max(2);
        let mut t = Vec::with_capacity(count);
        let mut x = Vec::with_capacity(count);
        for i in 0..count {
            let ti = self.return_time * i as f64 / (count - 1) as f64;
            t.push(ti);
            x.push(self.state_at(spec, ti)?.0.iter().copied().collect());
        }
        Ok(Polyline {
            launch: self.launch.iter().copied().collect(),
            return_time: self.return_time,
            t,
            x,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub launch: Vec<f64>,
    pub return_time: f64,
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

/// `‖γ′(R_p) − g(γ′(R_p), ν_q) ν_q‖_g`.
pub fn arrival_orthogonality(path: &GeodesicPath) -> f64 {
    path.delta_perp
}

fn split(y: &[f64], n: usize) -> (Point, Point) {
    (
        Point::from_column_slice(&y[..n]),
        Point::from_column_slice(&y[n..2 * n]),
    )
}

fn join(x: &Point, v: &Point) -> Vec<f64> {
    x.iter().chain(v.iter()).copied().collect()
}

enum Scan {
    Crossing(f64, f64),
    Quiet,
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn scan_segment(
    spec: &ManifoldSpec,
    seg: &DenseSegment,
    first: bool,
    threshold: f64,
    grazing: &mut Vec<Grazing>,
) -> Scan {
    let n = spec.dimension();
    let b_at = |theta: f64| {
        let (x, _) = split(&seg.eval_theta(theta), n);
        spec.boundary_value(&x)
    };
    let mut prev_b = 0.0;
    let mut prev_db = 0.0;
    for j in 0..=SCAN_POINTS {
        let theta = j as f64 / SCAN_POINTS as f64;
        let (x, v) = split(&seg.eval_theta(theta), n);
        let b = spec.boundary_value(&x);
        let db = spec.boundary.gradient(&x).dot(&v);
        if j > 0 {
            let lo = (j - 1) as f64 / SCAN_POINTS as f64;
            let launching = first && j == 1;
            if !launching && prev_b > 0.0 && b <= 0.0 {
                return Scan::Crossing(lo, theta);
            }
            if prev_db < 0.0 && db >= 0.0 {
                let (tm, bm) = golden_min(b_at, lo, theta);
                if bm <= 0.0 && !launching {
                    return Scan::Crossing(lo, tm);
                }
                if bm > 0.0 && bm < threshold {
                    grazing.push(Grazing {
                        t: seg.t0 + tm * seg.h,
                        b_min: bm,
                    });
                }
            }
        }
        prev_b = b;
        prev_db = db;
    }
    Scan::Quiet
}

/// Integrates the geodesic through `(x0, v0)` until it first meets the
/// boundary coming from the interior.
pub fn trace(spec: &ManifoldSpec, x0: &Point, v0: &Point, opts: &ShootOptions) -> Result<GeodesicPath> {
    let n = spec.dimension();
    let sys = GeodesicSystem { spec };
    let mut solver = Dopri5::new(&sys, 0.0, join(x0, v0), opts.tol)?;
    let mut samples = vec![PathSample {
        t: 0.0,
        x: x0.clone(),
        v: v0.clone(),
    }];
    let mut segments = Vec::new();
    let mut grazing = Vec::new();
    // only a launch from the boundary may start with b ≤ 0 in its first bracket
    let mut first = spec.boundary_value(x0) <= spec.boundary.eps;
    loop {
        if solver.t() >= opts.t_max {
            return Err(ZollError::NoReturn(opts.t_max));
        }
        let seg = solver.step_until(opts.t_max)?.clone();
        if let Scan::Crossing(lo, hi) = scan_segment(spec, &seg, first, opts.grazing_threshold, &mut grazing) {
            return finish(spec, &sys, x0, v0, samples, segments, grazing, &seg, lo, hi);
        }
        segments.push(seg);
        let (x, v) = split(solver.y(), n);
        let (xn, d) = spec.normalize_transform(&x)?;
        let vn = &d * &v;
        if xn != x {
            solver.reset_state(join(&xn, &vn))?;
        }
        samples.push(PathSample {
            t: solver.t(),
            x: xn,
            v: vn,
        });
        first = false;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &ManifoldSpec,
    sys: &GeodesicSystem,
    x0: &Point,
    v0: &Point,
    mut samples: Vec<PathSample>,
    mut segments: Vec<DenseSegment>,
    grazing: Vec<Grazing>,
    seg: &DenseSegment,
    mut lo: f64,
    mut hi: f64,
) -> Result<GeodesicPath> {
    let n = spec.dimension();
    let b_at = |theta: f64| spec.boundary_value(&split(&seg.eval_theta(theta), n).0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if b_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton on exact sub-steps of the accepted step
    let y0 = seg.eval_theta(0.0);
    let mut tau = 0.5 * (lo + hi) * seg.h;
    let mut b = f64::INFINITY;
    for _ in 0..8 {
        let y = fixed_step(sys, seg.t0, &y0, tau)?;
        let (x, v) = split(&y, n);
        b = spec.boundary_value(&x);
        if b.abs() <= 0.01 * spec.boundary.eps {
            break;
        }
        let slope = spec.boundary.gradient(&x).dot(&v);
        if slope == 0.0 {
            break;
        }
        tau -= b / slope;
    }
    if b.abs() > spec.boundary.eps {
        return Err(ZollError::NotBoundaryPoint(b));
    }
    let (y1, last) = dense_step(sys, seg.t0, &y0, tau)?;
    segments.push(last);
    let (q, w) = split(&y1, n);
    let (q, d) = spec.normalize_transform(&q)?;
    let w = d * w;
    let nu = spec.inward_normal(&q)?;
    let cos = spec.inner(&q, &w, &nu);
    let tangential = &w - &nu * cos;
    let delta_perp = spec.norm(&q, &tangential);
    let return_time = seg.t0 + tau;
    samples.push(PathSample {
        t: return_time,
        x: q.clone(),
        v: w.clone(),
    });
    Ok(GeodesicPath {
        launch: x0.clone(),
        launch_velocity: v0.clone(),
        samples,
        segments,
        return_time,
        arrival: q,
        arrival_velocity: w,
        arrival_cosine: cos,
        delta_perp,
        grazing,
    })
}

/// The orthogonal geodesic `γ_p` up to its first return `R_p`.
pub fn shoot(spec: &ManifoldSpec, p: &Point, opts: &ShootOptions) -> Result<GeodesicPath> {
    let b = spec.boundary_value(p);
    if b.abs() > spec.boundary.eps {
        return Err(ZollError::NotBoundaryPoint(b));
    }
    if !(opts.t_max > 0.0) {
        return Err(ZollError::InvalidInput("t_max must be positive".into()));
    }
    let nu = spec.inward_normal(p)?;
    trace(spec, p, &nu, opts)
}

/// `p ↦ γ_p(R_p)`.
pub fn involution(spec: &ManifoldSpec, p: &Point, opts: &ShootOptions) -> Result<Point> {
    Ok(shoot(spec, p, opts)?.arrival)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingStrategy {
    UniformParameter,
    LowDiscrepancy,
    Grid,
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Launch {
    pub point: Point,
    pub piece: usize,
    pub param: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LaunchSet {
    pub launches: Vec<Launch>,
    pub strategy: SamplingStrategy,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(count: usize, dim: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            (0..dim)
                .map(|j| (radical_inverse(i as u64 + 1, PRIMES[j]) + shift[j]).fract())
                .collect()
        })
        .collect()
}

/// Metric length of each parameter axis of a piece, averaged over a few
/// transversal offsets.
fn axis_extents(spec: &ManifoldSpec, piece: &BoundaryPiece) -> Vec<f64> {
    const STEPS: usize = 16;
    let d = piece.param_dim;
    (0..d)
        .map(|j| {
            let mut total = 0.0;
            for off in [0.25, 0.5, 0.75] {
                let mut u = vec![off; d];
                u[j] = 0.0;
                let mut prev = piece.point(&u);
                for s in 1..=STEPS {
                    u[j] = s as f64 / STEPS as f64;
                    let x = piece.point(&u);
                    total += spec.local_distance(&prev, &x);
                    prev = x;
                }
            }
            (total / 3.0).max(1e-12)
        })
        .collect()
}

/// Factorization of `count` into `extents.len()` axis counts whose metric
/// spacings `extents[j] / m[j]` are as even as possible. Returns the factors
/// and the ratio of the largest to the smallest spacing.
fn balanced_factors(count: usize, extents: &[f64]) -> (Vec<usize>, f64) {
    fn go(rest: usize, ext: &[f64], cur: &mut Vec<usize>, best: &mut (Vec<usize>, f64)) {
        if cur.len() + 1 == ext.len() {
            cur.push(rest);
            let sp: Vec<f64> = cur.iter().zip(ext).map(|(&m, &e)| e / m as f64).collect();
            let hi = sp.iter().copied().fold(0.0, f64::max);
            let lo = sp.iter().copied().fold(f64::INFINITY, f64::min);
            if hi / lo < best.1 {
                *best = (cur.clone(), hi / lo);
            }
            cur.pop();
            return;
        }
        for m in (1..=rest).filter(|&m| rest.is_multiple_of(m)) {
            cur.push(m);
            go(rest / m, ext, cur, best);
            cur.pop();
        }
    }
    let mut best = (vec![count], f64::INFINITY);
    go(count.max(1), extents, &mut Vec::new(), &mut best);
    best
}

fn product_grid(res: &[usize]) -> Vec<Vec<f64>> {
    let total: usize = res.iter().product();
    (0..total)
        .map(|mut i| {
            res.iter()
                .map(|&m| {
                    let k = i % m;
                    i /= m;
                    (k as f64 + 0.5) / m as f64
                })
                .collect()
        })
        .collect()
}

fn uniform_params(spec: &ManifoldSpec, piece: &BoundaryPiece, count: usize) -> Vec<Vec<f64>> {
    let dim = piece.param_dim;
    if dim == 1 {
        return (0..count).map(|i| vec![(i as f64 + 0.5) / count as f64]).collect();
    }
    let (res, ratio) = balanced_factors(count, &axis_extents(spec, piece));
    if ratio > 4.0 {
        // counts without a well-proportioned factorization use the plain Halton set
        return halton(count, dim, &vec![0.0; dim]);
    }
    product_grid(&res)
}

impl LaunchSet {
    pub fn len(&self) -> usize {
        self.launches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.launches.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.launches.iter().map(|l| l.point.clone()).collect()
    }

    fn build(
        spec: &ManifoldSpec,
        strategy: SamplingStrategy,
        mut params: impl FnMut(usize, usize, usize) -> Vec<Vec<f64>>,
        count: usize,
    ) -> Result<Self> {
        let pieces = spec.pieces.len();
        if pieces == 0 {
            return Err(ZollError::InvalidInput(format!(
                "`{}` has no boundary pieces",
                spec.name
            )));
        }
        let mut launches = Vec::with_capacity(count);
        for (k, piece) in spec.pieces.iter().enumerate() {
            let share = count / pieces + usize::from(k < count % pieces);
            for u in params(k, share, piece.param_dim) {
                let point = spec.project_to_boundary(&piece.point(&u))?;
                launches.push(Launch {
                    point,
                    piece: k,
                    param: u,
                });
            }
        }
        Ok(LaunchSet { launches, strategy })
    }

    /// `count` launches split evenly across boundary pieces.
    pub fn sample(spec: &ManifoldSpec, count: usize, strategy: SamplingStrategy, seed: u64) -> Result<Self> {
        match strategy {
            SamplingStrategy::UniformParameter => Self::build(
                spec,
                strategy,
                |k, m, _| uniform_params(spec, &spec.pieces[k], m),
                count,
            ),
            SamplingStrategy::LowDiscrepancy => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Self::build(
                    spec,
                    strategy,
                    |_, m, d| {
                        let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                        halton(m, d, &shift)
                    },
                    count,
                )
            }
            other => Err(ZollError::InvalidInput(format!(
                "{other:?} launch sets are built with their own constructors"
            ))),
        }
    }

    /// Product grid on every piece, `resolution[j]` points on parameter axis `j`.
    pub fn grid(spec: &ManifoldSpec, resolution: &[usize]) -> Result<Self> {
        if spec.pieces.iter().any(|p| p.param_dim != resolution.len()) {
            return Err(ZollError::InvalidInput(
                "grid resolution does not match the boundary parametrization".into(),
            ));
        }
        let per_piece: usize = resolution.iter().product();
        Self::build(
            spec,
            SamplingStrategy::Grid,
            |_, _, _| product_grid(resolution),
            per_piece * spec.pieces.len(),
        )
    }

    /// Boundary points given directly (e.g. arrivals of a previous sweep).
    pub fn explicit(spec: &ManifoldSpec, points: &[Point]) -> Result<Self> {
        let launches = points
            .iter()
            .map(|p| {
                Ok(Launch {
                    point: spec.project_to_boundary(p)?,
                    piece: usize::MAX,
                    param: vec![],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LaunchSet {
            launches,
            strategy: SamplingStrategy::Explicit,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ReturnTable {
    pub launches: Vec<Point>,
    pub outcomes: Vec<std::result::Result<GeodesicPath, ZollError>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub launches: usize,
    pub returned: usize,
    pub failures: Vec<String>,
    pub grazing: usize,
    pub min_return_time: f64,
    pub max_return_time: f64,
    pub mean_return_time: f64,
    pub length_spread: f64,
    pub max_delta_perp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnRecord {
    pub launch: Vec<f64>,
    pub return_time: Option<f64>,
    pub arrival: Option<Vec<f64>>,
    pub delta_perp: Option<f64>,
    pub grazing: bool,
    pub error: Option<String>,
}

impl ReturnTable {
    pub fn paths(&self) -> impl Iterator<Item = &GeodesicPath> {
        self.outcomes.iter().filter_map(|o| o.as_ref().ok())
    }

    pub fn all_returned(&self) -> bool {
        self.outcomes.iter().all(|o| o.is_ok())
    }

    pub fn records(&self) -> Vec<ReturnRecord> {
        self.launches
            .iter()
            .zip(&self.outcomes)
            .map(|(p, o)| match o {
                Ok(path) => ReturnRecord {
                    launch: p.iter().copied().collect(),
                    return_time: Some(path.return_time),
                    arrival: Some(path.arrival.iter().copied().collect()),
                    delta_perp: Some(path.delta_perp),
                    grazing: path.is_grazing(),
                    error: None,
                },
                Err(e) => ReturnRecord {
                    launch: p.iter().copied().collect(),
                    return_time: None,
                    arrival: None,
                    delta_perp: None,
                    grazing: false,
                    error: Some(e.to_string()),
                },
            })
            .collect()
    }

    pub fn summary(&self) -> SweepSummary {
        let times: Vec<f64> = self.paths().map(|p| p.return_time).collect();
        let (min, max) = times
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
        let mean = if times.is_empty() {
            f64::NAN
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        };
        SweepSummary {
            launches: self.launches.len(),
            returned: times.len(),
            failures: self
                .outcomes
                .iter()
                .filter_map(|o| o.as_ref().err().map(|e| e.to_string()))
                .collect(),
            grazing: self.paths().filter(|p| p.is_grazing()).count(),
            min_return_time: min,
            max_return_time: max,
            mean_return_time: mean,
            length_spread: max - min,
            max_delta_perp: self.paths().map(|p| p.delta_perp).fold(0.0, f64::max),
        }
    }
}

/// Shoots every launch in parallel; results keep the launch order.
pub fn first_return_map(spec: &ManifoldSpec, launches: &LaunchSet, opts: &ShootOptions) -> ReturnTable {
    let points = launches.points();
    let outcomes = points.par_iter().map(|p| shoot(spec, p, opts)).collect();
    ReturnTable {
        launches: points,
        outcomes,
    }
}
