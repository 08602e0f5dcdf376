use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{involution_closure, nearest, spot_indices, ComponentPartition};
use crate::error::{Result, ZollError};
use crate::geodesic::{first_return_map, trace, LaunchSet, ReturnTable, ShootOptions};
use crate::geometry::{ManifoldSpec, Point};

/// Polar resolution of the direction fans.
const FAN_ANGLES: usize = 12;
/// Parameter step of the five-point stencils.
const STENCIL_H: f64 = 2e-3;
const PROBE_RTOL: f64 = 1e-12;

/// g-orthonormal basis at `x` whose first vector is `axis` normalized.
fn frame_along(spec: &ManifoldSpec, x: &Point, axis: &Point) -> DMatrix<f64> {
    let n = spec.dimension();
    let mut cols: Vec<Point> = vec![axis / spec.norm(x, axis)];
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        let mut c = Point::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
        for b in &cols {
            c -= b * spec.inner(x, b, &c);
        }
        let len = spec.norm(x, &c);
        if len > 1e-6 {
            cols.push(c / len);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Unit directions around `axis` with polar angle up to `max_angle`.
fn fan(spec: &ManifoldSpec, x: &Point, axis: &Point, max_angle: f64, closed: bool) -> Vec<Point> {
    let e = frame_along(spec, x, axis);
    let m = e.ncols() - 1;
    // azimuths: ± each complement axis and the diagonals of pairs
    let mut az: Vec<Point> = Vec::new();
    for i in 0..m {
        for s in [1.0, -1.0] {
            az.push(e.column(i + 1) * s);
        }
        for j in (i + 1)..m {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                az.push((e.column(i + 1) * si + e.column(j + 1) * sj) / 2f64.sqrt());
            }
        }
    }
    let a0 = e.column(0).into_owned();
    let mut out = vec![a0.clone()];
    let steps = if closed { FAN_ANGLES } else { FAN_ANGLES - 1 };
    for i in 1..=steps {
        let a = max_angle * i as f64 / FAN_ANGLES as f64;
        if closed && i == FAN_ANGLES && (max_angle - std::f64::consts::PI).abs() < 1e-12 {
            out.push(-&a0);
            break;
        }
        for d in &az {
            out.push(&a0 * a.cos() + d * a.sin());
        }
    }
    out
}

/// Shortest time to the boundary over a fan of geodesics from the interior
/// point `x`, covering every direction and including `axis` itself.
pub(crate) fn fan_distance(spec: &ManifoldSpec, x: &Point, axis: &Point, shoot: &ShootOptions) -> Result<f64> {
    let dirs = fan(spec, x, axis, std::f64::consts::PI, true);
    // the axis bounds the rest, so long tangential geodesics are cut short
    let first = trace(spec, x, &dirs[0], shoot).ok().map(|p| p.return_time);
    let mut capped = *shoot;
    if let Some(t) = first {
        capped.t_max = capped.t_max.min(t * (1.0 + 1e-9) + 1e-12);
    }
    let best = dirs[1..]
        .par_iter()
        .filter_map(|v| trace(spec, x, v, &capped).ok().map(|p| p.return_time))
        .reduce(|| first.unwrap_or(f64::INFINITY), f64::min);
    if best.is_finite() {
        Ok(best)
    } else {
        Err(ZollError::InvalidInput("no fan geodesic reached the boundary".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceLength {
    pub piece: usize,
    pub t: f64,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplittingSummary {
    pub t_grid: Vec<f64>,
    pub probes: usize,
    /// `max |g(∂ℱ/∂t, ∂ℱ/∂t) − 1|`.
    pub speed_residual: f64,
    /// `max |g(∂ℱ/∂t, ∂ℱ/∂pⁱ)| / |∂ℱ/∂pⁱ(0)|`.
    pub cross_residual: f64,
    pub max_residual: f64,
    /// Length of the image of a one-parameter boundary piece at time `t`.
    pub slice_lengths: Vec<SliceLength>,
}

fn probe_params(dim: usize) -> Vec<Vec<f64>> {
    let per = match dim {
        1 => 8,
        2 => 3,
        _ => 2,
    };
    let total = per_pow(per, dim);
    (0..total)
        .map(|mut i| {
            (0..dim)
                .map(|_| {
                    let k = i % per;
                    i /= per;
                    (k as f64 + 0.5) / per as f64
                })
                .collect()
        })
        .collect()
}

fn per_pow(b: usize, e: usize) -> usize {
    (0..e).fold(1, |a, _| a * b)
}

const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// Checks `g = dt² ⊕ g_t` along `ℱ(p, t) = γ_p(t)`: unit speed in `t` and
/// `∂ℱ/∂t ⊥ ∂ℱ/∂pⁱ`, with `∂ℱ/∂pⁱ` from five-point stencils in the boundary
/// parameters, for `t ∈ [0.05 L, 0.95 L]`.
pub fn splitting_residual(spec: &ManifoldSpec, shoot: &ShootOptions, half_length: f64) -> Result<SplittingSummary> {
    let fine = shoot.with_rtol(PROBE_RTOL);
    let t_grid: Vec<f64> = [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|f| f * half_length).collect();
    let mut speed: f64 = 0.0;
    let mut cross: f64 = 0.0;
    let mut probes = 0;
    let mut slice_lengths = Vec::new();
    for (k, piece) in spec.pieces.iter().enumerate() {
        let d = piece.param_dim;
        let bases = probe_params(d);
        // per base: center, then stencil points axis by axis
        let mut pts = Vec::new();
        for u in &bases {
            pts.push(piece.point(u));
            for i in 0..d {
                for (s, _) in STENCIL {
                    let mut w = u.clone();
                    w[i] += s * STENCIL_H;
                    pts.push(piece.point(&w));
                }
            }
        }
        let set = LaunchSet::explicit(spec, &pts)?;
        let table = first_return_map(spec, &set, &fine);
        let paths = table.outcomes.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
        let stride = 1 + 4 * d;
        let mut lengths = vec![0.0; t_grid.len()];
        for b in 0..bases.len() {
            probes += 1;
            let group = &paths[b * stride..(b + 1) * stride];
            let deriv = |t: f64, i: usize| -> Result<(Point, Point, Point)> {
                let (x0, v0) = group[0].state_at(spec, t)?;
                let mut acc = Point::zeros(x0.len());
                for (j, (_, c)) in STENCIL.iter().enumerate() {
                    let (xj, _) = group[1 + 4 * i + j].state_at(spec, t)?;
                    acc += spec.chart_delta(&x0, &xj) * *c;
                }
                Ok((x0, v0, acc / (12.0 * STENCIL_H)))
            };
            for i in 0..d {
                let (p0, _, d0) = deriv(0.0, i)?;
                let scale = spec.norm(&p0, &d0);
                for (ti, &t) in t_grid.iter().enumerate() {
                    let (x, v, dp) = deriv(t, i)?;
                    if i == 0 {
                        speed = speed.max((spec.inner(&x, &v, &v) - 1.0).abs());
                    }
                    cross = cross.max(spec.inner(&x, &v, &dp).abs() / scale);
                    if d == 1 {
                        lengths[ti] += spec.norm(&x, &dp) / bases.len() as f64;
                    }
                }
            }
        }
        if d == 1 {
            for (ti, &t) in t_grid.iter().enumerate() {
                slice_lengths.push(SliceLength {
                    piece: k,
                    t,
                    length: lengths[ti],
                });
            }
        }
    }
    Ok(SplittingSummary {
        t_grid,
        probes,
        speed_residual: speed,
        cross_residual: cross,
        max_residual: speed.max(cross),
        slice_lengths,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceCheck {
    pub t: f64,
    pub samples: usize,
    /// Hausdorff distance between `{γ_p(t)}` and `{γ_p(2L − t)}`.
    pub hausdorff: f64,
    /// `max |dist(γ_p(t), ∂M) − t|` over the re-shot samples.
    pub distance_error: f64,
}

/// `Σ_t = Σ_{2L−t}` on the `ℐ`-closed sweep, and nearest-boundary distance
/// `t` of a few slice points from fans of geodesics.
pub fn slice_distance_check(
    spec: &ManifoldSpec,
    table: &ReturnTable,
    shoot: &ShootOptions,
    half_length: f64,
    t: f64,
    seed: u64,
) -> Result<SliceCheck> {
    if !(t > 0.0 && t <= half_length) {
        return Err(ZollError::InvalidInput(format!("slice time {t} outside (0, L]")));
    }
    let (closed, _) = involution_closure(spec, table, shoot, 1e-6 * half_length)?;
    let mut near = Vec::new();
    let mut far = Vec::new();
    for path in closed.paths() {
        near.push(path.state_at(spec, t)?.0);
        far.push(path.state_at(spec, 2.0 * half_length - t)?.0);
    }
    let h = hausdorff(spec, &near, &far);

    let mut err: f64 = 0.0;
    for i in spot_indices(closed.launches.len(), 4, seed) {
        let path = closed.outcomes[i].as_ref().map_err(|e| e.clone())?;
        let (x, v) = path.state_at(spec, t)?;
        let d = fan_distance(spec, &x, &(-v), shoot)?;
        err = err.max((d - t).abs());
    }
    Ok(SliceCheck {
        t,
        samples: near.len(),
        hausdorff: h,
        distance_error: err,
    })
}

fn hausdorff(spec: &ManifoldSpec, a: &[Point], b: &[Point]) -> f64 {
    let one = |a: &[Point], b: &[Point]| a.iter().map(|x| nearest(spec, b, x).1).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonIntersection {
    pub geodesics: usize,
    pub pairs: usize,
    pub min_separation: f64,
    pub passed: bool,
}

/// Smallest chart distance between distinct geodesics of the sweep (a
/// geodesic and its `ℐ`-partner are the same curve), from polylines.
pub fn non_intersection(spec: &ManifoldSpec, table: &ReturnTable, half_length: f64) -> Result<NonIntersection> {
    let paths = table
        .outcomes
        .iter()
        .cloned()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let lines: Vec<Vec<Point>> = paths
        .iter()
        .map(|p| {
            p.polyline(spec, 33)
                .map(|pl| pl.x.into_iter().map(Point::from_vec).collect())
        })
        .collect::<Result<_>>()?;
    let tol = 1e-6 * half_length;
    let partner: Vec<Option<usize>> = paths
        .iter()
        .map(|p| {
            let (j, d) = nearest(spec, &table.launches, &p.arrival);
            (d <= tol).then_some(j)
        })
        .collect();
    let m = lines.len();
    let rows: Vec<(usize, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut count = 0;
            let mut best = f64::INFINITY;
            for j in (i + 1)..m {
                if partner[i] == Some(j) || partner[j] == Some(i) {
                    continue;
                }
                count += 1;
                best = best.min(polyline_distance(spec, &lines[i], &lines[j], best));
            }
            (count, best)
        })
        .collect();
    let pairs = rows.iter().map(|r| r.0).sum();
    let min_separation = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(NonIntersection {
        geodesics: m,
        pairs,
        min_separation,
        passed: min_separation > tol,
    })
}

fn polyline_distance(spec: &ManifoldSpec, a: &[Point], b: &[Point], cutoff: f64) -> f64 {
    let lb = b
        .windows(2)
        .map(|w| spec.chart_distance(&w[0], &w[1]))
        .fold(0.0, f64::max);
    let mut best = cutoff;
    for w in a.windows(2) {
        let p0 = &w[0];
        let p1 = spec.nearest_image(p0, &w[1]);
        let la = (&p1 - p0).norm();
        for v in b.windows(2) {
            let q0 = spec.nearest_image(p0, &v[0]);
            if (&q0 - p0).norm() - la - lb >= best {
                continue;
            }
            let q1 = spec.nearest_image(&q0, &v[1]);
            best = best.min(segment_distance(p0, &p1, &q0, &q1));
        }
    }
    best
}

/// Closest distance between segments `[p0, p1]` and `[q0, q1]`.
fn segment_distance(p0: &Point, p1: &Point, q0: &Point, q1: &Point) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    (p0 + d1 * s - (q0 + d2 * t)).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceMinimizing {
    /// `min` length of fan geodesics from one component to the other.
    pub measured_distance: f64,
    pub fan_launches: usize,
    pub max_length_error: f64,
}

/// With two boundary components: the distance between them, measured by
/// fans of geodesics from a few launches that end on the other component,
/// against every return time.
pub fn distance_minimizing(
    spec: &ManifoldSpec,
    table: &ReturnTable,
    part: &ComponentPartition,
    shoot: &ShootOptions,
    seed: u64,
) -> Result<DistanceMinimizing> {
    if part.count != 2 {
        return Err(ZollError::InvalidInput("needs exactly two boundary components".into()));
    }
    let picks = spot_indices(table.launches.len(), 4, seed);
    let mut measured = f64::INFINITY;
    for &i in &picks {
        let p = &table.launches[i];
        let nu = spec.inward_normal(p)?;
        let dirs = fan(spec, p, &nu, 0.5 * std::f64::consts::PI, false);
        let own = part.labels[i];
        let best = dirs
            .par_iter()
            .filter_map(|v| {
                let path = trace(spec, p, v, shoot).ok()?;
                let (j, _) = nearest(spec, &table.launches, &path.arrival);
                (part.labels[j] != own).then_some(path.return_time)
            })
            .reduce(|| f64::INFINITY, f64::min);
        measured = measured.min(best);
    }
    if !measured.is_finite() {
        return Err(ZollError::InvalidInput(
            "no fan geodesic reached the other component".into(),
        ));
    }
    let max_length_error = table
        .paths()
        .map(|p| (p.return_time - measured).abs())
        .fold(0.0, f64::max);
    Ok(DistanceMinimizing {
        measured_distance: measured,
        fan_launches: picks.len(),
        max_length_error,
    })
}
