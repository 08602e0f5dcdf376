//! Boundary-compatible Jacobi fields, focal instants and the Morse index.
//!
//! Fields are carried in a parallel orthonormal frame `E(t)` along the
//! geodesic whose last vector starts as the inward normal. In that frame the
//! Jacobi equation reads `a″ = R_f a` with `R_f = Eᵀ g ℛ_{γ′} E`.

pub mod index_form;

pub use index_form::{
    assemble_index_form, dense_spectrum, morse_index_quadratic, BandMatrix, IndexFormMatrix, QuadraticIndex, EPS_NEG,
};

use nalgebra::{DMatrix, SVD};
use serde::Serialize;

use crate::error::{Result, ZollError};
use crate::geodesic::{GeodesicPath, ShootOptions};
use crate::geometry::connection::{curvature_matrix, LocalGeometry};
use crate::geometry::{ManifoldSpec, Point};
use crate::ode::{DenseSegment, Dopri5, OdeSystem};

/// Rank-drop threshold `σ_min < FOCAL_RATIO · σ_max`.
pub const FOCAL_RATIO: f64 = 1e-7;
/// Focal instants closer than this fraction of `R_p` violate isolation.
pub const ISOLATION: f64 = 1e-4;
/// Instants within this fraction of `R_p` from an endpoint are not counted.
pub const ENDPOINT_WINDOW: f64 = 1e-6;
const SCAN_GRID: usize = 1024;

struct FrameSystem<'a> {
    spec: &'a ManifoldSpec,
}

/// Offsets into the flat state `[x, v, E, a, a′]`, matrices column-major.
struct Layout {
    n: usize,
}

impl Layout {
    fn len(&self) -> usize {
        2 * self.n + 3 * self.n * self.n
    }
    fn e(&self) -> usize {
        2 * self.n
    }
    fn a(&self) -> usize {
        2 * self.n + self.n * self.n
    }
    fn da(&self) -> usize {
        2 * self.n + 2 * self.n * self.n
    }
    fn mat(&self, y: &[f64], at: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.n, &y[at..at + self.n * self.n])
    }
}

/// Frame matrix of `w ↦ R(v, w)v`, symmetrized.
fn frame_curvature(
    spec: &ManifoldSpec,
    x: &Point,
    v: &Point,
    e: &DMatrix<f64>,
    local: &LocalGeometry,
) -> Result<DMatrix<f64>> {
    let n = spec.dimension();
    if spec.metric.is_flat() {
        return Ok(DMatrix::zeros(n, n));
    }
    let m = curvature_matrix(spec.metric.as_ref(), x, v.as_slice(), local)?;
    let rf = e.transpose() * &local.g * m * e;
    Ok((&rf + rf.transpose()) * 0.5)
}

impl OdeSystem for FrameSystem<'_> {
    fn dim(&self) -> usize {
        Layout {
            n: self.spec.dimension(),
        }
        .len()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.spec.dimension();
        let lay = Layout { n };
        let x = Point::from_column_slice(&y[..n]);
        let v = Point::from_column_slice(&y[n..2 * n]);
        let local = self.spec.local(&x)?;
        let e = lay.mat(y, lay.e());
        let a = lay.mat(y, lay.a());
        let da = lay.mat(y, lay.da());

        dy[..n].copy_from_slice(v.as_slice());
        let mut acc = vec![0.0; n];
        local.gamma.contract(v.as_slice(), v.as_slice(), &mut acc);
        for k in 0..n {
            dy[n + k] = -acc[k];
        }
        let gv = local.gamma.partial_contract(v.as_slice());
        let de = -(&gv * &e);
        dy[lay.e()..lay.a()].copy_from_slice(de.as_slice());
        dy[lay.a()..lay.da()].copy_from_slice(da.as_slice());
        let rf = frame_curvature(self.spec, &x, &v, &e, &local)?;
        let dda = rf * a;
        dy[lay.da()..].copy_from_slice(dda.as_slice());
        Ok(())
    }
}

/// Frame data at one instant, with chart quantities in the fundamental domain.
#[derive(Clone, Debug)]
pub struct FrameState {
    pub t: f64,
    pub x: Point,
    pub v: Point,
    /// Parallel orthonormal frame, one chart vector per column.
    pub e: DMatrix<f64>,
    /// Frame components of the Jacobi fields, one field per column.
    pub a: DMatrix<f64>,
    pub da: DMatrix<f64>,
}

impl FrameState {
    /// Chart matrix of the fields `J_i(t)`.
    pub fn jacobi(&self) -> DMatrix<f64> {
        &self.e * &self.a
    }

    pub fn jacobi_derivative(&self) -> DMatrix<f64> {
        &self.e * &self.da
    }
}

/// The `n` fundamental boundary-compatible Jacobi fields along one geodesic.
#[derive(Clone, Debug)]
pub struct JacobiFrame {
    pub n: usize,
    pub return_time: f64,
    pub launch: Point,
    /// Second fundamental form at the launch point on the tangential frame.
    pub launch_form: DMatrix<f64>,
    pub samples: Vec<FrameState>,
    segments: Vec<DenseSegment>,
}

impl JacobiFrame {
    fn unpack(&self, spec: &ManifoldSpec, t: f64, y: &[f64]) -> Result<FrameState> {
        let n = self.n;
        let lay = Layout { n };
        let x = Point::from_column_slice(&y[..n]);
        let v = Point::from_column_slice(&y[n..2 * n]);
        let (x, d) = spec.normalize_transform(&x)?;
        Ok(FrameState {
            t,
            x,
            v: &d * v,
            e: &d * lay.mat(y, lay.e()),
            a: lay.mat(y, lay.a()),
            da: lay.mat(y, lay.da()),
        })
    }

    fn raw(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.return_time);
        let i = self
            .segments
            .partition_point(|s| s.t1() < t)
            .min(self.segments.len() - 1);
        self.segments[i].eval(t)
    }

    pub fn state_at(&self, spec: &ManifoldSpec, t: f64) -> Result<FrameState> {
        self.unpack(spec, t, &self.raw(t))
    }

    /// Frame components `a(t)` only; needs no chart normalization.
    pub fn components_at(&self, t: f64) -> DMatrix<f64> {
        let lay = Layout { n: self.n };
        lay.mat(&self.raw(t), lay.a())
    }

    pub fn end_state(&self) -> &FrameState {
        self.samples.last().expect("frame has samples")
    }

    /// `max |g(J_i′, J_j) − g(J_i, J_j′)|` over the accepted steps; the
    /// initial value is zero.
    pub fn wronskian_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let w = s.da.transpose() * &s.a - s.a.transpose() * &s.da;
                w.abs().max()
            })
            .fold(0.0, f64::max)
    }

    pub fn step_times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Integrates the Jacobi frame along `path` over `[0, R_p]`.
pub fn integrate_jacobi_frame(spec: &ManifoldSpec, path: &GeodesicPath, opts: &ShootOptions) -> Result<JacobiFrame> {
    let n = spec.dimension();
    let lay = Layout { n };
    let p = &path.launch;
    let e0 = spec.adapted_frame(p)?;
    let tangential = e0.columns(0, n - 1).into_owned();
    let form = spec.second_fundamental_form(p)?;
    let s0 = form.restricted(&tangential);

    let mut a0 = DMatrix::zeros(n, n);
    let mut da0 = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a0[(i, i)] = 1.0;
        for k in 0..n - 1 {
            da0[(k, i)] = -s0[(k, i)];
        }
    }
    da0[(n - 1, n - 1)] = 1.0;

    let mut y0 = vec![0.0; lay.len()];
    y0[..n].copy_from_slice(p.as_slice());
    y0[n..2 * n].copy_from_slice(e0.column(n - 1).as_slice());
    y0[lay.e()..lay.a()].copy_from_slice(e0.as_slice());
    y0[lay.a()..lay.da()].copy_from_slice(a0.as_slice());
    y0[lay.da()..].copy_from_slice(da0.as_slice());

    let sys = FrameSystem { spec };
    let r = path.return_time;
    let mut solver = Dopri5::new(&sys, 0.0, y0.clone(), opts.tol)?;
    let mut frame = JacobiFrame {
        n,
        return_time: r,
        launch: p.clone(),
        launch_form: s0,
        samples: vec![],
        segments: vec![],
    };
    frame.samples.push(frame.unpack(spec, 0.0, &y0)?);
    while r - solver.t() > 1e-14 * r {
        let seg = solver.step_until(r)?.clone();
        frame.segments.push(seg);
        let y = solver.y().to_vec();
        let state = frame.unpack(spec, solver.t(), &y)?;
        let x = Point::from_column_slice(&y[..n]);
        if state.x != x {
            let mut z = y.clone();
            z[..n].copy_from_slice(state.x.as_slice());
            z[n..2 * n].copy_from_slice(state.v.as_slice());
            z[lay.e()..lay.a()].copy_from_slice(state.e.as_slice());
            solver.reset_state(z)?;
        }
        frame.samples.push(state);
    }
    Ok(frame)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocalInstant {
    pub t: f64,
    pub multiplicity: usize,
    /// Singular values of the frame components at `t`, descending.
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FocalRecord {
    pub return_time: f64,
    pub instants: Vec<FocalInstant>,
    /// Rank drops within the endpoint window; not counted in the index.
    pub endpoint_warnings: Vec<f64>,
}

fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

fn rank_ratio(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    let max = s[0];
    if max > 0.0 {
        s[s.len() - 1] / max
    } else {
        0.0
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
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

/// Rank drops of the Jacobi frame on `(0, R_p]`.
pub fn focal_instants(frame: &JacobiFrame) -> Result<FocalRecord> {
    let r = frame.return_time;
    let lo = ENDPOINT_WINDOW * r;
    let mut grid: Vec<f64> = (1..=SCAN_GRID)
        .map(|i| r * i as f64 / SCAN_GRID as f64)
        .chain(frame.step_times())
        .filter(|&t| t >= lo)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * r);
    let rho: Vec<f64> = grid.iter().map(|&t| rank_ratio(&frame.components_at(t))).collect();

    let mut record = FocalRecord {
        return_time: r,
        ..FocalRecord::default()
    };
    let last = grid.len() - 1;
    for j in 0..=last {
        let left = if j > 0 { rho[j - 1] } else { f64::INFINITY };
        let right = if j < last { rho[j + 1] } else { f64::INFINITY };
        if !(rho[j] < left && rho[j] <= right) {
            continue;
        }
        let a = if j > 0 { grid[j - 1] } else { lo };
        let b = if j < last { grid[j + 1] } else { r };
        let (t, ratio) = golden_min(|t| rank_ratio(&frame.components_at(t)), a, b);
        if ratio >= FOCAL_RATIO {
            continue;
        }
        let delta = 0.5 * ISOLATION * r;
        let before = t - delta > 0.0 && rank_ratio(&frame.components_at(t - delta)) < FOCAL_RATIO;
        let after = t + delta < r && rank_ratio(&frame.components_at(t + delta)) < FOCAL_RATIO;
        if before || after {
            return Err(ZollError::DegenerateFamily(t));
        }
        if r - t <= ENDPOINT_WINDOW * r {
            record.endpoint_warnings.push(t);
            continue;
        }
        let s = singular_values(&frame.components_at(t));
        let multiplicity = s.iter().filter(|&&v| v < FOCAL_RATIO * s[0]).count();
        record.instants.push(FocalInstant {
            t,
            multiplicity,
            singular_values: s,
        });
    }
    for w in record.instants.windows(2) {
        if w[1].t - w[0].t <= ISOLATION * r {
            return Err(ZollError::DegenerateFamily(w[1].t));
        }
    }
    Ok(record)
}

/// Sum of multiplicities of focal instants in `(0, R_p)`.
pub fn morse_index_focal(record: &FocalRecord, return_time: f64) -> usize {
    record
        .instants
        .iter()
        .filter(|f| f.t > 0.0 && f.t < return_time * (1.0 - ENDPOINT_WINDOW))
        .map(|f| f.multiplicity)
        .sum()
}

/// `𝒜_γ` on the fields whose value at the far end is tangent to the boundary.
#[derive(Clone, Debug)]
pub struct AForm {
    /// Coefficient vectors (columns) spanning the tangent-ending subspace.
    pub basis: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
}

impl AForm {
    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn norm(&self) -> f64 {
        if self.matrix.is_empty() {
            0.0
        } else {
            self.matrix.abs().max()
        }
    }
}

/// `𝒜_γ(J₁, J₂) = 𝒮_{γ′(1)}(J₁(1), J₂(1)) + g(J₁′(1), J₂(1))` with the geodesic
/// parametrized on `[0, 1]`.
pub fn a_form(spec: &ManifoldSpec, frame: &JacobiFrame, certified: bool) -> Result<AForm> {
    let n = frame.n;
    let end = frame.end_state();
    let r = frame.return_time;
    let q = spec.project_to_boundary(&end.x)?;
    let nu = spec.inward_normal(&q)?;
    let g = spec.metric_at(&q);
    let unit = &end.v / spec.norm(&q, &end.v);
    let cos = unit.dot(&(&g * &nu));

    // g(J_i(R), ν_q) = 0 cuts out the tangent-ending combinations
    let w = (end.e.transpose() * &g * &nu).transpose() * &end.a;
    let svd = SVD::new(w.clone(), false, true);
    let vt = svd.v_t.expect("requested");
    let sigma = svd.singular_values.get(0).copied().unwrap_or(0.0);
    let scale = end.a.abs().max().max(1.0);
    let rank = usize::from(sigma > 1e-9 * scale);
    let basis = if rank == 0 {
        DMatrix::identity(n, n)
    } else {
        // complement of the single row direction
        let row = vt.row(0).transpose();
        let mut cols = Vec::with_capacity(n - 1);
        for i in 0..n {
            let mut c = Point::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
            c -= &row * row.dot(&c);
            for b in &cols {
                let b: &Point = b;
                c -= b * b.dot(&c);
            }
            let len = c.norm();
            if len > 1e-6 && cols.len() < n - 1 {
                cols.push(c / len);
            }
        }
        DMatrix::from_columns(&cols)
    };
    if certified && basis.ncols() < n - 1 {
        return Err(ZollError::MaximalDegeneracy {
            found: basis.ncols(),
            expected: n - 1,
        });
    }
    let s_q = spec.second_fundamental_form(&q)?;
    let j = end.jacobi();
    let full = (j.transpose() * &s_q.matrix * &j) * (r * cos) + end.da.transpose() * &end.a * r;
    let matrix = basis.transpose() * full * &basis;
    Ok(AForm { basis, matrix })
}
