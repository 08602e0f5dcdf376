//! Boundary defining functions and the second fundamental form.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::connection::LocalGeometry;
use super::metric::Point;

/// Default on-boundary classification tolerance, in chart units of `b`.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// A scalar `b` with `b > 0` on the interior and `b = 0` on the boundary.
pub trait DefiningFunction: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, x: &Point) -> Point {
        let n = self.dimension();
        Point::from_fn(n, |l, _| {
            let h = 1e-6_f64.max(1e-6 * x[l].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += h;
            xm[l] -= h;
            (self.value(&xp) - self.value(&xm)) / (2.0 * h)
        })
    }

    fn hessian(&self, x: &Point) -> DMatrix<f64> {
        let n = self.dimension();
        let mut out = DMatrix::zeros(n, n);
        for m in 0..n {
            let h = 1e-5_f64.max(1e-5 * x[m].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += h;
            xm[m] -= h;
            let d = (self.gradient(&xp) - self.gradient(&xm)) / (2.0 * h);
            out.set_column(m, &d);
        }
        (&out + out.transpose()) * 0.5
    }
}

/// `b(x) = scale · (level − Σ wᵢ (xᵢ − cᵢ)²)`.
///
/// Covers disks, balls, ellipses, slabs and latitude bands; a zero weight
/// makes `b` independent of that coordinate.
#[derive(Clone, Debug)]
pub struct QuadraticDefining {
    pub center: Vec<f64>,
    pub weights: Vec<f64>,
    pub level: f64,
    pub scale: f64,
}

impl QuadraticDefining {
    pub fn with_extra_axes(&self, extra: usize) -> Self {
        let mut q = self.clone();
        q.center.extend(std::iter::repeat_n(0.0, extra));
        q.weights.extend(std::iter::repeat_n(0.0, extra));
        q
    }
}

impl DefiningFunction for QuadraticDefining {
    fn dimension(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &Point) -> f64 {
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.center)
            .enumerate()
            .map(|(i, (w, c))| w * (x[i] - c).powi(2))
            .sum();
        self.scale * (self.level - s)
    }

    fn gradient(&self, x: &Point) -> Point {
        Point::from_fn(self.dimension(), |i, _| {
            -2.0 * self.scale * self.weights[i] * (x[i] - self.center[i])
        })
    }

    fn hessian(&self, _x: &Point) -> DMatrix<f64> {
        let n = self.dimension();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                -2.0 * self.scale * self.weights[i]
            } else {
                0.0
            }
        })
    }
}

/// Defining function of `M × ℝ^extra` from one of `M`.
#[derive(Clone, Debug)]
pub struct ExtendedDefining {
    pub base: Arc<dyn DefiningFunction>,
    pub extra: usize,
}

impl DefiningFunction for ExtendedDefining {
    fn dimension(&self) -> usize {
        self.base.dimension() + self.extra
    }

    fn value(&self, x: &Point) -> f64 {
        self.base.value(&x.rows(0, self.base.dimension()).into_owned())
    }

    fn gradient(&self, x: &Point) -> Point {
        let nb = self.base.dimension();
        let g = self.base.gradient(&x.rows(0, nb).into_owned());
        Point::from_fn(nb + self.extra, |i, _| if i < nb { g[i] } else { 0.0 })
    }

    fn hessian(&self, x: &Point) -> DMatrix<f64> {
        let nb = self.base.dimension();
        let h = self.base.hessian(&x.rows(0, nb).into_owned());
        let n = nb + self.extra;
        DMatrix::from_fn(n, n, |i, j| if i < nb && j < nb { h[(i, j)] } else { 0.0 })
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryChart {
    pub function: Arc<dyn DefiningFunction>,
    pub eps: f64,
}

impl BoundaryChart {
    pub fn new(function: Arc<dyn DefiningFunction>) -> Self {
        BoundaryChart {
            function,
            eps: BOUNDARY_EPS,
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.function.value(x)
    }

    pub fn gradient(&self, x: &Point) -> Point {
        self.function.gradient(x)
    }

    pub fn on_boundary(&self, x: &Point) -> bool {
        self.value(x).abs() <= self.eps
    }
}

/// Metric gradient `g⁻¹∇b` and its g-norm.
pub fn metric_gradient(local: &LocalGeometry, db: &Point) -> (Point, f64) {
    let grad = &local.g_inv * db;
    let norm = db.dot(&grad).sqrt();
    (grad, norm)
}

/// Second fundamental form of the boundary at one point with respect to the
/// inward unit normal, `S(u, w) = g(∇_u W, ν)`.
#[derive(Clone, Debug)]
pub struct BoundaryForm {
    pub point: Point,
    pub normal: Point,
    /// Chart matrix of the bilinear form; only meaningful on tangent vectors.
    pub matrix: DMatrix<f64>,
}

impl BoundaryForm {
    /// Uses `S(u, w) = −∇²b(u, w) / |grad b|`, which follows from
    /// differentiating `db(W) = 0` along the boundary.
    pub fn from_local(point: Point, local: &LocalGeometry, db: &Point, hess_b: &DMatrix<f64>) -> Self {
        let n = point.len();
        let (grad, norm) = metric_gradient(local, db);
        let mut cov = hess_b.clone();
        for i in 0..n {
            for j in 0..n {
                let gk: f64 = (0..n).map(|k| local.gamma.get(k, i, j) * db[k]).sum();
                cov[(i, j)] -= gk;
            }
        }
        BoundaryForm {
            point,
            normal: grad / norm,
            matrix: -cov / norm,
        }
    }

    pub fn eval(&self, u: &Point, w: &Point) -> f64 {
        u.dot(&(&self.matrix * w))
    }

    /// Matrix `S(bᵢ, bⱼ)` on the columns of `basis`.
    pub fn restricted(&self, basis: &DMatrix<f64>) -> DMatrix<f64> {
        let m = basis.transpose() * &self.matrix * basis;
        (&m + m.transpose()) * 0.5
    }
}
