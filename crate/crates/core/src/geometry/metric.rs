//! Metric fields on a single chart.
//!
//! A [`MetricField`] evaluates the symmetric positive-definite matrix `g(x)`
//! and, when known in closed form, its first and second partial derivatives.
//! Missing derivatives are filled in by central differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub type Point = DVector<f64>;

pub trait MetricField: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn metric(&self, x: &Point) -> DMatrix<f64>;

    /// `∂g/∂x^l` for `l = 0..n`.
    fn analytic_first(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// `∂²g/∂x^l∂x^m` stored at index `l * n + m`.
    fn analytic_second(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    fn is_flat(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

pub fn provenance(field: &dyn MetricField, x: &Point) -> Provenance {
    if field.analytic_first(x).is_some() {
        Provenance::Analytic
    } else {
        Provenance::FiniteDifference
    }
}

/// Central-difference step for metric derivatives.
pub fn fd_step(coordinate: f64) -> f64 {
    1e-5_f64.max(1e-5 * coordinate.abs())
}

fn fd_step_second(coordinate: f64) -> f64 {
    1e-4_f64.max(1e-4 * coordinate.abs())
}

pub fn first_derivatives(field: &dyn MetricField, x: &Point) -> Vec<DMatrix<f64>> {
    if let Some(d) = field.analytic_first(x) {
        return d;
    }
    let n = field.dimension();
    (0..n)
        .map(|l| {
            let h = fd_step(x[l]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += h;
            xm[l] -= h;
            (field.metric(&xp) - field.metric(&xm)) / (2.0 * h)
        })
        .collect()
}

pub fn second_derivatives(field: &dyn MetricField, x: &Point) -> Vec<DMatrix<f64>> {
    if let Some(d) = field.analytic_second(x) {
        return d;
    }
    let n = field.dimension();
    let mut out = vec![DMatrix::zeros(n, n); n * n];
    if field.analytic_first(x).is_some() {
        for m in 0..n {
            let h = fd_step(x[m]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += h;
            xm[m] -= h;
            let dp = field.analytic_first(&xp).expect("analytic derivative");
            let dm = field.analytic_first(&xm).expect("analytic derivative");
            for l in 0..n {
                out[l * n + m] = (&dp[l] - &dm[l]) / (2.0 * h);
            }
        }
        for l in 0..n {
            for m in (l + 1)..n {
                let avg = (&out[l * n + m] + &out[m * n + l]) * 0.5;
                out[l * n + m] = avg.clone();
                out[m * n + l] = avg;
            }
        }
        return out;
    }
    let g0 = field.metric(x);
    for l in 0..n {
        let hl = fd_step_second(x[l]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[l] += hl;
        xm[l] -= hl;
        out[l * n + l] = (field.metric(&xp) - &g0 * 2.0 + field.metric(&xm)) / (hl * hl);
        for m in (l + 1)..n {
            let hm = fd_step_second(x[m]);
            let shifted = |sl: f64, sm: f64| {
                let mut y = x.clone();
                y[l] += sl * hl;
                y[m] += sm * hm;
                field.metric(&y)
            };
            let mixed =
                (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0)) / (4.0 * hl * hm);
            out[l * n + m] = mixed.clone();
            out[m * n + l] = mixed;
        }
    }
    out
}

/// Flat metric `g = I`.
#[derive(Clone, Debug)]
pub struct Euclidean {
    pub dim: usize,
}

impl MetricField for Euclidean {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn metric(&self, _x: &Point) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn analytic_first(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.dim, self.dim); self.dim])
    }

    fn analytic_second(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.dim, self.dim); self.dim * self.dim])
    }

    fn is_flat(&self) -> bool {
        true
    }
}

/// Round sphere of the given radius in stereographic coordinates:
/// `g = 4ρ² / (1 + |x|²)² · δ`. The chart origin is the north pole.
#[derive(Clone, Debug)]
pub struct StereographicSphere {
    pub dim: usize,
    pub radius: f64,
}

impl StereographicSphere {
    fn factor(&self, x: &Point) -> (f64, f64) {
        let s = 1.0 + x.norm_squared();
        (4.0 * self.radius * self.radius, s)
    }
}

impl MetricField for StereographicSphere {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn metric(&self, x: &Point) -> DMatrix<f64> {
        let (c, s) = self.factor(x);
        DMatrix::identity(self.dim, self.dim) * (c / (s * s))
    }

    fn analytic_first(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let (c, s) = self.factor(x);
        let id = DMatrix::identity(self.dim, self.dim);
        Some((0..self.dim).map(|l| &id * (-4.0 * c * x[l] / (s * s * s))).collect())
    }

    fn analytic_second(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let (c, s) = self.factor(x);
        let n = self.dim;
        let id = DMatrix::identity(n, n);
        let mut out = Vec::with_capacity(n * n);
        for l in 0..n {
            for m in 0..n {
                let delta = if l == m { 1.0 } else { 0.0 };
                let v = -4.0 * c * (delta / s.powi(3) - 6.0 * x[l] * x[m] / s.powi(4));
                out.push(&id * v);
            }
        }
        Some(out)
    }
}

/// Unit sphere in (longitude, latitude) coordinates: `g = cos²λ dφ² + dλ²`.
#[derive(Clone, Debug)]
pub struct LatitudeBand;

impl MetricField for LatitudeBand {
    fn dimension(&self) -> usize {
        2
    }

    fn metric(&self, x: &Point) -> DMatrix<f64> {
        let c = x[1].cos();
        DMatrix::from_row_slice(2, 2, &[c * c, 0.0, 0.0, 1.0])
    }

    fn analytic_first(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let d = -(2.0 * x[1]).sin();
        Some(vec![
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 2, &[d, 0.0, 0.0, 0.0]),
        ])
    }

    fn analytic_second(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let dd = -2.0 * (2.0 * x[1]).cos();
        let mut out = vec![DMatrix::zeros(2, 2); 4];
        out[3] = DMatrix::from_row_slice(2, 2, &[dd, 0.0, 0.0, 0.0]);
        Some(out)
    }
}

/// Unit sphere in geodesic polar coordinates `(r, θ)`: `g = dr² + sin²r dθ²`.
#[derive(Clone, Debug)]
pub struct GeodesicPolarSphere;

impl MetricField for GeodesicPolarSphere {
    fn dimension(&self) -> usize {
        2
    }

    fn metric(&self, x: &Point) -> DMatrix<f64> {
        let s = x[0].sin();
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s * s])
    }

    fn analytic_first(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let d = (2.0 * x[0]).sin();
        Some(vec![
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, d]),
            DMatrix::zeros(2, 2),
        ])
    }

    fn analytic_second(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let dd = 2.0 * (2.0 * x[0]).cos();
        let mut out = vec![DMatrix::zeros(2, 2); 4];
        out[0] = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, dd]);
        Some(out)
    }
}

/// `g_base ⊕ I_extra`, the metric of `M × ℝ^extra`.
#[derive(Clone, Debug)]
pub struct ProductMetric {
    pub base: Arc<dyn MetricField>,
    pub extra: usize,
}

impl ProductMetric {
    fn split(&self, x: &Point) -> Point {
        x.rows(0, self.base.dimension()).into_owned()
    }

    fn embed(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let nb = self.base.dimension();
        let mut out = DMatrix::zeros(nb + self.extra, nb + self.extra);
        out.view_mut((0, 0), (nb, nb)).copy_from(m);
        out
    }
}

impl MetricField for ProductMetric {
    fn dimension(&self) -> usize {
        self.base.dimension() + self.extra
    }

    fn metric(&self, x: &Point) -> DMatrix<f64> {
        let mut out = self.embed(&self.base.metric(&self.split(x)));
        let nb = self.base.dimension();
        for i in nb..nb + self.extra {
            out[(i, i)] = 1.0;
        }
        out
    }

    fn analytic_first(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let n = self.dimension();
        let base = self.base.analytic_first(&self.split(x))?;
        let mut out: Vec<_> = base.iter().map(|m| self.embed(m)).collect();
        out.resize(n, DMatrix::zeros(n, n));
        Some(out)
    }

    fn analytic_second(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let n = self.dimension();
        let nb = self.base.dimension();
        let base = self.base.analytic_second(&self.split(x))?;
        let mut out = vec![DMatrix::zeros(n, n); n * n];
        for l in 0..nb {
            for m in 0..nb {
                out[l * n + m] = self.embed(&base[l * nb + m]);
            }
        }
        Some(out)
    }

    fn is_flat(&self) -> bool {
        self.base.is_flat()
    }
}
