use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::boundary::{metric_gradient, BoundaryChart, BoundaryForm};
use super::connection::{curvature_matrix, Christoffel, LocalGeometry};
use super::deck::DeckMap;
use super::manifest::ManifoldManifest;
use super::metric::{MetricField, Point};
use crate::error::{Result, ZollError};

/// Parametrization of (part of) the boundary by a unit parameter cube.
#[derive(Clone)]
pub struct BoundaryPiece {
    pub param_dim: usize,
    map: Arc<dyn Fn(&[f64]) -> Point + Send + Sync>,
}

impl BoundaryPiece {
    pub fn new(param_dim: usize, map: impl Fn(&[f64]) -> Point + Send + Sync + 'static) -> Self {
        BoundaryPiece {
            param_dim,
            map: Arc::new(map),
        }
    }

    pub fn point(&self, u: &[f64]) -> Point {
        (self.map)(u)
    }
}

impl fmt::Debug for BoundaryPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryPiece")
            .field("param_dim", &self.param_dim)
            .finish_non_exhaustive()
    }
}

/// Chart box. Along a deck axis `[lower, upper)` is the fundamental interval;
/// along other axes it bounds the region where the metric may be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChartDomain {
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Ground-truth values attached to catalog examples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub zoll: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soul_dimension: Option<usize>,
}

/// A compact manifold with boundary realized on one chart box, with optional
/// deck identifications.
#[derive(Clone, Debug)]
pub struct ManifoldSpec {
    pub name: String,
    pub metric: Arc<dyn MetricField>,
    pub boundary: BoundaryChart,
    pub domain: ChartDomain,
    pub deck_maps: Vec<DeckMap>,
    pub pieces: Vec<BoundaryPiece>,
    pub annotations: Option<GroundTruth>,
    /// Launch-grid resolution per boundary-parameter axis that resolves the
    /// fibers of the midpoint projection, when the parametrization is known
    /// to be adapted to them.
    pub fiber_grid: Option<Vec<usize>>,
    pub manifest: ManifoldManifest,
}

impl ManifoldSpec {
    pub fn dimension(&self) -> usize {
        self.metric.dimension()
    }

    fn is_deck_axis(&self, axis: usize) -> bool {
        self.deck_maps.iter().any(|d| d.axis == axis)
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.domain.upper[axis] - self.domain.lower[axis]
    }

    /// Inside the evaluation box; deck axes tolerate one period of overshoot.
    pub fn in_chart(&self, x: &Point) -> bool {
        (0..self.dimension()).all(|i| {
            let (lo, hi) = (self.domain.lower[i], self.domain.upper[i]);
            if !x[i].is_finite() {
                return false;
            }
            if self.is_deck_axis(i) {
                let p = hi - lo;
                x[i] >= lo - p && x[i] <= hi + p
            } else {
                x[i] >= lo && x[i] <= hi
            }
        })
    }

    pub fn check_chart(&self, x: &Point) -> Result<()> {
        if self.in_chart(x) {
            Ok(())
        } else {
            Err(ZollError::ChartViolation(x.iter().copied().collect()))
        }
    }

    pub fn local(&self, x: &Point) -> Result<LocalGeometry> {
        self.check_chart(x)?;
        LocalGeometry::at(self.metric.as_ref(), x)
    }

    pub fn metric_at(&self, x: &Point) -> DMatrix<f64> {
        self.metric.metric(x)
    }

    pub fn inner(&self, x: &Point, u: &Point, w: &Point) -> f64 {
        u.dot(&(self.metric.metric(x) * w))
    }

    pub fn norm(&self, x: &Point, u: &Point) -> f64 {
        self.inner(x, u, u).max(0.0).sqrt()
    }

    pub fn boundary_value(&self, x: &Point) -> f64 {
        self.boundary.value(x)
    }

    /// Inward unit normal `ν = g⁻¹∇b / |g⁻¹∇b|_g`.
    pub fn inward_normal(&self, p: &Point) -> Result<Point> {
        let local = self.local(p)?;
        let db = self.boundary.gradient(p);
        let (grad, norm) = metric_gradient(&local, &db);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(ZollError::InvalidInput(format!(
                "defining function has vanishing gradient at {:?}",
                p.as_slice()
            )));
        }
        Ok(grad / norm)
    }

    /// Newton iteration along `g⁻¹∇b` onto `b = 0`.
    pub fn project_to_boundary(&self, x: &Point) -> Result<Point> {
        let mut y = x.clone();
        for _ in 0..6 {
            let b = self.boundary.value(&y);
            if b.abs() <= 0.1 * self.boundary.eps {
                break;
            }
            let local = self.local(&y)?;
            let db = self.boundary.gradient(&y);
            let grad = &local.g_inv * &db;
            let slope = db.dot(&grad);
            if !(slope > 0.0) {
                return Err(ZollError::NotBoundaryPoint(b));
            }
            y -= grad * (b / slope);
        }
        let (y, _) = self.normalize_transform(&y)?;
        let b = self.boundary.value(&y);
        if b.abs() > self.boundary.eps {
            return Err(ZollError::NotBoundaryPoint(b));
        }
        Ok(y)
    }

    /// Brings `x` into the fundamental domain; returns the image and the
    /// accumulated differential of the deck maps applied.
    pub fn normalize_transform(&self, x: &Point) -> Result<(Point, DMatrix<f64>)> {
        let n = self.dimension();
        let mut y = x.clone();
        let mut total = DMatrix::identity(n, n);
        for _ in 0..(16 * self.deck_maps.len().max(1)) {
            let mut moved = false;
            for d in &self.deck_maps {
                let (lo, hi) = (self.domain.lower[d.axis], self.domain.upper[d.axis]);
                if y[d.axis] >= hi {
                    y = d.apply(&y);
                    total = d.differential() * total;
                    moved = true;
                } else if y[d.axis] < lo {
                    y = d.apply_inverse(&y);
                    total = d.inverse_differential() * total;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        let inside = (0..n).all(|i| {
            y[i].is_finite()
                && if self.is_deck_axis(i) {
                    y[i] >= self.domain.lower[i] && y[i] < self.domain.upper[i]
                } else {
                    y[i] >= self.domain.lower[i] && y[i] <= self.domain.upper[i]
                }
        });
        if !inside {
            return Err(ZollError::LeftAtlas(x.iter().copied().collect()));
        }
        Ok((y, total))
    }

    /// Image of `y` under the deck group closest (in chart norm) to `anchor`.
    pub fn nearest_image(&self, anchor: &Point, y: &Point) -> Point {
        let mut best = y.clone();
        let mut best_d = (&best - anchor).norm();
        for _ in 0..2 {
            for d in &self.deck_maps {
                for cand in [d.apply(&best), d.apply_inverse(&best)] {
                    let dist = (&cand - anchor).norm();
                    if dist < best_d {
                        best_d = dist;
                        best = cand;
                    }
                }
            }
        }
        best
    }

    /// Deck-aware chart displacement from `a` to `b`.
    pub fn chart_delta(&self, a: &Point, b: &Point) -> Point {
        self.nearest_image(a, b) - a
    }

    pub fn chart_distance(&self, a: &Point, b: &Point) -> f64 {
        self.chart_delta(a, b).norm()
    }

    /// Length of the chart segment from `a` to the nearest image of `b`,
    /// measured with the metric at its midpoint.
    pub fn local_distance(&self, a: &Point, b: &Point) -> f64 {
        let d = self.chart_delta(a, b);
        let mid = a + &d * 0.5;
        self.norm(&mid, &d)
    }

    pub fn christoffel(&self, x: &Point) -> Result<Christoffel> {
        Ok(self.local(x)?.gamma)
    }

    /// Matrix of `w ↦ R(v, w)v` for a g-unit `v`.
    pub fn curvature_operator(&self, x: &Point, v: &Point) -> Result<DMatrix<f64>> {
        let local = self.local(x)?;
        let speed = v.dot(&(&local.g * v));
        if (speed - 1.0).abs() > 1e-8 {
            return Err(ZollError::InvalidInput(format!(
                "curvature operator needs a unit vector, g(v,v) = {speed}"
            )));
        }
        curvature_matrix(self.metric.as_ref(), x, v.as_slice(), &local)
    }

    pub fn second_fundamental_form(&self, p: &Point) -> Result<BoundaryForm> {
        let b = self.boundary.value(p);
        if b.abs() > self.boundary.eps {
            return Err(ZollError::NotBoundaryPoint(b));
        }
        let local = self.local(p)?;
        let db = self.boundary.gradient(p);
        let hess = self.boundary.function.hessian(p);
        Ok(BoundaryForm::from_local(p.clone(), &local, &db, &hess))
    }

    /// g-orthonormal basis of `T_p∂M` (columns), completed by `ν` as the
    /// last column.
    pub fn adapted_frame(&self, p: &Point) -> Result<DMatrix<f64>> {
        let n = self.dimension();
        let g = self.metric_at(p);
        let nu = self.inward_normal(p)?;
        let mut cols: Vec<Point> = Vec::with_capacity(n);
        let mut candidates: Vec<Point> = (0..n)
            .map(|i| Point::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        // prefer coordinate directions least aligned with ν
        candidates.sort_by(|a, b| {
            let ca = a.dot(&(&g * &nu)).abs() / a.dot(&(&g * a)).sqrt();
            let cb = b.dot(&(&g * &nu)).abs() / b.dot(&(&g * b)).sqrt();
            ca.total_cmp(&cb)
        });
        for c in candidates {
            if cols.len() == n - 1 {
                break;
            }
            let mut w = c.clone();
            w -= &nu * nu.dot(&(&g * &w));
            for e in &cols {
                w -= e * e.dot(&(&g * &w));
            }
            let norm = w.dot(&(&g * &w)).sqrt();
            if norm > 1e-6 {
                cols.push(w / norm);
            }
        }
        cols.push(nu);
        Ok(DMatrix::from_columns(&cols))
    }

    /// Checks the structural invariants at sampled points: symmetric
    /// positive-definite metric, regular boundary, isometric deck maps that
    /// preserve `b`.
    pub fn validate(&self) -> Result<()> {
        let n = self.dimension();
        if self.boundary.function.dimension() != n
            || self.domain.lower.len() != n
            || self.domain.upper.len() != n
            || self.deck_maps.iter().any(|d| d.dimension() != n)
        {
            return Err(ZollError::InvalidInput(
                "component dimensions disagree with the metric".into(),
            ));
        }
        for x in self.interior_samples(24, 7) {
            let g = self.metric_at(&x);
            let asym = (&g - g.transpose()).abs().max();
            if asym > 1e-14 * g.abs().max().max(1.0) {
                return Err(ZollError::InvalidInput(format!("asymmetric metric at {x:?}")));
            }
            LocalGeometry::at(self.metric.as_ref(), &x)?;
            for d in &self.deck_maps {
                let r = d.isometry_residual(self.metric.as_ref(), &x);
                if r > 1e-10 {
                    return Err(ZollError::NotAnIsometry(r));
                }
                let db = (self.boundary.value(&d.apply(&x)) - self.boundary.value(&x)).abs();
                if db > 1e-12 * (1.0 + self.boundary.value(&x).abs()) {
                    return Err(ZollError::InvalidInput(format!(
                        "deck map on axis {} does not preserve the boundary",
                        d.axis
                    )));
                }
            }
        }
        for piece in &self.pieces {
            let u = vec![0.37; piece.param_dim];
            let p = self.project_to_boundary(&piece.point(&u))?;
            self.inward_normal(&p)?;
        }
        Ok(())
    }

    /// Deterministic interior samples (`b > 0`) from the chart box.
    pub fn interior_samples(&self, count: usize, seed: u64) -> Vec<Point> {
        let n = self.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut tries = 0;
        while out.len() < count && tries < 200 * count {
            tries += 1;
            let x = Point::from_fn(n, |i, _| {
                let lo = self.domain.lower[i];
                let hi = self.domain.upper[i];
                lo + (hi - lo) * rng.gen::<f64>()
            });
            if self.boundary.value(&x) > 0.0 {
                out.push(x);
            }
        }
        out
    }
}
