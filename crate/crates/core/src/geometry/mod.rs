//! Chart-based representation of a compact Riemannian manifold with boundary.

pub mod boundary;
pub mod connection;
pub mod deck;
pub mod expr;
pub mod manifest;
pub mod metric;
pub mod spec;

pub use boundary::{BoundaryChart, BoundaryForm, DefiningFunction, QuadraticDefining, BOUNDARY_EPS};
pub use connection::{Christoffel, LocalGeometry};
pub use deck::DeckMap;
pub use manifest::{ExampleRef, ManifoldManifest};
pub use metric::{MetricField, Point, Provenance};
pub use spec::{BoundaryPiece, ChartDomain, GroundTruth, ManifoldSpec};

use nalgebra::DMatrix;

use crate::error::{Result, ZollError};

/// Christoffel symbols at `x`, which may lie on the boundary.
pub fn christoffel(spec: &ManifoldSpec, x: &Point) -> Result<Christoffel> {
    if spec.boundary_value(x) < -spec.boundary.eps {
        return Err(ZollError::ChartViolation(x.iter().copied().collect()));
    }
    spec.christoffel(x)
}

/// Matrix of `w ↦ R(v, w)v` for a unit vector `v`.
pub fn curvature_operator(spec: &ManifoldSpec, x: &Point, v: &Point) -> Result<DMatrix<f64>> {
    spec.curvature_operator(x, v)
}

/// Second fundamental form of the boundary at `p` with respect to the inward
/// normal; positive on the boundary circle of a flat disk.
pub fn second_fundamental_form(spec: &ManifoldSpec, p: &Point) -> Result<BoundaryForm> {
    spec.second_fundamental_form(p)
}

/// Moves `(x, v)` into the fundamental domain through the deck maps.
pub fn normalize_into_domain(spec: &ManifoldSpec, x: &Point, v: &Point) -> Result<(Point, Point)> {
    let (y, dpsi) = spec.normalize_transform(x)?;
    Ok((y, dpsi * v))
}
