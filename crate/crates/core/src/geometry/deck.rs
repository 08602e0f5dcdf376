//! Affine isometric identifications of fundamental-domain faces.

use nalgebra::{DMatrix, DVector};

use super::metric::{MetricField, Point};
use crate::error::{Result, ZollError};

/// `ψ(x) = A x + s`, applied when a point leaves the fundamental domain
/// through the upper face of `axis`; `ψ⁻¹` handles the lower face.
#[derive(Clone, Debug, PartialEq)]
pub struct DeckMap {
    pub axis: usize,
    matrix: DMatrix<f64>,
    shift: DVector<f64>,
    inverse: DMatrix<f64>,
}

impl DeckMap {
    pub fn new(axis: usize, matrix: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || shift.len() != n || axis >= n {
            return Err(ZollError::InvalidInput(format!(
                "deck map shape mismatch: {}x{} matrix, shift {}, axis {axis}",
                matrix.nrows(),
                matrix.ncols(),
                shift.len()
            )));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| ZollError::InvalidInput("singular deck differential".into()))?;
        Ok(DeckMap {
            axis,
            matrix,
            shift,
            inverse,
        })
    }

    /// Pure translation by `-period` along `axis`.
    pub fn translation(n: usize, axis: usize, period: f64) -> Self {
        let mut shift = DVector::zeros(n);
        shift[axis] = -period;
        DeckMap::new(axis, DMatrix::identity(n, n), shift).expect("identity is invertible")
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &Point) -> Point {
        &self.matrix * x + &self.shift
    }

    pub fn apply_inverse(&self, y: &Point) -> Point {
        &self.inverse * (y - &self.shift)
    }

    pub fn differential(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse_differential(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    /// Extends to `M × ℝ^extra`, acting trivially on the new coordinates.
    pub fn extended(&self, extra: usize) -> Self {
        let n = self.dimension();
        let mut matrix = DMatrix::identity(n + extra, n + extra);
        matrix.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        let shift = DVector::from_fn(n + extra, |i, _| if i < n { self.shift[i] } else { 0.0 });
        DeckMap::new(self.axis, matrix, shift).expect("extension of invertible map")
    }

    /// `max |dψᵀ g(ψ(x)) dψ − g(x)|`.
    pub fn isometry_residual(&self, field: &dyn MetricField, x: &Point) -> f64 {
        let pulled = self.matrix.transpose() * field.metric(&self.apply(x)) * &self.matrix;
        (pulled - field.metric(x)).abs().max()
    }

    pub fn round_trip_error(&self, x: &Point) -> f64 {
        (self.apply_inverse(&self.apply(x)) - x).abs().max()
    }
}
