//! JSON description of a [`ManifoldSpec`].

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::boundary::BoundaryChart;
use super::deck::DeckMap;
use super::expr::{ExpressionDefining, ExpressionMetric, Formula};
use super::metric::Point;
use super::spec::{BoundaryPiece, ChartDomain, GroundTruth, ManifoldSpec};
use crate::error::{Result, ZollError};

/// Reference to a catalog constructor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleRef {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl ExampleRef {
    pub fn new(name: &str) -> Self {
        ExampleRef {
            name: name.to_string(),
            params: serde_json::Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSource {
    Builtin { example: ExampleRef },
    Expression { components: Vec<Vec<String>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSource {
    pub param_dim: usize,
    /// Chart coordinates as formulas in `u0, u1, ...`, each `u` in `[0, 1]`.
    pub point: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySource {
    Builtin,
    Expression { function: String, pieces: Vec<PieceSource> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeckSource {
    pub axis: usize,
    pub matrix: Vec<Vec<f64>>,
    pub shift: Vec<f64>,
}

impl DeckSource {
    pub fn from_map(d: &DeckMap) -> Self {
        let m = d.differential();
        DeckSource {
            axis: d.axis,
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
            shift: d.shift().iter().copied().collect(),
        }
    }

    pub fn to_map(&self) -> Result<DeckMap> {
        let n = self.matrix.len();
        if self.matrix.iter().any(|row| row.len() != n) {
            return Err(ZollError::Manifest("deck matrix is not square".into()));
        }
        DeckMap::new(
            self.axis,
            DMatrix::from_fn(n, n, |i, j| self.matrix[i][j]),
            DVector::from_vec(self.shift.clone()),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldManifest {
    pub name: String,
    pub dimension: usize,
    pub metric: MetricSource,
    pub boundary: BoundarySource,
    #[serde(default)]
    pub deck_maps: Vec<DeckSource>,
    pub domain: ChartDomain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_grid: Option<Vec<usize>>,
}

impl ManifoldManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ZollError::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Builds and validates the spec. Built-in metrics are delegated to the
    /// catalog; the remaining fields must then agree with what it produces.
    pub fn build(&self) -> Result<ManifoldSpec> {
        match &self.metric {
            MetricSource::Builtin { example } => {
                let mut spec = crate::catalog::make_example(example)?;
                if spec.dimension() != self.dimension {
                    return Err(ZollError::Manifest(format!(
                        "`{}` has dimension {}, manifest says {}",
                        example.name,
                        spec.dimension(),
                        self.dimension
                    )));
                }
                if self.boundary != BoundarySource::Builtin {
                    return Err(ZollError::Manifest(
                        "a builtin metric requires a builtin boundary".into(),
                    ));
                }
                spec.name = self.name.clone();
                if self.annotations.is_some() {
                    spec.annotations = self.annotations.clone();
                }
                spec.manifest.name = self.name.clone();
                spec.manifest.annotations = spec.annotations.clone();
                Ok(spec)
            }
            MetricSource::Expression { components } => self.build_expression(components),
        }
    }

    fn build_expression(&self, components: &[Vec<String>]) -> Result<ManifoldSpec> {
        let n = self.dimension;
        let metric = ExpressionMetric::new(components)?;
        if components.len() != n {
            return Err(ZollError::Manifest(format!(
                "metric is {}x{}, manifest dimension is {n}",
                components.len(),
                components.len()
            )));
        }
        let (function, pieces) = match &self.boundary {
            BoundarySource::Builtin => {
                return Err(ZollError::Manifest(
                    "an expression metric needs an expression boundary".into(),
                ))
            }
            BoundarySource::Expression { function, pieces } => (function, pieces),
        };
        let defining = ExpressionDefining::new(function, n)?;
        let mut built = Vec::with_capacity(pieces.len());
        for piece in pieces {
            if piece.point.len() != n {
                return Err(ZollError::Manifest(format!(
                    "boundary piece has {} coordinates, expected {n}",
                    piece.point.len()
                )));
            }
            let coords = piece
                .point
                .iter()
                .map(|s| Formula::compile(s, 'u', piece.param_dim.max(1)))
                .collect::<Result<Vec<_>>>()?;
            built.push(BoundaryPiece::new(piece.param_dim, move |u: &[f64]| {
                Point::from_iterator(coords.len(), coords.iter().map(|f| f.eval(u)))
            }));
        }
        if built.is_empty() {
            return Err(ZollError::Manifest("boundary needs at least one piece".into()));
        }
        let deck_maps = self
            .deck_maps
            .iter()
            .map(DeckSource::to_map)
            .collect::<Result<Vec<_>>>()?;
        let spec = ManifoldSpec {
            name: self.name.clone(),
            metric: Arc::new(metric),
            boundary: BoundaryChart::new(Arc::new(defining)),
            domain: self.domain.clone(),
            deck_maps,
            pieces: built,
            annotations: self.annotations.clone(),
            fiber_grid: self.fiber_grid.clone(),
            manifest: self.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}
