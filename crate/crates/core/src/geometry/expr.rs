//! Metrics and defining functions given as formula strings in manifests.
//!
//! Chart coordinates are the variables `x0, x1, ...`; boundary-piece
//! parameters are `u0, u1, ...`. `PI` and `E` are available as constants.

use std::fmt;

use exmex::{Express, FlatEx};
use nalgebra::DMatrix;

use super::boundary::DefiningFunction;
use super::metric::{MetricField, Point};
use crate::error::{Result, ZollError};

/// One compiled formula together with the coordinate index of each of its
/// variables.
#[derive(Clone)]
pub struct Formula {
    source: String,
    expr: FlatEx<f64>,
    slots: Vec<usize>,
}

impl Formula {
    pub fn compile(source: &str, prefix: char, arity: usize) -> Result<Self> {
        let expr =
            exmex::parse::<f64>(source).map_err(|e| ZollError::Manifest(format!("cannot parse `{source}`: {e}")))?;
        let mut slots = Vec::with_capacity(expr.var_names().len());
        for name in expr.var_names() {
            let idx = name
                .strip_prefix(prefix)
                .and_then(|rest| rest.parse::<usize>().ok())
                .filter(|&i| i < arity)
                .ok_or_else(|| {
                    ZollError::Manifest(format!(
                        "unknown variable `{name}` in `{source}` (expected {prefix}0..{prefix}{})",
                        arity.saturating_sub(1)
                    ))
                })?;
            slots.push(idx);
        }
        Ok(Formula {
            source: source.to_string(),
            expr,
            slots,
        })
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        let vars: Vec<f64> = self.slots.iter().map(|&i| args[i]).collect();
        self.expr.eval(&vars).unwrap_or(f64::NAN)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Formula({:?})", self.source)
    }
}

/// Metric with formula components; derivatives come from finite differences.
#[derive(Clone, Debug)]
pub struct ExpressionMetric {
    dim: usize,
    components: Vec<Formula>,
}

impl ExpressionMetric {
    pub fn new(components: &[Vec<String>]) -> Result<Self> {
        let dim = components.len();
        if dim < 2 || components.iter().any(|row| row.len() != dim) {
            return Err(ZollError::Manifest(format!(
                "metric components must form a square matrix of size >= 2, got {dim} rows"
            )));
        }
        let components = components
            .iter()
            .flatten()
            .map(|s| Formula::compile(s, 'x', dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExpressionMetric { dim, components })
    }
}

impl MetricField for ExpressionMetric {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn metric(&self, x: &Point) -> DMatrix<f64> {
        let args = x.as_slice();
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.components[i * self.dim + j].eval(args))
    }
}

#[derive(Clone, Debug)]
pub struct ExpressionDefining {
    dim: usize,
    formula: Formula,
}

impl ExpressionDefining {
    pub fn new(source: &str, dim: usize) -> Result<Self> {
        Ok(ExpressionDefining {
            dim,
            formula: Formula::compile(source, 'x', dim)?,
        })
    }
}

impl DefiningFunction for ExpressionDefining {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Point) -> f64 {
        self.formula.eval(x.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_map_by_index_not_by_order() {
        let f = Formula::compile("x2 - 10*x0", 'x', 3).unwrap();
        assert_eq!(f.eval(&[1.0, 5.0, 4.0]), -6.0);
    }

    #[test]
    fn rejects_out_of_range_variables() {
        assert!(Formula::compile("x3", 'x', 3).is_err());
        assert!(Formula::compile("y0", 'x', 3).is_err());
    }

    #[test]
    fn expression_metric_matches_closed_form() {
        let comps = vec![
            vec!["cos(x1)^2".to_string(), "0".to_string()],
            vec!["0".to_string(), "1".to_string()],
        ];
        let m = ExpressionMetric::new(&comps).unwrap();
        let g = m.metric(&Point::from_vec(vec![0.3, 0.5]));
        assert!((g[(0, 0)] - 0.5f64.cos().powi(2)).abs() < 1e-15);
        assert_eq!(g[(1, 1)], 1.0);
    }
}
