use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SVD};
use serde::Serialize;

use super::splitting::fan_distance;
use crate::error::{Result, ZollError};
use crate::geodesic::{ReturnTable, ShootOptions};
use crate::geometry::{ManifoldSpec, Point};

pub const PCA_NEIGHBORS: usize = 12;
pub const PCA_THRESHOLD: f64 = 0.2;
/// RMS spread (in units of L) below which a neighborhood counts as a point.
pub const PCA_FLOOR: f64 = 1e-6;

/// Midpoints `γ_p(L)` of a sweep with their local PCA.
#[derive(Clone, Debug)]
pub struct SoulCloud {
    pub half_length: f64,
    pub points: Vec<Point>,
    pub velocities: Vec<Point>,
    /// Per point, RMS spreads of its neighborhood along the principal axes.
    pub singular_values: Vec<Vec<f64>>,
    pub local_dimensions: Vec<usize>,
    pub dimension: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoulSummary {
    pub points: usize,
    pub dimension: usize,
    pub diameter: f64,
    /// `(local dimension, number of points)`.
    pub local_dimension_counts: Vec<(usize, usize)>,
    pub boundary_distance_error: Option<f64>,
}

/// Midpoints from the dense output at `t = L` and their local dimension:
/// PCA over the `PCA_NEIGHBORS` nearest neighbours, counting axes above
/// `PCA_THRESHOLD · σ_max`; the cloud dimension is the median over distinct
/// midpoints.
pub fn build_soul(spec: &ManifoldSpec, table: &ReturnTable, half_length: f64) -> Result<SoulCloud> {
    let mut points = Vec::new();
    let mut velocities = Vec::new();
    for path in table.paths() {
        let (x, v) = path.state_at(spec, half_length)?;
        points.push(x);
        velocities.push(v);
    }
    if points.len() < PCA_NEIGHBORS + 1 {
        return Err(ZollError::UndersampledSoul {
            found: points.len(),
            needed: PCA_NEIGHBORS + 1,
        });
    }
    // coincident midpoints (a whole fiber maps to one point) count once
    let (labels, count) = super::cluster(spec, &points, PCA_FLOOR * half_length);
    let mut reps = vec![usize::MAX; count];
    for (i, &l) in labels.iter().enumerate() {
        if reps[l] == usize::MAX {
            reps[l] = i;
        }
    }
    let distinct: Vec<Point> = reps.iter().map(|&i| points[i].clone()).collect();
    let (sv, dims) = local_dimensions(spec, &distinct, PCA_NEIGHBORS, PCA_FLOOR * half_length);
    let dimension = if count < 2 { 0 } else { median(&dims) };
    let singular_values = labels.iter().map(|&l| sv[l].clone()).collect();
    let local = labels.iter().map(|&l| if count < 2 { 0 } else { dims[l] }).collect();
    Ok(SoulCloud {
        half_length,
        points,
        velocities,
        singular_values,
        local_dimensions: local,
        dimension,
    })
}

pub(crate) fn median(v: &[usize]) -> usize {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.get(s.len().saturating_sub(1) / 2).copied().unwrap_or(0)
}

/// Local PCA dimension of every point over its `kappa` nearest neighbours.
pub fn local_dimensions(
    spec: &ManifoldSpec,
    points: &[Point],
    kappa: usize,
    floor: f64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let m = points.len();
    let kappa = kappa.min(m.saturating_sub(1));
    let n = spec.dimension();
    let mut all = Vec::with_capacity(m);
    let mut dims = Vec::with_capacity(m);
    for (i, x) in points.iter().enumerate() {
        let mut near: Vec<(f64, usize, Point)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, y)| {
                let d = spec.chart_delta(x, y);
                (d.norm(), j, d)
            })
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let rows = kappa + 1;
        let mut mat = DMatrix::zeros(rows, n);
        for (r, (_, _, d)) in near.iter().take(kappa).enumerate() {
            mat.row_mut(r + 1).copy_from(&d.transpose());
        }
        let mean = mat.row_mean();
        for mut row in mat.row_iter_mut() {
            row -= &mean;
        }
        let mut s: Vec<f64> = SVD::new(mat, false, false)
            .singular_values
            .iter()
            .map(|v| v / (rows as f64).sqrt())
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let cut = (PCA_THRESHOLD * s.first().copied().unwrap_or(0.0)).max(floor);
        dims.push(s.iter().filter(|&&v| v > cut).count());
        all.push(s);
    }
    (all, dims)
}

impl SoulCloud {
    pub fn diameter(&self, spec: &ManifoldSpec) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max(spec.chart_distance(a, b));
            }
        }
        d
    }

    pub fn summary(&self, spec: &ManifoldSpec, shoot: &ShootOptions) -> SoulSummary {
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for &d in &self.local_dimensions {
            match counts.iter_mut().find(|c| c.0 == d) {
                Some(c) => c.1 += 1,
                None => counts.push((d, 1)),
            }
        }
        counts.sort_unstable();
        // nearest-boundary distance of a few midpoints, which should be L
        let m = self.points.len();
        let mut err: Option<f64> = None;
        for j in 0..4.min(m) {
            let i = j * m / 4;
            let back = -&self.velocities[i];
            if let Ok(d) = fan_distance(spec, &self.points[i], &back, shoot) {
                let e = (d - self.half_length).abs();
                err = Some(err.map_or(e, |x| x.max(e)));
            }
        }
        SoulSummary {
            points: m,
            dimension: self.dimension,
            diameter: self.diameter(spec),
            local_dimension_counts: counts,
            boundary_distance_error: err,
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let n = self.points.first().map_or(0, |p| p.len());
        let head: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        writeln!(out, "{},local_dimension", head.join(","))?;
        for (p, d) in self.points.iter().zip(&self.local_dimensions) {
            let row: Vec<String> = p.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(out, "{},{d}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimensionMismatch {
    pub estimated: usize,
    pub n: usize,
    pub k: usize,
}

impl fmt::Display for DimensionMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "soul dimension d̂ = {} but n − 1 − k = {} (n = {}, k = {})",
            self.estimated,
            (self.n - 1).saturating_sub(self.k),
            self.n,
            self.k
        )
    }
}

/// Passes iff `d̂ = n − 1 − k`.
pub fn soul_dimension_check(cloud: &SoulCloud, n: usize, k: usize) -> std::result::Result<(), DimensionMismatch> {
    if k < n && cloud.dimension == n - 1 - k {
        Ok(())
    } else {
        Err(DimensionMismatch {
            estimated: cloud.dimension,
            n,
            k,
        })
    }
}
