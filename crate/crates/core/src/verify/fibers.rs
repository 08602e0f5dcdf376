use serde::Serialize;

use super::soul::{local_dimensions, median, PCA_FLOOR};
use super::{boundary_components, cluster, involution_closure};
use crate::error::Result;
use crate::geodesic::{first_return_map, LaunchSet, ReturnTable, ShootOptions};
use crate::geometry::{ManifoldSpec, Point};

/// Launches whose midpoints are within this multiple of L share a fiber.
pub const FIBER_RADIUS: f64 = 1e-4;

/// Neighbourhood size for the PCA of a `k`-dimensional fiber. Kept small so
/// that a curved fiber looks flat at the sampling scale.
pub fn fiber_neighbors(k: usize) -> usize {
    2 * k + 2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberSummary {
    pub k: usize,
    pub launches: usize,
    pub clusters: usize,
    /// `(cluster size, number of clusters)`.
    pub cluster_sizes: Vec<(usize, usize)>,
    pub partners_paired: Option<bool>,
    pub boundary_components: Option<usize>,
    pub nontrivial_cover: Option<bool>,
    /// `(fiber dimension, number of clusters)` for `k > 0`.
    pub fiber_dimensions: Vec<(usize, usize)>,
    pub passed: bool,
    pub detail: String,
}

fn histogram(values: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for v in values {
        match out.iter_mut().find(|c| c.0 == v) {
            Some(c) => c.1 += 1,
            None => out.push((v, 1)),
        }
    }
    out.sort_unstable();
    out
}

/// Groups boundary launches by the midpoint of their geodesic.
///
/// `k = 0`: every group must be an `ℐ`-pair, and the double cover is
/// nontrivial iff some boundary path joins the two points of a pair, which
/// must happen exactly when the boundary is connected. `k > 0`: each group is
/// a fiber whose local PCA dimension must be `k`. A `fiber_grid` on the spec
/// replaces the sweep launches so that fibers are sampled densely.
pub fn fiber_analysis(
    spec: &ManifoldSpec,
    table: &ReturnTable,
    shoot: &ShootOptions,
    half_length: f64,
    k: usize,
) -> Result<FiberSummary> {
    let base = match &spec.fiber_grid {
        Some(grid) => first_return_map(spec, &LaunchSet::grid(spec, grid)?, shoot),
        None => table.clone(),
    };
    let merge = 1e-6 * half_length;
    let (table, partner) = if k == 0 {
        let (t, p) = involution_closure(spec, &base, shoot, merge)?;
        (t, Some(p))
    } else {
        (base, None)
    };
    let mids: Vec<Point> = table
        .outcomes
        .iter()
        .map(|o| {
            let path = o.as_ref().map_err(|e| e.clone())?;
            Ok(path.state_at(spec, half_length)?.0)
        })
        .collect::<Result<_>>()?;
    let (labels, count) = cluster(spec, &mids, FIBER_RADIUS * half_length);
    let members: Vec<Vec<usize>> = (0..count)
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    let sizes = histogram(members.iter().map(|m| m.len()));

    let mut summary = FiberSummary {
        k,
        launches: table.launches.len(),
        clusters: count,
        cluster_sizes: sizes.clone(),
        partners_paired: None,
        boundary_components: None,
        nontrivial_cover: None,
        fiber_dimensions: Vec::new(),
        passed: false,
        detail: String::new(),
    };

    if let Some(partner) = partner {
        let paired = members
            .iter()
            .all(|m| m.len() == 2 && partner[m[0]] == m[1] && partner[m[1]] == m[0]);
        let comps = boundary_components(spec, &table)?;
        let joined: Vec<bool> = members
            .iter()
            .filter(|m| m.len() == 2)
            .map(|m| comps.labels[m[0]] == comps.labels[m[1]])
            .collect();
        let nontrivial = joined.first().copied();
        let coherent = joined.iter().all(|&j| Some(j) == nontrivial);
        let expected = comps.count == 1;
        summary.partners_paired = Some(paired);
        summary.boundary_components = Some(comps.count);
        summary.nontrivial_cover = nontrivial;
        summary.passed = paired && coherent && nontrivial == Some(expected);
        summary.detail = format!(
            "{count} clusters, sizes {sizes:?}, ℐ-pairs {paired}, cover {} over {} boundary component(s)",
            match nontrivial {
                Some(true) => "nontrivial",
                Some(false) => "trivial",
                None => "undetermined",
            },
            comps.count
        );
    } else {
        let mut dims = Vec::new();
        let mut small = 0;
        for m in &members {
            if m.len() < 3 {
                small += 1;
                continue;
            }
            let pts: Vec<Point> = m.iter().map(|&i| table.launches[i].clone()).collect();
            let (_, local) = local_dimensions(spec, &pts, fiber_neighbors(k), PCA_FLOOR * half_length);
            dims.push(median(&local));
        }
        summary.fiber_dimensions = histogram(dims.iter().copied());
        summary.passed = small == 0 && !dims.is_empty() && dims.iter().all(|&d| d == k);
        summary.detail = format!(
            "{count} fibers, sizes {sizes:?}, PCA dimensions {:?} (expected {k}){}",
            summary.fiber_dimensions,
            if small > 0 {
                format!(", {small} fibers with fewer than 3 samples")
            } else {
                String::new()
            }
        );
    }
    Ok(summary)
}
