use serde::Serialize;

use super::{nearest, Dsu};
use crate::error::{Result, ZollError};
use crate::geodesic::ReturnTable;
use crate::geometry::ManifoldSpec;

/// Launches closer than this multiple of the median minimum-spanning-tree
/// edge are linked.
pub const LINK_FACTOR: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentPartition {
    pub count: usize,
    pub labels: Vec<usize>,
    pub link_length: f64,
    /// `(class of launch, class of arrival)` pairs that occur.
    pub pairing: Vec<(usize, usize)>,
    /// Every class sends all of its launches into a single class.
    pub pairing_consistent: bool,
}

/// Connected classes of the sampled boundary. Launches are linked along the
/// minimum spanning tree (metric length of chart segments) when an edge is
/// at most `LINK_FACTOR` times the median edge. Arrivals are classified by
/// their nearest launch to check the pairing.
pub fn boundary_components(spec: &ManifoldSpec, table: &ReturnTable) -> Result<ComponentPartition> {
    let pts = &table.launches;
    let m = pts.len();
    if m < 2 {
        return Err(ZollError::InvalidInput("need at least two boundary samples".into()));
    }
    let edges = spanning_tree(m, |i, j| spec.local_distance(&pts[i], &pts[j]));
    let mut lengths: Vec<f64> = edges.iter().map(|e| e.2).collect();
    lengths.sort_by(f64::total_cmp);
    let link = LINK_FACTOR * lengths[lengths.len() / 2];
    let mut dsu = Dsu::new(m);
    for &(i, j, d) in &edges {
        if d <= link {
            dsu.union(i, j);
        }
    }
    let (labels, count) = dsu.labels();
    if count > 2 {
        return Err(ZollError::TooManyComponents(count));
    }

    let mut pairing = Vec::new();
    for (i, o) in table.outcomes.iter().enumerate() {
        if let Ok(path) = o {
            let (j, _) = nearest(spec, pts, &path.arrival);
            let pair = (labels[i], labels[j]);
            if !pairing.contains(&pair) {
                pairing.push(pair);
            }
        }
    }
    pairing.sort_unstable();
    let pairing_consistent = (0..count).all(|c| pairing.iter().filter(|p| p.0 == c).count() <= 1);
    Ok(ComponentPartition {
        count,
        labels,
        link_length: link,
        pairing,
        pairing_consistent,
    })
}

/// Prim's algorithm on the complete graph; edges `(parent, child, length)`.
fn spanning_tree(m: usize, dist: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize, f64)> {
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut from = vec![0usize; m];
    let mut edges = Vec::with_capacity(m - 1);
    in_tree[0] = true;
    for j in 1..m {
        best[j] = dist(0, j);
    }
    for _ in 1..m {
        let (next, _) = (0..m)
            .filter(|&j| !in_tree[j])
            .map(|j| (j, best[j]))
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if next == usize::MAX {
            break;
        }
        in_tree[next] = true;
        edges.push((from[next], next, best[next]));
        for j in 0..m {
            if !in_tree[j] {
                let d = dist(next, j);
                if d < best[j] {
                    best[j] = d;
                    from[j] = next;
                }
            }
        }
    }
    edges
}
