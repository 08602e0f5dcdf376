//! Finite-element discretization of the index form and its inertia.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::{frame_curvature, JacobiFrame};
use crate::error::{Result, ZollError};
use crate::geometry::ManifoldSpec;

/// Eigenvalues below `−EPS_NEG` (mass-normalized) count as negative.
pub const EPS_NEG: f64 = 1e-6;

/// Symmetric band matrix, lower band stored row-wise: `band[i][d] = A[i][i−d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    pub size: usize,
    pub bandwidth: usize,
    band: Vec<Vec<f64>>,
}

impl BandMatrix {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        BandMatrix {
            size,
            bandwidth,
            band: vec![vec![0.0; bandwidth + 1]; size],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.band[i][i - j]
        }
    }

    /// Adds to the (i, j) entry; the symmetric entry is implied.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bandwidth, "entry outside band");
        self.band[i][i - j] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j))
    }

    /// `self − σ·other`.
    pub fn shifted(&self, sigma: f64, other: &BandMatrix) -> BandMatrix {
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = BandMatrix::zeros(self.size, bw);
        for i in 0..self.size {
            for d in 0..=bw.min(i) {
                out.band[i][d] = self.get(i, i - d) - sigma * other.get(i, i - d);
            }
        }
        out
    }

    /// Number of negative pivots of an unpivoted LDLᵀ factorization; by
    /// Sylvester's law this is the count of negative eigenvalues. Exactly
    /// vanishing pivots are nudged to a tiny positive value.
    pub fn negative_pivots(&self) -> usize {
        let n = self.size;
        let b = self.bandwidth;
        let scale = self
            .band
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let tiny = 1e-300_f64.max(f64::EPSILON * f64::EPSILON * scale);
        // l[i][d] = L[i][i−d] for d ≥ 1
        let mut l = vec![vec![0.0; b + 1]; n];
        let mut dvals = vec![0.0; n];
        let mut neg = 0;
        for j in 0..n {
            let mut dj = self.band[j][0];
            for k in j.saturating_sub(b)..j {
                let ljk = l[j][j - k];
                dj -= ljk * ljk * dvals[k];
            }
            if dj.abs() < tiny {
                dj = tiny;
            }
            dvals[j] = dj;
            if dj < 0.0 {
                neg += 1;
            }
            for i in j + 1..(j + b + 1).min(n) {
                let mut v = self.band[i][i - j];
                for k in i.saturating_sub(b)..j {
                    v -= l[i][i - k] * l[j][j - k] * dvals[k];
                }
                l[i][i - j] = v / dj;
            }
        }
        neg
    }
}

/// Discretized `I_γ` on piecewise-quadratic fields in the parallel frame,
/// with endpoint values tangent to the boundary.
#[derive(Clone, Debug)]
pub struct IndexFormMatrix {
    pub mesh: usize,
    pub return_time: f64,
    pub stiffness: BandMatrix,
    pub mass: BandMatrix,
    /// `−𝒮_{γ′(0)}` on the launch tangent space, as added to the matrix.
    pub launch_term: DMatrix<f64>,
    /// `𝒮_{γ′(1)}` on the arrival tangent space, as added to the matrix.
    pub arrival_term: DMatrix<f64>,
}

impl IndexFormMatrix {
    pub fn dofs(&self) -> usize {
        self.stiffness.size
    }

    /// Number of generalized eigenvalues below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        self.stiffness.shifted(sigma, &self.mass).negative_pivots()
    }

    /// The `count` smallest generalized eigenvalues by inertia bisection.
    pub fn smallest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let count = count.min(self.dofs());
        let mut lo = -1.0;
        while self.count_below(lo) > 0 {
            lo *= 2.0;
        }
        let mut hi = 1.0;
        while self.count_below(hi) < count {
            hi *= 2.0;
        }
        (0..count)
            .map(|i| {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if b - a <= 1e-13 + 1e-11 * mid.abs() {
                        break;
                    }
                    if self.count_below(mid) > i {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }
}

/// Degrees of freedom: `n − 1` at each endpoint node, `n` at the others.
struct Dofs {
    n: usize,
    last: usize,
}

impl Dofs {
    fn offset(&self, node: usize) -> usize {
        if node == 0 {
            0
        } else {
            (self.n - 1) + (node - 1) * self.n
        }
    }
    fn count(&self, node: usize) -> usize {
        if node == 0 || node == self.last {
            self.n - 1
        } else {
            self.n
        }
    }
    fn total(&self) -> usize {
        2 * (self.n - 1) + (self.last - 1) * self.n
    }
}

const GAUSS: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Quadratic Lagrange shape functions on `[0, 1]` and their derivatives.
fn shape(xi: f64) -> ([f64; 3], [f64; 3]) {
    (
        [
            (1.0 - xi) * (1.0 - 2.0 * xi),
            4.0 * xi * (1.0 - xi),
            xi * (2.0 * xi - 1.0),
        ],
        [4.0 * xi - 3.0, 4.0 - 8.0 * xi, 4.0 * xi - 1.0],
    )
}

/// Orthonormal basis of the complement of the unit vector `w`.
fn complement(w: &DVector<f64>) -> DMatrix<f64> {
    let n = w.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()));
    for i in order {
        let mut c = DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
        c -= w * w.dot(&c);
        for b in &cols {
            c -= b * b.dot(&c);
        }
        let len = c.norm();
        if len > 1e-6 && cols.len() < n - 1 {
            cols.push(c / len);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Assembles `I_γ(V, W) = ∫₀¹ g(V′, W′) + g(ℛ_γ V, W) ds + 𝒮_{γ′(1)} − 𝒮_{γ′(0)}`
/// on `mesh` quadratic elements in the parallel frame, 3-point Gauss rule.
pub fn assemble_index_form(spec: &ManifoldSpec, frame: &JacobiFrame, mesh: usize) -> Result<IndexFormMatrix> {
    if mesh < 16 {
        return Err(ZollError::InvalidInput(format!("mesh size {mesh} below 16")));
    }
    let n = frame.n;
    let r = frame.return_time;
    let h = 1.0 / mesh as f64;
    let layout = Dofs { n, last: 2 * mesh };

    // R² R_f at every quadrature point, element-major
    let curv = (0..mesh)
        .flat_map(|e| GAUSS.iter().map(move |(xi, _)| r * h * (e as f64 + xi)))
        .map(|t| {
            let st = frame.state_at(spec, t)?;
            let local = spec.local(&st.x)?;
            Ok(frame_curvature(spec, &st.x, &st.v, &st.e, &local)? * (r * r))
        })
        .collect::<Result<Vec<_>>>()?;

    // endpoint constraints: node dofs → frame components
    let start = DMatrix::from_fn(n, n - 1, |i, j| if i == j { 1.0 } else { 0.0 });
    let end = frame.end_state();
    let q = spec.project_to_boundary(&end.x)?;
    let g_q = spec.metric_at(&q);
    let nu_q = spec.inward_normal(&q)?;
    let w = end.e.transpose() * &g_q * &nu_q;
    let finish = complement(&(&w / w.norm()));
    let constraint = |node: usize| -> DMatrix<f64> {
        if node == 0 {
            start.clone()
        } else if node == layout.last {
            finish.clone()
        } else {
            DMatrix::identity(n, n)
        }
    };

    let size = layout.total();
    let bw = 3 * n - 1;
    let mut stiffness = BandMatrix::zeros(size, bw);
    let mut mass = BandMatrix::zeros(size, bw);
    let id = DMatrix::<f64>::identity(n, n);
    for e in 0..mesh {
        let mut k_loc = vec![vec![DMatrix::<f64>::zeros(n, n); 3]; 3];
        let mut m_loc = [[0.0; 3]; 3];
        for (qi, (xi, wq)) in GAUSS.iter().enumerate() {
            let (f, df) = shape(*xi);
            let pot = &curv[3 * e + qi];
            for a in 0..3 {
                for b in 0..3 {
                    let mm = h * wq * f[a] * f[b];
                    let kk = wq * df[a] * df[b] / h;
                    k_loc[a][b] += &id * kk + pot * mm;
                    m_loc[a][b] += mm;
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let (na, nb) = (2 * e + a, 2 * e + b);
                let (ta, tb) = (constraint(na), constraint(nb));
                let kr = ta.transpose() * &k_loc[a][b] * &tb;
                let mr = ta.transpose() * (&id * m_loc[a][b]) * &tb;
                let (oa, ob) = (layout.offset(na), layout.offset(nb));
                for i in 0..layout.count(na) {
                    for j in 0..layout.count(nb) {
                        if oa + i >= ob + j {
                            stiffness.add(oa + i, ob + j, kr[(i, j)]);
                            mass.add(oa + i, ob + j, mr[(i, j)]);
                        }
                    }
                }
            }
        }
    }

    // boundary terms: −𝒮_{γ′(0)} = −R 𝒮_ν(p) and 𝒮_{γ′(1)} = R cos θ 𝒮_ν(q)
    let launch_term = -&frame.launch_form * r;
    let unit = &end.v / spec.norm(&q, &end.v);
    let cos = unit.dot(&(&g_q * &nu_q));
    let s_q = spec.second_fundamental_form(&q)?;
    let arrival_term = s_q.restricted(&(&end.e * &finish)) * (r * cos);
    let o_end = layout.offset(layout.last);
    for i in 0..n - 1 {
        for j in 0..=i {
            stiffness.add(i, j, launch_term[(i, j)]);
            stiffness.add(o_end + i, o_end + j, arrival_term[(i, j)]);
        }
    }
    Ok(IndexFormMatrix {
        mesh,
        return_time: r,
        stiffness,
        mass,
        launch_term,
        arrival_term,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticIndex {
    pub index: usize,
    pub nullity_estimate: usize,
    pub smallest: Vec<f64>,
}

/// Morse index and nullity estimate of the discretized form from inertia
/// counts of `K − σM` at `σ = ∓EPS_NEG`.
pub fn morse_index_quadratic(mat: &IndexFormMatrix) -> Result<QuadraticIndex> {
    if mat.mass.negative_pivots() != 0 {
        return Err(ZollError::IndefiniteAssembly(
            "mass matrix is not positive definite".into(),
        ));
    }
    let below = mat.count_below(-EPS_NEG);
    let within = mat.count_below(EPS_NEG) - below;
    Ok(QuadraticIndex {
        index: below,
        nullity_estimate: within,
        smallest: mat.smallest_eigenvalues(5),
    })
}

/// All generalized eigenvalues by dense Cholesky reduction; for small meshes
/// and cross-checks.
pub fn dense_spectrum(mat: &IndexFormMatrix) -> Result<Vec<f64>> {
    let k = mat.stiffness.to_dense();
    let m = mat.mass.to_dense();
    let chol = m
        .cholesky()
        .ok_or_else(|| ZollError::IndefiniteAssembly("mass matrix Cholesky failed".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| ZollError::IndefiniteAssembly("singular Cholesky factor".into()))?;
    let c = &linv * k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertia_matches_dense_eigenvalues() {
        let n = 12;
        let mut a = BandMatrix::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, (i as f64 - 5.5) * 0.7);
            if i > 0 {
                a.add(i, i - 1, 0.3);
            }
            if i > 1 {
                a.add(i, i - 2, -0.2);
            }
        }
        let ev = SymmetricEigen::new(a.to_dense()).eigenvalues;
        let neg = ev.iter().filter(|&&v| v < 0.0).count();
        assert_eq!(a.negative_pivots(), neg);
        let mut id = BandMatrix::zeros(n, 0);
        for i in 0..n {
            id.add(i, i, 1.0);
        }
        for sigma in [-3.0, -0.1, 0.4, 2.5] {
            let expect = ev.iter().filter(|&&v| v < sigma).count();
            assert_eq!(a.shifted(sigma, &id).negative_pivots(), expect);
        }
    }
}
