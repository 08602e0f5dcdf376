//! Levi-Civita connection and curvature in chart coordinates.
//!
//! Curvature convention: `R(X,Y) = [∇_X, ∇_Y] − ∇_[X,Y]`, so on the unit
//! sphere `R(v,w)v = −w` for orthonormal `v, w` and the Jacobi equation reads
//! `J'' = R(γ', J)γ'`.

use nalgebra::DMatrix;

use super::metric::{first_derivatives, second_derivatives, MetricField, Point};
use crate::error::{Result, ZollError};

/// `Γ^k_ij`, symmetric in the lower pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    /// `out^k = Γ^k_ij u^i w^j`.
    pub fn contract(&self, u: &[f64], w: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                let row = &self.data[(k * n + i) * n..(k * n + i + 1) * n];
                let mut s = 0.0;
                for j in 0..n {
                    s += row[j] * w[j];
                }
                acc += u[i] * s;
            }
            *o = acc;
        }
    }

    /// `(Γ_v)^k_j = Γ^k_ij v^i`.
    pub fn partial_contract(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| self.get(k, i, j) * v[i]).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// Metric data at one chart point.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub gamma: Christoffel,
}

impl LocalGeometry {
    pub fn at(field: &dyn MetricField, x: &Point) -> Result<Self> {
        let g = field.metric(x);
        let g_inv = invert_metric(&g, x)?;
        let n = g.nrows();
        if field.is_flat() {
            return Ok(LocalGeometry {
                g,
                g_inv,
                dg: vec![DMatrix::zeros(n, n); n],
                gamma: Christoffel::zeros(n),
            });
        }
        let dg = first_derivatives(field, x);
        let gamma = assemble_christoffel(&g_inv, &dg);
        Ok(LocalGeometry { g, g_inv, dg, gamma })
    }
}

pub fn invert_metric(g: &DMatrix<f64>, x: &Point) -> Result<DMatrix<f64>> {
    let scale = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if !scale.is_finite() || scale == 0.0 {
        return Err(ZollError::DegenerateMetric(x.iter().copied().collect()));
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| ZollError::DegenerateMetric(x.iter().copied().collect()))?;
    let diag_min = (0..g.nrows())
        .map(|i| chol.l_dirty()[(i, i)])
        .fold(f64::INFINITY, f64::min);
    if diag_min * diag_min < 1e-14 * scale {
        return Err(ZollError::DegenerateMetric(x.iter().copied().collect()));
    }
    Ok(chol.inverse())
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn assemble_christoffel(g_inv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Christoffel {
    let n = g_inv.nrows();
    let mut lowered = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                lowered[(l * n + i) * n + j] = v;
                lowered[(l * n + j) * n + i] = v;
            }
        }
    }
    let mut out = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|l| g_inv[(k, l)] * lowered[(l * n + i) * n + j]).sum();
                out.set(k, i, j, v);
                out.set(k, j, i, v);
            }
        }
    }
    out
}

pub fn christoffel_symbols(field: &dyn MetricField, x: &Point) -> Result<Christoffel> {
    Ok(LocalGeometry::at(field, x)?.gamma)
}

/// `∂_m Γ` for `m = 0..n`.
pub fn christoffel_derivatives(field: &dyn MetricField, x: &Point, local: &LocalGeometry) -> Result<Vec<Christoffel>> {
    let n = local.g.nrows();
    if field.is_flat() {
        return Ok(vec![Christoffel::zeros(n); n]);
    }
    if field.analytic_first(x).is_none() {
        // no closed form anywhere: difference the symbols themselves
        let mut out = Vec::with_capacity(n);
        for m in 0..n {
            let h = 1e-4_f64.max(1e-4 * x[m].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += h;
            xm[m] -= h;
            let gp = christoffel_symbols(field, &xp)?;
            let gm = christoffel_symbols(field, &xm)?;
            out.push(Christoffel {
                n,
                data: gp.data.iter().zip(&gm.data).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            });
        }
        return Ok(out);
    }
    let d2 = second_derivatives(field, x);
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let dginv = -(&local.g_inv * &local.dg[m] * &local.g_inv);
        let first = assemble_christoffel(&dginv, &local.dg);
        let second = assemble_christoffel(&local.g_inv, &d2[m * n..(m + 1) * n]);
        out.push(Christoffel {
            n,
            data: first.data.iter().zip(&second.data).map(|(a, b)| a + b).collect(),
        });
    }
    Ok(out)
}

/// Matrix of `w ↦ R(v, w) v` in chart coordinates.
pub fn curvature_matrix(field: &dyn MetricField, x: &Point, v: &[f64], local: &LocalGeometry) -> Result<DMatrix<f64>> {
    let n = local.g.nrows();
    if field.is_flat() {
        return Ok(DMatrix::zeros(n, n));
    }
    let dgamma = christoffel_derivatives(field, x, local)?;
    let gamma = &local.gamma;
    let gv = gamma.partial_contract(v);
    let mut gvv = vec![0.0; n];
    gamma.contract(v, v, &mut gvv);

    let mut out = DMatrix::zeros(n, n);
    for l in 0..n {
        for j in 0..n {
            let mut a = 0.0;
            let mut b = 0.0;
            for i in 0..n {
                for k in 0..n {
                    let vv = v[i] * v[k];
                    a += vv * dgamma[i].get(l, j, k);
                    b += vv * dgamma[j].get(l, i, k);
                }
            }
            let c: f64 = (0..n).map(|m| gv[(l, m)] * gv[(m, j)]).sum();
            let d: f64 = (0..n).map(|m| gamma.get(l, j, m) * gvv[m]).sum();
            out[(l, j)] = a - b + c - d;
        }
    }
    Ok(out)
}

/// Full tensor `R^l_{kij}` stored at `((l*n + k)*n + i)*n + j`.
pub fn riemann_tensor(field: &dyn MetricField, x: &Point) -> Result<Vec<f64>> {
    let local = LocalGeometry::at(field, x)?;
    let n = local.g.nrows();
    let dgamma = christoffel_derivatives(field, x, &local)?;
    let gamma = &local.gamma;
    let mut out = vec![0.0; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                    for m in 0..n {
                        r += gamma.get(l, i, m) * gamma.get(m, j, k) - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    out[((l * n + k) * n + i) * n + j] = r;
                }
            }
        }
    }
    Ok(out)
}
