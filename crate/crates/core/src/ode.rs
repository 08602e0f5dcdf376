//! Dormand–Prince 5(4) with Hairer's 4th-order dense output.

use crate::error::{Result, ZollError};

pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
#[derive(Clone, Debug)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    r: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval_theta(&self, theta: f64) -> Vec<f64> {
        let s = 1.0 - theta;
        (0..self.r[0].len())
            .map(|i| {
                let r = &self.r;
                r[0][i] + theta * (r[1][i] + s * (r[2][i] + theta * (r[3][i] + s * r[4][i])))
            })
            .collect()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.eval_theta((t - self.t0) / self.h)
    }
}

struct Stages {
    y1: Vec<f64>,
    err: Vec<f64>,
    k: [Vec<f64>; 7],
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn stages<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], k1: &[f64], h: f64) -> Result<Stages> {
    let n = y.len();
    let mut tmp = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    axpy(&mut tmp, y, h, &[(A21, k1)]);
    sys.rhs(t + C2 * h, &tmp, &mut k2)?;
    axpy(&mut tmp, y, h, &[(A31, k1), (A32, &k2)]);
    sys.rhs(t + C3 * h, &tmp, &mut k3)?;
    axpy(&mut tmp, y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]);
    sys.rhs(t + C4 * h, &tmp, &mut k4)?;
    axpy(&mut tmp, y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
    sys.rhs(t + C5 * h, &tmp, &mut k5)?;
    axpy(
        &mut tmp,
        y,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    );
    sys.rhs(t + h, &tmp, &mut k6)?;
    let mut y1 = vec![0.0; n];
    axpy(
        &mut y1,
        y,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    sys.rhs(t + h, &y1, &mut k7)?;
    let err = (0..n)
        .map(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]))
        .collect();
    Ok(Stages {
        y1,
        err,
        k: [k1.to_vec(), k2, k3, k4, k5, k6, k7],
    })
}

/// One DP5 step of exactly `h` from `(t, y)`, without error control.
pub fn fixed_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut k1 = vec![0.0; y.len()];
    sys.rhs(t, y, &mut k1)?;
    Ok(stages(sys, t, y, &k1, h)?.y1)
}

/// One DP5 step of exactly `h` together with its dense output.
pub fn dense_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, DenseSegment)> {
    let mut k1 = vec![0.0; y.len()];
    sys.rhs(t, y, &mut k1)?;
    let st = stages(sys, t, y, &k1, h)?;
    let seg = dense_from(t, y, &st, h);
    Ok((st.y1, seg))
}

fn dense_from(t: f64, y0: &[f64], st: &Stages, h: f64) -> DenseSegment {
    let n = y0.len();
    let k = &st.k;
    let mut r = [y0.to_vec(), vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let ydiff = st.y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * k[6][i] - bspl;
        r[4][i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
    }
    DenseSegment { t0: t, h, r }
}

/// Adaptive integrator state. Each call to [`Dopri5::step`] advances by one
/// accepted step and exposes its dense output.
pub struct Dopri5<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    tol: Tolerances,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    last: Option<DenseSegment>,
    pub accepted: usize,
    pub rejected: usize,
}

const MAX_REJECTS: usize = 60;

impl<'a, S: OdeSystem + ?Sized> Dopri5<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: Vec<f64>, tol: Tolerances) -> Result<Self> {
        let mut k1 = vec![0.0; y0.len()];
        sys.rhs(t0, &y0, &mut k1)?;
        let mut s = Dopri5 {
            sys,
            tol,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            last: None,
            accepted: 0,
            rejected: 0,
        };
        s.h = s.initial_step()?;
        Ok(s)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.tol.atol + self.tol.rtol * a.abs().max(b.abs())
    }

    fn norm(&self, v: &[f64], y0: &[f64], y1: &[f64]) -> f64 {
        let n = v.len() as f64;
        (v.iter()
            .zip(y0.iter().zip(y1))
            .map(|(e, (a, b))| (e / self.scale(*a, *b)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    }

    /// Hairer's starting-step heuristic.
    fn initial_step(&self) -> Result<f64> {
        let d0 = self.norm(&self.y, &self.y, &self.y);
        let d1 = self.norm(&self.k1, &self.y, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.tol.h_max);
        let y1: Vec<f64> = self.y.iter().zip(&self.k1).map(|(y, k)| y + h0 * k).collect();
        let mut k2 = vec![0.0; self.y.len()];
        self.sys.rhs(self.t + h0, &y1, &mut k2)?;
        let diff: Vec<f64> = k2.iter().zip(&self.k1).map(|(a, b)| a - b).collect();
        let d2 = self.norm(&diff, &self.y, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(self.tol.h_max))
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn derivative(&self) -> &[f64] {
        &self.k1
    }

    pub fn last_segment(&self) -> Option<&DenseSegment> {
        self.last.as_ref()
    }

    pub fn system(&self) -> &S {
        self.sys
    }

    /// Replaces the current state, e.g. after mapping through a deck
    /// transformation. Invalidates the last dense segment.
    pub fn reset_state(&mut self, y: Vec<f64>) -> Result<()> {
        self.sys.rhs(self.t, &y, &mut self.k1)?;
        self.y = y;
        self.last = None;
        Ok(())
    }

    /// Caps the next step so it does not pass `t_stop`.
    pub fn step_until(&mut self, t_stop: f64) -> Result<&DenseSegment> {
        let remaining = t_stop - self.t;
        if remaining <= 0.0 {
            return Err(ZollError::InvalidInput(format!(
                "step requested past stop time {t_stop}"
            )));
        }
        if self.h >= remaining {
            self.h = remaining;
        }
        self.step()
    }

    pub fn step(&mut self) -> Result<&DenseSegment> {
        let mut h = self.h.min(self.tol.h_max);
        for _ in 0..MAX_REJECTS {
            let st = match stages(self.sys, self.t, &self.y, &self.k1, h) {
                Ok(st) => st,
                Err(e @ ZollError::ChartViolation(_)) | Err(e @ ZollError::DegenerateMetric(_)) => {
                    // a trial stage left the chart; a smaller step may not
                    if h < 1e-12 {
                        return Err(e);
                    }
                    h *= 0.25;
                    self.rejected += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let err = self.norm(&st.err, &self.y, &st.y1);
            if !err.is_finite() {
                h *= 0.25;
                self.rejected += 1;
                continue;
            }
            let fac = (0.9 * err.max(1e-12).powf(-0.2)).clamp(0.2, 5.0);
            if err <= 1.0 {
                let seg = dense_from(self.t, &self.y, &st, h);
                self.t += h;
                self.y = st.y1;
                self.k1 = st.k[6].clone();
                self.h = (h * fac).min(self.tol.h_max);
                self.accepted += 1;
                self.last = Some(seg);
                return Ok(self.last.as_ref().expect("just stored"));
            }
            h *= fac.min(1.0);
            self.rejected += 1;
        }
        Err(ZollError::InvalidInput(format!(
            "step size underflow at t = {}",
            self.t
        )))
    }
}

/// Integrates from `t0` to `t1`, returning the accepted step endpoints.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: Vec<f64>,
    t1: f64,
    tol: Tolerances,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut solver = Dopri5::new(sys, t0, y0.clone(), tol)?;
    let mut out = vec![(t0, y0)];
    while solver.t() < t1 {
        solver.step_until(t1)?;
        out.push((solver.t(), solver.y().to_vec()));
        if (t1 - solver.t()).abs() <= 1e-14 * t1.abs().max(1.0) {
            break;
        }
    }
    Ok(out)
}
