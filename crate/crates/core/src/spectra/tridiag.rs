// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::schrodinger::SchrodingerPotential;

use super::{Grid, Normalization, TabulatedFunction};

const MAX_INVERSE_ITERATIONS: usize = 10;

/// Symmetric tridiagonal matrix. Discretizations of `−d²/dx² + W` act on the
/// interior nodes of `grid`, the two end nodes carrying the Dirichlet
/// condition, so `diag` has `grid.n − 2` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub grid: Option<Grid>,
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::invalid(format!("{} diagonal and {} off-diagonal entries", diag.len(), offdiag.len())));
        }
        Ok(TridiagonalOperator { diag, offdiag, grid: None })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Infinity norm.
    pub fn norm(&self) -> f64 {
        let m = self.len();
        (0..m)
            .map(|i| {
                let l = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < m { self.offdiag[i].abs() } else { 0.0 };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.offdiag[i - 1] * v[i - 1];
                }
                if i + 1 < m {
                    s += self.offdiag[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    fn gershgorin(&self) -> (f64, f64) {
        let m = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let l = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < m { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - l - r);
            hi = hi.max(self.diag[i] + l + r);
        }
        (lo, hi)
    }
}

/// `−d²/dx² + W` with the three-point stencil on the interior nodes of `grid`:
/// `diag[i] = 2/h² + W(x_{i+1})`, `offdiag[i] = −1/h²`.
pub fn discretize(w: &SchrodingerPotential, grid: &Grid) -> Result<TridiagonalOperator> {
    let h = grid.spacing();
    let inv = 1.0 / (h * h);
    let diag = (1..grid.n - 1)
        .map(|i| {
            let x = grid.x(i);
            let v = w.eval(x)?;
            if v.is_finite() {
                Ok(2.0 * inv + v)
            } else {
                Err(Error::NonFinite { what: w.label().to_string(), x })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let offdiag = vec![-inv; diag.len().saturating_sub(1)];
    Ok(TridiagonalOperator { diag, offdiag, grid: Some(*grid) })
}

fn pivmin(t: &TridiagonalOperator) -> f64 {
    let e2 = t.offdiag.iter().fold(1.0_f64, |m, e| m.max(e * e));
    f64::MIN_POSITIVE * e2
}

fn count_below(t: &TridiagonalOperator, e2: &[f64], pmin: f64, lambda: f64) -> usize {
    let mut q = t.diag[0] - lambda;
    if q.abs() < pmin {
        q = -pmin;
    }
    let mut count = usize::from(q < 0.0);
    for i in 1..t.len() {
        q = t.diag[i] - lambda - e2[i - 1] / q;
        if q.abs() < pmin {
            q = -pmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Number of eigenvalues of `t` strictly below `lambda`.
pub fn sturm_count(t: &TridiagonalOperator, lambda: f64) -> usize {
    let e2: Vec<f64> = t.offdiag.iter().map(|e| e * e).collect();
    count_below(t, &e2, pivmin(t), lambda)
}

/// The `k` smallest eigenvalues by Sturm-sequence bisection. Brackets found
/// while isolating one eigenvalue are shared with the later ones.
pub fn eigenvalues_sturm(t: &TridiagonalOperator, k: usize) -> Result<Vec<f64>> {
    let m = t.len();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("asked for {k} eigenvalues of a {m}x{m} matrix")));
    }
    let e2: Vec<f64> = t.offdiag.iter().map(|e| e * e).collect();
    let pmin = pivmin(t);
    let (gl, gu) = t.gershgorin();
    let slack = 2.0 * f64::EPSILON * gl.abs().max(gu.abs()) + pmin;
    let mut lo = vec![gl - slack; k];
    let mut hi = vec![gu + slack; k];
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        for _ in 0..256 {
            let (a, b) = (lo[j], hi[j]);
            let mid = 0.5 * (a + b);
            if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) + pmin || mid <= a || mid >= b {
                break;
            }
            let c = count_below(t, &e2, pmin, mid);
            for i in j..k {
                if i < c {
                    hi[i] = hi[i].min(mid);
                } else {
                    lo[i] = lo[i].max(mid);
                }
            }
        }
        out.push(0.5 * (lo[j] + hi[j]));
    }
    Ok(out)
}

/// LU factors of a tridiagonal matrix with partial pivoting.
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn factor(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>, tiny: f64) -> Self {
        let n = d.len();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swap[i] = true;
            }
        }
        // the shift is an eigenvalue to working precision, so exact zero
        // pivots are expected and are nudged instead of failing
        for p in d.iter_mut() {
            if p.abs() < tiny {
                *p = if *p < 0.0 { -tiny } else { tiny };
            }
        }
        TridiagLu { dl, d, du, du2, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn unit(v: &mut [f64]) -> f64 {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= s);
    s
}

/// Unit eigenvector of `t` for the eigenvalue closest to `lambda`, by
/// inverse iteration. The first entry above `1e−6` of the maximum is made
/// positive.
pub fn eigenvector_values(t: &TridiagonalOperator, lambda: f64) -> Result<Vec<f64>> {
    let m = t.len();
    let norm = t.norm();
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let lu = TridiagLu::factor(
        t.offdiag.clone(),
        t.diag.iter().map(|d| d - lambda).collect(),
        t.offdiag.clone(),
        tiny,
    );
    // a fixed, non-symmetric start vector so that no eigenvector is
    // orthogonal to it by symmetry
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).fract()).collect();
    unit(&mut v);
    let tol = (1e-8_f64).max(64.0 * f64::EPSILON * norm);
    let mut residual = f64::INFINITY;
    for it in 0..MAX_INVERSE_ITERATIONS {
        lu.solve(&mut v);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NoConvergence(format!("inverse iteration at {lambda} overflowed")));
        }
        unit(&mut v);
        let tv = t.apply(&v);
        residual = tv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if it >= 2 && residual <= tol {
            let peak = v.iter().fold(0.0_f64, |p, x| p.max(x.abs()));
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-6 * peak) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            return Ok(v);
        }
    }
    Err(Error::NoConvergence(format!(
        "inverse iteration at {lambda}: residual {residual:e} after {MAX_INVERSE_ITERATIONS} iterations"
    )))
}

/// Eigenvector of a discretized operator as a function on its full grid,
/// zero at the two Dirichlet nodes.
pub fn eigenvector(t: &TridiagonalOperator, lambda: f64) -> Result<TabulatedFunction> {
    let grid = t.grid.ok_or_else(|| Error::invalid("operator has no grid"))?;
    let inner = eigenvector_values(t, lambda)?;
    let mut values = Vec::with_capacity(grid.n);
    values.push(0.0);
    values.extend(inner);
    values.push(0.0);
    TabulatedFunction::new(grid, values, Normalization::L2One)
}
