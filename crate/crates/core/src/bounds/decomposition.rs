// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::potential::Potential;
use crate::schrodinger::{compute_m, Form};
use crate::spectra::{eigenfunction_of_L, solve_with, SolverOptions, TabulatedFunction, EDGE_AGMON};
use crate::weights::{coarsened, Weight, DERIVATIVE_SPACING, EDGE_CLIP};

/// Nodes at each end of a tabulated weight skipped when measuring how far
/// `M` is from constant; the stored derivatives use one-sided stencils there.
const DEVIATION_MARGIN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub level: usize,
    /// `λ_1(−L_{a_0…a_{i−1}})`
    pub gap: f64,
    /// `max |M_{a_0…a_{i−1}}^{a_i} − gap|` over the trust region.
    pub deviation: f64,
    pub trust: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub levels: Vec<Level>,
    /// `λ_n(−L)` from the oracle.
    pub lambda_n: f64,
    pub sum: f64,
    pub residual: f64,
    pub tol_agg: f64,
    pub consistent: bool,
    /// Whether `g_2'/g_1'` is strictly monotone on the common trust region;
    /// `None` for `n = 1`.
    pub chebyshev_monotone: Option<bool>,
}

/// `g` scaled so that its derivative is 1 at the middle of its grid.
fn unit_slope(g: &TabulatedFunction) -> Result<TabulatedFunction> {
    let mid = g.grid.n / 2;
    let slope = (g.values[mid + 1] - g.values[mid - 1]) / (2.0 * g.grid.spacing());
    if !(slope.is_finite() && slope != 0.0) {
        return Err(Error::NotMonotone(format!("g_1' vanishes at x = {}", g.grid.x(mid))));
    }
    let values = g.values.iter().map(|y| y / slope).collect();
    TabulatedFunction::new(g.grid, values, crate::spectra::Normalization::Raw)
}

/// Builds the optimal weights `a_i = 1/(g_1^{a_0…a_{i−1}})'` level by level
/// and checks `λ_n(−L) = Σ_i λ_1(−L_{a_0…a_{i−1}})`.
pub fn verify_decomposition(v: &Potential, n: usize, tol: f64) -> Result<Decomposition> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let opts = SolverOptions::with_tol(tol);
    let full = solve_with(v, n, &opts)?;
    // each level loses EDGE_AGMON of decay at both ends of its trust region,
    // so earlier levels truncate further out to leave room for later ones
    let reach = |level: usize| SolverOptions { agmon: opts.agmon + EDGE_AGMON * (n - level) as f64, ..opts.clone() };
    let lambda_n = full.eigenvalues[n];
    let one = Weight::constant(1.0)?;
    let mut current = v.clone();
    let mut levels = Vec::with_capacity(n);
    for level in 1..=n {
        let res = solve_with(&current, 1, &reach(level)).map_err(|e| e.at_level(level))?;
        let gap = res.eigenvalues[1];
        let g = eigenfunction_of_L(&current, 1, &res).map_err(|e| e.at_level(level))?;
        let g = unit_slope(&g)?;
        let a = Weight::from_eigenfunction(&g)?;
        let m = compute_m(&current, &one, &a, Form::Tilt)?;
        let (lo, hi) = a.domain();
        let nodes = ((hi - lo) / DERIVATIVE_SPACING).round() as usize + 1;
        let mut deviation = 0.0_f64;
        for j in DEVIATION_MARGIN..nodes.saturating_sub(DEVIATION_MARGIN) {
            let x = lo + (hi - lo) * j as f64 / (nodes - 1) as f64;
            deviation = deviation.max((m.eval(x)? - gap).abs());
        }
        levels.push(Level { level, gap, deviation, trust: (lo, hi) });
        if level < n {
            current = current.tilt(&a)?;
        }
    }
    let chebyshev_monotone = if n >= 2 {
        let g1 = eigenfunction_of_L(v, 1, &full)?;
        let g2 = eigenfunction_of_L(v, 2, &full)?;
        Some(ratio_is_monotone(&g1, &g2)?)
    } else {
        None
    };
    let sum: f64 = levels.iter().map(|l| l.gap).sum();
    let residual = (lambda_n - sum).abs();
    let tol_agg = 100.0 * tol;
    Ok(Decomposition { levels, lambda_n, sum, residual, tol_agg, consistent: residual <= tol_agg, chebyshev_monotone })
}

/// `g_2'/g_1'` strictly monotone where both functions are trusted. Both are
/// slices of the same oracle grid.
fn ratio_is_monotone(g1: &TabulatedFunction, g2: &TabulatedFunction) -> Result<bool> {
    let h = g1.grid.spacing();
    let offset = |g: &TabulatedFunction| ((g.grid.x_min - g1.grid.x_min) / h).round() as isize;
    let o2 = offset(g2);
    let start = o2.max(0) as usize;
    let end = (g1.grid.n as isize).min(o2 + g2.grid.n as isize) as usize;
    if end <= start + 2 * EDGE_CLIP + 6 {
        return Err(Error::Insufficient("trust regions of g_1 and g_2 barely overlap".into()));
    }
    let grid = g1.grid.slice(start, end - 1)?;
    let take = |g: &TabulatedFunction, shift: isize| -> Result<TabulatedFunction> {
        let from = (start as isize - shift) as usize;
        TabulatedFunction::new(grid, g.values[from..from + grid.n].to_vec(), g.normalization)
    };
    let a = coarsened(&take(g1, 0)?, DERIVATIVE_SPACING)?;
    let b = coarsened(&take(g2, o2)?, DERIVATIVE_SPACING)?;
    let s = a.grid.spacing();
    let (d1, d2) = (numeric::diff1(&a.values, s), numeric::diff1(&b.values, s));
    let ratio: Vec<f64> = d2.iter().zip(&d1).map(|(p, q)| p / q).skip(EDGE_CLIP).collect();
    let ratio = &ratio[..ratio.len() - EDGE_CLIP];
    let up = ratio.windows(2).all(|w| w[1] > w[0]);
    let down = ratio.windows(2).all(|w| w[1] < w[0]);
    Ok(up || down)
}
