// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::potential::Potential;
use crate::schrodinger::{flat_potential_gap, flat_potential_with_zero, SchrodingerPotential};

use super::tridiag::{discretize, eigenvalues_sturm, eigenvector_values};
use super::{Grid, Normalization, TabulatedFunction};

/// Eigenfunction samples with `|v| < TRUST_THRESHOLD · max|v|` are outside
/// the trust region; `e^{V/2}` would blow their rounding up past anything
/// the later differencing can bear.
pub const TRUST_THRESHOLD: f64 = 1e-12;

/// Required `∫ √(W₀ − λ)₊` between a trusted node and the truncation edge.
/// The Dirichlet condition perturbs the eigenfunction by about
/// `e^{−2·EDGE_AGMON}` relative there, and `M` sees that perturbation
/// through two derivatives, each worth a factor `2√(W₀ − λ)`.
pub const EDGE_AGMON: f64 = 10.0;

const AGMON_STEP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Absolute tolerance on successive extrapolated eigenvalues.
    pub tol: f64,
    pub n_start: usize,
    pub n_max: usize,
    /// Largest admissible distance of a truncation edge from the centre.
    pub x_cap: f64,
    /// Required `∫ √(W₀ − λ)₊` beyond the outermost turning point.
    pub agmon: f64,
    /// Required `W₀(edge) − λ`.
    pub edge_margin: f64,
    /// Return an unconverged result instead of failing.
    pub allow_unconverged: bool,
    /// Fixed truncation interval, bypassing the automatic choice.
    pub domain: Option<(f64, f64)>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            n_start: 2001,
            n_max: (1 << 18) + 1,
            x_cap: 100.0,
            agmon: 20.0,
            edge_margin: 1.0,
            allow_unconverged: false,
            domain: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }
}

/// The lowest eigenvalues `λ_0 = 0, λ_1, …, λ_k` of `−L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub potential: String,
    pub eigenvalues: Vec<f64>,
    pub error_estimates: Vec<f64>,
    pub grid: Grid,
    pub converged: bool,
    /// Unextrapolated eigenvalues of the finest discretization.
    #[serde(skip)]
    pub discrete: Vec<f64>,
}

impl SpectrumResult {
    pub fn k(&self) -> usize {
        self.eigenvalues.len().saturating_sub(1)
    }
}

fn edge(w: &SchrodingerPotential, centre: f64, dir: f64, lambda: f64, opts: &SolverOptions) -> Result<f64> {
    let (lo, hi) = w.domain();
    let limit = if dir > 0.0 { hi } else { lo };
    let mut acc = 0.0;
    let mut x = centre;
    loop {
        let next = x + dir * AGMON_STEP;
        if (dir > 0.0 && next >= limit) || (dir < 0.0 && next <= limit) {
            // bounded domains carry their own Dirichlet edge
            return Ok(limit);
        }
        if (next - centre).abs() > opts.x_cap {
            return Err(Error::NoConvergence(format!(
                "truncation edge beyond the cap |x| = {} at λ ≈ {lambda}",
                opts.x_cap
            )));
        }
        let excess = w.eval(next)? - lambda;
        if excess > 0.0 {
            acc += excess.sqrt() * AGMON_STEP;
        } else {
            acc = 0.0;
        }
        x = next;
        if acc >= opts.agmon && excess >= opts.edge_margin {
            return Ok(x);
        }
    }
}

fn truncation(w: &SchrodingerPotential, lambda: f64, opts: &SolverOptions) -> Result<(f64, f64)> {
    let (lo, hi) = w.domain();
    let centre = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { 0.0_f64.clamp(lo, hi) };
    Ok((edge(w, centre, -1.0, lambda, opts)?, edge(w, centre, 1.0, lambda, opts)?))
}

fn lowest(w: &SchrodingerPotential, grid: &Grid, count: usize) -> Result<Vec<f64>> {
    eigenvalues_sturm(&discretize(w, grid)?, count)
}

fn richardson(fine: &[f64], coarse: &[f64]) -> Vec<f64> {
    fine.iter().zip(coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

/// [`solve_with`] at the default budget.
pub fn solve_diffusion_spectrum(v: &Potential, k: usize, tol: f64) -> Result<SpectrumResult> {
    solve_with(v, k, &SolverOptions::with_tol(tol))
}

/// Eigenvalues `λ_0..=λ_k` of `−L` from the flat operator `−Δ + W₀` with
/// Dirichlet truncation, mesh doubling and Richardson extrapolation. The
/// zero eigenvalue and the `W₁` spectrum serve as consistency checks.
pub fn solve_with(v: &Potential, k: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {}", opts.tol)));
    }
    v.measure_mass(1e-8)?;
    let w0 = flat_potential_with_zero(v);
    let w1 = flat_potential_gap(v);
    let count = k + 1;

    let (x_min, x_max) = match opts.domain {
        Some(d) => d,
        None => {
            let mut lambda = 1.0_f64;
            let mut chosen = None;
            for _ in 0..16 {
                let (lo, hi) = truncation(&w0, lambda, opts)?;
                let top = lowest(&w0, &Grid::new(lo, hi, opts.n_start)?, count)?[k];
                if top <= lambda {
                    chosen = Some((lo, hi));
                    break;
                }
                lambda = 1.25 * top + 1.0;
            }
            chosen.ok_or_else(|| Error::NoConvergence("truncation interval did not settle".into()))?
        }
    };

    let mut grid = Grid::new(x_min, x_max, opts.n_start)?;
    let mut coarse = lowest(&w0, &grid, count)?;
    let mut previous: Option<Vec<f64>> = None;
    let mut changes: Vec<f64> = Vec::new();
    let mut converged = false;
    let (eigenvalues, error_estimates, last_coarse) = loop {
        let finer = grid.refined();
        if finer.n > opts.n_max {
            match previous {
                Some(p) if opts.allow_unconverged && !changes.is_empty() => {
                    let errs = changes.iter().map(|d| d / 15.0).collect();
                    break (p, errs, None);
                }
                _ => {
                    return Err(Error::NoConvergence(format!(
                        "eigenvalues not settled to {} within n = {}",
                        opts.tol, opts.n_max
                    )))
                }
            }
        }
        let fine = lowest(&w0, &finer, count)?;
        let extrapolated = richardson(&fine, &coarse);
        grid = finer;
        if let Some(p) = &previous {
            changes = extrapolated.iter().zip(p).map(|(a, b)| (a - b).abs()).collect();
            if changes.iter().all(|d| *d < opts.tol) {
                converged = true;
                let errs = changes.iter().map(|d| d / 15.0).collect();
                break (extrapolated, errs, Some(fine));
            }
        }
        previous = Some(extrapolated);
        coarse = fine;
    };

    let (discrete, coarse_grid) = match last_coarse {
        Some(fine) => {
            let cg = Grid { n: (grid.n - 1) / 2 + 1, ..grid };
            (fine, Some(cg))
        }
        None => (coarse, None),
    };

    if converged {
        if eigenvalues[0].abs() >= 10.0 * opts.tol {
            return Err(Error::Validation(format!(
                "lowest eigenvalue {:e} of the ground-state form is not zero to {:e}",
                eigenvalues[0],
                10.0 * opts.tol
            )));
        }
        if let Some(cg) = coarse_grid {
            let shifted = richardson(&lowest(&w1, &grid, k)?, &lowest(&w1, &cg, k)?);
            for (j, (a, b)) in shifted.iter().zip(&eigenvalues[1..]).enumerate() {
                if (a - b).abs() > 10.0 * opts.tol {
                    return Err(Error::Validation(format!(
                        "W1 level {j} = {a} disagrees with λ_{} = {b}",
                        j + 1
                    )));
                }
            }
        }
    }

    let potential = v.spec().map(|s| s.to_string()).unwrap_or_else(|| v.label().to_string());
    Ok(SpectrumResult { potential, eigenvalues, error_estimates, grid, converged, discrete })
}

/// Eigenfunction `g_n` of `−L` on the trust region of the result's grid,
/// recovered as `v_n e^{V/2}` and scaled to `max |g_n| = 1`. For `n = 1` it
/// is oriented increasing and checked to be strictly monotone.
#[allow(non_snake_case)]
pub fn eigenfunction_of_L(v: &Potential, n: usize, result: &SpectrumResult) -> Result<TabulatedFunction> {
    if n > result.k() {
        return Err(Error::invalid(format!("level {n} beyond the {} computed", result.k())));
    }
    if !result.converged {
        return Err(Error::Unreliable("spectrum did not converge".into()));
    }
    if n == 0 {
        return TabulatedFunction::new(result.grid, vec![1.0; result.grid.n], Normalization::SupOne);
    }
    // derivatives of g amplify the eigenvector error in the tails: work one
    // halving below the grid the eigenvalues converged on
    let grid = result.grid.refined();
    let t = discretize(&flat_potential_with_zero(v), &grid)?;
    let lambda = eigenvalues_sturm(&t, n + 1)?[n];
    let inner = eigenvector_values(&t, lambda)?;
    let peak = inner.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let h = grid.spacing();
    let decay: Vec<f64> = t.diag.iter().map(|d| (d - 2.0 / (h * h) - lambda).max(0.0).sqrt() * h).collect();
    let mut from_left = vec![0.0; decay.len()];
    let mut from_right = vec![0.0; decay.len()];
    let mut acc = 0.0;
    for (i, d) in decay.iter().enumerate() {
        acc += d;
        from_left[i] = acc;
    }
    acc = 0.0;
    for (i, d) in decay.iter().enumerate().rev() {
        acc += d;
        from_right[i] = acc;
    }
    let keep = |i: usize| {
        inner[i].abs() >= TRUST_THRESHOLD * peak && from_left[i] >= EDGE_AGMON && from_right[i] >= EDGE_AGMON
    };
    let (Some(first), Some(last)) = ((0..inner.len()).find(|&i| keep(i)), (0..inner.len()).rfind(|&i| keep(i)))
    else {
        return Err(Error::Unreliable(format!("no trusted nodes for g_{n}: the truncation edges are too close")));
    };
    if last < first + 8 {
        return Err(Error::Unreliable(format!("trust region for g_{n} has only {} nodes", last + 1 - first)));
    }
    let (sub, samples) = match extrapolated(v, &grid, n, &inner, first, last)? {
        Some(pair) => pair,
        // inner index i sits on grid node i + 1
        None => (grid.slice(first + 1, last + 1)?, inner[first..=last].to_vec()),
    };
    let pot: Vec<f64> = sub.points().map(|x| v.eval(x, 0)).collect::<Result<_>>()?;
    let floor = pot.iter().copied().fold(f64::INFINITY, f64::min);
    let mut values: Vec<f64> = samples.iter().zip(&pot).map(|(y, p)| y * (0.5 * (p - floor)).exp()).collect();
    if n == 1 {
        if values[values.len() - 1] < values[0] {
            values.iter_mut().for_each(|y| *y = -*y);
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NotMonotone(format!("g_1 fails to increase near x = {}", sub.x(i))));
        }
    }
    Ok(TabulatedFunction::new(sub, values, Normalization::Raw)?.sup_normalized())
}

/// Richardson combination `(4 v_h − v_{2h})/3` of the eigenvector on the
/// nodes shared with the half-resolution grid, restricted to the trusted
/// inner range `first..=last`. `None` when the grid has no usable halving.
fn extrapolated(
    v: &Potential,
    grid: &Grid,
    n: usize,
    fine: &[f64],
    first: usize,
    last: usize,
) -> Result<Option<(Grid, Vec<f64>)>> {
    if grid.n.is_multiple_of(2) || grid.n < 2001 {
        return Ok(None);
    }
    let coarse_grid = Grid::new(grid.x_min, grid.x_max, (grid.n - 1) / 2 + 1)?;
    let t = discretize(&flat_potential_with_zero(v), &coarse_grid)?;
    let lambda = eigenvalues_sturm(&t, n + 1)?[n];
    let coarse = eigenvector_values(&t, lambda)?;
    // coarse inner index j sits on fine inner index 2j + 1
    let lo = first | 1;
    let hi = if last % 2 == 1 { last } else { last - 1 };
    if hi < lo + 16 {
        return Ok(None);
    }
    let peak = (lo..=hi).step_by(2).max_by(|&i, &j| fine[i].abs().total_cmp(&fine[j].abs())).unwrap_or(lo);
    let scale = fine[peak] / coarse[(peak - 1) / 2];
    let values = (lo..=hi).step_by(2).map(|i| (4.0 * fine[i] - scale * coarse[(i - 1) / 2]) / 3.0).collect();
    Ok(Some((Grid::new(grid.x(lo + 1), grid.x(hi + 1), (hi - lo) / 2 + 1)?, values)))
}

/// `#{j ≥ 1 : λ_j ≤ λ}`.
pub fn counting_function(result: &SpectrumResult, lambda: f64) -> usize {
    result.eigenvalues.iter().skip(1).filter(|l| **l <= lambda).count()
}

/// [`weyl_fit_with`] at tolerance `1e-4`.
pub fn weyl_fit(v: &Potential, k: usize) -> Result<f64> {
    Ok(weyl_fit_with(v, k, &SolverOptions::with_tol(1e-4))?.0)
}

/// Least-squares slope of `log N(λ_j) = log j` against `log λ_j` over the
/// top half `j = ⌈k/2⌉..=k` of the computed spectrum, with the spectrum.
pub fn weyl_fit_with(v: &Potential, k: usize, opts: &SolverOptions) -> Result<(f64, SpectrumResult)> {
    if k < 10 {
        return Err(Error::Insufficient(format!("a Weyl fit needs k ≥ 10, got {k}")));
    }
    let res = solve_with(v, k, opts)?;
    let from = k.div_ceil(2);
    let xs: Vec<f64> = (from..=k).map(|j| res.eigenvalues[j].ln()).collect();
    let ys: Vec<f64> = (from..=k).map(|j| (j as f64).ln()).collect();
    Ok((numeric::ls_slope(&xs, &ys), res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn pot(s: &str) -> Potential {
        s.parse::<PotentialSpec>().unwrap().build().unwrap()
    }

    #[test]
    fn gaussian_spectrum_is_its_index() {
        let r = solve_diffusion_spectrum(&pot("gaussian:rho=2"), 3, 1e-6).unwrap();
        assert!(r.converged);
        for (j, l) in r.eigenvalues.iter().enumerate() {
            assert!((l - 2.0 * j as f64).abs() < 1e-5, "λ_{j} = {l}");
        }
        assert_eq!(counting_function(&solve_diffusion_spectrum(&pot("gaussian:rho=1"), 4, 1e-6).unwrap(), 3.5), 3);
    }

    #[test]
    fn quartic_goldens() {
        // harmonic-oscillator basis diagonalisation, 400 basis functions
        let golden = [0.0, 1.368592520989, 4.453709163215];
        let r = solve_diffusion_spectrum(&pot("subbotin:alpha=4"), 2, 1e-6).unwrap();
        for (l, g) in r.eigenvalues.iter().zip(golden) {
            assert!((l - g).abs() < 1e-6, "{l} vs {g}");
        }
        for e in &r.error_estimates {
            assert!(*e < 1e-6);
        }
    }

    #[test]
    fn hermite_eigenfunctions() {
        let v = pot("gaussian:rho=1");
        let r = solve_diffusion_spectrum(&v, 2, 1e-6).unwrap();
        let g1 = eigenfunction_of_L(&v, 1, &r).unwrap();
        let g2 = eigenfunction_of_L(&v, 2, &r).unwrap();
        let s1 = g1.grid.x_max.max(-g1.grid.x_min);
        for (x, y) in g1.grid.points().zip(&g1.values) {
            assert!((y - x / s1).abs() < 1e-4, "g1 at {x}");
        }
        let peak = g2.grid.points().map(|x| (x * x - 1.0).abs()).fold(0.0, f64::max);
        let sign = -g2.values[g2.grid.n / 2].signum();
        for (x, y) in g2.grid.points().zip(&g2.values).step_by(97) {
            let want = sign * (x * x - 1.0) / peak;
            assert!((y - want).abs() < 1e-3, "g2 at {x}: {y} vs {want}");
        }
        assert!(eigenfunction_of_L(&v, 3, &r).is_err());
    }

    #[test]
    fn double_well_first_eigenfunction_is_monotone() {
        let v = pot("double_well:beta=0.5");
        let r = solve_diffusion_spectrum(&v, 1, 1e-6).unwrap();
        let g = eigenfunction_of_L(&v, 1, &r).unwrap();
        assert!(g.values.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.normalization, Normalization::SupOne);
    }

    #[test]
    fn result_json_shape() {
        let r = solve_diffusion_spectrum(&pot("gaussian:rho=1"), 1, 1e-6).unwrap();
        let j = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = j.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        keys.sort();
        assert_eq!(keys, ["converged", "eigenvalues", "error_estimates", "grid", "potential"]);
        assert_eq!(j["potential"], "gaussian:rho=1");
        let back: SpectrumResult = serde_json::from_value(j).unwrap();
        assert_eq!(back.eigenvalues, r.eigenvalues);
    }

    #[test]
    fn weyl_needs_ten_levels() {
        assert!(matches!(weyl_fit(&pot("gaussian:rho=1"), 9), Err(Error::Insufficient(_))));
    }
}
