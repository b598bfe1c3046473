// SPDX-License-Identifier: Apache-2.0

//! Eigenvalue bounds for `−L` obtained from intertwinings, and the numerical
//! check of the optimal-weight decomposition `λ_n = Σ λ_1(−L_{a_0…a_{i−1}})`.

mod decomposition;
mod evaluate;
mod families;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

pub use decomposition::{verify_decomposition, Decomposition, Level};
pub use evaluate::{evaluate, BoundRequest, DEFAULT_DOMAIN};
pub use families::{
    brascamp_lieb_gap, chen_wang_lower, default_rho_grid, kappa, milman_bounds, one_intertwining_lower, optimize_rho,
    subbotin_beta_grid, subbotin_coefficients, subbotin_lower, subbotin_optimal, subbotin_term, two_sided_sum,
    GapBound, KappaMode, OneIntertwining, Term, TwoSided,
};
pub use report::{number, BoundReport, Family, Status};

/// Samples used by the dense search before golden-section refinement.
pub const SEARCH_SAMPLES: usize = 4001;

/// An infimum or supremum over a sampled interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub x: f64,
    /// The optimum sits on the interval edge and the samples keep improving
    /// towards it: the true extremum over the line lies further out.
    pub escapes: bool,
}

/// Minimum (`sign = 1`) or maximum (`sign = −1`) of `f` on `[lo, hi]`.
fn search<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, sign: f64) -> Result<Extremum> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty search interval [{lo}, {hi}]")));
    }
    let n = SEARCH_SAMPLES;
    let h = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * h }).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x).map(|y| sign * y)).collect::<Result<_>>()?;
    let (mut best, mut bx) = (f64::INFINITY, lo);
    let mut at = 0;
    for (i, y) in ys.iter().enumerate() {
        if *y < best {
            best = *y;
            bx = xs[i];
            at = i;
        }
    }
    if !best.is_finite() {
        return Err(Error::NonFinite { what: "searched function".into(), x: bx });
    }
    if at > 0 && at + 1 < n {
        let (x, y) = numeric::golden_min(|x| f(x).map(|y| sign * y).unwrap_or(f64::INFINITY), xs[at - 1], xs[at + 1], 1e-13);
        if y < best {
            best = y;
            bx = x;
        }
    }
    let escapes = (at == 0 || at + 1 == n) && {
        let w = (n / 100).max(3);
        let run: Vec<f64> = if at == 0 { ys[..=w].to_vec() } else { ys[n - 1 - w..].iter().rev().copied().collect() };
        run.windows(2).all(|p| p[0] < p[1]) && run[w] - run[0] > 1e-9 * run[0].abs().max(1.0)
    };
    Ok(Extremum { value: sign * best, x: bx, escapes })
}

pub(crate) fn infimum<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64) -> Result<Extremum> {
    search(f, lo, hi, 1.0)
}

/// [`search`] on `[lo, hi]` for `f` defined on `outer`. The optimum escapes
/// when it sits on an edge with room beyond it in `outer`, or when `f` keeps
/// improving past either edge and beats the window value there.
fn search_with_tails<F: Fn(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    outer: (f64, f64),
    sign: f64,
) -> Result<Extremum> {
    let mut e = search(&f, lo, hi, sign)?;
    if e.escapes && (e.x <= outer.0 || e.x >= outer.1) {
        // nothing beyond the edge of the function's own domain
        e.escapes = false;
    }
    if !e.escapes {
        let best = sign * e.value;
        e.escapes = [(lo, -1.0), (hi, 1.0)].into_iter().any(|(edge, dir)| {
            let mut ys = Vec::with_capacity(TAIL_PROBES + 1);
            for j in 0..=TAIL_PROBES {
                let x = edge + dir * (hi - lo) * ((1u32 << j) - 1) as f64 / 8.0;
                if x < outer.0 || x > outer.1 {
                    break;
                }
                match f(x) {
                    Ok(y) if y.is_finite() => ys.push(sign * y),
                    _ => break,
                }
            }
            ys.len() >= 3 && ys.windows(2).all(|p| p[1] < p[0]) && ys[ys.len() - 1] < best
        });
    }
    Ok(e)
}

/// Points probed beyond each window edge, at geometrically growing offsets.
const TAIL_PROBES: usize = 6;

pub(crate) fn infimum_on<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, outer: (f64, f64)) -> Result<Extremum> {
    search_with_tails(f, lo, hi, outer, 1.0)
}

pub(crate) fn supremum_on<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, outer: (f64, f64)) -> Result<Extremum> {
    search_with_tails(f, lo, hi, outer, -1.0)
}

/// `[lo, hi]` intersected with the closed domain `(dlo, dhi)`.
pub(crate) fn clip(domain: (f64, f64), within: (f64, f64)) -> Result<(f64, f64)> {
    let lo = domain.0.max(within.0);
    let hi = domain.1.min(within.1);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!(
            "domain [{}, {}] does not meet [{}, {}]",
            domain.0, domain.1, within.0, within.1
        )));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_minimum_is_polished() {
        let e = infimum(|x: f64| Ok((x - 0.123_456_789).powi(2) + 1.0), -3.0, 3.0).unwrap();
        assert!((e.x - 0.123_456_789).abs() < 1e-6);
        assert!((e.value - 1.0).abs() < 1e-14);
        assert!(!e.escapes);
    }

    #[test]
    fn edge_trend_is_classified() {
        assert!(infimum(|x: f64| Ok(-x), -1.0, 1.0).unwrap().escapes);
        assert!(supremum_on(|x: f64| Ok(x * x), -1.0, 2.0, (-3.0, 3.0)).unwrap().escapes);
        assert!(!supremum_on(|x: f64| Ok(x * x), -1.0, 2.0, (-1.0, 2.0)).unwrap().escapes);
        let flat = infimum(|_| Ok(2.5), -1.0, 1.0).unwrap();
        assert!(!flat.escapes);
        assert_eq!(flat.value, 2.5);
    }

    #[test]
    fn tail_growth_past_an_interior_peak() {
        let f = |x: f64| Ok(10.0 * (-x * x).exp() + 0.5 * x.abs());
        let line = (f64::NEG_INFINITY, f64::INFINITY);
        assert!(supremum_on(f, -5.0, 5.0, line).unwrap().escapes);
        assert!(!supremum_on(f, -5.0, 5.0, (-5.0, 5.0)).unwrap().escapes);
        let wavy = |x: f64| Ok(1.0 - 0.1 * x.sin());
        assert!(!supremum_on(wavy, -10.0, 10.0, line).unwrap().escapes);
        assert!(!infimum_on(wavy, -10.0, 10.0, line).unwrap().escapes);
    }
}
