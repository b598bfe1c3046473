// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::potential::Potential;
use crate::schrodinger::{compute_m, one_intertwining_potential, Form};
use crate::weights::{check_subbotin_range, epsilons, Weight};

use super::{clip, infimum, infimum_on, supremum_on, Extremum};

/// `inf_x M_a^b(x)` over `domain`, a lower bound on `λ_1(−L_a)`.
pub fn chen_wang_lower(v: &Potential, a: &Weight, b: &Weight, domain: (f64, f64)) -> Result<Extremum> {
    if a.sign() == 0.0 || b.sign() == 0.0 {
        return Err(Error::invalid("weights must be strictly signed"));
    }
    let m = compute_m(v, a, b, Form::Tilt)?;
    let (lo, hi) = clip(domain, m.domain())?;
    let e = infimum_on(|x| m.eval(x), lo, hi, m.domain())?;
    if e.escapes {
        return Err(Error::Unreliable(format!(
            "inf of M near x = {} is undercut further out",
            e.x
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub level: usize,
    pub inf: f64,
    pub argmin: f64,
    pub sup: f64,
    pub argmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSided {
    pub lower: f64,
    /// `+∞` when some `M` is unbounded above.
    pub upper: f64,
    pub terms: Vec<Term>,
}

/// `Σ_i inf M_{a_0…a_{i−1}}^{a_i} ≤ λ_n(−L) ≤ Σ_i sup M_{a_0…a_{i−1}}^{a_i}`
/// with `a_0 = 1` and `n = weights.len()`.
pub fn two_sided_sum(v: &Potential, weights: &[Weight], domain: (f64, f64)) -> Result<TwoSided> {
    if weights.is_empty() {
        return Err(Error::invalid("need at least one weight"));
    }
    let mut terms = Vec::with_capacity(weights.len());
    let (mut lower, mut upper) = (0.0, 0.0);
    for i in 0..weights.len() {
        let composite = if i == 0 { Weight::constant(1.0)? } else { Weight::product(&weights[..i])? };
        v.tilt(&composite)?.measure_mass(1e-8).map_err(|e| match e {
            Error::Divergent(m) => Error::Divergent(format!("level {}: {m}", i + 1)),
            other => other,
        })?;
        let m = compute_m(v, &composite, &weights[i], Form::Tilt)?;
        let (lo, hi) = clip(domain, m.domain())?;
        let inf = infimum_on(|x| m.eval(x), lo, hi, m.domain())?;
        if inf.escapes {
            return Err(Error::Unreliable(format!("level {}: inf of M escapes at x = {}", i + 1, inf.x)));
        }
        let sup = supremum_on(|x| m.eval(x), lo, hi, m.domain())?;
        let s = if sup.escapes { f64::INFINITY } else { sup.value };
        lower += inf.value;
        upper += s;
        terms.push(Term { level: i + 1, inf: inf.value, argmin: inf.x, sup: s, argmax: sup.x });
    }
    Ok(TwoSided { lower, upper, terms })
}

/// Coefficients of `M_{a_1…a_{i−1}}^{a_i} = C_i|x|^{α−2} + D_i|x|^{2(α−1)}`
/// for `V = |x|^α/α` and the ε-weights.
pub fn subbotin_coefficients(alpha: f64, beta: f64, i: usize) -> Result<(f64, f64)> {
    check_subbotin_range(alpha, beta)?;
    if i == 0 {
        return Err(Error::invalid("levels start at 1"));
    }
    let eps = epsilons(beta, i);
    let p: f64 = eps[..i - 1].iter().map(|e| 1.0 - 2.0 * e).product();
    let e = eps[i - 1];
    Ok(((alpha - 1.0) * (1.0 - e) * p, e * (1.0 - e) * p * p))
}

/// Closed-form infimum of the level-`i` Subbotin potential:
/// `((2−α)/2)^{1−2/α} (α/2) (1−ε_i) ε_i^{(2−α)/α} Π_{k<i}(1−2ε_k)^{2/α}`.
pub fn subbotin_term(alpha: f64, beta: f64, i: usize) -> Result<f64> {
    check_subbotin_range(alpha, beta)?;
    if i == 0 {
        return Err(Error::invalid("levels start at 1"));
    }
    let eps = epsilons(beta, i);
    let e = eps[i - 1];
    let p: f64 = eps[..i - 1].iter().map(|e| (1.0 - 2.0 * e).powf(2.0 / alpha)).product();
    Ok(((2.0 - alpha) / 2.0).powf(1.0 - 2.0 / alpha) * (alpha / 2.0) * (1.0 - e) * e.powf((2.0 - alpha) / alpha) * p)
}

/// `Σ_{i=1}^n subbotin_term(α, β, i)`.
pub fn subbotin_lower(alpha: f64, beta: f64, n: usize) -> Result<f64> {
    (1..=n).map(|i| subbotin_term(alpha, beta, i)).sum()
}

/// 32 values of β spread over `(1, α/(2−α))`, kept `1e−3` from the ends.
pub fn subbotin_beta_grid(alpha: f64) -> Vec<f64> {
    let (lo, hi) = (1.0 + 1e-3, alpha / (2.0 - alpha) - 1e-3);
    (0..32).map(|j| lo + (hi - lo) * j as f64 / 31.0).collect()
}

/// Best `(β, subbotin_lower)` over [`subbotin_beta_grid`].
pub fn subbotin_optimal(alpha: f64, n: usize) -> Result<(f64, f64)> {
    check_subbotin_range(alpha, 1.0 + 1e-3)?;
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for beta in subbotin_beta_grid(alpha) {
        let v = subbotin_lower(alpha, beta, n)?;
        if v > best.1 {
            best = (beta, v);
        }
    }
    Ok(best)
}

/// Which expression is minimised for the constant `κ` of the
/// one-intertwining bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    /// `V''/2 + V'²/4 + ρ/2 − ρ²x²/4`
    #[default]
    Full,
    /// `V'²/4 + ρ/2 − ρ²x²/4`: smaller, hence still valid, when `V'' ≥ 0`.
    GradientOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneIntertwining {
    pub rho: f64,
    pub kappa: f64,
    pub argmin: f64,
    /// `ρ(n−1) + κ`
    pub value: f64,
}

const KAPPA_START: f64 = 8.0;
const KAPPA_CAP: f64 = 4096.0;

/// `κ(ρ)`, the infimum over the line of the one-intertwining potential.
/// The search window doubles until the infimum stops moving; an infimum that
/// keeps falling means `V'²` does not dominate `ρ²x²` and `κ = −∞`.
pub fn kappa(v: &Potential, rho: f64, mode: KappaMode) -> Result<Extremum> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    let full = one_intertwining_potential(v, rho);
    let f = |x: f64| -> Result<f64> {
        let w = full.eval(x)?;
        Ok(match mode {
            KappaMode::Full => w,
            KappaMode::GradientOnly => w - 0.5 * v.eval(x, 2)?,
        })
    };
    let (dlo, dhi) = v.domain();
    if dlo.is_finite() && dhi.is_finite() {
        return infimum(f, dlo, dhi);
    }
    let mut r = KAPPA_START;
    let mut inner = infimum(f, (-r).max(dlo), r.min(dhi))?;
    while r < KAPPA_CAP {
        let outer = infimum(f, (-2.0 * r).max(dlo), (2.0 * r).min(dhi))?;
        let settled = outer.value >= inner.value - 1e-9 * inner.value.abs().max(1.0);
        if settled && !outer.escapes {
            if mode == KappaMode::GradientOnly {
                let curv = infimum(|x| v.eval(x, 2), (-2.0 * r).max(dlo), (2.0 * r).min(dhi))?;
                if curv.value < 0.0 {
                    return Err(Error::Inapplicable(format!(
                        "dropping V''/2 needs V'' ≥ 0, but V''({}) = {}",
                        curv.x, curv.value
                    )));
                }
            }
            return Ok(if outer.value < inner.value { outer } else { inner });
        }
        inner = outer;
        r *= 2.0;
    }
    Err(Error::Inapplicable(format!("κ(ρ = {rho}) = −∞: V'² does not dominate ρ²x² at infinity")))
}

/// `ρ(n−1) + κ(ρ)`, a lower bound on `λ_n(−L)` when `λ_1(−L) > 0`.
pub fn one_intertwining_lower(v: &Potential, n: usize, rho: f64, mode: KappaMode) -> Result<OneIntertwining> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let k = kappa(v, rho, mode)?;
    Ok(OneIntertwining { rho, kappa: k.value, argmin: k.x, value: rho * (n as f64 - 1.0) + k.value })
}

/// 64 logarithmically spaced values of ρ on `[1e−2, 1e2]`.
pub fn default_rho_grid() -> Vec<f64> {
    (0..64).map(|j| 10f64.powf(-2.0 + 4.0 * j as f64 / 63.0)).collect()
}

/// Maximises [`one_intertwining_lower`] over `rho_grid` and polishes the best
/// grid point by golden-section search between its neighbours. Values of ρ
/// with `κ = −∞` are skipped.
pub fn optimize_rho(v: &Potential, n: usize, rho_grid: &[f64], mode: KappaMode) -> Result<OneIntertwining> {
    if rho_grid.is_empty() {
        return Err(Error::invalid("empty rho grid"));
    }
    let mut best: Option<(usize, OneIntertwining)> = None;
    let mut last_err = None;
    for (j, &rho) in rho_grid.iter().enumerate() {
        match one_intertwining_lower(v, n, rho, mode) {
            Ok(b) if best.is_none_or(|(_, c)| b.value > c.value) => best = Some((j, b)),
            Ok(_) => {}
            Err(e @ Error::Inapplicable(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let Some((j, grid_best)) = best else {
        return Err(last_err.unwrap_or_else(|| Error::Inapplicable("no admissible rho".into())));
    };
    let lo = rho_grid[j.saturating_sub(1)];
    let hi = rho_grid[(j + 1).min(rho_grid.len() - 1)];
    if lo < hi {
        let obj = |r: f64| one_intertwining_lower(v, n, r, mode).map(|b| b.value).unwrap_or(f64::NEG_INFINITY);
        let (r, _) = numeric::golden_max(obj, lo, hi, 1e-10);
        if let Ok(b) = one_intertwining_lower(v, n, r, mode) {
            if b.value > grid_best.value {
                return Ok(b);
            }
        }
    }
    Ok(grid_best)
}

/// `(n inf V'', n sup V'')` over `domain`, the upper end `+∞` when `V''`
/// grows at an edge.
pub fn milman_bounds(v: &Potential, n: usize, domain: (f64, f64)) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let (lo, hi) = clip(domain, v.domain())?;
    let c = |x: f64| v.eval(x, 2);
    let inf = infimum_on(c, lo, hi, v.domain())?;
    if inf.value <= 0.0 {
        return Err(Error::Inapplicable(format!(
            "V is not uniformly convex: inf V'' = {} at x = {}",
            inf.value, inf.x
        )));
    }
    if inf.escapes {
        return Err(Error::Unreliable(format!("V'' keeps decreasing past x = {}", inf.x)));
    }
    let sup = supremum_on(c, lo, hi, v.domain())?;
    let s = if sup.escapes { f64::INFINITY } else { sup.value };
    let nf = n as f64;
    Ok((nf * inf.value, nf * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    /// `√(2m)`, a lower bound on `λ_2 − λ_1`.
    pub bound: f64,
    /// `m = inf (V''/2 + V'²/4)''`
    pub m: f64,
    pub argmin: f64,
}

/// If `(V''/2 + V'²/4)'' = V''''/2 + (V''² + V'V''')/2 ≥ m > 0` then
/// `λ_2 − λ_1 ≥ √(2m)`.
pub fn brascamp_lieb_gap(v: &Potential, domain: (f64, f64)) -> Result<GapBound> {
    if v.max_order() < 4 {
        return Err(Error::DerivativeUnavailable { order: 4, what: v.label().to_string() });
    }
    let (lo, hi) = clip(domain, v.domain())?;
    let f = |x: f64| -> Result<f64> {
        let (d1, d2, d3, d4) = (v.eval(x, 1)?, v.eval(x, 2)?, v.eval(x, 3)?, v.eval(x, 4)?);
        Ok(0.5 * d4 + 0.5 * (d2 * d2 + d1 * d3))
    };
    let inf = infimum_on(f, lo, hi, v.domain())?;
    if inf.escapes {
        return Err(Error::Unreliable(format!("(V''/2 + V'^2/4)'' keeps decreasing past x = {}", inf.x)));
    }
    if inf.value <= 0.0 {
        return Err(Error::Inapplicable(format!(
            "(V''/2 + V'^2/4)'' reaches {} at x = {}: no convexity to exploit",
            inf.value, inf.x
        )));
    }
    Ok(GapBound { bound: (2.0 * inf.value).sqrt(), m: inf.value, argmin: inf.x })
}
