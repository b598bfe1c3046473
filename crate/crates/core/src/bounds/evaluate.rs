// SPDX-License-Identifier: Apache-2.0

use serde_json::Value;

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialSpec};
use crate::spectra::solve_diffusion_spectrum;
use crate::weights::{epsilon_family_for, Weight};

use super::families::{
    brascamp_lieb_gap, chen_wang_lower, milman_bounds, one_intertwining_lower, optimize_rho, subbotin_lower,
    subbotin_optimal, two_sided_sum, KappaMode,
};
use super::report::{number, BoundReport, Family, Status};

/// Window used for infima and suprema when none is given.
pub const DEFAULT_DOMAIN: (f64, f64) = (-10.0, 10.0);

/// Inputs shared by the bound families. Each family reads what it needs.
#[derive(Debug, Clone)]
pub struct BoundRequest {
    /// Target index of `λ_n`.
    pub n: usize,
    /// `chen_wang`: `[b]` or `[a, b]`. `two_sided_sum`: `a_1..a_n`.
    pub weights: Vec<Weight>,
    pub rho: Option<f64>,
    pub beta: Option<f64>,
    pub domain: (f64, f64),
    /// Oracle tolerance, used when a family needs its own oracle solve.
    pub tol: f64,
}

impl BoundRequest {
    pub fn new(n: usize) -> Self {
        BoundRequest { n, weights: Vec::new(), rho: None, beta: None, domain: DEFAULT_DOMAIN, tol: 1e-6 }
    }
}

/// Evaluates one family into a report. `eigenvalues` (λ_0, λ_1, ... of `−L`)
/// fill the oracle column when long enough. Inapplicable and unreliable
/// cases become reports; numerical failures are errors.
pub fn evaluate(v: &Potential, family: Family, req: &BoundRequest, eigenvalues: Option<&[f64]>) -> Result<BoundReport> {
    if req.n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let lambda = |j: usize| eigenvalues.and_then(|e| e.get(j).copied());
    let outcome = match family {
        Family::ChenWang => chen_wang(v, req, lambda(1)),
        Family::TwoSidedSum => two_sided(v, req, lambda(req.n)),
        Family::Subbotin => subbotin(v, req, lambda(req.n)),
        Family::OneIntertwining => one_intertwining(v, req, lambda(1), lambda(req.n)),
        Family::Milman => milman(v, req, lambda(req.n)),
        Family::BrascampLieb => brascamp_lieb(v, req, lambda(1).zip(lambda(2)).map(|(a, b)| b - a)),
    };
    let n = if family == Family::BrascampLieb {
        2
    } else if family == Family::ChenWang {
        1
    } else {
        req.n
    };
    match outcome {
        Ok(r) => Ok(r),
        Err(e) => {
            let mut r = BoundReport::from_error(family, n, e)?;
            r.oracle = match family {
                Family::BrascampLieb => lambda(1).zip(lambda(2)).map(|(a, b)| b - a),
                Family::ChenWang if req.weights.len() == 2 => None,
                Family::ChenWang => lambda(1),
                _ => lambda(req.n),
            };
            Ok(r)
        }
    }
}

fn window(req: &BoundRequest) -> Value {
    Value::Array(vec![number(req.domain.0), number(req.domain.1)])
}

fn chen_wang(v: &Potential, req: &BoundRequest, lambda_1: Option<f64>) -> Result<BoundReport> {
    let one = Weight::constant(1.0)?;
    let (a, b) = match req.weights.as_slice() {
        [] => (one.clone(), one),
        [b] => (one, b.clone()),
        [a, b] => (a.clone(), b.clone()),
        _ => return Err(Error::invalid("chen_wang takes at most two weights (a, b)")),
    };
    let e = chen_wang_lower(v, &a, &b, req.domain)?;
    let oracle = if a.is_trivial() {
        lambda_1
    } else {
        Some(solve_diffusion_spectrum(&v.tilt(&a)?, 1, req.tol)?.eigenvalues[1])
    };
    let mut r = BoundReport::new(Family::ChenWang, 1)
        .param("a", a.label())
        .param("b", b.label())
        .param("domain", window(req))
        .certify("argmin", number(e.x));
    r.lower = Some(e.value);
    r.oracle = oracle;
    Ok(r)
}

fn two_sided(v: &Potential, req: &BoundRequest, lambda_n: Option<f64>) -> Result<BoundReport> {
    let weights = if !req.weights.is_empty() {
        req.weights.clone()
    } else if let (Some(beta), Some(PotentialSpec::Subbotin { alpha, .. })) = (req.beta, v.spec()) {
        epsilon_family_for(v, *alpha, beta, req.n)?
    } else {
        vec![Weight::constant(1.0)?; req.n]
    };
    let n = weights.len();
    let t = two_sided_sum(v, &weights, req.domain)?;
    let terms: Vec<Value> = t
        .terms
        .iter()
        .map(|term| {
            serde_json::json!({
                "level": term.level,
                "inf": number(term.inf),
                "argmin": number(term.argmin),
                "sup": number(term.sup),
                "argmax": number(term.argmax),
            })
        })
        .collect();
    let labels: Vec<Value> = weights.iter().map(|w| Value::String(w.label().to_string())).collect();
    let mut r = BoundReport::new(Family::TwoSidedSum, n)
        .param("weights", labels)
        .param("domain", window(req))
        .certify("terms", terms);
    if let Some(beta) = req.beta {
        r = r.param("beta", number(beta));
    }
    r.lower = Some(t.lower);
    r.upper = Some(t.upper);
    r.oracle = if n == req.n { lambda_n } else { None };
    Ok(r)
}

fn subbotin(v: &Potential, req: &BoundRequest, lambda_n: Option<f64>) -> Result<BoundReport> {
    let Some(PotentialSpec::Subbotin { alpha, delta }) = v.spec() else {
        return Err(Error::Inapplicable(format!("the Subbotin family needs a subbotin potential, got {}", v.label())));
    };
    let alpha = *alpha;
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Inapplicable(format!("the ε-family needs α ∈ (1, 2), got α = {alpha}")));
    }
    let (beta, lower) = match req.beta {
        Some(beta) => (beta, subbotin_lower(alpha, beta, req.n)?),
        None => subbotin_optimal(alpha, req.n)?,
    };
    let mut r = BoundReport::new(Family::Subbotin, req.n)
        .param("alpha", number(alpha))
        .param("beta", number(beta))
        .certify("delta", number(*delta))
        .certify("beta_optimized", req.beta.is_none());
    r.lower = Some(lower);
    r.oracle = lambda_n;
    Ok(r)
}

fn one_intertwining(
    v: &Potential,
    req: &BoundRequest,
    lambda_1: Option<f64>,
    lambda_n: Option<f64>,
) -> Result<BoundReport> {
    if let Some(l1) = lambda_1 {
        if !(l1 > 0.0) {
            return Err(Error::Inapplicable(format!("needs λ_1(−L) > 0, the oracle gives {l1}")));
        }
    }
    let b = match req.rho {
        Some(rho) => one_intertwining_lower(v, req.n, rho, KappaMode::Full)?,
        None => optimize_rho(v, req.n, &super::default_rho_grid(), KappaMode::Full)?,
    };
    let mut r = BoundReport::new(Family::OneIntertwining, req.n)
        .param("rho", number(b.rho))
        .certify("kappa", number(b.kappa))
        .certify("argmin", number(b.argmin))
        .certify("rho_optimized", req.rho.is_none());
    r.lower = Some(b.value);
    r.oracle = lambda_n;
    Ok(r)
}

fn milman(v: &Potential, req: &BoundRequest, lambda_n: Option<f64>) -> Result<BoundReport> {
    let (lower, upper) = milman_bounds(v, req.n, req.domain)?;
    let mut r = BoundReport::new(Family::Milman, req.n).param("domain", window(req));
    r.lower = Some(lower);
    r.upper = Some(upper);
    r.oracle = lambda_n;
    Ok(r)
}

fn brascamp_lieb(v: &Potential, req: &BoundRequest, oracle_gap: Option<f64>) -> Result<BoundReport> {
    let g = brascamp_lieb_gap(v, req.domain)?;
    let mut r = BoundReport::new(Family::BrascampLieb, 2)
        .param("domain", window(req))
        .certify("m", number(g.m))
        .certify("argmin", number(g.argmin));
    r.lower = Some(g.bound);
    r.oracle = oracle_gap;
    r.status = Status::Valid;
    Ok(r)
}
