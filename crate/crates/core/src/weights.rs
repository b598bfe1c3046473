// SPDX-License-Identifier: Apache-2.0

//! Strictly signed weights `a` used in weighted gradients `∂_a f = a f'`:
//! constants, exponentials of potentials, products, and weights tabulated
//! on a grid (typically `1/g'` for a numerical first eigenfunction `g`).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::potential::{Potential, PotentialSpec, DEFAULT_SUBBOTIN_DELTA};
use crate::spectra::{Grid, TabulatedFunction};
use crate::textual::{self, Args};

/// Points clipped at each end of a tabulated eigenfunction before it is
/// turned into a weight.
pub const EDGE_CLIP: usize = 5;

/// `|g'|` below this fraction of `max |g'|` is outside the trust region.
pub const SLOPE_FLOOR: f64 = 1e-8;

/// Eigenfunctions finer than this are subsampled before differencing: the
/// weight needs three derivatives of `g`, and rounding in `g` grows like
/// `h^{-3}`.
pub const DERIVATIVE_SPACING: f64 = 1e-2;

/// Nodes at each end of a tabulated weight whose derivatives use one-sided
/// stencils.
const ONE_SIDED: usize = 2;

pub(crate) fn coarsened(g: &TabulatedFunction, spacing: f64) -> Result<TabulatedFunction> {
    let stride = (spacing / g.grid.spacing()).floor().max(1.0) as usize;
    if stride == 1 {
        return Ok(g.clone());
    }
    let m = (g.grid.n - 1) / stride + 1;
    let grid = Grid::new(g.grid.x_min, g.grid.x((m - 1) * stride), m)?;
    let values = (0..m).map(|i| g.values[i * stride]).collect();
    TabulatedFunction::new(grid, values, g.normalization)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { c: f64 },
    /// `a = exp(−c V_base)`
    ExpPotential { c: f64, base: PotentialSpec },
    Product { factors: Vec<WeightSpec> },
    Tabulated { grid: Grid, values: Vec<f64> },
}

pub(crate) fn parse_weight(s: &str, offset: usize) -> Result<WeightSpec> {
    let lead = s.len() - s.trim_start().len();
    let s = s.trim();
    let offset = offset + lead;
    let (kind, rest, rest_off) = textual::split_kind(s, offset)?;
    match kind {
        "const" => Ok(WeightSpec::Constant { c: textual::number(rest, rest_off)? }),
        "expV" => {
            let args = Args::parse(rest, rest_off)?;
            let c = args.require("c")?;
            let (base, boff) = args.raw("base").ok_or_else(|| textual::err(s, offset, "missing `base`"))?;
            args.finish(&["c", "base"])?;
            let (base, boff) = textual::unbracket(base, boff);
            Ok(WeightSpec::ExpPotential { c, base: crate::potential::parse_potential(base, boff)? })
        }
        "prod" => {
            let factors = textual::split_top(rest, rest_off)?
                .into_iter()
                .map(|(item, off)| {
                    let (inner, ioff) = textual::unbracket(item, off);
                    parse_weight(inner, ioff)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(WeightSpec::Product { factors })
        }
        "csv" => {
            let path = rest.trim();
            let g = TabulatedFunction::read_csv(path)?;
            Ok(WeightSpec::Tabulated { grid: g.grid, values: g.values })
        }
        other => Err(textual::err(s, offset, format!("unknown weight kind `{other}`"))),
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_weight(s, 0)
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Constant { c } => write!(f, "const:{c}"),
            WeightSpec::ExpPotential { c, base } => write!(f, "expV:c={c},base={base}"),
            WeightSpec::Product { factors } => {
                write!(f, "prod:")?;
                for (i, w) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "[{w}]")?;
                }
                Ok(())
            }
            WeightSpec::Tabulated { grid, .. } => write!(f, "tab:{}@[{},{}]", grid.n, grid.x_min, grid.x_max),
        }
    }
}

/// Weight data sampled on a uniform grid, stored as `log|a|` and its first
/// two derivatives so that ratios `a'/a`, `a''/a` stay well conditioned.
/// The two outermost nodes at each end only carry one-sided derivative
/// stencils and lie outside the reported domain.
#[derive(Debug, Clone)]
struct Tabulated {
    grid: Grid,
    sign: f64,
    log: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Tabulated {
    fn new(grid: Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::invalid(format!("{} values for a grid of {} points", values.len(), grid.n)));
        }
        if grid.n < 6 {
            return Err(Error::invalid("tabulated weights need at least six points"));
        }
        let sign = values[0].signum();
        if values.iter().any(|v| !v.is_finite() || *v == 0.0 || v.signum() != sign) {
            return Err(Error::invalid("tabulated weight values must be finite and strictly of one sign"));
        }
        let log: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
        let h = grid.spacing();
        let d1 = numeric::diff1(&log, h);
        let d2 = numeric::diff2(&log, h);
        Ok(Tabulated { grid, sign, log, d1, d2 })
    }

    fn at(&self, data: &[f64], x: f64) -> Result<f64> {
        let (lo, hi) = (self.grid.x_min, self.grid.x_max);
        let slack = 1e-9 * self.grid.spacing();
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        Ok(numeric::interp_cubic(data, lo, self.grid.spacing(), x))
    }
}

#[derive(Clone)]
enum Kind {
    Constant(f64),
    Exp { c: f64, base: Potential },
    Product(Vec<Weight>),
    Tabulated(Tabulated),
}

/// A nowhere-vanishing smooth weight with derivatives of order 0..=2.
#[derive(Clone)]
pub struct Weight {
    kind: Arc<Kind>,
    label: String,
    spec: Option<WeightSpec>,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight").field("label", &self.label).finish()
    }
}

impl Weight {
    pub fn new(spec: &WeightSpec) -> Result<Self> {
        let kind = match spec {
            WeightSpec::Constant { c } => {
                if !c.is_finite() || *c == 0.0 {
                    return Err(Error::invalid(format!("constant weight must be finite and nonzero, got {c}")));
                }
                Kind::Constant(*c)
            }
            WeightSpec::ExpPotential { c, base } => {
                if !c.is_finite() {
                    return Err(Error::invalid("exponent must be finite"));
                }
                Kind::Exp { c: *c, base: Potential::new(base)? }
            }
            WeightSpec::Product { factors } => {
                let ws = factors.iter().map(Weight::new).collect::<Result<Vec<_>>>()?;
                return Weight::product(&ws).map(|w| Weight { spec: Some(spec.clone()), ..w });
            }
            WeightSpec::Tabulated { grid, values } => Kind::Tabulated(Tabulated::new(*grid, values)?),
        };
        Ok(Weight { kind: Arc::new(kind), label: spec.to_string(), spec: Some(spec.clone()) })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Weight::new(&WeightSpec::Constant { c })
    }

    /// `exp(−c V)` for an already built potential.
    pub fn exp_potential(c: f64, base: &Potential) -> Self {
        let spec = base.spec().map(|b| WeightSpec::ExpPotential { c, base: b.clone() });
        Weight {
            kind: Arc::new(Kind::Exp { c, base: base.clone() }),
            label: format!("expV:c={c},base={}", base.label()),
            spec,
        }
    }

    /// Pointwise product. The sign is the product of the signs.
    pub fn product(ws: &[Weight]) -> Result<Self> {
        if ws.is_empty() {
            return Err(Error::invalid("product of an empty list of weights"));
        }
        if ws.len() == 1 {
            return Ok(ws[0].clone());
        }
        let spec = ws
            .iter()
            .map(|w| w.spec().cloned())
            .collect::<Option<Vec<_>>>()
            .map(|factors| WeightSpec::Product { factors });
        let label = format!("prod:{}", ws.iter().map(|w| format!("[{}]", w.label)).collect::<Vec<_>>().join(","));
        Ok(Weight { kind: Arc::new(Kind::Product(ws.to_vec())), label, spec })
    }

    /// Weight tabulated on `grid`; values must share one strict sign.
    pub fn from_values(grid: Grid, values: &[f64]) -> Result<Self> {
        let spec = WeightSpec::Tabulated { grid, values: values.to_vec() };
        Weight::new(&spec)
    }

    /// `a = 1/g'` for a tabulated first eigenfunction `g`, normalised positive.
    ///
    /// `g'` is taken with fourth-order differences; `EDGE_CLIP` points are
    /// dropped at each end, then the window shrinks from the edges while
    /// `|g'| < SLOPE_FLOOR · max|g'|`. A sign change inside what remains is an
    /// error: `g` is not monotone, so it is not a first eigenfunction (or the
    /// grid does not resolve it).
    pub fn from_eigenfunction(g: &TabulatedFunction) -> Result<Self> {
        let g = &coarsened(g, DERIVATIVE_SPACING)?;
        let n = g.values.len();
        if n < 2 * EDGE_CLIP + 6 {
            return Err(Error::Insufficient(format!("{n} samples are too few for a differentiated weight")));
        }
        let h = g.grid.spacing();
        let slope = numeric::diff1(&g.values, h);
        let inner = &slope[EDGE_CLIP..n - EDGE_CLIP];
        let floor = SLOPE_FLOOR * inner.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let first = inner.iter().position(|v| v.abs() >= floor);
        let last = inner.iter().rposition(|v| v.abs() >= floor);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::NotMonotone("eigenfunction derivative vanishes identically".into()));
        };
        let window = &inner[first..=last];
        let sign = window[0].signum();
        if let Some(bad) = window.iter().position(|v| v.abs() < floor || v.signum() != sign) {
            let i = EDGE_CLIP + first + bad;
            return Err(Error::NotMonotone(format!("g' changes sign near x = {}", g.grid.x(i))));
        }
        let start = EDGE_CLIP + first;
        let grid = Grid::new(g.grid.x(start), g.grid.x(start + window.len() - 1), window.len())?;
        let values: Vec<f64> = window.iter().map(|d| 1.0 / d.abs()).collect();
        Weight::from_values(grid, &values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spec(&self) -> Option<&WeightSpec> {
        self.spec.as_ref()
    }

    /// True for constant weights.
    pub fn is_trivial(&self) -> bool {
        matches!(&*self.kind, Kind::Constant(_))
    }

    pub fn sign(&self) -> f64 {
        match &*self.kind {
            Kind::Constant(c) => c.signum(),
            Kind::Exp { .. } => 1.0,
            Kind::Product(ws) => ws.iter().map(Weight::sign).product(),
            Kind::Tabulated(t) => t.sign,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match &*self.kind {
            Kind::Constant(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Kind::Exp { base, .. } => base.domain(),
            Kind::Product(ws) => ws.iter().map(Weight::domain).fold((f64::NEG_INFINITY, f64::INFINITY), |acc, d| {
                (acc.0.max(d.0), acc.1.min(d.1))
            }),
            Kind::Tabulated(t) => (t.grid.x(ONE_SIDED), t.grid.x(t.grid.n - 1 - ONE_SIDED)),
        }
    }

    /// Highest order of `(log|a|)^(k)` available.
    pub fn max_log_order(&self) -> usize {
        match &*self.kind {
            Kind::Constant(_) => usize::MAX,
            Kind::Exp { base, .. } => base.max_order(),
            Kind::Product(ws) => ws.iter().map(Weight::max_log_order).min().unwrap_or(usize::MAX),
            Kind::Tabulated(_) => 2,
        }
    }

    /// `log|a(x)|`.
    pub fn log_abs(&self, x: f64) -> Result<f64> {
        match &*self.kind {
            Kind::Constant(c) => Ok(c.abs().ln()),
            Kind::Exp { c, base } => Ok(-c * base.eval(x, 0)?),
            Kind::Product(ws) => ws.iter().map(|w| w.log_abs(x)).sum(),
            Kind::Tabulated(t) => t.at(&t.log, x),
        }
    }

    /// `(log|a|)^(order)(x)` for `order ≥ 1`.
    pub fn log_deriv(&self, x: f64, order: usize) -> Result<f64> {
        if order == 0 {
            return self.log_abs(x);
        }
        match &*self.kind {
            Kind::Constant(_) => Ok(0.0),
            Kind::Exp { c, base } => Ok(-c * base.eval(x, order)?),
            Kind::Product(ws) => ws.iter().map(|w| w.log_deriv(x, order)).sum(),
            Kind::Tabulated(t) => match order {
                1 => t.at(&t.d1, x),
                2 => t.at(&t.d2, x),
                _ => Err(Error::DerivativeUnavailable { order, what: self.label.clone() }),
            },
        }
    }

    /// `(a'/a, a''/a)` at `x`.
    pub fn ratios(&self, x: f64) -> Result<(f64, f64)> {
        if let Kind::Constant(c) = &*self.kind {
            if c.abs() < f64::MIN_POSITIVE {
                return Err(Error::VanishingWeight { x });
            }
            return Ok((0.0, 0.0));
        }
        let l1 = self.log_deriv(x, 1)?;
        let l2 = self.log_deriv(x, 2)?;
        Ok((l1, l2 + l1 * l1))
    }

    /// `a^(order)(x)` for `order` in `0..=2`.
    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if order > 2 {
            return Err(Error::DerivativeUnavailable { order, what: self.label.clone() });
        }
        match &*self.kind {
            Kind::Constant(c) => Ok(if order == 0 { *c } else { 0.0 }),
            Kind::Product(ws) => {
                // product rule, accumulated factor by factor
                let mut acc = [1.0, 0.0, 0.0];
                for w in ws {
                    let f = [w.eval(x, 0)?, w.eval(x, 1)?, w.eval(x, 2)?];
                    acc = [
                        acc[0] * f[0],
                        acc[1] * f[0] + acc[0] * f[1],
                        acc[2] * f[0] + 2.0 * acc[1] * f[1] + acc[0] * f[2],
                    ];
                }
                Ok(acc[order])
            }
            _ => {
                let a = self.sign() * self.log_abs(x)?.exp();
                Ok(match order {
                    0 => a,
                    1 => a * self.log_deriv(x, 1)?,
                    _ => {
                        let (_, r2) = self.ratios(x)?;
                        a * r2
                    }
                })
            }
        }
    }
}

/// `ε_k = (k+1)^{−β}/2` for `k = 1..=n`.
pub fn epsilons(beta: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| 0.5 * ((k + 1) as f64).powf(-beta)).collect()
}

/// Exponents `c_i = ε_i Π_{k<i}(1 − 2ε_k)` of the weights `a_i = e^{−c_i V}`.
pub fn epsilon_exponents(beta: f64, n: usize) -> Vec<f64> {
    let eps = epsilons(beta, n);
    let mut prod = 1.0;
    eps.iter()
        .map(|e| {
            let c = e * prod;
            prod *= 1.0 - 2.0 * e;
            c
        })
        .collect()
}

pub(crate) fn check_subbotin_range(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::invalid(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    let upper = alpha / (2.0 - alpha);
    if !(beta > 1.0 && beta < upper) {
        return Err(Error::invalid(format!("beta must lie in (1, {upper}), got {beta}")));
    }
    Ok(())
}

/// The weights `a_1..a_n` for the smoothed Subbotin potential with the
/// default smoothing radius.
pub fn epsilon_family(alpha: f64, beta: f64, n: usize) -> Result<Vec<Weight>> {
    check_subbotin_range(alpha, beta)?;
    let v = Potential::new(&PotentialSpec::Subbotin { alpha, delta: DEFAULT_SUBBOTIN_DELTA })?;
    epsilon_family_for(&v, alpha, beta, n)
}

/// Same as [`epsilon_family`] over a caller-supplied potential.
pub fn epsilon_family_for(v: &Potential, alpha: f64, beta: f64, n: usize) -> Result<Vec<Weight>> {
    check_subbotin_range(alpha, beta)?;
    if n == 0 {
        return Err(Error::invalid("need at least one weight"));
    }
    Ok(epsilon_exponents(beta, n).into_iter().map(|c| Weight::exp_potential(c, v)).collect())
}
