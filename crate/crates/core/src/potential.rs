// SPDX-License-Identifier: Apache-2.0

//! Smooth potentials `V` with hand-coded derivatives up to order four, the
//! built-in example families, and the tilt `V_a = V + log(a²)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::textual::{self, Args};
use crate::weights::{Weight, WeightSpec};

/// Highest derivative order carried by a potential.
pub const MAX_ORDER: usize = 4;

/// Smoothing radius used for Subbotin potentials with `alpha` in (1, 2)
/// when none is given.
pub const DEFAULT_SUBBOTIN_DELTA: f64 = 1e-3;

/// Mass above which [`Potential::measure_mass`] reports divergence.
pub const MASS_CAP: f64 = 1e12;

/// Declarative description of a potential, with a one-line textual form
/// (`gaussian:rho=1`, `subbotin:alpha=1.5,delta=1e-3`, `poly:0,0,0.5`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `rho x² / 2`
    Gaussian { rho: f64 },
    /// `((x² + delta²)^{alpha/2} − delta^alpha) / alpha`
    Subbotin { alpha: f64, delta: f64 },
    /// `x⁴/4 − beta x²/2`
    DoubleWell { beta: f64 },
    /// `x²/2 + alpha sin(beta x²)`
    OscillatingGaussian { alpha: f64, beta: f64 },
    /// `x²/2 + amp sin(freq x)`
    SinePerturbedGaussian { amp: f64, freq: f64 },
    /// `V_base + log(a²)`
    Tilted { base: Box<PotentialSpec>, weight: Box<WeightSpec> },
    /// Coefficients from low to high degree.
    Polynomial { coeffs: Vec<f64> },
}

impl PotentialSpec {
    /// Builds the potential; equivalent to [`Potential::new`].
    pub fn build(&self) -> Result<Potential> {
        Potential::new(self)
    }
}

pub(crate) fn parse_potential(s: &str, offset: usize) -> Result<PotentialSpec> {
    let s_trim = s.trim();
    let lead = s.len() - s.trim_start().len();
    let offset = offset + lead;
    let (kind, rest, rest_off) = textual::split_kind(s_trim, offset)?;
    match kind {
        "gaussian" => {
            let args = Args::parse(rest, rest_off)?;
            let spec = PotentialSpec::Gaussian { rho: args.get("rho")?.unwrap_or(1.0) };
            args.finish(&["rho"])?;
            Ok(spec)
        }
        "subbotin" => {
            let args = Args::parse(rest, rest_off)?;
            let alpha = args.require("alpha")?;
            let delta = args
                .get("delta")?
                .unwrap_or(if alpha < 2.0 { DEFAULT_SUBBOTIN_DELTA } else { 0.0 });
            args.finish(&["alpha", "delta"])?;
            Ok(PotentialSpec::Subbotin { alpha, delta })
        }
        "double_well" => {
            let args = Args::parse(rest, rest_off)?;
            let spec = PotentialSpec::DoubleWell { beta: args.require("beta")? };
            args.finish(&["beta"])?;
            Ok(spec)
        }
        "osc_gauss" => {
            let args = Args::parse(rest, rest_off)?;
            let spec = PotentialSpec::OscillatingGaussian { alpha: args.require("alpha")?, beta: args.require("beta")? };
            args.finish(&["alpha", "beta"])?;
            Ok(spec)
        }
        "gauss_sin" => {
            let args = Args::parse(rest, rest_off)?;
            let spec = PotentialSpec::SinePerturbedGaussian {
                amp: args.require("amp")?,
                freq: args.get("freq")?.unwrap_or(1.0),
            };
            args.finish(&["amp", "freq"])?;
            Ok(spec)
        }
        "poly" => {
            let coeffs = textual::split_top(rest, rest_off)?
                .into_iter()
                .map(|(item, off)| textual::number(item, off))
                .collect::<Result<Vec<_>>>()?;
            Ok(PotentialSpec::Polynomial { coeffs })
        }
        "tilt" => {
            let items = textual::split_top(rest, rest_off)?;
            if items.len() != 2 {
                return Err(textual::err(rest, rest_off, "tilt expects [potential],[weight]"));
            }
            let (b, boff) = textual::unbracket(items[0].0, items[0].1);
            let (w, woff) = textual::unbracket(items[1].0, items[1].1);
            Ok(PotentialSpec::Tilted {
                base: Box::new(parse_potential(b, boff)?),
                weight: Box::new(crate::weights::parse_weight(w, woff)?),
            })
        }
        other => Err(Error::Parse {
            input: s_trim.to_string(),
            position: offset,
            message: format!("unknown potential kind `{other}`"),
        }),
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_potential(s, 0)
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Gaussian { rho } => write!(f, "gaussian:rho={rho}"),
            PotentialSpec::Subbotin { alpha, delta } => write!(f, "subbotin:alpha={alpha},delta={delta}"),
            PotentialSpec::DoubleWell { beta } => write!(f, "double_well:beta={beta}"),
            PotentialSpec::OscillatingGaussian { alpha, beta } => write!(f, "osc_gauss:alpha={alpha},beta={beta}"),
            PotentialSpec::SinePerturbedGaussian { amp, freq } => write!(f, "gauss_sin:amp={amp},freq={freq}"),
            PotentialSpec::Tilted { base, weight } => write!(f, "tilt:[{base}],[{weight}]"),
            PotentialSpec::Polynomial { coeffs } => {
                write!(f, "poly:")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

type DerivFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

#[derive(Clone)]
enum Kind {
    Gaussian { rho: f64 },
    Subbotin { alpha: f64, delta: f64 },
    DoubleWell { beta: f64 },
    OscGauss { alpha: f64, beta: f64 },
    SineGauss { amp: f64, freq: f64 },
    Polynomial(Vec<f64>),
    Tilted { base: Potential, weight: Weight },
    Custom(Arc<DerivFn>),
    Shifted { base: Potential, shift: f64 },
}

/// A smooth potential with derivatives of order 0 through 4.
///
/// Cheap to clone; all data is shared and immutable.
#[derive(Clone)]
pub struct Potential {
    kind: Arc<Kind>,
    label: String,
    spec: Option<PotentialSpec>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").field("label", &self.label).finish()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

impl Potential {
    /// Instantiates a potential from its spec, checking parameter ranges.
    pub fn new(spec: &PotentialSpec) -> Result<Self> {
        let kind = match spec {
            PotentialSpec::Gaussian { rho } => {
                positive("rho", *rho)?;
                Kind::Gaussian { rho: *rho }
            }
            PotentialSpec::Subbotin { alpha, delta } => {
                if !(alpha.is_finite() && *alpha > 1.0) {
                    return Err(Error::invalid(format!("subbotin alpha must exceed 1, got {alpha}")));
                }
                if !(delta.is_finite() && *delta >= 0.0) {
                    return Err(Error::invalid(format!("subbotin delta must be nonnegative, got {delta}")));
                }
                if *alpha < 2.0 && *delta == 0.0 {
                    return Err(Error::invalid("subbotin with alpha < 2 needs a smoothing radius delta > 0"));
                }
                Kind::Subbotin { alpha: *alpha, delta: *delta }
            }
            PotentialSpec::DoubleWell { beta } => {
                positive("beta", *beta)?;
                Kind::DoubleWell { beta: *beta }
            }
            PotentialSpec::OscillatingGaussian { alpha, beta } => {
                positive("alpha", *alpha)?;
                positive("beta", *beta)?;
                Kind::OscGauss { alpha: *alpha, beta: *beta }
            }
            PotentialSpec::SinePerturbedGaussian { amp, freq } => {
                if !amp.is_finite() || !freq.is_finite() {
                    return Err(Error::invalid("gauss_sin parameters must be finite"));
                }
                Kind::SineGauss { amp: *amp, freq: *freq }
            }
            PotentialSpec::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("polynomial needs finite coefficients"));
                }
                Kind::Polynomial(coeffs.clone())
            }
            PotentialSpec::Tilted { base, weight } => {
                let base = Potential::new(base)?;
                let weight = Weight::new(weight)?;
                return base.tilt(&weight);
            }
        };
        Ok(Potential { kind: Arc::new(kind), label: spec.to_string(), spec: Some(spec.clone()) })
    }

    /// A user-supplied potential. `f(x, k)` must return the k-th derivative
    /// for `k` in `0..=4`.
    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        Potential { kind: Arc::new(Kind::Custom(Arc::new(f))), label: label.into(), spec: None }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The declarative spec, when the potential was built from one.
    pub fn spec(&self) -> Option<&PotentialSpec> {
        self.spec.as_ref()
    }

    /// Interval outside of which the potential is undefined. Unbounded for
    /// analytic potentials; tilts by tabulated weights restrict it.
    pub fn domain(&self) -> (f64, f64) {
        match &*self.kind {
            Kind::Tilted { base, weight } => {
                let (a, b) = base.domain();
                let (c, d) = weight.domain();
                (a.max(c), b.min(d))
            }
            Kind::Shifted { base, .. } => base.domain(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Highest derivative order available everywhere on the domain.
    pub fn max_order(&self) -> usize {
        match &*self.kind {
            Kind::Tilted { base, weight } => base.max_order().min(weight.max_log_order()),
            Kind::Shifted { base, .. } => base.max_order(),
            _ => MAX_ORDER,
        }
    }

    /// The `order`-th derivative of V at `x`.
    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if order > MAX_ORDER {
            return Err(Error::DerivativeUnavailable { order, what: self.label.clone() });
        }
        let v = match &*self.kind {
            Kind::Gaussian { rho } => match order {
                0 => 0.5 * rho * x * x,
                1 => rho * x,
                2 => *rho,
                _ => 0.0,
            },
            Kind::Subbotin { alpha, delta } => subbotin(*alpha, *delta, x, order),
            Kind::DoubleWell { beta } => match order {
                0 => 0.25 * x.powi(4) - 0.5 * beta * x * x,
                1 => x.powi(3) - beta * x,
                2 => 3.0 * x * x - beta,
                3 => 6.0 * x,
                _ => 6.0,
            },
            Kind::OscGauss { alpha, beta } => {
                let p = beta * x * x;
                let (s, c) = p.sin_cos();
                let b2 = beta * beta;
                let osc = match order {
                    0 => s,
                    1 => 2.0 * beta * x * c,
                    2 => 2.0 * beta * c - 4.0 * b2 * x * x * s,
                    3 => -12.0 * b2 * x * s - 8.0 * b2 * beta * x.powi(3) * c,
                    _ => -12.0 * b2 * s - 48.0 * b2 * beta * x * x * c + 16.0 * b2 * b2 * x.powi(4) * s,
                };
                quadratic(x, order) + alpha * osc
            }
            Kind::SineGauss { amp, freq } => {
                let phase = freq * x + order as f64 * std::f64::consts::FRAC_PI_2;
                quadratic(x, order) + amp * freq.powi(order as i32) * phase.sin()
            }
            Kind::Polynomial(c) => poly_deriv(c, x, order),
            Kind::Custom(f) => f(x, order),
            Kind::Shifted { base, shift } => {
                let v = base.eval(x, order)?;
                if order == 0 {
                    v + shift
                } else {
                    v
                }
            }
            Kind::Tilted { base, weight } => {
                let v = base.eval(x, order)?;
                let w = if order == 0 { weight.log_abs(x)? } else { weight.log_deriv(x, order)? };
                v + 2.0 * w
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what: format!("V^({order}) of {}", self.label), x })
        }
    }

    /// `V_a = V + log(a²)`.
    pub fn tilt(&self, weight: &Weight) -> Result<Potential> {
        if weight.is_trivial() {
            return Ok(Potential {
                kind: Arc::new(Kind::Shifted { base: self.clone(), shift: 2.0 * weight.log_abs(0.0)? }),
                label: self.label.clone(),
                spec: self.spec.clone(),
            });
        }
        let spec = match (&self.spec, weight.spec()) {
            (Some(b), Some(w)) => Some(PotentialSpec::Tilted { base: Box::new(b.clone()), weight: Box::new(w.clone()) }),
            _ => None,
        };
        Ok(Potential {
            kind: Arc::new(Kind::Tilted { base: self.clone(), weight: weight.clone() }),
            label: format!("tilt:[{}],[{}]", self.label, weight.label()),
            spec,
        })
    }

    /// Samples `q(x) = V'(x)²/2 − V''(x)` at geometrically spaced `|x|` up to
    /// `x_max` and reports whether it looks unbounded at both ends.
    ///
    /// A heuristic, not a proof: evidence is positive when on each side q is
    /// positive, strictly increasing over the last decade of samples and
    /// grows there by more than one percent.
    pub fn ess_spectrum_probe(&self, x_max: f64) -> Result<EssProbe> {
        if !(x_max > 0.0) {
            return Err(Error::invalid("probe radius must be positive"));
        }
        let q = |x: f64| -> Result<f64> {
            let d1 = self.eval(x, 1)?;
            Ok(0.5 * d1 * d1 - self.eval(x, 2)?)
        };
        const PER_DECADE: usize = 10;
        const DECADES: usize = 3;
        let radii: Vec<f64> = (0..=PER_DECADE * DECADES)
            .map(|j| x_max * 10f64.powf(j as f64 / PER_DECADE as f64 - DECADES as f64))
            .collect();
        let mut trend = Vec::with_capacity(2 * radii.len());
        let mut evidence = true;
        for sign in [-1.0, 1.0] {
            let side: Vec<(f64, f64)> = radii.iter().map(|&r| Ok((sign * r, q(sign * r)?))).collect::<Result<_>>()?;
            let last = &side[side.len() - PER_DECADE - 1..];
            let increasing = last.windows(2).all(|w| w[1].1 > w[0].1);
            let positive = last.iter().all(|p| p.1 > 0.0);
            let (first, end) = (last[0].1, last[last.len() - 1].1);
            let growing = end - first > 1e-2 * end.abs();
            evidence &= increasing && positive && growing;
            trend.extend(side);
        }
        trend.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(EssProbe { empty_evidence: evidence, trend })
    }

    /// `∫ e^{−V}` over the domain, extending the integration window by
    /// doubling until two consecutive tail contributions fall below `tol`.
    pub fn measure_mass(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let density = |x: f64| match self.eval(x, 0) {
            Ok(v) => (-v).exp(),
            Err(_) => f64::NAN,
        };
        let (lo, hi) = self.domain();
        if lo.is_finite() && hi.is_finite() {
            let m = numeric::integrate(&density, lo, hi, tol);
            return check_mass(m, &self.label);
        }
        let center = if lo.is_finite() { lo + 1.0 } else if hi.is_finite() { hi - 1.0 } else { 0.0 };
        let mut half = 1.0;
        let (mut a, mut b) = ((center - half).max(lo), (center + half).min(hi));
        let mut mass = numeric::integrate(&density, a, b, 0.1 * tol);
        let mut quiet = 0;
        while half < 1e8 {
            half *= 2.0;
            let (na, nb) = ((center - half).max(lo), (center + half).min(hi));
            let tail = numeric::integrate(&density, na, a, 0.05 * tol) + numeric::integrate(&density, b, nb, 0.05 * tol);
            mass += tail;
            check_mass(mass, &self.label)?;
            (a, b) = (na, nb);
            if tail.abs() < tol {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(mass);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::Divergent(format!("tail of e^-V for {} does not decay", self.label)))
    }
}

fn check_mass(m: f64, label: &str) -> Result<f64> {
    if m.is_finite() && m <= MASS_CAP {
        Ok(m)
    } else {
        Err(Error::Divergent(format!("mass of {label} exceeds {MASS_CAP:e}")))
    }
}

/// Result of [`Potential::ess_spectrum_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssProbe {
    pub empty_evidence: bool,
    /// `(x, q(x))` samples sorted by `x`.
    pub trend: Vec<(f64, f64)>,
}

fn quadratic(x: f64, order: usize) -> f64 {
    match order {
        0 => 0.5 * x * x,
        1 => x,
        2 => 1.0,
        _ => 0.0,
    }
}

fn poly_deriv(c: &[f64], x: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for j in (order..c.len()).rev() {
        let falling: f64 = (0..order).map(|i| (j - i) as f64).product();
        acc = acc * x + c[j] * falling;
    }
    acc
}

/// `coef · |x|^e`, zero whenever the coefficient is.
fn power_term(coef: f64, x: f64, e: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * x.abs().powf(e)
    }
}

fn subbotin(alpha: f64, delta: f64, x: f64, order: usize) -> f64 {
    if delta == 0.0 {
        let sgn = if x < 0.0 { -1.0 } else { 1.0 };
        let a = alpha;
        return match order {
            0 => x.abs().powf(a) / a,
            1 => sgn * power_term(1.0, x, a - 1.0),
            2 => power_term(a - 1.0, x, a - 2.0),
            3 => sgn * power_term((a - 1.0) * (a - 2.0), x, a - 3.0),
            _ => power_term((a - 1.0) * (a - 2.0) * (a - 3.0), x, a - 4.0),
        };
    }
    let s = x * x + delta * delta;
    let m = 0.5 * (alpha - 2.0);
    match order {
        0 => (s.powf(0.5 * alpha) - delta.powf(alpha)) / alpha,
        1 => x * s.powf(m),
        2 => s.powf(m) + 2.0 * m * x * x * s.powf(m - 1.0),
        3 => 6.0 * m * x * s.powf(m - 1.0) + 4.0 * m * (m - 1.0) * x.powi(3) * s.powf(m - 2.0),
        _ => {
            6.0 * m * s.powf(m - 1.0)
                + 24.0 * m * (m - 1.0) * x * x * s.powf(m - 2.0)
                + 8.0 * m * (m - 1.0) * (m - 2.0) * x.powi(4) * s.powf(m - 3.0)
        }
    }
}
