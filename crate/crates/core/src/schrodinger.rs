// SPDX-License-Identifier: Apache-2.0

//! The intertwining calculus.
//!
//! For weights `a`, `b` the weighted gradient `∂_b f = b f'` intertwines the
//! diffusion operator `L_a f = f'' − V_a' f'` with a Schrödinger operator:
//!
//! ```text
//! ∂_b L_a f = (L_ab − M_a^b) ∂_b f,
//! M_a^b = V_a'' − b L_a(1/b) = V_a'' + L_ab(b)/b = (−L_a h)'/h'   (h' = 1/b).
//! ```
//!
//! This module evaluates `M_a^b` through each of the three expressions, the
//! two flat potentials obtained with `b = e^{−V/2}`, and the residual of the
//! intertwining identity for closed-form test functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::spectra::Grid;
use crate::weights::Weight;

/// Weights with `|b(x)|` below this are treated as vanishing by the
/// value-based forms.
pub const WEIGHT_FLOOR: f64 = 1e-280;

/// Which of the three equivalent expressions evaluates `M_a^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `V_a'' − b L_a(1/b)`, evaluated through `b'/b` and `b''/b`.
    #[default]
    Tilt,
    /// `V_a'' + L_ab(b)/b` with `V_ab` from the tilt by `ab`.
    Ratio,
    /// `(−L_a h)'/h'` with `h' = 1/b`.
    H,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub potential: String,
    pub a: String,
    pub b: String,
    pub form: Form,
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Kind {
    M { va: Potential, vab: Potential, b: Weight, form: Form },
    WithZero(Potential),
    Gap(Potential),
    OneIntertwining { v: Potential, rho: f64 },
    Custom(Arc<ScalarFn>),
}

/// A multiplicative potential `W` of a flat or weighted Schrödinger operator.
#[derive(Clone)]
pub struct SchrodingerPotential {
    kind: Arc<Kind>,
    label: String,
    provenance: Option<Provenance>,
}

impl fmt::Debug for SchrodingerPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchrodingerPotential").field("label", &self.label).finish()
    }
}

impl SchrodingerPotential {
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SchrodingerPotential { kind: Arc::new(Kind::Custom(Arc::new(f))), label: label.into(), provenance: None }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Interval on which the potential can be evaluated.
    pub fn domain(&self) -> (f64, f64) {
        match &*self.kind {
            Kind::M { vab, va, b, .. } => {
                let (l1, h1) = va.domain();
                let (l2, h2) = vab.domain();
                let (l3, h3) = b.domain();
                (l1.max(l2).max(l3), h1.min(h2).min(h3))
            }
            Kind::WithZero(v) | Kind::Gap(v) | Kind::OneIntertwining { v, .. } => v.domain(),
            Kind::Custom(_) => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let w = match &*self.kind {
            Kind::M { va, vab, b, form } => match form {
                Form::Tilt => {
                    let (r1, r2) = b.ratios(x)?;
                    let va1 = va.eval(x, 1)?;
                    // b (1/b)' = −r1 and b (1/b)'' = 2 r1² − r2
                    let b_la_inv_b = (2.0 * r1 * r1 - r2) + va1 * r1;
                    va.eval(x, 2)? - b_la_inv_b
                }
                Form::Ratio => {
                    let (b0, b1, b2) = weight_values(b, x)?;
                    va.eval(x, 2)? + (b2 - vab.eval(x, 1)? * b1) / b0
                }
                Form::H => {
                    let (b0, b1, b2) = weight_values(b, x)?;
                    let h1 = 1.0 / b0;
                    let h2 = -b1 / (b0 * b0);
                    let h3 = -b2 / (b0 * b0) + 2.0 * b1 * b1 / (b0 * b0 * b0);
                    let (va1, va2) = (va.eval(x, 1)?, va.eval(x, 2)?);
                    (-h3 + va2 * h1 + va1 * h2) / h1
                }
            },
            Kind::WithZero(v) => {
                let d1 = v.eval(x, 1)?;
                0.25 * d1 * d1 - 0.5 * v.eval(x, 2)?
            }
            Kind::Gap(v) => {
                let d1 = v.eval(x, 1)?;
                0.25 * d1 * d1 + 0.5 * v.eval(x, 2)?
            }
            Kind::OneIntertwining { v, rho } => {
                let d1 = v.eval(x, 1)?;
                0.5 * v.eval(x, 2)? + 0.25 * d1 * d1 + 0.5 * rho - 0.25 * rho * rho * x * x
            }
            Kind::Custom(f) => f(x),
        };
        if w.is_finite() {
            Ok(w)
        } else {
            Err(Error::NonFinite { what: self.label.clone(), x })
        }
    }
}

fn weight_values(b: &Weight, x: f64) -> Result<(f64, f64, f64)> {
    let b0 = b.eval(x, 0)?;
    if b0.abs() < WEIGHT_FLOOR {
        return Err(Error::VanishingWeight { x });
    }
    Ok((b0, b.eval(x, 1)?, b.eval(x, 2)?))
}

/// `M_a^b` for the diffusion with potential `v`, evaluated through `form`.
pub fn compute_m(v: &Potential, a: &Weight, b: &Weight, form: Form) -> Result<SchrodingerPotential> {
    let va = v.tilt(a)?;
    let vab = v.tilt(&Weight::product(&[a.clone(), b.clone()])?)?;
    let provenance = Provenance {
        potential: v.label().to_string(),
        a: a.label().to_string(),
        b: b.label().to_string(),
        form,
    };
    Ok(SchrodingerPotential {
        kind: Arc::new(Kind::M { va, vab, b: b.clone(), form }),
        label: format!("M[{}; {}; {}]", v.label(), a.label(), b.label()),
        provenance: Some(provenance),
    })
}

/// `W₀ = V'²/4 − V''/2`: the flat conjugate of `−L`, with ground state
/// `e^{−V/2}` at energy 0.
pub fn flat_potential_with_zero(v: &Potential) -> SchrodingerPotential {
    SchrodingerPotential {
        kind: Arc::new(Kind::WithZero(v.clone())),
        label: format!("W0[{}]", v.label()),
        provenance: None,
    }
}

/// `W₁ = V''/2 + V'²/4 = M_1^{e^{−V/2}}`: the flat operator whose spectrum is
/// that of `−L` with the zero eigenvalue removed.
pub fn flat_potential_gap(v: &Potential) -> SchrodingerPotential {
    SchrodingerPotential {
        kind: Arc::new(Kind::Gap(v.clone())),
        label: format!("W1[{}]", v.label()),
        provenance: None,
    }
}

/// `M_1^{a_1}` with `a_1 = e^{−(V − ρx²/2)/2}`:
/// `V''/2 + V'²/4 + ρ/2 − ρ²x²/4`.
pub fn one_intertwining_potential(v: &Potential, rho: f64) -> SchrodingerPotential {
    SchrodingerPotential {
        kind: Arc::new(Kind::OneIntertwining { v: v.clone(), rho }),
        label: format!("M1[{}; rho={rho}]", v.label()),
        provenance: None,
    }
}

/// Closed-form test functions with derivatives up to order three.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { c: f64 },
    /// `p(x) e^{−c x²}` with `p` given low to high degree.
    PolyGauss { coeffs: Vec<f64>, c: f64 },
    /// `sin(freq x + phase)`
    Sine { freq: f64, phase: f64 },
    /// `exp(−1/(1 − t²))` for `t = (x − center)/radius` inside the support.
    Bump { center: f64, radius: f64 },
}

impl TestFunction {
    /// `[f, f', f'', f''']` at `x`.
    pub fn derivs(&self, x: f64) -> [f64; 4] {
        match self {
            TestFunction::Constant { c } => [*c, 0.0, 0.0, 0.0],
            TestFunction::PolyGauss { coeffs, c } => {
                let e = (-c * x * x).exp();
                let mut p = coeffs.clone();
                let mut out = [0.0; 4];
                for slot in out.iter_mut() {
                    *slot = horner(&p, x) * e;
                    // (p e^{−cx²})' = (p' − 2c x p) e^{−cx²}
                    let mut next = vec![0.0; p.len() + 1];
                    for (j, pj) in p.iter().enumerate() {
                        if j > 0 {
                            next[j - 1] += j as f64 * pj;
                        }
                        next[j + 1] -= 2.0 * c * pj;
                    }
                    p = next;
                }
                out
            }
            TestFunction::Sine { freq, phase } => {
                let t = freq * x + phase;
                let (s, co) = t.sin_cos();
                [s, freq * co, -freq * freq * s, -freq.powi(3) * co]
            }
            TestFunction::Bump { center, radius } => {
                let t = (x - center) / radius;
                let u = 1.0 - t * t;
                if u <= 0.0 {
                    return [0.0; 4];
                }
                let f = (-1.0 / u).exp();
                let g1 = -2.0 * t / (u * u);
                let g2 = -2.0 / (u * u) - 8.0 * t * t / u.powi(3);
                let g3 = -24.0 * t / u.powi(3) - 48.0 * t.powi(3) / u.powi(4);
                let r = *radius;
                [
                    f,
                    f * g1 / r,
                    f * (g2 + g1 * g1) / (r * r),
                    f * (g3 + 3.0 * g1 * g2 + g1.powi(3)) / r.powi(3),
                ]
            }
        }
    }
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `max_x |∂_b L_a f − (L_ab − M_a^b) ∂_b f|` over the grid nodes.
pub fn intertwining_residual(v: &Potential, a: &Weight, b: &Weight, f: &TestFunction, grid: &Grid) -> Result<f64> {
    let va = v.tilt(a)?;
    let vab = v.tilt(&Weight::product(&[a.clone(), b.clone()])?)?;
    let m = compute_m(v, a, b, Form::Tilt)?;
    let mut worst = 0.0_f64;
    for x in grid.points() {
        let [_, f1, f2, f3] = f.derivs(x);
        let (b0, b1, b2) = (b.eval(x, 0)?, b.eval(x, 1)?, b.eval(x, 2)?);
        let (va1, va2) = (va.eval(x, 1)?, va.eval(x, 2)?);
        let lhs = b0 * (f3 - va2 * f1 - va1 * f2);
        let u = b0 * f1;
        let u1 = b1 * f1 + b0 * f2;
        let u2 = b2 * f1 + 2.0 * b1 * f2 + b0 * f3;
        let rhs = u2 - vab.eval(x, 1)? * u1 - m.eval(x)? * u;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn pot(s: &str) -> Potential {
        s.parse::<PotentialSpec>().unwrap().build().unwrap()
    }

    fn one() -> Weight {
        Weight::constant(1.0).unwrap()
    }

    #[test]
    fn unweighted_m_is_curvature() {
        let m = compute_m(&pot("gaussian:rho=2.5"), &one(), &one(), Form::Tilt).unwrap();
        for x in [-3.0, 0.0, 4.0] {
            assert!((m.eval(x).unwrap() - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn half_potential_weight_gives_gap_potential() {
        let v = pot("double_well:beta=0.5");
        let b = Weight::exp_potential(0.5, &v);
        let w1 = flat_potential_gap(&v);
        for form in [Form::Tilt, Form::Ratio, Form::H] {
            let m = compute_m(&v, &one(), &b, form).unwrap();
            for x in [-2.0, -0.4, 0.0, 1.3] {
                let d1 = v.eval(x, 1).unwrap();
                let exact = 0.5 * v.eval(x, 2).unwrap() + 0.25 * d1 * d1;
                assert!((m.eval(x).unwrap() - exact).abs() < 1e-11, "{form:?} at {x}");
                assert!((w1.eval(x).unwrap() - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn subbotin_epsilon_potential_closed_form() {
        let (alpha, beta) = (1.5, 1.2);
        let delta = 1e-6;
        let v = Potential::new(&PotentialSpec::Subbotin { alpha, delta }).unwrap();
        let ws = crate::weights::epsilon_family_for(&v, alpha, beta, 3).unwrap();
        let eps = crate::weights::epsilons(beta, 3);
        for i in 0..3 {
            let composite = if i == 0 { one() } else { Weight::product(&ws[..i]).unwrap() };
            let m = compute_m(&v, &composite, &ws[i], Form::Tilt).unwrap();
            let p: f64 = eps[..i].iter().map(|e| 1.0 - 2.0 * e).product();
            let ci = (alpha - 1.0) * (1.0 - eps[i]) * p;
            let di = eps[i] * (1.0 - eps[i]) * p * p;
            for x in [0.5_f64, 1.0, 2.0] {
                let exact = ci * x.powf(alpha - 2.0) + di * x.powf(2.0 * (alpha - 1.0));
                assert!((m.eval(x).unwrap() - exact).abs() < 1e-5, "level {i} x {x}");
            }
        }
    }

    #[test]
    fn flat_potentials_of_gaussian_and_quartic() {
        let g = pot("gaussian:rho=1");
        let q = pot("subbotin:alpha=4");
        for x in [-2.0_f64, 0.0, 0.7, 3.0] {
            assert!((flat_potential_with_zero(&g).eval(x).unwrap() - (x * x / 4.0 - 0.5)).abs() < 1e-14);
            assert!((flat_potential_gap(&g).eval(x).unwrap() - (x * x / 4.0 + 0.5)).abs() < 1e-14);
            let w0 = flat_potential_with_zero(&q).eval(x).unwrap();
            let w1 = flat_potential_gap(&q).eval(x).unwrap();
            assert!((w0 - (x.powi(6) / 4.0 - 1.5 * x * x)).abs() < 1e-12);
            assert!((w1 - (x.powi(6) / 4.0 + 1.5 * x * x)).abs() < 1e-12);
            assert!((w1 - w0 - q.eval(x, 2).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_annihilated() {
        for s in ["gaussian:rho=1", "double_well:beta=0.5", "osc_gauss:alpha=0.05,beta=0.3", "subbotin:alpha=4"] {
            let v = pot(s);
            let w0 = flat_potential_with_zero(&v);
            for x in [-2.0, -0.3, 0.0, 0.8, 1.9] {
                // psi = e^{-V/2}: psi'' = psi (V'^2/4 - V''/2)
                let (v1, v2) = (v.eval(x, 1).unwrap(), v.eval(x, 2).unwrap());
                let psi = (-0.5 * v.eval(x, 0).unwrap()).exp();
                let psi2 = psi * (0.25 * v1 * v1 - 0.5 * v2);
                let res = -psi2 + w0.eval(x).unwrap() * psi;
                assert!(res.abs() < 1e-8, "{s} at {x}: {res}");
            }
        }
    }

    #[test]
    fn classical_intertwining_residual() {
        let grid = Grid::new(-4.0, 4.0, 8001).unwrap();
        let f = TestFunction::PolyGauss { coeffs: vec![0.0, 0.0, 0.0, 1.0], c: 1.0 };
        let r = intertwining_residual(&pot("gaussian:rho=1"), &one(), &one(), &f, &grid).unwrap();
        assert!(r < 1e-7, "{r}");
    }

    #[test]
    fn weighted_intertwining_residual_double_well() {
        let v = pot("double_well:beta=0.5");
        let b = Weight::exp_potential(0.5, &v);
        let grid = Grid::new(-4.0, 4.0, 801).unwrap();
        let f = TestFunction::Sine { freq: 1.0, phase: 0.0 };
        assert!(intertwining_residual(&v, &one(), &b, &f, &grid).unwrap() < 1e-6);
    }

    #[test]
    fn constants_are_killed() {
        let v = pot("osc_gauss:alpha=0.05,beta=0.3");
        let a = Weight::exp_potential(0.2, &v);
        let b = Weight::exp_potential(-0.1, &pot("gaussian:rho=1"));
        let grid = Grid::new(-3.0, 3.0, 61).unwrap();
        let r = intertwining_residual(&v, &a, &b, &TestFunction::Constant { c: 3.0 }, &grid).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn test_function_derivatives_match_differences() {
        let fs = [
            TestFunction::PolyGauss { coeffs: vec![1.0, -0.5, 0.25], c: 0.3 },
            TestFunction::Sine { freq: 1.7, phase: 0.2 },
            TestFunction::Bump { center: 0.1, radius: 1.5 },
        ];
        let h = 1e-4;
        for f in &fs {
            for x in [-0.9, 0.0, 0.6] {
                let d = f.derivs(x);
                let (up, down) = (f.derivs(x + h), f.derivs(x - h));
                for (k, dk) in d.iter().enumerate().skip(1) {
                    let fd = (up[k - 1] - down[k - 1]) / (2.0 * h);
                    assert!((fd - dk).abs() < 1e-5 * (1.0 + dk.abs()), "{f:?} order {k} at {x}");
                }
            }
        }
    }
}
