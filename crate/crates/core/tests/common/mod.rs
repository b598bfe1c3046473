// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use intertwine::{Potential, PotentialSpec};

/// The example potentials every corpus-wide property is checked on.
pub const CORPUS: [&str; 9] = [
    "gaussian:rho=0.5",
    "gaussian:rho=1",
    "gaussian:rho=2",
    "subbotin:alpha=4",
    "subbotin:alpha=3",
    "subbotin:alpha=1.5,delta=1e-3",
    "double_well:beta=0.5",
    "osc_gauss:alpha=0.05,beta=0.3",
    "gauss_sin:amp=0.1,freq=1",
];

pub fn pot(s: &str) -> Potential {
    s.parse::<PotentialSpec>().unwrap_or_else(|e| panic!("{s}: {e}")).build().unwrap()
}

/// Golden-section minimum of a unimodal `f` on `[a, b]`.
pub fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-14 * (a.abs() + b.abs()).max(1e-300) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
