// SPDX-License-Identifier: Apache-2.0

//! One PASS/FAIL line per acceptance criterion. Exits non-zero when any
//! criterion fails.

mod common;

use std::time::Instant;

use common::{golden, pot, slope, CORPUS};
use intertwine::bounds::{
    brascamp_lieb_gap, chen_wang_lower, default_rho_grid, optimize_rho, subbotin_coefficients, subbotin_lower,
    subbotin_optimal, subbotin_term, verify_decomposition, KappaMode, DEFAULT_DOMAIN,
};
use intertwine::schrodinger::{flat_potential_gap, flat_potential_with_zero, intertwining_residual};
use intertwine::spectra::{
    discretize, eigenfunction_of_L, eigenvalues_sturm, solve_diffusion_spectrum, solve_with, weyl_fit, SolverOptions,
};
use intertwine::{compute_m, Form, Grid, Potential, PotentialSpec, TestFunction, TridiagonalOperator, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = intertwine::Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn line(id: usize, title: &str, outcome: Outcome, secs: f64) -> bool {
    let (ok, detail) = match outcome {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {id:>2} {} [{secs:6.2}s] {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn gaussian_exactness() -> Outcome {
    let mut worst = 0.0_f64;
    for rho in [0.5, 1.0, 2.0] {
        let r = solve_diffusion_spectrum(&pot(&format!("gaussian:rho={rho}")), 6, 1e-6)?;
        for (j, l) in r.eigenvalues.iter().enumerate() {
            worst = worst.max((l - j as f64 * rho).abs());
        }
    }
    Ok((worst < 1e-5, format!("max |λ_n − nρ| = {worst:.2e} (tol 1e-5)")))
}

fn gap_check(spec: &str, want: f64) -> Outcome {
    let v = pot(spec);
    let g = brascamp_lieb_gap(&v, DEFAULT_DOMAIN)?;
    let r = solve_diffusion_spectrum(&v, 2, 1e-6)?;
    let oracle = r.eigenvalues[2] - r.eigenvalues[1];
    let closed = (g.bound - want).abs() < 1e-9;
    let sandwich = oracle >= want - 1e-4;
    Ok((
        closed && sandwich,
        format!(
            "bound = {} vs {want} ({}), oracle gap = {oracle:.6} ≥ {want} − 1e-4 ({})",
            g.bound,
            if closed { "ok" } else { "off" },
            if sandwich { "ok" } else { "off" }
        ),
    ))
}

fn chen_wang_optimality() -> Outcome {
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for spec in ["gaussian:rho=1", "subbotin:alpha=4", "double_well:beta=0.5"] {
        let v = pot(spec);
        let r = solve_diffusion_spectrum(&v, 1, 1e-6)?;
        let g = eigenfunction_of_L(&v, 1, &r)?;
        let b = Weight::from_eigenfunction(&g)?;
        let e = chen_wang_lower(&v, &Weight::constant(1.0)?, &b, (f64::NEG_INFINITY, f64::INFINITY))?;
        let rel = (e.value - r.eigenvalues[1]).abs() / r.eigenvalues[1];
        worst = worst.max(rel);
        parts.push(format!("{spec} {rel:.1e}"));
    }
    Ok((worst < 1e-3, format!("relative error {} (tol 1e-3)", parts.join(", "))))
}

fn decomposition() -> Outcome {
    let d = verify_decomposition(&pot("subbotin:alpha=4"), 2, 1e-6)?;
    let identity = (d.lambda_n - d.levels.iter().map(|l| l.gap).sum::<f64>()).abs();
    let dev = d.levels.iter().map(|l| l.deviation).fold(0.0, f64::max);
    Ok((
        identity < 1e-4 && dev < 1e-3,
        format!("|λ_2 − Σ gaps| = {identity:.2e} (tol 1e-4), max M deviation = {dev:.2e} (tol 1e-3)"),
    ))
}

fn milman_sandwich() -> Outcome {
    let r = solve_diffusion_spectrum(&pot("gauss_sin:amp=0.1,freq=1"), 8, 1e-6)?;
    let mut ok = true;
    let mut ratio = (f64::INFINITY, 0.0_f64);
    for n in 1..=8 {
        let l = r.eigenvalues[n];
        let nf = n as f64;
        ok &= 0.9 * nf <= l && l <= 1.1 * nf;
        ratio = (ratio.0.min(l / nf), ratio.1.max(l / nf));
    }
    Ok((ok, format!("λ_n/n ∈ [{:.5}, {:.5}] for n = 1..8 (need [0.9, 1.1])", ratio.0, ratio.1)))
}

fn subbotin_closed_form() -> Outcome {
    let (alpha, beta) = (1.5, 1.2);
    let mut worst_term = 0.0_f64;
    for i in 1..=5 {
        let (c, d) = subbotin_coefficients(alpha, beta, i)?;
        // minimise over t = log x
        let f = |t: f64| {
            let x = t.exp();
            c * x.powf(alpha - 2.0) + d * x.powf(2.0 * (alpha - 1.0))
        };
        let (t0, _) = (-400..=400).map(|j| j as f64 * 0.05).map(|t| (t, f(t))).fold((0.0, f64::INFINITY), |b, p| {
            if p.1 < b.1 {
                p
            } else {
                b
            }
        });
        let (_, m) = golden(f, t0 - 0.05, t0 + 0.05);
        worst_term = worst_term.max((subbotin_term(alpha, beta, i)? - m).abs());
    }
    let v = pot("subbotin:alpha=1.5,delta=1e-3");
    let r = solve_with(&v, 5, &SolverOptions::with_tol(1e-4))?;
    let mut sandwich = true;
    let mut slack = f64::INFINITY;
    for n in 1..=5 {
        let fixed = subbotin_lower(alpha, beta, n)?;
        let (_, best) = subbotin_optimal(alpha, n)?;
        let l = r.eigenvalues[n];
        sandwich &= fixed <= l + 5e-2 && best <= l + 5e-2;
        slack = slack.min(l - fixed.max(best));
    }
    Ok((
        worst_term < 1e-10 && sandwich,
        format!("term error {worst_term:.1e} (tol 1e-10), min(λ_n − bound) = {slack:.4} over n = 1..5 (need ≥ −5e-2)"),
    ))
}

fn one_intertwining() -> Outcome {
    let v = pot("subbotin:alpha=4");
    let r = solve_diffusion_spectrum(&v, 8, 1e-6)?;
    let mut below = true;
    let mut agree = 0.0_f64;
    let mut values = Vec::new();
    for n in 1..=8 {
        let b = optimize_rho(&v, n, &default_rho_grid(), KappaMode::GradientOnly)?;
        // max over ρ of ρ(n − 1/2) − ρ³/(6√3)
        let s = n as f64 - 0.5;
        let rho = (2.0 * 3f64.sqrt() * s).sqrt();
        let closed = rho * s - rho.powi(3) / (6.0 * 3f64.sqrt());
        agree = agree.max((b.value - closed).abs() / closed);
        below &= b.value <= r.eigenvalues[n];
        values.push(b.value);
    }
    let xs: Vec<f64> = (4..=8).map(|n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values[3..].iter().map(|v| v.ln()).collect();
    let exponent = slope(&xs, &ys);
    let off = (exponent - 1.5).abs() / 1.5;
    Ok((
        below && off <= 0.1 && agree < 1e-6,
        format!(
            "bound ≤ λ_n for n = 1..8: {below}, optimiser vs closed form {agree:.1e}, exponent {exponent:.4} ({:.1}% from 1.5, tol 10%)",
            100.0 * off
        ),
    ))
}

fn weyl() -> Outcome {
    let e = weyl_fit(&pot("subbotin:alpha=4"), 30)?;
    Ok(((0.60..=0.74).contains(&e), format!("exponent {e:.4} (need [0.60, 0.74], target 2/3)")))
}

fn random_potential(rng: &mut ChaCha8Rng) -> PotentialSpec {
    match rng.gen_range(0..5) {
        0 => PotentialSpec::Gaussian { rho: rng.gen_range(0.5..2.0) },
        1 => PotentialSpec::Subbotin { alpha: [2.0, 3.0, 4.0][rng.gen_range(0..3)], delta: 0.0 },
        2 => PotentialSpec::DoubleWell { beta: rng.gen_range(0.1..1.5) },
        3 => PotentialSpec::OscillatingGaussian { alpha: rng.gen_range(0.01..0.1), beta: rng.gen_range(0.1..0.5) },
        _ => PotentialSpec::Subbotin { alpha: rng.gen_range(1.2..1.9), delta: rng.gen_range(0.1..0.5) },
    }
}

fn random_weight(rng: &mut ChaCha8Rng) -> intertwine::Result<Weight> {
    Ok(match rng.gen_range(0..3) {
        0 => Weight::constant(rng.gen_range(0.5..2.0))?,
        1 => Weight::exp_potential(rng.gen_range(-0.2..0.2), &random_potential(rng).build()?),
        _ => Weight::product(&[
            Weight::exp_potential(rng.gen_range(-0.1..0.1), &pot("gaussian:rho=1")),
            Weight::exp_potential(rng.gen_range(-0.1..0.1), &random_potential(rng).build()?),
        ])?,
    })
}

fn random_test_function(rng: &mut ChaCha8Rng) -> TestFunction {
    match rng.gen_range(0..3) {
        0 => TestFunction::PolyGauss {
            coeffs: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            c: rng.gen_range(0.1..0.5),
        },
        1 => TestFunction::Sine { freq: rng.gen_range(0.3..2.0), phase: rng.gen_range(0.0..3.0) },
        _ => TestFunction::Bump { center: rng.gen_range(-1.0..1.0), radius: rng.gen_range(0.5..2.0) },
    }
}

fn intertwining_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let grid = Grid::new(-3.0, 3.0, 121)?;
    let (mut worst_res, mut worst_form) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let v: Potential = random_potential(&mut rng).build()?;
        let (a, b) = (random_weight(&mut rng)?, random_weight(&mut rng)?);
        let f = random_test_function(&mut rng);
        worst_res = worst_res.max(intertwining_residual(&v, &a, &b, &f, &grid)?);
        let m = [Form::Tilt, Form::Ratio, Form::H].map(|form| compute_m(&v, &a, &b, form));
        let [t, q, h] = m;
        let (t, q, h) = (t?, q?, h?);
        for _ in 0..100 {
            let x = rng.gen_range(-3.0..3.0);
            let mt = t.eval(x)?;
            let scale = mt.abs().max(1.0);
            worst_form = worst_form.max((q.eval(x)? - mt).abs() / scale).max((h.eval(x)? - mt).abs() / scale);
        }
    }
    Ok((
        worst_res < 1e-6 && worst_form < 1e-9,
        format!("max residual {worst_res:.1e} (tol 1e-6), max relative form gap {worst_form:.1e} (tol 1e-9)"),
    ))
}

/// Richardson-combined lowest `k` eigenvalues of `−Δ + W` on `grid`.
fn flat_levels(w: &intertwine::SchrodingerPotential, grid: &Grid, k: usize) -> intertwine::Result<Vec<f64>> {
    let coarse = eigenvalues_sturm(&discretize(w, grid)?, k)?;
    let fine = eigenvalues_sturm(&discretize(w, &grid.refined())?, k)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

fn johnsen() -> Outcome {
    let mut worst = (0.0_f64, "");
    for spec in CORPUS {
        let v = pot(spec);
        let tol = if spec.contains("delta") { 1e-4 } else { 1e-6 };
        let grid = solve_with(&v, 5, &SolverOptions::with_tol(tol))?.grid;
        let w0 = flat_levels(&flat_potential_with_zero(&v), &grid, 6)?;
        let w1 = flat_levels(&flat_potential_gap(&v), &grid, 5)?;
        for j in 0..5 {
            let d = (w0[j + 1] - w1[j]).abs();
            if d > worst.0 {
                worst = (d, spec);
            }
        }
    }
    Ok((
        worst.0 < 1e-5,
        format!("max |λ_(j+1)(W₀) − λ_j(W₁)| over {} potentials, 5 levels = {:.1e} ({}) (tol 1e-5)", CORPUS.len(), worst.0, worst.1),
    ))
}

fn eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=50);
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let t = TridiagonalOperator::new(diag.clone(), off.clone())?;
        let ours = eigenvalues_sturm(&t, n)?;
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let mut reference: Vec<f64> = nalgebra::SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    let w0 = flat_potential_with_zero(&pot("gaussian:rho=1"));
    let (mut hs, mut errs) = (Vec::new(), Vec::new());
    for n in [201, 401, 801, 1601] {
        let grid = Grid::new(-12.0, 12.0, n)?;
        let l1 = eigenvalues_sturm(&discretize(&w0, &grid)?, 2)?[1];
        hs.push(grid.spacing().ln());
        errs.push((l1 - 1.0).abs().ln());
    }
    let order = slope(&hs, &errs);
    Ok((
        worst < 1e-10 && (order - 2.0).abs() <= 0.2,
        format!("max |Sturm − dense| = {worst:.1e} over 200 matrices (tol 1e-10), λ₁ error slope in h = {order:.3} (need 2 ± 0.2)"),
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("Gaussian exactness", gaussian_exactness),
        ("gap bound, quartic", || gap_check("subbotin:alpha=4", 6f64.sqrt())),
        ("gap bound, double well", || gap_check("double_well:beta=0.5", 2.5)),
        ("Chen–Wang optimality", chen_wang_optimality),
        ("decomposition identity", decomposition),
        ("Milman sandwich", milman_sandwich),
        ("Subbotin closed form", subbotin_closed_form),
        ("one-intertwining bound", one_intertwining),
        ("Weyl exponent", weyl),
        ("intertwining identity suite", intertwining_suite),
        ("numerical Johnsen", johnsen),
        ("eigensolver correctness", eigensolver),
    ];
    let mut passed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Ok((false, "panicked".into())));
        if line(i + 1, title, outcome, start.elapsed().as_secs_f64()) {
            passed += 1;
        }
    }
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
