// SPDX-License-Identifier: Apache-2.0

use anyhow::{anyhow, bail, Result};
use intertwine::bounds::{evaluate, number, verify_decomposition, BoundRequest};
use intertwine::schrodinger::intertwining_residual;
use intertwine::spectra::{counting_function, solve_diffusion_spectrum, weyl_fit_with, SolverOptions};
use intertwine::{compute_m, BoundReport, Error, Family, Form, Grid, SpectrumResult, Status, TestFunction, Weight};
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::render;

/// Window for the intertwining residual and form checks.
const VERIFY_WINDOW: (f64, f64) = (-3.0, 3.0);
const VERIFY_NODES: usize = 241;
const WEYL_K: usize = 30;
const WEYL_TOL: f64 = 1e-4;

/// A rendered command result and the exit code it calls for.
pub struct Output {
    pub doc: Value,
    pub table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    pub code: i32,
}

impl Output {
    fn new(doc: Value) -> Self {
        Output { doc, table: None, code: 0 }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(render::json(&self.doc)),
            Format::Text => Ok(render::text(&self.doc)),
            Format::Csv => match &self.table {
                Some((h, rows)) => Ok(render::csv(h, rows)),
                None => bail!(Error::invalid("this command has no CSV form; use json or text")),
            },
        }
    }
}

/// 2 for bad input or an inapplicable request, 1 for anything else.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_precondition() => 2,
        Some(Error::DerivativeUnavailable { .. }) => 2,
        _ => 1,
    }
}

fn error_doc(e: &anyhow::Error) -> Value {
    json!({ "error": format!("{e:#}") })
}

fn spectrum_doc(r: &SpectrumResult) -> Value {
    json!({
        "potential": r.potential,
        "eigenvalues": r.eigenvalues.iter().copied().map(number).collect::<Vec<_>>(),
        "error_estimates": r.error_estimates.iter().copied().map(number).collect::<Vec<_>>(),
        "grid": { "x_min": number(r.grid.x_min), "x_max": number(r.grid.x_max), "n": r.grid.n },
        "converged": r.converged,
    })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Output> {
    let r = solve_diffusion_spectrum(&cfg.potential, cfg.k.unwrap_or(cfg.n), cfg.tol)?;
    let rows = (0..r.eigenvalues.len())
        .map(|j| vec![j.to_string(), render::num(r.eigenvalues[j]), render::num(r.error_estimates[j])])
        .collect();
    let mut out = Output::new(spectrum_doc(&r));
    out.table = Some((vec!["index", "eigenvalue", "error_estimate"], rows));
    Ok(out)
}

fn request(cfg: &RunConfig) -> BoundRequest {
    BoundRequest {
        n: cfg.n,
        weights: cfg.weights.clone(),
        rho: cfg.rho,
        beta: cfg.beta,
        domain: cfg.domain_or_default(),
        tol: cfg.tol,
    }
}

/// Oracle eigenvalues `λ_0..λ_k`, or the reason they are missing.
fn oracle(cfg: &RunConfig, k: usize) -> std::result::Result<Vec<f64>, String> {
    solve_diffusion_spectrum(&cfg.potential, k, cfg.tol).map(|r| r.eigenvalues).map_err(|e| e.to_string())
}

fn report_value(r: &std::result::Result<BoundReport, String>, family: Family, n: usize) -> Value {
    match r {
        Ok(r) => serde_json::to_value(r).expect("reports serialize"),
        Err(e) => json!({ "family": family.name(), "n": n, "status": "error", "reason": e }),
    }
}

pub fn bounds(cfg: &RunConfig) -> Result<Output> {
    let families = if cfg.families.is_empty() { Family::ALL.to_vec() } else { cfg.families.clone() };
    let eig = oracle(cfg, cfg.n.max(2));
    let req = request(cfg);
    let reports: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = families
            .iter()
            .map(|&f| {
                let (req, eig) = (&req, eig.as_deref().ok());
                s.spawn(move || evaluate(&cfg.potential, f, req, eig).map_err(|e| e.to_string()))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bound worker panicked")).collect()
    });
    let mut code = 0;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (f, r) in families.iter().zip(&reports) {
        values.push(report_value(r, *f, cfg.n));
        match r {
            Ok(r) => {
                rows.push(vec![
                    f.name().to_string(),
                    r.n.to_string(),
                    render::opt(r.lower),
                    render::opt(r.upper),
                    render::opt(r.oracle),
                    status_name(r.status).to_string(),
                ]);
                if families.len() == 1 && r.status != Status::Valid {
                    code = 2;
                }
            }
            Err(_) => {
                rows.push(vec![f.name().to_string(), cfg.n.to_string(), String::new(), String::new(), String::new(), "error".into()]);
                code = 1;
            }
        }
    }
    let mut doc = Map::new();
    doc.insert("potential".into(), json!(cfg.potential.label()));
    doc.insert("n".into(), json!(cfg.n));
    match &eig {
        Ok(e) => doc.insert("oracle".into(), e.iter().copied().map(number).collect()),
        Err(e) => doc.insert("oracle_error".into(), json!(e)),
    };
    doc.insert("reports".into(), Value::Array(values));
    let mut out = Output::new(Value::Object(doc));
    out.table = Some((vec!["family", "n", "lower", "upper", "oracle", "status"], rows));
    out.code = code;
    Ok(out)
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Valid => "valid",
        Status::Unreliable => "unreliable",
        Status::Inapplicable => "inapplicable",
    }
}

pub fn gap(cfg: &RunConfig) -> Result<Output> {
    let eig = oracle(cfg, 2);
    let r = evaluate(&cfg.potential, Family::BrascampLieb, &request(cfg), eig.as_deref().ok())?;
    let mut doc = Map::new();
    doc.insert("potential".into(), json!(cfg.potential.label()));
    doc.insert("status".into(), json!(status_name(r.status)));
    doc.insert("bound".into(), r.lower.map(number).unwrap_or(Value::Null));
    doc.insert("oracle_gap".into(), r.oracle.map(number).unwrap_or(Value::Null));
    match &eig {
        Ok(e) => {
            doc.insert("lambda_1".into(), number(e[1]));
            doc.insert("lambda_2".into(), number(e[2]));
        }
        Err(e) => {
            doc.insert("oracle_error".into(), json!(e));
        }
    }
    if let (Some(b), Some(o)) = (r.lower, r.oracle) {
        doc.insert("holds".into(), json!(o + cfg.tol >= b));
    }
    doc.insert("certificate".into(), Value::Object(r.certificate.clone().into_iter().collect()));
    let row = vec![render::opt(r.lower), render::opt(r.oracle), status_name(r.status).to_string()];
    let mut out = Output::new(Value::Object(doc));
    out.table = Some((vec!["bound", "oracle_gap", "status"], vec![row]));
    out.code = if r.status == Status::Valid { 0 } else { 2 };
    Ok(out)
}

fn test_functions() -> Vec<TestFunction> {
    vec![
        TestFunction::Constant { c: 1.0 },
        TestFunction::PolyGauss { coeffs: vec![1.0, 0.5, -0.25, 0.125], c: 0.3 },
        TestFunction::Sine { freq: 1.3, phase: 0.2 },
        TestFunction::Bump { center: 0.3, radius: 1.5 },
    ]
}

fn pair(cfg: &RunConfig) -> Result<(Weight, Weight)> {
    let one = Weight::constant(1.0)?;
    Ok(match cfg.weights.as_slice() {
        [] => (one.clone(), one),
        [b] => (one, b.clone()),
        [a, b] => (a.clone(), b.clone()),
        _ => bail!(Error::invalid("verify takes at most two weights (a, b)")),
    })
}

fn verify_grid(cfg: &RunConfig, a: &Weight, b: &Weight) -> Result<Grid> {
    let want = cfg.domain.unwrap_or(VERIFY_WINDOW);
    let mut lo = want.0;
    let mut hi = want.1;
    for d in [cfg.potential.domain(), a.domain(), b.domain()] {
        lo = lo.max(d.0);
        hi = hi.min(d.1);
    }
    // keep clear of closed domain edges where derivatives are one-sided
    let pad = 1e-3 * (hi - lo);
    Ok(Grid::new(lo + pad, hi - pad, VERIFY_NODES)?)
}

fn residuals(cfg: &RunConfig, a: &Weight, b: &Weight, grid: &Grid) -> Result<Value> {
    let rows = test_functions()
        .into_iter()
        .map(|f| {
            let r = intertwining_residual(&cfg.potential, a, b, &f, grid)?;
            Ok(json!({ "test_function": f, "residual": number(r) }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Value::Array(rows))
}

fn forms(cfg: &RunConfig, a: &Weight, b: &Weight, grid: &Grid) -> Result<Value> {
    let m: Vec<_> = [Form::Tilt, Form::Ratio, Form::H]
        .into_iter()
        .map(|f| compute_m(&cfg.potential, a, b, f))
        .collect::<Result<_, _>>()?;
    let (mut ratio, mut h) = (0.0_f64, 0.0_f64);
    for x in grid.points() {
        let t = m[0].eval(x)?;
        let scale = t.abs().max(1.0);
        ratio = ratio.max((m[1].eval(x)? - t).abs() / scale);
        h = h.max((m[2].eval(x)? - t).abs() / scale);
    }
    Ok(json!({ "max_rel_ratio_vs_tilt": number(ratio), "max_rel_h_vs_tilt": number(h) }))
}

fn section(r: Result<Value>, code: &mut i32) -> Value {
    r.unwrap_or_else(|e| {
        *code = (*code).max(exit_code(&e));
        error_doc(&e)
    })
}

pub fn verify(cfg: &RunConfig) -> Result<Output> {
    let (a, b) = pair(cfg)?;
    let grid = verify_grid(cfg, &a, &b)?;
    let mut code = 0;
    let (res, frm, dec) = std::thread::scope(|s| {
        let res = s.spawn(|| residuals(cfg, &a, &b, &grid));
        let frm = s.spawn(|| forms(cfg, &a, &b, &grid));
        let dec = verify_decomposition(&cfg.potential, cfg.n, cfg.tol);
        (res.join().expect("residual worker panicked"), frm.join().expect("form worker panicked"), dec)
    });
    let mut rows = Vec::new();
    let dec = match dec {
        Ok(d) => {
            for l in &d.levels {
                rows.push(vec![
                    l.level.to_string(),
                    render::num(l.gap),
                    render::num(l.deviation),
                    render::num(l.trust.0),
                    render::num(l.trust.1),
                ]);
            }
            Ok(json!({
                "levels": d.levels.iter().map(|l| json!({
                    "level": l.level,
                    "gap": number(l.gap),
                    "deviation": number(l.deviation),
                    "trust": [number(l.trust.0), number(l.trust.1)],
                })).collect::<Vec<_>>(),
                "lambda_n": number(d.lambda_n),
                "sum": number(d.sum),
                "residual": number(d.residual),
                "tol_agg": number(d.tol_agg),
                "consistent": d.consistent,
                "chebyshev_monotone": d.chebyshev_monotone,
            }))
        }
        Err(e) => Err(anyhow!(e)),
    };
    let doc = json!({
        "potential": cfg.potential.label(),
        "a": a.label(),
        "b": b.label(),
        "window": [number(grid.x_min), number(grid.x_max)],
        "intertwining_residuals": section(res, &mut code),
        "form_equivalence": section(frm, &mut code),
        "decomposition": section(dec, &mut code),
    });
    let mut out = Output::new(doc);
    out.table = Some((vec!["level", "gap", "deviation", "trust_lo", "trust_hi"], rows));
    out.code = code;
    Ok(out)
}

fn weyl_k(cfg: &RunConfig) -> usize {
    cfg.k.unwrap_or(WEYL_K)
}

pub fn weyl(cfg: &RunConfig) -> Result<Output> {
    let opts = SolverOptions::with_tol(if cfg.tol_given { cfg.tol } else { WEYL_TOL });
    let (exponent, r) = weyl_fit_with(&cfg.potential, weyl_k(cfg), &opts)?;
    let rows: Vec<Vec<String>> = (1..r.eigenvalues.len())
        .map(|j| {
            let l = r.eigenvalues[j];
            vec![j.to_string(), render::num(l), counting_function(&r, l).to_string()]
        })
        .collect();
    let table: Vec<Value> = (1..r.eigenvalues.len())
        .map(|j| {
            let l = r.eigenvalues[j];
            json!({ "j": j, "eigenvalue": number(l), "count": counting_function(&r, l) })
        })
        .collect();
    let doc = json!({
        "potential": cfg.potential.label(),
        "k": r.k(),
        "exponent": number(exponent),
        "table": table,
    });
    let mut out = Output::new(doc);
    out.table = Some((vec!["j", "eigenvalue", "count"], rows));
    Ok(out)
}

/// Every section for one potential. Sections run concurrently and are
/// assembled in a fixed order.
pub fn report(cfg: &RunConfig) -> Result<Output> {
    if cfg.format == Format::Csv {
        bail!(Error::invalid("report has no CSV form; use json or text"));
    }
    let spectrum_cfg = RunConfig { k: Some(cfg.k.unwrap_or(cfg.n.max(2))), ..cfg.clone() };
    let parts: Vec<Result<Output>> = std::thread::scope(|s| {
        let jobs: Vec<Box<dyn FnOnce() -> Result<Output> + Send + '_>> = vec![
            Box::new(|| spectrum(&spectrum_cfg)),
            Box::new(|| bounds(cfg)),
            Box::new(|| gap(cfg)),
            Box::new(|| verify(cfg)),
            Box::new(|| weyl(cfg)),
        ];
        let handles: Vec<_> = jobs.into_iter().map(|j| s.spawn(j)).collect();
        handles.into_iter().map(|h| h.join().expect("report worker panicked")).collect()
    });
    let names = ["spectrum", "bounds", "gap", "verify", "weyl"];
    let mut doc = Map::new();
    doc.insert("potential".into(), json!(cfg.potential.label()));
    doc.insert("spec".into(), json!(cfg.potential_spec.to_string()));
    let mut code = 0;
    for (name, part) in names.iter().zip(parts) {
        let value = match part {
            // an inapplicable family is reported, not a failure of the report
            Ok(o) => {
                if o.code == 1 {
                    code = 1;
                }
                o.doc
            }
            Err(e) => {
                if exit_code(&e) == 1 {
                    code = 1;
                }
                error_doc(&e)
            }
        };
        doc.insert((*name).into(), value);
    }
    let mut out = Output::new(Value::Object(doc));
    out.code = code;
    Ok(out)
}
