// SPDX-License-Identifier: Apache-2.0

use std::process::{Command, Output};

use intertwine::{BoundReport, Status};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intertwine")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn gaussian_spectrum_is_the_integers() {
    let out = run(&["spectrum", "--potential", "gaussian:rho=1", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let eig: Vec<f64> = doc["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(eig.len(), 6);
    for (j, l) in eig.iter().enumerate() {
        assert!((l - j as f64).abs() < 1e-5, "λ_{j} = {l}");
    }
}

#[test]
fn spectrum_csv_columns() {
    let out = run(&["spectrum", "--potential", "gaussian:rho=2", "--k", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue,error_estimate"));
    let row: Vec<&str> = lines.nth(2).unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    assert!((row[1].parse::<f64>().unwrap() - 4.0).abs() < 1e-5);
}

#[test]
fn quartic_gap() {
    let out = run(&["gap", "--potential", "subbotin:alpha=4", "--tol", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let bound = doc["bound"].as_f64().unwrap();
    assert!((bound - 6f64.sqrt()).abs() < 1e-9);
    assert!(doc["oracle_gap"].as_f64().unwrap() >= bound);
    assert_eq!(doc["holds"], Value::Bool(true));
}

#[test]
fn sole_inapplicable_family_exits_2() {
    let out = run(&["bounds", "--family", "milman", "--potential", "double_well:beta=0.5", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    assert_eq!(doc["reports"][0]["status"], "inapplicable");

    let out = run(&[
        "bounds", "--family", "milman", "--family", "brascamp_lieb", "--potential", "double_well:beta=0.5", "--n", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reports_round_trip_bit_exact() {
    let args = ["bounds", "--potential", "subbotin:alpha=1.5,delta=1e-3", "--n", "3", "--beta", "1.2", "--tol", "1e-4"];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, run(&args).stdout, "output is not deterministic");
    let doc = json(&first);
    for r in doc["reports"].as_array().unwrap() {
        let parsed: BoundReport = serde_json::from_value(r.clone()).unwrap();
        assert_eq!(&serde_json::to_value(&parsed).unwrap(), r);
        if parsed.status == Status::Valid {
            assert!(parsed.sandwich_holds(5e-2), "{parsed:?}");
        }
    }
    let sub: BoundReport = serde_json::from_value(doc["reports"][2].clone()).unwrap();
    let want = intertwine::bounds::subbotin_lower(1.5, 1.2, 3).unwrap();
    assert_eq!(sub.lower.unwrap().to_bits(), want.to_bits());
    assert_eq!(doc["reports"][1]["upper"], "inf");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quartic.cfg");
    let out = dir.path().join("out.csv");
    std::fs::write(&cfg, format!("potential = subbotin:alpha=4\nk = 4\nformat = csv\nout = {}\n", out.display())).unwrap();
    let res = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--k", "2"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(res.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("1,1.36859252"));
}

#[test]
fn unknown_kind_reports_position() {
    let out = run(&["spectrum", "--potential", "gaussian:rho=1,mu=2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("position"), "{err}");
    let out = run(&["bounds", "--potential", "gaussian:rho=1", "--family", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_document() {
    let out = run(&["verify", "--potential", "subbotin:alpha=4", "--n", "2", "--weights", "expV:c=0.2,base=gaussian:rho=1;const:2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    for r in doc["intertwining_residuals"].as_array().unwrap() {
        assert!(r["residual"].as_f64().unwrap() < 1e-6);
    }
    assert!(doc["form_equivalence"]["max_rel_h_vs_tilt"].as_f64().unwrap() < 1e-9);
    let d = &doc["decomposition"];
    assert_eq!(d["consistent"], true);
    assert_eq!(d["levels"].as_array().unwrap().len(), 2);
}

#[test]
fn weyl_table() {
    let out = run(&["weyl", "--potential", "gaussian:rho=1", "--k", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("j,eigenvalue,count\n1,"));
    assert_eq!(text.lines().count(), 11);
    let out = run(&["weyl", "--potential", "gaussian:rho=1", "--k", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_has_every_section() {
    let out = run(&["report", "--potential", "gaussian:rho=1", "--n", "2", "--k", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    for key in ["spectrum", "bounds", "gap", "verify", "weyl"] {
        assert!(doc[key].is_object(), "{key} missing");
        assert!(doc[key].get("error").is_none(), "{key}: {}", doc[key]);
    }
    let exponent = doc["weyl"]["exponent"].as_f64().unwrap();
    assert!(exponent > 0.8 && exponent < 1.2, "{exponent}");
    assert_eq!(run(&["report", "--potential", "gaussian:rho=1", "--format", "csv"]).status.code(), Some(2));
}
