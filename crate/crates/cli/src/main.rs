// SPDX-License-Identifier: Apache-2.0

//! `intertwine`: spectra of `−L = −d²/dx² + V' d/dx` and intertwining bounds
//! on its eigenvalues, as JSON, CSV or text.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod render;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "intertwine", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Lowest eigenvalues λ_0..λ_k of −L (k defaults to n).
    Spectrum,
    /// Bounds on λ_n per family, with the oracle value.
    Bounds,
    /// Brascamp–Lieb bound on λ_2 − λ_1 against the oracle gap.
    Gap,
    /// Intertwining residuals, agreement of the three M forms and the
    /// optimal-weight decomposition.
    Verify,
    /// Counting-function table and fitted Weyl exponent (k defaults to 30).
    Weyl,
    /// All of the above in one document.
    Report,
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = RunConfig::try_from(cli.flags)?;
    let out = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg)?,
        Command::Bounds => commands::bounds(&cfg)?,
        Command::Gap => commands::gap(&cfg)?,
        Command::Verify => commands::verify(&cfg)?,
        Command::Weyl => commands::weyl(&cfg)?,
        Command::Report => commands::report(&cfg)?,
    };
    let text = out.render(cfg.format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes()).context("writing stdout")?,
    }
    Ok(out.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
