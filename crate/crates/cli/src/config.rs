// SPDX-License-Identifier: Apache-2.0

//! Flags and the optional `key = value` config file they override.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use intertwine::bounds::DEFAULT_DOMAIN;
use intertwine::{Error, Family, Potential, PotentialSpec, Weight, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        <Format as ValueEnum>::from_str(s, false).map_err(|_| Error::invalid(format!("unknown format `{s}`")))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Potential spec, e.g. `gaussian:rho=1` or `subbotin:alpha=4`.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    /// Weight spec; repeat the flag or separate specs with `;`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub weights: Vec<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of eigenvalues above zero to compute.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Bound family; repeatable. All families when absent.
    #[arg(long, global = true)]
    pub family: Vec<String>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Search window `a,b`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub domain: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file with the same keys as the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Everything a command needs, after merging file and flags and parsing specs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub potential_spec: PotentialSpec,
    pub potential: Potential,
    pub weights: Vec<Weight>,
    pub n: usize,
    pub k: Option<usize>,
    pub tol: f64,
    /// `tol` came from a flag or the file rather than the default.
    pub tol_given: bool,
    pub families: Vec<Family>,
    pub rho: Option<f64>,
    pub beta: Option<f64>,
    pub domain: Option<(f64, f64)>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_N: usize = 3;
pub const DEFAULT_TOL: f64 = 1e-6;

impl RunConfig {
    pub fn domain_or_default(&self) -> (f64, f64) {
        self.domain.unwrap_or(DEFAULT_DOMAIN)
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse::<T>().map_err(|e| Error::invalid(format!("bad value for `{key}`: {e}")).into())
}

/// Fills unset flags from a config file. Repeatable keys accumulate within
/// the file; any use of a flag replaces the file's entries for that key.
pub fn merge_file(flags: &mut Flags, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut weights = Vec::new();
    let mut families = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                input: line.to_string(),
                position: 0,
                message: format!("line {} of {}: expected `key = value`", lineno + 1, path.display()),
            }
            .into());
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "potential" => {
                flags.potential.get_or_insert_with(|| value.to_string());
            }
            "weights" => weights.push(value.to_string()),
            "family" => families.push(value.to_string()),
            "n" => set(&mut flags.n, key, value)?,
            "k" => set(&mut flags.k, key, value)?,
            "tol" => set(&mut flags.tol, key, value)?,
            "rho" => set(&mut flags.rho, key, value)?,
            "beta" => set(&mut flags.beta, key, value)?,
            "format" => set(&mut flags.format, key, value)?,
            "domain" => {
                flags.domain.get_or_insert_with(|| value.to_string());
            }
            "out" => {
                flags.out.get_or_insert_with(|| PathBuf::from(value));
            }
            other => bail!(Error::invalid(format!("unknown config key `{other}` on line {}", lineno + 1))),
        }
    }
    if flags.weights.is_empty() {
        flags.weights = weights;
    }
    if flags.family.is_empty() {
        flags.family = families;
    }
    Ok(())
}

fn set<T: std::str::FromStr>(slot: &mut Option<T>, key: &str, raw: &str) -> Result<()>
where
    T::Err: std::fmt::Display,
{
    if slot.is_none() {
        *slot = Some(parse_value(key, raw)?);
    }
    Ok(())
}

fn parse_domain(raw: &str) -> Result<(f64, f64)> {
    let Some((a, b)) = raw.split_once(',') else {
        bail!(Error::invalid(format!("domain `{raw}` is not of the form a,b")));
    };
    let (a, b): (f64, f64) = (parse_value("domain", a)?, parse_value("domain", b)?);
    if !(a < b) {
        bail!(Error::invalid(format!("empty domain [{a}, {b}]")));
    }
    Ok((a, b))
}

/// Splits repeated or `;`-joined weight specs.
pub fn weight_specs(raw: &[String]) -> Result<Vec<WeightSpec>> {
    raw.iter()
        .flat_map(|s| s.split(';'))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<WeightSpec>().map_err(Into::into))
        .collect()
}

impl TryFrom<Flags> for RunConfig {
    type Error = anyhow::Error;

    fn try_from(mut flags: Flags) -> Result<Self> {
        if let Some(path) = flags.config.clone() {
            merge_file(&mut flags, &path)?;
        }
        let Some(spec) = flags.potential.as_deref() else {
            bail!(Error::invalid("--potential is required"));
        };
        let potential_spec: PotentialSpec = spec.parse()?;
        let potential = potential_spec.build()?;
        let weights = weight_specs(&flags.weights)?
            .iter()
            .map(Weight::new)
            .collect::<Result<Vec<_>, _>>()?;
        let n = flags.n.unwrap_or(DEFAULT_N);
        if n == 0 {
            bail!(Error::invalid("--n must be at least 1"));
        }
        let tol_given = flags.tol.is_some();
        let tol = flags.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            bail!(Error::invalid(format!("--tol must be positive, got {tol}")));
        }
        let families = flags.family.iter().map(|f| f.parse::<Family>()).collect::<Result<Vec<_>, _>>()?;
        let domain = flags.domain.as_deref().map(parse_domain).transpose()?;
        Ok(RunConfig {
            potential_spec,
            potential,
            weights,
            n,
            k: flags.k,
            tol,
            tol_given,
            families,
            rho: flags.rho,
            beta: flags.beta,
            domain,
            format: flags.format.unwrap_or(Format::Json),
            out: flags.out,
        })
    }
}
