//! Loading inputs and emitting reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use histloom::targets::{AnyTarget, GeneratedTarget, TargetSpec};
use histloom::{MixedDistribution, PiecewiseDensity};
use serde::Serialize;
use serde_json::Value;

pub fn parse_spec(text: &str) -> Result<TargetSpec> {
    text.parse()
        .with_context(|| format!("bad target spec `{text}`"))
}

pub fn generate(text: &str, seed: u64) -> Result<GeneratedTarget> {
    Ok(parse_spec(text)?.generate(seed)?)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

/// A hypothesis file holds either a bare density (`breakpoints`, `values`)
/// or a mixture (`histogram`, `atoms`).
pub fn read_hypothesis(path: &Path) -> Result<MixedDistribution> {
    let value = read_json(path)?;
    if value.get("histogram").is_some() {
        serde_json::from_value(value).with_context(|| format!("{}: not a mixture", path.display()))
    } else {
        let density: PiecewiseDensity = serde_json::from_value(value)
            .with_context(|| format!("{}: not a density", path.display()))?;
        Ok(MixedDistribution::continuous(density)?)
    }
}

pub fn read_density(path: &Path) -> Result<PiecewiseDensity> {
    let mixed = read_hypothesis(path)?;
    if !mixed.atoms().is_empty() {
        bail!(
            "{} has atoms; a purely continuous density is needed here",
            path.display()
        );
    }
    Ok(mixed.histogram().clone())
}

/// A candidate pool file: a JSON array of densities, or an object with a
/// `hypotheses` array as written by `learn --pool`.
pub fn read_pool(path: &Path) -> Result<Vec<PiecewiseDensity>> {
    let value = read_json(path)?;
    let list = match value {
        Value::Array(_) => value,
        Value::Object(mut map) => map
            .remove("hypotheses")
            .with_context(|| format!("{}: no `hypotheses` array", path.display()))?,
        _ => bail!("{}: expected an array of densities", path.display()),
    };
    serde_json::from_value(list)
        .with_context(|| format!("{}: malformed density in pool", path.display()))
}

/// The mixture view of a generated target; the lower-bound ensemble is
/// compared through its grid histogram.
pub fn target_as_mixture(target: &GeneratedTarget) -> Result<MixedDistribution> {
    Ok(match &target.target {
        AnyTarget::Piecewise(p) => MixedDistribution::continuous(p.clone())?,
        AnyTarget::Mixed(m) => m.clone(),
        AnyTarget::Hard(h) => MixedDistribution::continuous(h.to_discrete()?.to_piecewise())?,
    })
}

/// A density argument: an existing JSON file, else a target spec.
pub fn density_arg(arg: &str, seed: u64) -> Result<PiecewiseDensity> {
    let path = Path::new(arg);
    if path.exists() {
        return read_density(path);
    }
    let target = generate(arg, seed)?;
    match &target.target {
        AnyTarget::Piecewise(p) => Ok(p.clone()),
        AnyTarget::Hard(h) => Ok(h.to_discrete()?.to_piecewise()),
        AnyTarget::Mixed(_) => {
            bail!("`{arg}` has atoms; a purely continuous density is needed here")
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", to_json(value)?)?;
    Ok(())
}
