//! Flat `key = value` configuration files. Keys mirror the fields of
//! `ExperimentConfig`; lists are comma separated; `#` starts a comment.

use anyhow::{anyhow, bail, Context, Result};
use homog_core::experiments::ExperimentConfig;
use homog_core::records::format_f64;

pub const KEYS: [&str; 13] = [
    "d",
    "side_lengths",
    "cells_per_unit",
    "lambda",
    "intensity",
    "xi",
    "xi_prime",
    "samples_per_L",
    "master_seed",
    "tolerance",
    "moments",
    "osc_radius",
    "osc_resamples",
];

/// Splits `text` into ordered `(key, value)` pairs, rejecting malformed lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got {raw:?}", no + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().with_context(|| format!("{key}: bad number {v:?}"))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().with_context(|| format!("{key}: bad integer {v:?}"))
}

/// Applies one setting. Changing `d` resets `ξ` and `ξ'` to `e₁` unless they are
/// set explicitly afterwards.
pub fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "d" => {
            let d = parse_usize(key, value)?;
            if d != cfg.dim {
                let fresh = ExperimentConfig::for_dim(d);
                cfg.dim = d;
                cfg.xi = fresh.xi;
                cfg.xi_prime = fresh.xi_prime;
            }
        }
        "side_lengths" | "L" => cfg.side_lengths = parse_list(key, value)?,
        "cells_per_unit" | "n" => cfg.cells_per_unit = parse_usize(key, value)?,
        "lambda" => cfg.lambda = parse_f64(key, value)?,
        "intensity" => cfg.intensity = parse_f64(key, value)?,
        "xi" => cfg.xi = parse_list(key, value)?,
        "xi_prime" => cfg.xi_prime = parse_list(key, value)?,
        "samples_per_L" => cfg.samples_per_l = parse_usize(key, value)?,
        "master_seed" | "seed" => {
            cfg.master_seed = value.parse().with_context(|| format!("{key}: bad seed {value:?}"))?
        }
        "tolerance" | "tol" => cfg.tolerance = parse_f64(key, value)?,
        "moments" => cfg.moments = parse_list(key, value)?,
        "osc_radius" => cfg.osc_radius = parse_f64(key, value)?,
        "osc_resamples" => cfg.osc_resamples = parse_usize(key, value)?,
        _ => bail!("unknown configuration key {key:?}"),
    }
    Ok(())
}

/// Builds a config from file text; `d` is applied first so that direction
/// defaults follow the dimension regardless of line order.
pub fn from_text(text: &str) -> Result<ExperimentConfig> {
    let pairs = parse_pairs(text)?;
    let mut cfg = ExperimentConfig::default();
    let (dims, rest): (Vec<_>, Vec<_>) = pairs.iter().partition(|(k, _)| k == "d");
    for (k, v) in dims.into_iter().chain(rest) {
        apply(&mut cfg, k, v)?;
    }
    Ok(cfg)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| format_f64(x)).collect::<Vec<_>>().join(",")
}

/// Every field as `(key, value)`, in `KEYS` order, at full precision.
pub fn to_pairs(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let values = [
        cfg.dim.to_string(),
        join(&cfg.side_lengths),
        cfg.cells_per_unit.to_string(),
        format_f64(cfg.lambda),
        format_f64(cfg.intensity),
        join(&cfg.xi),
        join(&cfg.xi_prime),
        cfg.samples_per_l.to_string(),
        cfg.master_seed.to_string(),
        format_f64(cfg.tolerance),
        join(&cfg.moments),
        format_f64(cfg.osc_radius),
        cfg.osc_resamples.to_string(),
    ];
    KEYS.iter().copied().zip(values).collect()
}

pub fn to_text(cfg: &ExperimentConfig) -> String {
    to_pairs(cfg).into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
