//! Flat `key = value` run configuration files.
//!
//! Blank lines and `#` comments are ignored. Keys match the command-line
//! override names (`s1`, `k1`, `interference`, ...). `k1 = auto` or
//! `k2 = auto` hands the nesting choice to the planner.

use std::path::{Path, PathBuf};

use crate::channel::InterferenceSpec;
use crate::error::{Error, Result};
use crate::sim::RunConfig;

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

fn parse_nesting(key: &str, value: &str) -> Result<Option<u32>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

/// Applies one `key = value` assignment.
pub fn apply(config: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    let value = value.trim();
    match key.trim().to_ascii_lowercase().as_str() {
        "model" => config.model = value.parse()?,
        "s1" => config.s1 = parse(key, value)?,
        "s2" => config.s2 = parse(key, value)?,
        "n" => config.n = parse(key, value)?,
        "k1" | "k2" => {
            let k = parse_nesting(key, value)?;
            match (key, k) {
                (_, None) => {
                    config.k1 = None;
                    config.k2 = None;
                }
                ("k1", some) => config.k1 = some,
                (_, some) => config.k2 = some,
            }
        }
        "margin" => config.margin = parse(key, value)?,
        "interference" => {
            let reseed = config.interference.reseed;
            config.interference = value.parse::<InterferenceSpec>()?;
            config.interference.reseed = reseed;
        }
        "reseed" => config.interference.reseed = parse_bool(key, value)?,
        "trials" => config.trials = parse(key, value)?,
        "seed" => config.seed = parse(key, value)?,
        "ideal_hop2" => config.ideal_hop2 = parse_bool(key, value)?,
        "noiseless" => config.noiseless = parse_bool(key, value)?,
        "alpha1" => config.alpha1 = Some(parse(key, value)?),
        "alpha2" => config.alpha2 = Some(parse(key, value)?),
        "output" => config.output = Some(PathBuf::from(value)),
        "format" => config.format = value.parse()?,
        "workers" => config.workers = Some(parse(key, value)?),
        other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        apply(&mut config, key, value)
            .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}
