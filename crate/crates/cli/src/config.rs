//! Experiment files: TOML with one table per experiment, or a run manifest
//! whose embedded config text is replayed.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use tscore_core::ExperimentConfig;

use crate::InputError;

#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub text: String,
    pub experiments: Vec<Experiment>,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config_text: String,
}

pub fn load(path: &Path) -> Result<ConfigFile> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| InputError(format!("{e:#}")))?;
    let text = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<ManifestConfig>(&raw)
            .map_err(|e| InputError(format!("{}: not a run manifest: {e}", path.display())))?
            .config_text
    } else {
        raw
    };
    let experiments =
        parse(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok(ConfigFile { text, experiments })
}

/// Tables become experiments in file order. A file with top-level `family`
/// is a single unnamed experiment.
pub fn parse(text: &str) -> std::result::Result<Vec<Experiment>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    if table.contains_key("family") {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        validate("experiment", &config)?;
        return Ok(vec![Experiment {
            name: "experiment".into(),
            config,
        }]);
    }
    if table.is_empty() {
        return Err("no experiments defined".into());
    }
    let mut out = Vec::with_capacity(table.len());
    for (name, value) in table {
        let section = match value {
            toml::Value::Table(t) => t,
            _ => return Err(format!("top-level key '{name}' must be a [table]")),
        };
        let config: ExperimentConfig = section
            .try_into()
            .map_err(|e: toml::de::Error| format!("[{name}] {}", e.message()))?;
        validate(&name, &config)?;
        out.push(Experiment { name, config });
    }
    Ok(out)
}

fn validate(name: &str, config: &ExperimentConfig) -> std::result::Result<(), String> {
    config.validate().map_err(|e| format!("[{name}] {e}"))
}
