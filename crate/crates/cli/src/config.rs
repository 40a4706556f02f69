//! Run configuration: defaults, an optional TOML file, then flag overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rfa_classifier::{Grid, TrainConfig};
use rfa_core::{AnalysisConfig, TOOL_VERSION};
use serde::{Deserialize, Serialize};

/// Every tunable of a run. Serialised flat, so a config file is a list of
/// `key = value` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub analysis: AnalysisConfig,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Append the RF1..RFn columns of both envelopes to extracted CSVs.
    pub r_formant_columns: bool,
    pub seed: u64,
    pub test_fraction: f64,
    pub folds: usize,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub heuristic_gamma: bool,
    pub svm_tol: f64,
    pub groups: String,
    pub envelopes: String,
    pub n_repeats: usize,
    pub top_features: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            analysis: AnalysisConfig::default(),
            jobs: 0,
            r_formant_columns: false,
            seed: 0,
            test_fraction: 0.2,
            folds: train.folds,
            c_grid: train.grid.c,
            gamma_grid: train.grid.gamma,
            heuristic_gamma: train.grid.heuristic_gamma,
            svm_tol: train.tol,
            groups: "A,B,C".into(),
            envelopes: "AM,FM".into(),
            n_repeats: rfa_classifier::DEFAULT_N_REPEATS,
            top_features: 15,
        }
    }
}

fn known_keys() -> Vec<String> {
    match toml::Value::try_from(RunConfig::default()) {
        Ok(toml::Value::Table(t)) => t.keys().cloned().collect(),
        _ => unreachable!("RunConfig serialises to a table"),
    }
}

/// Parses `key=value`; the value is read as a TOML literal and falls back
/// to a plain string.
pub fn parse_assignment(s: &str) -> anyhow::Result<(String, toml::Value)> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected KEY=VALUE, got '{s}'"))?;
    let key = key.trim().to_string();
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

impl RunConfig {
    /// Layers the config file (if any) and `overrides` over the defaults.
    /// Unknown keys are rejected.
    pub fn resolve(file: Option<&Path>, overrides: Vec<(String, toml::Value)>) -> anyhow::Result<Self> {
        let mut table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        for (k, v) in overrides {
            table.insert(k, v);
        }
        let known = known_keys();
        if let Some(bad) = table.keys().find(|k| !known.contains(k)) {
            bail!("unknown config key '{bad}'");
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid config value")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.analysis.validate()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            bail!("test_fraction must be in (0, 1), got {}", self.test_fraction);
        }
        if self.folds < 2 {
            bail!("folds must be at least 2, got {}", self.folds);
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0)) {
            bail!("c_grid must be a non-empty list of positive values");
        }
        if self.gamma_grid.iter().any(|g| !(*g > 0.0)) || (self.gamma_grid.is_empty() && !self.heuristic_gamma) {
            bail!("gamma_grid must hold positive values (or enable heuristic_gamma)");
        }
        if !(self.svm_tol > 0.0) {
            bail!("svm_tol must be positive");
        }
        if self.n_repeats == 0 {
            bail!("n_repeats must be at least 1");
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            grid: Grid {
                c: self.c_grid.clone(),
                gamma: self.gamma_grid.clone(),
                heuristic_gamma: self.heuristic_gamma,
            },
            folds: self.folds,
            seed: self.seed,
            tol: self.svm_tol,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// Comment lines for CSV artifacts.
    pub fn provenance_lines(&self) -> Vec<String> {
        vec![
            format!("tool: {TOOL_VERSION}"),
            format!("config: {}", serde_json::to_string(self).expect("config serialises")),
        ]
    }

    /// Object embedded in JSON artifacts.
    pub fn provenance_json(&self) -> serde_json::Value {
        serde_json::json!({ "tool": TOOL_VERSION, "config": self.to_json() })
    }
}
