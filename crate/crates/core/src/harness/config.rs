//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::cardinal::{AlgoParams, Algorithm};
use crate::dims::DimOptions;
use crate::dueling::{DuelingAlgorithm, DuelingParams};
use crate::envs::{EnvConfig, EnvInstance};
use crate::error::{ConfigIssue, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cardinal,
    Dueling,
    Dims,
}

/// Which dimension a dims experiment computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimsMeasure {
    /// History-aware Bellman-eluder dimension.
    Habe,
    /// Bellman-eluder dimension without the history gate.
    Be,
    /// Eluder dimension of each step's reward class.
    Eluder,
}

impl DimsMeasure {
    pub const ALL: [DimsMeasure; 3] = [DimsMeasure::Habe, DimsMeasure::Be, DimsMeasure::Eluder];

    pub fn name(&self) -> &'static str {
        match self {
            DimsMeasure::Habe => "habe",
            DimsMeasure::Be => "be",
            DimsMeasure::Eluder => "eluder",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            DimsMeasure::Habe => "history-aware Bellman-eluder dimension, gated at alpha",
            DimsMeasure::Be => "distributional eluder dimension of all Bellman errors",
            DimsMeasure::Eluder => "eluder dimension of each feedback step's reward class",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimsParams {
    pub alpha: f64,
    /// Scale; `min(alpha, sqrt(1 / T))` when absent.
    pub epsilon: Option<f64>,
    pub budget: u64,
}

impl Default for DimsParams {
    fn default() -> Self {
        DimsParams { alpha: 0.5, epsilon: None, budget: DimOptions::default().budget }
    }
}

/// The learner block, resolved against the mode.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmConfig {
    Cardinal(Algorithm, AlgoParams),
    Dueling(DuelingAlgorithm, DuelingParams),
    Dims(DimsMeasure, DimsParams),
}

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Cardinal(a, _) => a.name(),
            AlgorithmConfig::Dueling(a, _) => a.name(),
            AlgorithmConfig::Dims(m, _) => m.name(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algorithm: AlgorithmConfig,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub mode: Mode,
    pub output_dir: PathBuf,
    /// The document as read, echoed into manifests.
    pub raw: Value,
}

const TOP_KEYS: [&str; 6] = ["env", "algorithm", "episodes", "seeds", "mode", "output_dir"];

fn issue(field: &str, message: impl ToString) -> ConfigIssue {
    ConfigIssue { field: field.into(), message: message.to_string() }
}

fn take<T: serde::de::DeserializeOwned>(obj: &Map<String, Value>, key: &str, issues: &mut Vec<ConfigIssue>) -> Option<T> {
    match obj.get(key) {
        None => {
            issues.push(issue(key, "missing"));
            None
        }
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| issues.push(issue(key, e))).ok(),
    }
}

fn parse_params<T: serde::de::DeserializeOwned + Default>(params: Option<&Value>, issues: &mut Vec<ConfigIssue>) -> T {
    match params {
        None => T::default(),
        Some(v) => serde_json::from_value(v.clone()).unwrap_or_else(|e| {
            issues.push(issue("algorithm.params", e));
            T::default()
        }),
    }
}

fn parse_algorithm(mode: Mode, block: &Value, issues: &mut Vec<ConfigIssue>) -> Option<AlgorithmConfig> {
    let Some(obj) = block.as_object() else {
        issues.push(issue("algorithm", "expected an object with `name` and optional `params`"));
        return None;
    };
    for key in obj.keys().filter(|k| *k != "name" && *k != "params") {
        issues.push(issue(&format!("algorithm.{key}"), "unknown field"));
    }
    let Some(name) = obj.get("name").and_then(Value::as_str) else {
        issues.push(issue("algorithm.name", "missing or not a string"));
        return None;
    };
    let params = obj.get("params");
    let unknown = |valid: Vec<&str>| issue("algorithm.name", format!("unknown {mode:?} algorithm `{name}`; expected one of {}", valid.join(", ")));
    match mode {
        Mode::Cardinal => match Algorithm::ALL.iter().find(|a| a.name() == name) {
            Some(&a) => {
                let p: AlgoParams = parse_params(params, issues);
                if let Err(e) = p.validate() {
                    issues.push(issue("algorithm.params", e));
                }
                Some(AlgorithmConfig::Cardinal(a, p))
            }
            None => {
                issues.push(unknown(Algorithm::ALL.iter().map(|a| a.name()).collect()));
                None
            }
        },
        Mode::Dueling => match DuelingAlgorithm::ALL.iter().find(|a| a.name() == name) {
            Some(&a) => {
                let p: DuelingParams = parse_params(params, issues);
                if let Err(e) = p.validate() {
                    issues.push(issue("algorithm.params", e));
                }
                Some(AlgorithmConfig::Dueling(a, p))
            }
            None => {
                issues.push(unknown(DuelingAlgorithm::ALL.iter().map(|a| a.name()).collect()));
                None
            }
        },
        Mode::Dims => match DimsMeasure::ALL.iter().find(|m| m.name() == name) {
            Some(&m) => {
                let p: DimsParams = parse_params(params, issues);
                if !(p.alpha >= 0.0) {
                    issues.push(issue("algorithm.params.alpha", "must be non-negative"));
                }
                if p.epsilon.is_some_and(|e| !(e > 0.0)) {
                    issues.push(issue("algorithm.params.epsilon", "must be positive"));
                }
                Some(AlgorithmConfig::Dims(m, p))
            }
            None => {
                issues.push(unknown(DimsMeasure::ALL.iter().map(|m| m.name()).collect()));
                None
            }
        },
    }
}

impl ExperimentConfig {
    /// Parses and validates a configuration, reporting every offending field at once.
    pub fn from_value(raw: Value) -> Result<Self> {
        let mut issues = Vec::new();
        let Some(obj) = raw.as_object() else {
            return Err(Error::Config(vec![issue("$", "expected a JSON object")]));
        };
        for key in obj.keys().filter(|k| !TOP_KEYS.contains(&k.as_str())) {
            issues.push(issue(key, "unknown field"));
        }
        let env: Option<EnvConfig> = take(obj, "env", &mut issues);
        let mode: Option<Mode> = take(obj, "mode", &mut issues);
        let algorithm = match (mode, obj.get("algorithm")) {
            (Some(m), Some(block)) => parse_algorithm(m, block, &mut issues),
            (_, None) => {
                issues.push(issue("algorithm", "missing"));
                None
            }
            (None, Some(_)) => None,
        };
        let episodes: Option<usize> = take(obj, "episodes", &mut issues);
        if episodes == Some(0) {
            issues.push(issue("episodes", "must be positive"));
        }
        let seeds: Vec<u64> = match (mode, obj.get("seeds")) {
            (Some(Mode::Dims), None) => vec![0],
            _ => take(obj, "seeds", &mut issues).unwrap_or_default(),
        };
        if seeds.is_empty() && obj.contains_key("seeds") {
            issues.push(issue("seeds", "must not be empty"));
        }
        let output_dir = match obj.get("output_dir") {
            None => PathBuf::from("results"),
            Some(v) => match v.as_str() {
                Some(s) => PathBuf::from(s),
                None => {
                    issues.push(issue("output_dir", "expected a path string"));
                    PathBuf::new()
                }
            },
        };
        let built = env.as_ref().map(|e| e.build());
        if let Some(Err(e)) = &built {
            issues.push(issue("env.params", e));
        }
        if !issues.is_empty() {
            return Err(Error::Config(issues));
        }
        Ok(ExperimentConfig {
            env: env.expect("checked"),
            algorithm: algorithm.expect("checked"),
            episodes: episodes.expect("checked"),
            seeds,
            mode: mode.expect("checked"),
            output_dir,
            raw,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![issue("$", e)]))?;
        Self::from_value(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(vec![issue("$", format!("{}: {e}", path.display()))]))?;
        Self::from_json(&text)
    }

    pub fn build_env(&self) -> Result<EnvInstance> {
        self.env.build()
    }
}
