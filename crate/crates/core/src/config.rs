//! Run configuration: one JSON document that surfaces every hyperparameter,
//! with explicit seeds so reruns are bit-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ExperimentSettings;
use crate::mlc::SgdParams;

fn default_min_df() -> usize {
    1
}
fn default_max_terms() -> usize {
    100_000
}
fn default_epochs() -> usize {
    10
}
fn default_eta0() -> f64 {
    0.1
}
fn default_lambda() -> f64 {
    1e-5
}
fn default_threshold() -> f64 {
    0.5
}

/// Classifier settings: term-index construction plus SGD hyperparameters
/// and the assignment threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlcSettings {
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_eta0")]
    pub eta0: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for MlcSettings {
    fn default() -> Self {
        MlcSettings {
            min_df: default_min_df(),
            max_terms: default_max_terms(),
            epochs: default_epochs(),
            eta0: default_eta0(),
            lambda: default_lambda(),
            threshold: default_threshold(),
        }
    }
}

impl MlcSettings {
    pub fn sgd_params(&self) -> SgdParams {
        SgdParams {
            epochs: self.epochs,
            eta0: self.eta0,
            lambda: self.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_df == 0 || self.max_terms == 0 {
            return Err(Error::config("min_df and max_terms must be at least 1"));
        }
        if !self.eta0.is_finite() || self.eta0 <= 0.0 {
            return Err(Error::config("eta0 must be positive"));
        }
        if self.lambda < 0.0 {
            return Err(Error::config("lambda must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config("assignment threshold must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A complete run description: input paths, output directory and experiment
/// settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub vocabulary: PathBuf,
    pub out_dir: PathBuf,
    #[serde(flatten)]
    pub experiment: ExperimentSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        config.experiment.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::config(format!("serialize config: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Check referenced input paths and the output directory.
    pub fn validate_paths(&self) -> Result<()> {
        for (name, path) in [("corpus", &self.corpus), ("vocabulary", &self.vocabulary)] {
            if !path.is_file() {
                return Err(Error::config(format!(
                    "{name} file {} does not exist",
                    path.display()
                )));
            }
        }
        if !self.out_dir.is_dir() {
            return Err(Error::config(format!(
                "output directory {} does not exist",
                self.out_dir.display()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let json = r#"{
            "corpus": "corpus.jsonl",
            "vocabulary": "vocab.tsv",
            "out_dir": "out"
        }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.experiment.k_outer, 5);
        assert_eq!(config.experiment.k_inner, 5);
        assert_eq!(config.experiment.seed, 42);
        assert_eq!(config.experiment.mlc.epochs, 10);
        assert_eq!(config.experiment.quality_terms, 1000);
        assert_eq!(config.experiment.thresholds.len(), 21);
        config.experiment.validate().unwrap();
    }

    #[test]
    fn unknown_regressor_kind_fails_validation_early() {
        let json = r#"{
            "corpus": "c", "vocabulary": "v", "out_dir": "o",
            "recall": {"kind": "quantum_forest"}
        }"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn config_round_trips() {
        let json = r#"{
            "corpus": "a.jsonl", "vocabulary": "b.tsv", "out_dir": "o",
            "seed": 7, "k_outer": 3, "k_inner": 2,
            "groups": ["V", "LC"],
            "recall": {"kind": "ada_boost_r2", "stages": 10}
        }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn bad_mlc_settings_are_rejected() {
        let bad = MlcSettings {
            eta0: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MlcSettings {
            threshold: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
