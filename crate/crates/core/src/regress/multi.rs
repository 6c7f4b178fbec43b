//! Multi-output regression: one independent model per named output column,
//! each fit with a seed derived from the column name so results do not
//! depend on column order or scheduling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::{EnsembleModel, RegressorSpec};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiOutputModel {
    models: Vec<EnsembleModel>,
    names: Vec<String>,
}

impl MultiOutputModel {
    pub fn predict(&self, row: &[f64]) -> Vec<f64> {
        self.models.iter().map(|m| m.predict(row)).collect()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_outputs(&self) -> usize {
        self.models.len()
    }
}

/// Fit one model per target column. `targets[k]` holds column `k` (one value
/// per row of `x`), named `names[k]`.
pub fn fit_multi_output(
    spec: &RegressorSpec,
    x: &[Vec<f64>],
    targets: &[Vec<f64>],
    names: &[String],
    seed: u64,
) -> Result<MultiOutputModel> {
    if targets.len() != names.len() {
        return Err(Error::invalid(format!(
            "{} target columns but {} names",
            targets.len(),
            names.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::invalid(
            "multi-output fit needs at least one target column",
        ));
    }
    for (k, col) in targets.iter().enumerate() {
        if col.len() != x.len() {
            return Err(Error::invalid(format!(
                "target column \"{}\" has {} values but there are {} rows",
                names[k],
                col.len(),
                x.len()
            )));
        }
    }
    let models = targets
        .iter()
        .zip(names)
        .map(|(col, name)| spec.fit(x, col, rng::derive_str(seed, name)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiOutputModel {
        models,
        names: names.to_vec(),
    })
}
