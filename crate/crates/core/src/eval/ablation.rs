//! Feature-group ablation and isolation: rerun the recall estimation under
//! every leave-one-out and singleton mask over one shared protocol run.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::Result;
use crate::quality::GroupMask;

use super::experiment::{evaluate_mask, run_protocol, ExperimentSettings};

/// One mask's aggregated metrics, with deltas against the all-groups row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mask: GroupMask,
    pub label: String,
    pub rho_mean: f64,
    pub rho_sd: f64,
    pub rho_delta_pct: f64,
    pub mse_mean: f64,
    pub mse_sd: f64,
    pub mse_delta_pct: f64,
    /// Absolute rho difference to the all-groups row exceeds the sum of the
    /// two standard deviations.
    pub significant: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub classifier_trainings: usize,
}

impl AblationReport {
    pub fn row(&self, label: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// The canonical nine masks: all groups, four leave-one-out, four singletons.
fn ablation_masks() -> Vec<GroupMask> {
    let all = GroupMask::all();
    let mut masks = vec![all];
    for drop in 0..4 {
        let mut m = all;
        match drop {
            0 => m.volume = false,
            1 => m.content = false,
            2 => m.calibration = false,
            _ => m.confidence = false,
        }
        masks.push(m);
    }
    for keep in 0..4 {
        let mut m = GroupMask::none();
        match keep {
            0 => m.volume = true,
            1 => m.content = true,
            2 => m.calibration = true,
            _ => m.confidence = true,
        }
        masks.push(m);
    }
    masks
}

/// Run the protocol once, then train and score the recall estimator under
/// each of the nine masks. The `groups` setting is ignored here.
pub fn run_ablation(corpus: &Corpus, settings: &ExperimentSettings) -> Result<AblationReport> {
    let protocol = run_protocol(corpus, settings)?;

    let masks = ablation_masks();
    let mut evaluations = Vec::with_capacity(masks.len());
    for mask in &masks {
        evaluations.push(evaluate_mask(
            &protocol,
            *mask,
            &settings.recall,
            settings.seed,
        )?);
    }
    let full = &evaluations[0];
    let rows = masks
        .iter()
        .zip(&evaluations)
        .map(|(mask, e)| {
            let rho_delta_pct = (e.rho_mean - full.rho_mean) / full.rho_mean * 100.0;
            let mse_delta_pct = (e.mse_mean - full.mse_mean) / full.mse_mean * 100.0;
            AblationRow {
                mask: *mask,
                label: mask.label(),
                rho_mean: e.rho_mean,
                rho_sd: e.rho_sd,
                rho_delta_pct,
                mse_mean: e.mse_mean,
                mse_sd: e.mse_sd,
                mse_delta_pct,
                significant: (e.rho_mean - full.rho_mean).abs() > e.rho_sd + full.rho_sd,
            }
        })
        .collect();
    Ok(AblationReport {
        rows,
        classifier_trainings: protocol.classifier_trainings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_canonical_masks() {
        let masks = ablation_masks();
        assert_eq!(masks.len(), 9);
        assert_eq!(masks[0].label(), "V+C+LC+PI");
        assert_eq!(masks[1].label(), "C+LC+PI");
        assert_eq!(masks[3].label(), "V+C+PI");
        assert_eq!(masks[5].label(), "V");
        assert_eq!(masks[7].label(), "LC");
    }
}
