//! Versioned model persistence.
//!
//! A bundle is one self-describing JSON document holding everything needed
//! to index and quality-score new documents: vocabulary, term index,
//! classifier, label calibration, recall estimator and the settings the
//! models were trained with. Reals are encoded with shortest-round-trip
//! decimals, so a load reproduces every prediction bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::eval::ExperimentSettings;
use crate::mlc::BrlrModel;
use crate::quality::{CalibrationModel, RecallEstimator};
use crate::text::TermIndex;

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: u32,
    pub vocabulary: Vocabulary,
    pub term_index: TermIndex,
    pub classifier: BrlrModel,
    pub calibration: CalibrationModel,
    pub recall: RecallEstimator,
    pub settings: ExperimentSettings,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    let json = serde_json::to_string(bundle)
        .map_err(|e| Error::Corrupt(format!("serialize bundle: {e}")))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let probe: VersionProbe = serde_json::from_str(&raw)
        .map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))?;
    if probe.version != BUNDLE_VERSION {
        return Err(Error::Version {
            found: probe.version,
            expected: BUNDLE_VERSION,
        });
    }
    serde_json::from_str(&raw).map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))
}
