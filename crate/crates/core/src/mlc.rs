//! Multi-label classification by binary relevance: one L2-regularized
//! logistic regression per concept, trained with stochastic gradient
//! descent over sparse binary document vectors.
//!
//! The learning rate follows the inverse-scaling schedule
//! eta_t = eta0 / (1 + eta0 * lambda * t). Weight decay uses the usual
//! scale-factor trick so each step costs O(active features). Per-concept
//! RNG streams are derived from (seed, concept id), which makes training
//! order and worker count irrelevant to the result.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::text::DocVector;

/// Bias of the constant model used for concepts without positive examples;
/// sigmoid(-9) keeps their confidence near 1e-4 but strictly inside (0, 1).
const NEGATIVE_BIAS: f64 = -9.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdParams {
    pub epochs: usize,
    pub eta0: f64,
    pub lambda: f64,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            epochs: 10,
            eta0: 0.1,
            lambda: 1e-5,
        }
    }
}

/// Hyperparameters of the full binary-relevance classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlcParams {
    pub sgd: SgdParams,
    /// Assignment threshold tau on concept confidence.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for MlcParams {
    fn default() -> Self {
        MlcParams {
            sgd: SgdParams::default(),
            threshold: 0.5,
            seed: 0,
        }
    }
}

/// One concept's linear model over term-index columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ConceptModel {
    pub fn confidence(&self, x: &DocVector) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

/// L2-regularized logistic loss of one example:
/// -[y ln p + (1-y) ln(1-p)] + (lambda/2)||w||^2, with p = sigmoid(w.x + b).
/// The bias is not regularized.
pub fn regularized_log_loss(w: &[f64], b: f64, x: &DocVector, y: f64, lambda: f64) -> f64 {
    let z = x.dot(w) + b;
    let data = y * softplus(-z) + (1.0 - y) * softplus(z);
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    data + reg
}

/// Dense gradient of [`regularized_log_loss`] with respect to (w, b).
pub fn loss_gradient(w: &[f64], b: f64, x: &DocVector, y: f64, lambda: f64) -> (Vec<f64>, f64) {
    let z = x.dot(w) + b;
    let g = sigmoid(z) - y;
    let mut grad: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    for &(c, v) in x.entries() {
        grad[c as usize] += g * v;
    }
    (grad, g)
}

/// Train one binary logistic model by SGD over shuffled rows.
pub fn train_logreg(
    vectors: &[DocVector],
    labels: &[u8],
    n_features: usize,
    params: &SgdParams,
    seed: u64,
) -> Result<ConceptModel> {
    if vectors.is_empty() {
        return Err(Error::invalid("logistic regression over an empty sample"));
    }
    if vectors.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    if !params.eta0.is_finite() || params.eta0 <= 0.0 || params.lambda < 0.0 {
        return Err(Error::invalid(
            "eta0 must be positive and lambda non-negative",
        ));
    }

    let mut rng = Rng::from_seed(seed);
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    // Weight vector represented as scale * values so L2 decay is O(1).
    let mut scale = 1.0f64;
    let mut values = vec![0.0f64; n_features];
    let mut bias = 0.0f64;
    let mut t = 0u64;

    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            let x = &vectors[i];
            let y = f64::from(labels[i]);
            let eta = params.eta0 / (1.0 + params.eta0 * params.lambda * t as f64);
            t += 1;

            let mut z = 0.0;
            for &(c, v) in x.entries() {
                z += values[c as usize] * v;
            }
            z = scale * z + bias;
            let g = sigmoid(z) - y;

            let decay = 1.0 - eta * params.lambda;
            if decay > 0.0 {
                scale *= decay;
            }
            for &(c, v) in x.entries() {
                values[c as usize] -= eta * g * v / scale;
            }
            bias -= eta * g;

            if scale < 1e-9 {
                for v in &mut values {
                    *v *= scale;
                }
                scale = 1.0;
            }
        }
    }

    let weights: Vec<f64> = values.iter().map(|v| scale * v).collect();
    if weights.iter().any(|v| !v.is_finite()) || !bias.is_finite() {
        return Err(Error::invalid("SGD diverged to non-finite weights"));
    }
    Ok(ConceptModel { weights, bias })
}

/// The trained binary-relevance classifier: one model per vocabulary
/// concept, aligned with concept indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrlrModel {
    concepts: Vec<ConceptModel>,
    pub threshold: f64,
    pub n_features: usize,
}

impl BrlrModel {
    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn concept_model(&self, concept: u32) -> &ConceptModel {
        &self.concepts[concept as usize]
    }

    /// Confidence for every concept, then threshold into an assignment.
    pub fn predict(&self, doc_id: &str, x: &DocVector) -> Prediction {
        let mut assigned = Vec::new();
        for (c, model) in self.concepts.iter().enumerate() {
            let pi = model.confidence(x);
            if pi >= self.threshold {
                assigned.push((c as u32, pi));
            }
        }
        Prediction {
            doc_id: doc_id.to_string(),
            assigned,
        }
    }
}

/// Train one independent binary model per vocabulary concept. Concepts with
/// no positive example in the slice get a constant-negative model.
pub fn train_brlr(
    vectors: &[DocVector],
    gold: &[&BTreeSet<u32>],
    vocabulary: &Vocabulary,
    n_features: usize,
    params: &MlcParams,
) -> Result<BrlrModel> {
    if vectors.is_empty() {
        return Err(Error::invalid("training slice is empty"));
    }
    if vectors.len() != gold.len() {
        return Err(Error::invalid(format!(
            "{} vectors but {} gold sets",
            vectors.len(),
            gold.len()
        )));
    }
    let base_seed = rng::derive_str(params.seed, "brlr");
    let mut concepts = Vec::with_capacity(vocabulary.n_concepts());
    let mut labels = vec![0u8; vectors.len()];
    for c in 0..vocabulary.n_concepts() as u32 {
        let mut positives = 0usize;
        for (i, g) in gold.iter().enumerate() {
            let y = u8::from(g.contains(&c));
            positives += usize::from(y == 1);
            labels[i] = y;
        }
        if positives == 0 {
            concepts.push(ConceptModel {
                weights: vec![0.0; n_features],
                bias: NEGATIVE_BIAS,
            });
            continue;
        }
        let seed = rng::derive_str(base_seed, &vocabulary.concept(c).id);
        concepts.push(train_logreg(
            vectors,
            &labels,
            n_features,
            &params.sgd,
            seed,
        )?);
    }
    Ok(BrlrModel {
        concepts,
        threshold: params.threshold,
        n_features,
    })
}

/// Concept assignment of one document with the confidences of the assigned
/// concepts, sorted by concept index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    assigned: Vec<(u32, f64)>,
}

impl Prediction {
    pub fn new(doc_id: String, mut assigned: Vec<(u32, f64)>) -> Self {
        assigned.sort_by_key(|&(c, _)| c);
        Prediction { doc_id, assigned }
    }

    /// Assigned concepts with their confidences, ascending by concept index.
    pub fn assigned(&self) -> &[(u32, f64)] {
        &self.assigned
    }

    pub fn assigned_set(&self) -> BTreeSet<u32> {
        self.assigned.iter().map(|&(c, _)| c).collect()
    }

    pub fn confidence(&self, concept: u32) -> Option<f64> {
        self.assigned
            .binary_search_by_key(&concept, |&(c, _)| c)
            .ok()
            .map(|i| self.assigned[i].1)
    }

    pub fn len(&self) -> usize {
        self.assigned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assigned.is_empty()
    }

    /// Number of assigned concepts per category (the predicted counts that
    /// label calibration is compared against).
    pub fn counts_per_category(&self, vocabulary: &Vocabulary) -> Vec<f64> {
        let mut counts = vec![0.0; vocabulary.n_categories()];
        for &(c, _) in &self.assigned {
            counts[vocabulary.category_of(c) as usize] += 1.0;
        }
        counts
    }
}
