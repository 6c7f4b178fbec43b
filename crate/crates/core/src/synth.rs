//! Synthetic corpora with controllable recall-loss mechanisms.
//!
//! Titles are built from each gold concept's indicative terms, then three
//! independent corruptions remove the evidence the classifier would need:
//!
//! - **OOV injection**: a concept's terms are swapped for synonym tokens
//!   unique to the document, so they can never be learned (lack of
//!   knowledge; recall loss visible through the OOV count).
//! - **Truncation**: the title keeps only a random prefix of its tokens
//!   (lack of input; visible through low token counts).
//! - **Ambiguity**: a whole category emits a count-cue token instead of
//!   concept-identifying terms, so the expected number of concepts stays
//!   learnable while their identity does not (imprecise input; visible to
//!   label calibration).
//!
//! Documents also differ in breadth: a per-document level scales the
//! label-count distribution and is announced by level-specific marker
//! tokens ("note" vs. "study" vs. "handbook"). Gold-set sizes therefore
//! vary widely, and the assigned count alone cannot tell a complete
//! narrow document from a broad one missing half its concepts; relating
//! expected to assigned counts can.
//!
//! Generation is a pure function of the config: per-document RNG streams
//! are derived from (seed, document index).

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Marker pools per breadth level; broader documents use the later pools.
const MARKER_POOLS: &[&[&str]] = &[
    &[
        "note", "comment", "brief", "letter", "remark", "reply", "errata", "memo",
    ],
    &[
        "study",
        "analysis",
        "review",
        "evidence",
        "essay",
        "paper",
        "report",
        "assessment",
    ],
    &[
        "handbook",
        "survey",
        "overview",
        "proceedings",
        "anthology",
        "compendium",
        "symposium",
        "volume",
    ],
];

const COMMON_POOL: &[&str] = &[
    "market", "policy", "data", "model", "trends", "impact", "growth", "theory",
];

/// Spelling variants of each count cue; calibration learns every variant
/// from count supervision, while raw indicators must model each separately.
const CUE_VARIANTS: usize = 4;

fn default_n_docs() -> usize {
    5000
}
fn default_n_concepts() -> usize {
    200
}
fn default_n_categories() -> usize {
    7
}
fn default_terms_per_concept() -> usize {
    1
}
fn default_label_count_probs() -> Vec<f64> {
    // Mean 0.4 per draw; with the breadth weights below this averages out
    // to about five labels per document over seven categories.
    vec![0.68, 0.24, 0.08]
}
fn default_breadth_weights() -> Vec<f64> {
    vec![0.40, 0.33, 0.27]
}
fn default_noise_rate() -> f64 {
    0.4
}
fn default_rate() -> f64 {
    0.15
}
fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default = "default_n_docs")]
    pub n_docs: usize,
    #[serde(default = "default_n_concepts")]
    pub n_concepts: usize,
    #[serde(default = "default_n_categories")]
    pub n_categories: usize,
    #[serde(default = "default_terms_per_concept")]
    pub terms_per_concept: usize,
    /// Distribution of the per-category gold concept count: index i holds
    /// the (unnormalized) probability of drawing count i. A document of
    /// breadth level b sums b+1 draws per category.
    #[serde(default = "default_label_count_probs")]
    pub label_count_probs: Vec<f64>,
    /// Weights of the breadth levels (level = index).
    #[serde(default = "default_breadth_weights")]
    pub breadth_weights: Vec<f64>,
    /// Probability that a title carries unrelated never-seen tokens (proper
    /// names, codes). They inflate the OOV count without any concept loss.
    #[serde(default = "default_noise_rate")]
    pub noise_rate: f64,
    #[serde(default = "default_rate")]
    pub oov_rate: f64,
    #[serde(default = "default_rate")]
    pub truncation_rate: f64,
    #[serde(default = "default_rate")]
    pub ambiguity_rate: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_docs == 0 || self.n_concepts == 0 || self.terms_per_concept == 0 {
            return Err(Error::config(
                "n_docs, n_concepts and terms_per_concept must be positive",
            ));
        }
        if self.n_categories == 0 || self.n_categories > self.n_concepts {
            return Err(Error::config("need 1 <= n_categories <= n_concepts"));
        }
        for (name, rate) in [
            ("oov_rate", self.oov_rate),
            ("truncation_rate", self.truncation_rate),
            ("ambiguity_rate", self.ambiguity_rate),
            ("noise_rate", self.noise_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::config(format!("{name} must lie in [0, 1]")));
            }
        }
        for (name, probs) in [
            ("label_count_probs", &self.label_count_probs),
            ("breadth_weights", &self.breadth_weights),
        ] {
            if probs.is_empty()
                || probs.iter().any(|p| !p.is_finite() || *p < 0.0)
                || probs.iter().sum::<f64>() <= 0.0
            {
                return Err(Error::config(format!(
                    "{name} must be non-empty, non-negative and not all zero"
                )));
            }
        }
        Ok(())
    }
}

fn concept_id(i: usize, width: usize) -> String {
    format!("c{i:0width$}")
}

/// Indicative term j of concept i.
fn concept_term(i: usize, j: usize) -> String {
    format!("k{i}t{j}")
}

/// Cue token emitted by the ambiguity mechanism: it names the category that
/// went unspecified but not how many concepts it hides. That number is only
/// recoverable as an expectation (from breadth markers and volume), which is
/// what label calibration is for.
fn cue_token(category: usize, variant: usize) -> String {
    format!("cue{category}v{variant}")
}

/// Document-unique synonym, never repeated anywhere in the corpus.
fn synonym_token(doc: usize, concept: usize, j: usize) -> String {
    format!("z{doc}q{concept}t{j}")
}

/// Document-unique distractor token unrelated to any concept.
fn noise_token(doc: usize, j: usize) -> String {
    format!("x{doc}n{j}")
}

fn draw_count(probs: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.next_f64() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Generate a corpus and its vocabulary from the config. Deterministic:
/// the same config yields a byte-identical corpus.
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    config.validate()?;
    let id_width = config.n_concepts.to_string().len().max(3);
    let doc_width = config.n_docs.to_string().len().max(3);

    let rows: Vec<(String, String, String)> = (0..config.n_concepts)
        .map(|i| {
            (
                concept_id(i, id_width),
                format!("concept {i}"),
                format!("cat{}", i % config.n_categories),
            )
        })
        .collect();
    let vocabulary = Arc::new(Vocabulary::from_rows(rows)?);

    // Concept indices per category.
    let mut pools: Vec<Vec<u32>> = vec![Vec::new(); config.n_categories];
    for i in 0..config.n_concepts {
        pools[i % config.n_categories].push(i as u32);
    }

    let doc_seed_base = rng::derive_str(config.seed, "doc");
    let mut documents = Vec::with_capacity(config.n_docs);
    for d in 0..config.n_docs {
        let mut rng = Rng::from_seed(rng::derive(doc_seed_base, d as u64));

        // Breadth level, then gold concepts per category: b+1 summed draws.
        let breadth = draw_count(&config.breadth_weights, &mut rng);
        let mut gold = BTreeSet::new();
        let mut per_category: Vec<Vec<u32>> = Vec::with_capacity(config.n_categories);
        for pool in &pools {
            let mut want = 0;
            for _ in 0..=breadth {
                want += draw_count(&config.label_count_probs, &mut rng);
            }
            let want = want.min(pool.len());
            let chosen: Vec<u32> = rng
                .sample_indices(pool.len(), want)
                .into_iter()
                .map(|ix| pool[ix])
                .collect();
            gold.extend(chosen.iter().copied());
            per_category.push(chosen);
        }

        // Title tokens: breadth markers, common fillers, then evidence.
        let mut tokens: Vec<String> = Vec::new();
        let markers = MARKER_POOLS[breadth.min(MARKER_POOLS.len() - 1)];
        let n_markers = 1 + rng.below(2) as usize;
        for _ in 0..n_markers {
            tokens.push(markers[rng.below(markers.len() as u64) as usize].to_string());
        }
        let n_common = rng.below(3) as usize;
        for _ in 0..n_common {
            tokens.push(COMMON_POOL[rng.below(COMMON_POOL.len() as u64) as usize].to_string());
        }
        if rng.next_f64() < config.noise_rate {
            let n_noise = 1 + rng.below(2) as usize;
            for j in 0..n_noise {
                tokens.push(noise_token(d, j));
            }
        }
        let mut synonym_serial = 0usize;
        for (k, concepts) in per_category.iter().enumerate() {
            if concepts.is_empty() {
                continue;
            }
            if rng.next_f64() < config.ambiguity_rate {
                let variant = rng.below(CUE_VARIANTS as u64) as usize;
                tokens.push(cue_token(k, variant));
                continue;
            }
            for &c in concepts {
                if rng.next_f64() < config.oov_rate {
                    // Paraphrases vary in length, so the OOV count is only a
                    // noisy proxy for the number of unrepresented concepts.
                    let n_syn = config.terms_per_concept + rng.below(3) as usize;
                    for _ in 0..n_syn {
                        tokens.push(synonym_token(d, c as usize, synonym_serial));
                        synonym_serial += 1;
                    }
                } else {
                    for j in 0..config.terms_per_concept {
                        tokens.push(concept_term(c as usize, j));
                    }
                }
            }
        }
        rng.shuffle(&mut tokens);
        if rng.next_f64() < config.truncation_rate {
            let keep_fraction = 0.2 + 0.4 * rng.next_f64();
            let keep = ((tokens.len() as f64 * keep_fraction).ceil() as usize).max(1);
            tokens.truncate(keep);
        }

        documents.push(Document {
            id: format!("d{d:0doc_width$}"),
            text: tokens.join(" "),
            gold,
        });
    }
    Corpus::new(documents, vocabulary)
}
