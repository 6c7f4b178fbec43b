//! Document collections, controlled vocabularies and fold plans.
//!
//! A [`Vocabulary`] interns concept ids to dense indices; documents store
//! their gold concepts as index sets, validated at load time. Corpus files
//! are JSON lines (one document per line) so large collections stream;
//! vocabularies are TSV because thesaurus dumps are naturally tabular.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Controlled vocabulary: concepts with preferred labels, each mapped to one
/// top category. Categories keep first-appearance order from the source file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    concepts: Vec<ConceptEntry>,
    categories: Vec<String>,
    by_id: HashMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub id: String,
    pub label: String,
    /// Index into `categories`.
    pub category: u32,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    concepts: Vec<ConceptEntry>,
    categories: Vec<String>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Self {
        let by_id = d
            .concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i as u32))
            .collect();
        Vocabulary {
            concepts: d.concepts,
            categories: d.categories,
            by_id,
        }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        VocabularyData {
            concepts: v.concepts,
            categories: v.categories,
        }
    }
}

impl Vocabulary {
    /// Build from (concept id, preferred label, category id) rows. Categories
    /// are registered in first-appearance order.
    pub fn from_rows<I, S>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            concepts: Vec::new(),
            categories: Vec::new(),
            by_id: HashMap::new(),
        };
        for (line, (id, label, cat)) in rows.into_iter().enumerate() {
            v.push_row(id.into(), label.into(), cat.into(), line + 1)?;
        }
        Ok(v)
    }

    fn push_row(&mut self, id: String, label: String, cat: String, line: usize) -> Result<()> {
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateConcept { line, id });
        }
        let cat_idx = match self.categories.iter().position(|c| *c == cat) {
            Some(i) => i as u32,
            None => {
                self.categories.push(cat);
                (self.categories.len() - 1) as u32
            }
        };
        self.by_id.insert(id.clone(), self.concepts.len() as u32);
        self.concepts.push(ConceptEntry {
            id,
            label,
            category: cat_idx,
        });
        Ok(())
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn concepts(&self) -> &[ConceptEntry] {
        &self.concepts
    }

    pub fn concept_index(&self, id: &str) -> Option<u32> {
        self.by_id.get(id).copied()
    }

    pub fn concept(&self, index: u32) -> &ConceptEntry {
        &self.concepts[index as usize]
    }

    /// Category index of a concept.
    pub fn category_of(&self, concept: u32) -> u32 {
        self.concepts[concept as usize].category
    }
}

/// One record to be indexed: a title and its gold concept set (as indices
/// into the corpus vocabulary).
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub gold: BTreeSet<u32>,
}

/// Wire format of one corpus line.
#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    text: String,
    labels: Vec<String>,
}

/// An ordered document collection bound to its vocabulary. Document order is
/// the file order and never changes after load.
#[derive(Clone, Debug)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Arc<Vocabulary>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, vocabulary: Arc<Vocabulary>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, d) in documents.iter().enumerate() {
            if d.id.is_empty() {
                return Err(Error::invalid(format!("document {i} has an empty id")));
            }
            if let Some(prev) = seen.insert(d.id.clone(), i) {
                return Err(Error::invalid(format!(
                    "duplicate document id \"{}\" (documents {prev} and {i})",
                    d.id
                )));
            }
            for &c in &d.gold {
                if c as usize >= vocabulary.n_concepts() {
                    return Err(Error::invalid(format!(
                        "document \"{}\" references concept index {c} outside the vocabulary",
                        d.id
                    )));
                }
            }
        }
        Ok(Corpus {
            documents,
            vocabulary,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn vocabulary_arc(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocabulary)
    }

    /// Documents accepted with an empty gold set; excluded from recall
    /// aggregates downstream.
    pub fn empty_gold_count(&self) -> usize {
        self.documents.iter().filter(|d| d.gold.is_empty()).count()
    }

    /// Gold concept count per category for one document.
    pub fn gold_counts_per_category(&self, doc: &Document) -> Vec<f64> {
        let mut counts = vec![0.0; self.vocabulary.n_categories()];
        for &c in &doc.gold {
            counts[self.vocabulary.category_of(c) as usize] += 1.0;
        }
        counts
    }
}

/// Load a TSV vocabulary: header row, then `concept_id<TAB>preferred_label<TAB>category_id`.
pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut v = Vocabulary {
        concepts: Vec::new(),
        categories: Vec::new(),
        by_id: HashMap::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if i == 0 {
            // Header row; column names are fixed by the format.
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        v.push_row(
            cols[0].to_string(),
            cols[1].to_string(),
            cols[2].to_string(),
            lineno,
        )?;
    }
    Ok(v)
}

/// Write a vocabulary in the TSV format read by [`load_vocabulary`].
pub fn save_vocabulary(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut out = String::from("concept_id\tpreferred_label\tcategory_id\n");
    for c in &vocab.concepts {
        out.push_str(&c.id);
        out.push('\t');
        out.push_str(&c.label);
        out.push('\t');
        out.push_str(&vocab.categories[c.category as usize]);
        out.push('\n');
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Load a JSON-lines corpus, validating every gold label against `vocabulary`.
pub fn load_corpus(path: &Path, vocabulary: Arc<Vocabulary>) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut documents = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        if rec.id.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "empty document id".into(),
            });
        }
        if seen.insert(rec.id.clone(), lineno).is_some() {
            return Err(Error::DuplicateDocument {
                line: lineno,
                id: rec.id,
            });
        }
        let mut gold = BTreeSet::new();
        for label in &rec.labels {
            match vocabulary.concept_index(label) {
                Some(c) => {
                    gold.insert(c);
                }
                None => {
                    return Err(Error::UnknownConcept {
                        line: lineno,
                        id: label.clone(),
                    });
                }
            }
        }
        documents.push(Document {
            id: rec.id,
            text: rec.text,
            gold,
        });
    }
    Ok(Corpus {
        documents,
        vocabulary,
    })
}

/// Write a corpus in the JSON-lines format read by [`load_corpus`]. Labels
/// are written in lexicographic concept-id order, a canonical form that makes
/// save idempotent.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let vocab = corpus.vocabulary();
    for d in &corpus.documents {
        let mut labels: Vec<String> = d
            .gold
            .iter()
            .map(|&c| vocab.concept(c).id.clone())
            .collect();
        labels.sort_unstable();
        let rec = DocumentRecord {
            id: d.id.clone(),
            text: d.text.clone(),
            labels,
        };
        let line = serde_json::to_string(&rec)
            .map_err(|e| Error::Corrupt(format!("serialize document: {e}")))?;
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Nested cross-validation plan: `outer[o]` are the evaluation indices of
/// fold `o`; `inner[o][i]` partitions the remaining training indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub outer: Vec<Vec<usize>>,
    pub inner: Vec<Vec<Vec<usize>>>,
    pub seed: u64,
}

impl FoldPlan {
    /// All training indices of outer fold `o` (ascending).
    pub fn outer_train(&self, o: usize) -> Vec<usize> {
        let mut train: Vec<usize> = self.inner[o]
            .iter()
            .flat_map(|part| part.iter().copied())
            .collect();
        train.sort_unstable();
        train
    }
}

/// Split `0..n_docs` into `k` shuffled partitions whose sizes differ by at
/// most one.
fn partition(indices: &mut [usize], k: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    rng.shuffle(indices);
    let n = indices.len();
    let base = n / k;
    let extra = n % k;
    let mut parts = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        parts.push(indices[start..start + size].to_vec());
        start += size;
    }
    parts
}

/// Single-level deterministic split of `0..n_docs` into `k` partitions.
pub fn make_partitions(n_docs: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 partitions (got {k})"
        )));
    }
    if n_docs < k {
        return Err(Error::invalid(format!(
            "{n_docs} documents are too few for {k} partitions"
        )));
    }
    let mut rng = Rng::from_seed(rng::derive_str(seed, "partitions"));
    let mut all: Vec<usize> = (0..n_docs).collect();
    Ok(partition(&mut all, k, &mut rng))
}

/// Build a deterministic nested fold plan. A pure function of
/// `(n_docs, k_outer, k_inner, seed)`.
pub fn make_folds(n_docs: usize, k_outer: usize, k_inner: usize, seed: u64) -> Result<FoldPlan> {
    if k_outer < 2 || k_inner < 2 {
        return Err(Error::invalid(format!(
            "fold counts must be at least 2 (got outer {k_outer}, inner {k_inner})"
        )));
    }
    // Feasibility: every outer partition must be non-empty and every outer
    // training set must still be splittable into k_inner non-empty parts.
    let max_outer_part = n_docs.div_ceil(k_outer);
    if n_docs < k_outer || n_docs - max_outer_part < k_inner {
        return Err(Error::invalid(format!(
            "{n_docs} documents are too few for {k_outer}x{k_inner} nested folds"
        )));
    }
    let mut outer_rng = Rng::from_seed(rng::derive_str(seed, "outer-folds"));
    let mut all: Vec<usize> = (0..n_docs).collect();
    let outer = partition(&mut all, k_outer, &mut outer_rng);

    let mut inner = Vec::with_capacity(k_outer);
    for (o, eval_part) in outer.iter().enumerate() {
        let eval_set: BTreeSet<usize> = eval_part.iter().copied().collect();
        let mut train: Vec<usize> = (0..n_docs).filter(|i| !eval_set.contains(i)).collect();
        let mut inner_rng =
            Rng::from_seed(rng::derive(rng::derive_str(seed, "inner-folds"), o as u64));
        inner.push(partition(&mut train, k_inner, &mut inner_rng));
    }
    Ok(FoldPlan { outer, inner, seed })
}
