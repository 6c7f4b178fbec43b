//! Tokenization, term indexing and binary vectorization.
//!
//! Titles are short, so documents are encoded as binary term presence rather
//! than weighted frequencies. The term index doubles as the reference
//! vocabulary for out-of-vocabulary counting: a token the classifier never
//! saw in training is a direct signal that content went unrepresented.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A tokenized title. `char_count` is the number of Unicode scalar values in
/// the raw text, counted before tokenization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub char_count: usize,
}

impl TokenSeq {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }
}

/// Lowercase and split on anything that is not alphanumeric. Tokens are
/// maximal alphanumeric runs; empty input yields an empty token list.
pub fn tokenize(text: &str) -> TokenSeq {
    let char_count = text.chars().count();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                current.push(lc);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenSeq { tokens, char_count }
}

/// Term-to-column mapping with document frequencies. Column order is the
/// ranking order: document frequency descending, ties lexicographic. The
/// same order defines [`TermIndex::top_terms`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TermIndexData", into = "TermIndexData")]
pub struct TermIndex {
    terms: Vec<String>,
    df: Vec<u32>,
    total_docs: usize,
    by_term: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct TermIndexData {
    terms: Vec<String>,
    df: Vec<u32>,
    total_docs: usize,
}

impl From<TermIndexData> for TermIndex {
    fn from(d: TermIndexData) -> Self {
        let by_term = d
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        TermIndex {
            terms: d.terms,
            df: d.df,
            total_docs: d.total_docs,
            by_term,
        }
    }
}

impl From<TermIndex> for TermIndexData {
    fn from(ix: TermIndex) -> Self {
        TermIndexData {
            terms: ix.terms,
            df: ix.df,
            total_docs: ix.total_docs,
        }
    }
}

impl TermIndex {
    /// Build from tokenized documents. Keeps terms with document frequency at
    /// least `min_df`; if more than `max_terms` qualify, keeps the highest-df
    /// terms with lexicographic tie-breaking.
    pub fn build(docs: &[TokenSeq], min_df: usize, max_terms: usize) -> Result<TermIndex> {
        if docs.is_empty() {
            return Err(Error::invalid("term index over an empty corpus"));
        }
        if min_df < 1 || max_terms < 1 {
            return Err(Error::invalid("min_df and max_terms must be at least 1"));
        }
        let mut df: HashMap<&str, u32> = HashMap::new();
        let mut seen: HashSet<&str> = HashSet::new();
        for doc in docs {
            seen.clear();
            for tok in &doc.tokens {
                if seen.insert(tok) {
                    *df.entry(tok).or_insert(0) += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, u32)> = df
            .into_iter()
            .filter(|&(_, d)| d as usize >= min_df)
            .collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_terms);

        let terms: Vec<String> = ranked.iter().map(|(t, _)| (*t).to_string()).collect();
        let dfs: Vec<u32> = ranked.iter().map(|&(_, d)| d).collect();
        let by_term = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(TermIndex {
            terms,
            df: dfs,
            total_docs: docs.len(),
            by_term,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    pub fn column(&self, term: &str) -> Option<u32> {
        self.by_term.get(term).copied()
    }

    pub fn term(&self, column: u32) -> &str {
        &self.terms[column as usize]
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.column(term).map(|c| self.df[c as usize])
    }

    /// The `k` highest-df terms (ranking order), cloned.
    pub fn top_terms(&self, k: usize) -> Vec<String> {
        self.terms.iter().take(k).cloned().collect()
    }
}

/// Sparse document vector: (column, value) pairs with strictly increasing
/// columns and finite values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    entries: Vec<(u32, f64)>,
}

impl DocVector {
    pub fn from_entries(entries: Vec<(u32, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::invalid(
                    "document vector columns must strictly increase",
                ));
            }
        }
        if entries.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(Error::invalid("document vector values must be finite"));
        }
        Ok(DocVector { entries })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dot product against a dense weight vector.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(c, v)| weights[c as usize] * v)
            .sum()
    }
}

/// Binary term-presence encoding: value 1.0 at the column of every distinct
/// indexed term in the document; unindexed tokens are ignored.
pub fn vectorize(tokens: &TokenSeq, index: &TermIndex) -> DocVector {
    let mut cols: Vec<u32> = tokens
        .tokens
        .iter()
        .filter_map(|t| index.column(t))
        .collect();
    cols.sort_unstable();
    cols.dedup();
    DocVector {
        entries: cols.into_iter().map(|c| (c, 1.0)).collect(),
    }
}

/// Token occurrences (not distinct types) absent from the index.
pub fn count_oov(tokens: &TokenSeq, index: &TermIndex) -> usize {
    tokens
        .tokens
        .iter()
        .filter(|t| index.column(t).is_none())
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_and_lowercases() {
        let t = tokenize("Oil price shocks");
        assert_eq!(t.tokens, vec!["oil", "price", "shocks"]);
        assert_eq!(t.token_count(), 3);
        assert_eq!(t.char_count, 16);
    }

    #[test]
    fn tokenize_empty() {
        let t = tokenize("");
        assert!(t.tokens.is_empty());
        assert_eq!(t.char_count, 0);
    }

    #[test]
    fn tokenize_unicode_and_punctuation() {
        let t = tokenize("Außenhandel: Analyse!");
        assert_eq!(t.tokens, vec!["außenhandel", "analyse"]);
        assert_eq!(t.char_count, 21);
    }

    fn docs(strs: &[&str]) -> Vec<TokenSeq> {
        strs.iter().map(|s| tokenize(s)).collect()
    }

    #[test]
    fn build_counts_document_frequency() {
        let d = docs(&["tax oil", "tax law", "tax tax tax"]);
        let ix = TermIndex::build(&d, 2, 100).unwrap();
        assert_eq!(ix.df("tax"), Some(3));
        assert_eq!(ix.column("oil"), None);
        assert_eq!(ix.total_docs(), 3);
    }

    #[test]
    fn build_min_df_filters_rare_terms() {
        let d = docs(&["tax oil", "tax"]);
        let ix = TermIndex::build(&d, 2, 100).unwrap();
        assert!(ix.column("oil").is_none());
        assert!(ix.column("tax").is_some());
    }

    #[test]
    fn build_max_terms_breaks_ties_lexicographically() {
        let d = docs(&["a b", "a b c", "a b"]);
        let ix = TermIndex::build(&d, 1, 1).unwrap();
        assert_eq!(ix.len(), 1);
        assert_eq!(ix.term(0), "a");
    }

    #[test]
    fn build_on_empty_corpus_is_an_error() {
        assert!(TermIndex::build(&[], 1, 10).is_err());
    }

    #[test]
    fn build_is_permutation_invariant() {
        let a = docs(&["x y", "y z", "z z w"]);
        let mut b = a.clone();
        b.reverse();
        let ia = TermIndex::build(&a, 1, 10).unwrap();
        let ib = TermIndex::build(&b, 1, 10).unwrap();
        assert_eq!(ia, ib);
    }

    #[test]
    fn vectorize_is_binary_presence() {
        let d = docs(&["tax oil"]);
        let ix = TermIndex::build(&d, 1, 10).unwrap();
        let v = vectorize(&tokenize("tax tax oil"), &ix);
        assert_eq!(v.len(), 2);
        assert!(v.entries().iter().all(|&(_, x)| x == 1.0));
    }

    #[test]
    fn vectorize_ignores_unindexed_tokens() {
        let d = docs(&["tax"]);
        let ix = TermIndex::build(&d, 1, 10).unwrap();
        assert!(vectorize(&tokenize("zzz"), &ix).is_empty());
        assert!(vectorize(&tokenize(""), &ix).is_empty());
    }

    #[test]
    fn oov_counts_occurrences() {
        let d = docs(&["law"]);
        let ix = TermIndex::build(&d, 1, 10).unwrap();
        assert_eq!(count_oov(&tokenize("brexit law"), &ix), 1);
        assert_eq!(count_oov(&tokenize("law law"), &ix), 0);
        assert_eq!(count_oov(&tokenize("brexit brexit"), &ix), 2);
    }

    #[test]
    fn oov_plus_known_equals_token_count() {
        let d = docs(&["a b c", "b c d"]);
        let ix = TermIndex::build(&d, 1, 10).unwrap();
        let t = tokenize("a a q d z");
        let known = t.tokens.iter().filter(|x| ix.column(x).is_some()).count();
        assert_eq!(count_oov(&t, &ix) + known, t.token_count());
    }
}
