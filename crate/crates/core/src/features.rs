//! Node feature matrices: TF-IDF over a capped vocabulary, or precomputed
//! per-post embeddings.
//!
//! Tokens are lowercase alphanumeric runs of at least two characters. The
//! inverse document frequency is smoothed, `ln((1 + N) / (1 + df)) + 1`, and a
//! term's selection score is its largest `tf · idf` over the fitting corpus.
//! Rows are L2-normalized.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::{Claim, Dataset};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Node features: one row per post.
pub type FeatureMatrix = Tensor;

pub const DEFAULT_VOCAB_SIZE: usize = 5000;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

fn term_counts(text: &str) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for token in tokenize(text) {
        *counts.entry(token).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    num_documents: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Fits on `texts`, keeping at most `max_terms` terms.
    pub fn fit<S: AsRef<str>>(texts: &[S], max_terms: usize) -> Result<Self> {
        let docs: Vec<BTreeMap<String, usize>> = texts.iter().map(|t| term_counts(t.as_ref())).collect();
        if docs.iter().all(BTreeMap::is_empty) {
            return Err(Error::Structural("vocabulary corpus has no tokens".into()));
        }
        let n = docs.len();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in &docs {
            for term in doc.keys() {
                *df.entry(term.as_str()).or_insert(0) += 1;
            }
        }
        let mut score: BTreeMap<&str, f64> = BTreeMap::new();
        for doc in &docs {
            for (term, &tf) in doc {
                let s = tf as f64 * smoothed_idf(n, df[term.as_str()]);
                let best = score.entry(term.as_str()).or_insert(0.0);
                *best = best.max(s);
            }
        }
        let mut ranked: Vec<(&str, f64)> = score.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(max_terms);
        let mut terms: Vec<String> = ranked.into_iter().map(|(t, _)| t.to_string()).collect();
        terms.sort();
        let document_frequency = terms.iter().map(|t| df[t.as_str()]).collect();
        Ok(Vocabulary::assemble(terms, document_frequency, n))
    }

    fn assemble(terms: Vec<String>, document_frequency: Vec<usize>, num_documents: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            document_frequency,
            num_documents,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.column(term).map(|i| self.document_frequency[i])
    }

    pub fn num_documents(&self) -> usize {
        self.num_documents
    }

    pub fn idf(&self, column: usize) -> f64 {
        smoothed_idf(self.num_documents, self.document_frequency[column])
    }

    /// L2-normalized TF-IDF rows; empty or out-of-vocabulary texts give zero rows.
    pub fn transform<S: AsRef<str>>(&self, texts: &[S]) -> FeatureMatrix {
        let mut out = Tensor::zeros(texts.len(), self.terms.len());
        for (r, text) in texts.iter().enumerate() {
            let row = out.row_mut(r);
            for (term, tf) in term_counts(text.as_ref()) {
                if let Some(col) = self.column(&term) {
                    row[col] = tf as f64 * self.idf(col);
                }
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Vocabulary = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: "vocabulary".into(),
            message: e.to_string(),
        })?;
        if raw.terms.len() != raw.document_frequency.len() {
            return Err(Error::Structural("vocabulary terms and frequencies differ in length".into()));
        }
        Ok(Vocabulary::assemble(raw.terms, raw.document_frequency, raw.num_documents))
    }
}

fn smoothed_idf(n: usize, df: usize) -> f64 {
    ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Fits a vocabulary on the texts of every node of `claims`.
pub fn fit_vocabulary(claims: &[Claim], max_terms: usize) -> Result<Vocabulary> {
    let texts: Vec<&str> = claims
        .iter()
        .flat_map(|c| c.nodes.iter().map(|n| n.text.as_str()))
        .collect();
    Vocabulary::fit(&texts, max_terms)
}

/// One TF-IDF matrix per claim under a frozen vocabulary.
pub fn tfidf_features(vocab: &Vocabulary, claims: &[Claim]) -> Vec<FeatureMatrix> {
    claims
        .iter()
        .map(|c| {
            let texts: Vec<&str> = c.nodes.iter().map(|n| n.text.as_str()).collect();
            vocab.transform(&texts)
        })
        .collect()
}

/// Precomputed vectors keyed by node uid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, uid: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Structural(format!(
                "embedding of dimension {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(uid.into(), vector);
        Ok(())
    }

    pub fn get(&self, uid: &str) -> Option<&[f64]> {
        self.vectors.get(uid).map(Vec::as_slice)
    }

    /// Reads `uid<TAB>v1 v2 … vd` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table: Option<EmbeddingTable> = None;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let location = || format!("{}:{}", path.display(), lineno + 1);
            let (uid, values) = line.split_once('\t').ok_or_else(|| Error::Parse {
                location: location(),
                message: "expected uid<TAB>values".into(),
            })?;
            let vector: Vec<f64> = values
                .split_whitespace()
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Parse {
                    location: location(),
                    message: "non-numeric embedding value".into(),
                })?;
            let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
            table.insert(uid, vector).map_err(|_| Error::Parse {
                location: location(),
                message: format!("inconsistent embedding dimension (expected {})", table.dim),
            })?;
        }
        table.ok_or_else(|| Error::Structural(format!("{} holds no embeddings", path.display())))
    }

    /// Writes the rows of `claims` in dataset order.
    pub fn write_for(&self, claims: &[Claim], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for node in claims.iter().flat_map(|c| &c.nodes) {
            if let Some(v) = self.get(&node.uid) {
                out.push_str(&node.uid);
                out.push('\t');
                let joined: Vec<String> = v.iter().map(f64::to_string).collect();
                out.push_str(&joined.join(" "));
                out.push('\n');
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Per-claim matrices in node order; missing uids become zero rows and
    /// are counted in the second return value.
    pub fn features_for(&self, claims: &[Claim]) -> (Vec<FeatureMatrix>, usize) {
        let mut missing = 0;
        let matrices = claims
            .iter()
            .map(|c| {
                let mut m = Tensor::zeros(c.num_nodes(), self.dim);
                for (i, node) in c.nodes.iter().enumerate() {
                    match self.get(&node.uid) {
                        Some(v) => m.row_mut(i).copy_from_slice(v),
                        None => missing += 1,
                    }
                }
                m
            })
            .collect();
        (matrices, missing)
    }
}

/// Embedding features for a whole dataset.
pub fn load_embeddings(path: impl AsRef<Path>, dataset: &Dataset) -> Result<(Vec<FeatureMatrix>, usize)> {
    Ok(EmbeddingTable::load(path)?.features_for(&dataset.claims))
}

/// Feature extraction for any claim, including truncated ones.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    Tfidf(Vocabulary),
    Embeddings(EmbeddingTable),
}

impl FeatureSource {
    pub fn dim(&self) -> usize {
        match self {
            FeatureSource::Tfidf(v) => v.len(),
            FeatureSource::Embeddings(t) => t.dim(),
        }
    }

    pub fn features(&self, claim: &Claim) -> FeatureMatrix {
        match self {
            FeatureSource::Tfidf(v) => tfidf_features(v, std::slice::from_ref(claim)).remove(0),
            FeatureSource::Embeddings(t) => t.features_for(std::slice::from_ref(claim)).0.remove(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{Label, LabelSet, TweetNode};

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("A bb, CC-dd e1 é!"), vec!["bb", "cc", "dd", "e1"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tiny_corpus_terms() {
        // "a" is dropped by the length rule; bb scores 2·idf, cc 1·idf.
        let vocab = Vocabulary::fit(&["a bb bb", "cc"], 5000).unwrap();
        assert_eq!(vocab.terms(), &["bb".to_string(), "cc".to_string()]);
        assert_eq!(vocab.num_documents(), 2);
        assert_eq!(vocab.document_frequency("bb"), Some(1));
        let only_top = Vocabulary::fit(&["a bb bb", "cc"], 1).unwrap();
        assert_eq!(only_top.terms(), &["bb".to_string()]);
    }

    #[test]
    fn cap_and_ties() {
        let text: Vec<String> = (0..5100).map(|i| format!("t{i:05}")).collect();
        let corpus = [text.join(" ")];
        let vocab = Vocabulary::fit(&corpus, DEFAULT_VOCAB_SIZE).unwrap();
        assert_eq!(vocab.len(), 5000);
        // all scores tie, so the lexicographically first 5000 survive
        assert_eq!(vocab.terms().last().unwrap(), "t04999");
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(Vocabulary::fit(&["", "  ", "a"], 10).is_err());
    }

    #[test]
    fn transform_rows() {
        let vocab = Vocabulary::fit(&["alpha beta", "beta gamma", "gamma gamma delta"], 5000).unwrap();
        let m = vocab.transform(&["", "beta", "beta zeta alpha alpha"]);
        assert!(m.row(0).iter().all(|&v| v == 0.0));
        let one_hot: Vec<f64> = m.row(1).to_vec();
        assert_eq!(one_hot.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((one_hot.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);

        // brute force: tf, df and idf recomputed by hand for row 2
        let n = 3.0_f64;
        let idf = |df: f64| ((1.0 + n) / (1.0 + df)).ln() + 1.0;
        let alpha = 2.0 * idf(1.0);
        let beta = 1.0 * idf(2.0);
        let norm = (alpha * alpha + beta * beta).sqrt();
        let row = m.row(2);
        assert!((row[vocab.column("alpha").unwrap()] - alpha / norm).abs() < 1e-12);
        assert!((row[vocab.column("beta").unwrap()] - beta / norm).abs() < 1e-12);
        assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let vocab = Vocabulary::fit(&["one two two", "three"], 5000).unwrap();
        let back = Vocabulary::from_json(&vocab.to_json().unwrap()).unwrap();
        assert_eq!(back, vocab);
        assert_eq!(back.column("two"), vocab.column("two"));
    }

    fn claim_with(uids: &[&str]) -> Claim {
        Claim {
            id: "c".into(),
            label: Label(0),
            event: None,
            nodes: uids
                .iter()
                .enumerate()
                .map(|(i, u)| TweetNode { uid: u.to_string(), text: String::new(), time: i as f64 })
                .collect(),
            edges: (1..uids.len()).map(|i| crate::cascade::Edge::new(0, i)).collect(),
        }
    }

    #[test]
    fn embeddings_full_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        let mut lines = String::new();
        for uid in ["a", "b"] {
            let v: Vec<String> = (0..200).map(|k| format!("{}", k as f64 * 0.5)).collect();
            lines.push_str(&format!("{uid}\t{}\n", v.join(" ")));
        }
        fs::write(&path, lines).unwrap();
        let ds = Dataset::new(vec![claim_with(&["a", "b"])], LabelSet::four_class()).unwrap();
        let (m, missing) = load_embeddings(&path, &ds).unwrap();
        assert_eq!(m[0].shape(), (2, 200));
        assert_eq!(missing, 0);

        let ds = Dataset::new(vec![claim_with(&["a", "zz", "b"])], LabelSet::four_class()).unwrap();
        let (m, missing) = load_embeddings(&path, &ds).unwrap();
        assert_eq!(missing, 1);
        assert!(m[0].row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        let a: Vec<String> = (0..200).map(|_| "1".to_string()).collect();
        let b: Vec<String> = (0..199).map(|_| "1".to_string()).collect();
        fs::write(&path, format!("a\t{}\nb\t{}\n", a.join(" "), b.join(" "))).unwrap();
        assert!(EmbeddingTable::load(&path).is_err());
        assert!(EmbeddingTable::load(dir.path().join("missing.tsv")).is_err());
    }
}
