//! Problem sets, tokenization and term-frequency vectorization.
//!
//! A problem set is one clustering problem: a directory of UTF-8 `*.txt`
//! documents, optionally accompanied by a ground-truth file. Document order is
//! the byte-lexicographic order of file names and defines row indices in every
//! downstream matrix.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use crate::error::{Error, Result};

pub const NATIVE_TRUTH_FILE: &str = "truth.json";
pub const PAN_TRUTH_FILE: &str = "clustering.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruthFormat {
    /// `truth.json`: `{"clusters": [["a.txt", "b.txt"], ["c.txt"]]}`
    #[default]
    Native,
    /// `clustering.json`: `[[{"document": "a.txt"}, ...], ...]`
    Pan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Self::with_tokenizer(doc_id, raw_text, &Tokenizer::default())
    }

    pub fn with_tokenizer(
        doc_id: impl Into<String>,
        raw_text: impl Into<String>,
        tokenizer: &Tokenizer,
    ) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenizer.tokenize(&raw_text);
        Document {
            doc_id: doc_id.into(),
            raw_text,
            tokens,
        }
    }
}

/// Ground-truth author assignment, stored parallel to the document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    labels: Vec<usize>,
    k: usize,
}

impl Truth {
    /// Build from dense labels. Labels are re-numbered by first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let (labels, k) = crate::cluster::densify(labels);
        Truth { labels, k }
    }

    /// Build from lists of document ids, validated against `doc_ids`.
    pub fn from_clusters(doc_ids: &[String], clusters: &[Vec<String>]) -> Result<Self> {
        let index: HashMap<&str, usize> = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut labels = vec![usize::MAX; doc_ids.len()];
        for (c, members) in clusters.iter().enumerate() {
            for name in members {
                let &i = index
                    .get(name.as_str())
                    .ok_or_else(|| Error::UnknownDocument(name.clone()))?;
                if labels[i] != usize::MAX {
                    return Err(Error::DuplicateTruthEntry(name.clone()));
                }
                labels[i] = c;
            }
        }
        if let Some(i) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::TruthOmitsDocument(doc_ids[i].clone()));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Cluster membership as lists of document ids, in label order.
    pub fn clusters(&self, doc_ids: &[String]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(doc_ids[i].clone());
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSet {
    pub problem_id: String,
    pub documents: Vec<Document>,
    pub truth: Option<Truth>,
}

impl ProblemSet {
    pub fn new(
        problem_id: impl Into<String>,
        documents: Vec<Document>,
        truth: Option<Truth>,
    ) -> Result<Self> {
        let problem_id = problem_id.into();
        if documents.len() < 2 {
            return Err(Error::TooFewDocuments(problem_id.into()));
        }
        let mut seen = std::collections::HashSet::new();
        for d in &documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate document id {}",
                    d.doc_id
                )));
            }
        }
        if let Some(t) = &truth {
            if t.len() != documents.len() {
                return Err(Error::SizeMismatch {
                    expected: documents.len(),
                    actual: t.len(),
                });
            }
        }
        Ok(ProblemSet {
            problem_id,
            documents,
            truth,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.doc_id.clone()).collect()
    }
}

#[derive(Deserialize)]
struct NativeTruth {
    clusters: Vec<Vec<String>>,
}

#[derive(Deserialize)]
struct PanEntry {
    document: String,
}

/// Read a truth file in the given format. Returns cluster lists of doc ids.
pub fn read_truth_file(path: &Path, format: TruthFormat) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        TruthFormat::Native => {
            let t: NativeTruth = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
            Ok(t.clusters)
        }
        TruthFormat::Pan => {
            let t: Vec<Vec<PanEntry>> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
            Ok(t.into_iter()
                .map(|c| c.into_iter().map(|e| e.document).collect())
                .collect())
        }
    }
}

pub fn load_problem_set(dir: &Path, format: TruthFormat) -> Result<ProblemSet> {
    load_problem_set_with(dir, format, &Tokenizer::default())
}

pub fn load_problem_set_with(dir: &Path, format: TruthFormat, tokenizer: &Tokenizer) -> Result<ProblemSet> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort_unstable_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
    if names.len() < 2 {
        return Err(Error::TooFewDocuments(dir.to_path_buf()));
    }

    let mut documents = Vec::with_capacity(names.len());
    for name in names {
        let path = dir.join(&name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if text.is_empty() {
            return Err(Error::Malformed {
                what: "document",
                detail: format!("{} is empty", path.display()),
            });
        }
        documents.push(Document::with_tokenizer(name, text, tokenizer));
    }

    let truth_name = match format {
        TruthFormat::Native => NATIVE_TRUTH_FILE,
        TruthFormat::Pan => PAN_TRUTH_FILE,
    };
    let truth_path = dir.join(truth_name);
    let doc_ids: Vec<String> = documents.iter().map(|d| d.doc_id.clone()).collect();
    let truth = if truth_path.is_file() {
        let clusters = read_truth_file(&truth_path, format)?;
        Some(Truth::from_clusters(&doc_ids, &clusters)?)
    } else {
        None
    };

    let problem_id = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    ProblemSet::new(problem_id, documents, truth)
}

/// Splits text into lowercased letter/digit runs and single punctuation marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer { lowercase: true }
    }
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        let mut word = String::new();
        let push_char = |c: char, word: &mut String, tokens: &mut Vec<String>| {
            if c.is_alphanumeric() {
                word.push(c);
            } else {
                if !word.is_empty() {
                    tokens.push(std::mem::take(word));
                }
                if !c.is_whitespace() {
                    tokens.push(c.to_string());
                }
            }
        };
        for c in text.chars() {
            // lowercase first, then classify, so multi-char foldings stay idempotent
            if self.lowercase && c.is_alphanumeric() {
                for lc in c.to_lowercase() {
                    push_char(lc, &mut word, &mut tokens);
                }
            } else {
                push_char(c, &mut word, &mut tokens);
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
        tokens
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub index: HashMap<String, usize>,
    pub corpus_freq: HashMap<String, u64>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    pub doc_ids: Vec<String>,
    /// n x V term frequencies.
    pub counts: Array2<u32>,
    pub vocabulary: Vocabulary,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.counts.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.counts.ncols()
    }

    pub fn doc_length(&self, doc: usize) -> u64 {
        self.counts.row(doc).iter().map(|&c| u64::from(c)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorizerConfig {
    /// Drop terms whose total count over the corpus is 1.
    pub remove_hapax: bool,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig { remove_hapax: true }
    }
}

pub fn vectorize(problem: &ProblemSet) -> Result<DocTermMatrix> {
    vectorize_with(problem, VectorizerConfig::default())
}

/// Term-frequency matrix over the problem's vocabulary. Terms are numbered by
/// first occurrence in document order.
pub fn vectorize_with(problem: &ProblemSet, cfg: VectorizerConfig) -> Result<DocTermMatrix> {
    let mut order: Vec<&str> = Vec::new();
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in &problem.documents {
        for tok in &doc.tokens {
            let f = freq.entry(tok.as_str()).or_insert(0);
            if *f == 0 {
                order.push(tok.as_str());
            }
            *f += 1;
        }
    }
    let min_count = if cfg.remove_hapax { 2 } else { 1 };
    let terms: Vec<String> = order
        .into_iter()
        .filter(|t| freq[t] >= min_count)
        .map(str::to_string)
        .collect();
    let index: HashMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let corpus_freq = terms.iter().map(|t| (t.clone(), freq[t.as_str()])).collect();

    let mut counts = Array2::<u32>::zeros((problem.len(), terms.len()));
    for (i, doc) in problem.documents.iter().enumerate() {
        for tok in &doc.tokens {
            if let Some(&j) = index.get(tok.as_str()) {
                counts[[i, j]] += 1;
            }
        }
        if counts.row(i).iter().all(|&c| c == 0) {
            return Err(Error::EmptyDocument(doc.doc_id.clone()));
        }
    }

    Ok(DocTermMatrix {
        doc_ids: problem.doc_ids(),
        counts,
        vocabulary: Vocabulary {
            terms,
            index,
            corpus_freq,
        },
    })
}
