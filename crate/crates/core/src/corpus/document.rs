use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Sentence = Vec<String>;

/// One article: tokenized, lowercased sentences plus its reference summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub reference: Vec<Sentence>,
    #[serde(rename = "labels", default, skip_serializing_if = "Option::is_none")]
    pub oracle_labels: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub domain: String,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>, reference: Vec<Sentence>) -> Self {
        Self {
            id: id.into(),
            sentences,
            reference,
            oracle_labels: None,
            domain: String::new(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Self {
        self.oracle_labels = Some(labels);
        self
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = domain.into();
        self
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Indices of flagged sentences, in document order.
    pub fn labelled_indices(&self) -> Option<Vec<usize>> {
        self.oracle_labels.as_ref().map(|l| {
            l.iter()
                .enumerate()
                .filter(|(_, &f)| f != 0)
                .map(|(i, _)| i)
                .collect()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidDocument {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.sentences.is_empty() {
            return bad("no sentences");
        }
        if self.sentences.iter().any(|s| s.is_empty()) {
            return bad("empty sentence");
        }
        if self.reference.is_empty() {
            return bad("no reference");
        }
        if let Some(labels) = &self.oracle_labels {
            if labels.len() != self.sentences.len() {
                return bad("label count differs from sentence count");
            }
            if labels.iter().any(|&l| l > 1) {
                return bad("labels must be 0 or 1");
            }
            if labels.iter().all(|&l| l == 0) {
                return bad("no sentence labelled");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    pub fn from_name(name: &str) -> Option<Split> {
        match name {
            "train" => Some(Split::Train),
            "valid" | "val" | "dev" => Some(Split::Valid),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Documents of a single domain, partitioned into splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub domain: String,
    pub documents: Vec<Document>,
    pub splits: BTreeMap<Split, Vec<usize>>,
}

impl Corpus {
    /// A corpus whose documents all belong to `split`.
    pub fn single_split(domain: impl Into<String>, documents: Vec<Document>, split: Split) -> Self {
        let mut splits = BTreeMap::new();
        for s in Split::ALL {
            splits.insert(s, Vec::new());
        }
        splits.insert(split, (0..documents.len()).collect());
        Self {
            domain: domain.into(),
            documents,
            splits,
        }
    }

    pub fn from_splits(
        domain: impl Into<String>,
        parts: impl IntoIterator<Item = (Split, Vec<Document>)>,
    ) -> Self {
        let mut documents = Vec::new();
        let mut splits: BTreeMap<Split, Vec<usize>> =
            Split::ALL.iter().map(|&s| (s, Vec::new())).collect();
        for (split, docs) in parts {
            for d in docs {
                splits.get_mut(&split).unwrap().push(documents.len());
                documents.push(d);
            }
        }
        Self {
            domain: domain.into(),
            documents,
            splits,
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn split_indices(&self, split: Split) -> &[usize] {
        self.splits.get(&split).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn split_docs(&self, split: Split) -> Vec<&Document> {
        self.split_indices(split)
            .iter()
            .map(|&i| &self.documents[i])
            .collect()
    }

    /// A new corpus holding copies of one split's documents, all placed in `as_split`.
    pub fn subset(&self, split: Split, as_split: Split) -> Corpus {
        let docs = self.split_docs(split).into_iter().cloned().collect();
        Corpus::single_split(self.domain.clone(), docs, as_split)
    }

    pub fn find(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn index_by_id(&self) -> BTreeMap<&str, &Document> {
        self.documents.iter().map(|d| (d.id.as_str(), d)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.documents.len()];
        for idx in self.splits.values().flatten() {
            if *idx >= seen.len() || seen[*idx] {
                return Err(Error::InvalidInput(format!(
                    "split index {idx} out of range or repeated"
                )));
            }
            seen[*idx] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(
                "splits do not cover all documents".into(),
            ));
        }
        for d in &self.documents {
            d.validate()?;
            if !d.domain.is_empty() && d.domain != self.domain {
                return Err(Error::InvalidDocument {
                    id: d.id.clone(),
                    reason: format!(
                        "domain {} differs from corpus domain {}",
                        d.domain, self.domain
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Sentence indices chosen for one document, in selection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub selected: Vec<usize>,
    #[serde(rename = "scores", default, skip_serializing_if = "Option::is_none")]
    pub step_scores: Option<Vec<f64>>,
}

impl ExtractionResult {
    pub fn new(doc_id: impl Into<String>, selected: Vec<usize>) -> Self {
        Self {
            doc_id: doc_id.into(),
            selected,
            step_scores: None,
        }
    }

    pub fn with_scores(mut self, scores: Vec<f64>) -> Self {
        self.step_scores = Some(scores);
        self
    }

    pub fn validate_against(&self, doc: &Document) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for &i in &self.selected {
            if i >= doc.len() {
                return Err(Error::InvalidInput(format!(
                    "extraction for {} selects sentence {i} of {}",
                    doc.id,
                    doc.len()
                )));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidInput(format!(
                    "extraction for {} repeats sentence {i}",
                    doc.id
                )));
            }
        }
        Ok(())
    }

    /// Selected sentences in ascending document order, the order used to form summary text.
    pub fn summary<'d>(&self, doc: &'d Document) -> Vec<&'d Sentence> {
        let mut idx = self.selected.clone();
        idx.sort_unstable();
        idx.into_iter().map(|i| &doc.sentences[i]).collect()
    }
}
