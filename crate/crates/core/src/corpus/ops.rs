use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::document::{Corpus, Document, ExtractionResult, Split};
use crate::error::{Error, Result};
use crate::metrics::rouge_1_2;

/// Sentences selected by the greedy oracle stop at this many unless configured otherwise.
pub const DEFAULT_MAX_SELECT: usize = 4;

/// Mean of ROUGE-1 F1 and ROUGE-2 F1 of `selected` (document order) against the reference.
pub fn oracle_objective(doc: &Document, selected: &[usize]) -> f64 {
    let mut idx = selected.to_vec();
    idx.sort_unstable();
    let hyp: Vec<&Vec<String>> = idx.iter().map(|&i| &doc.sentences[i]).collect();
    let (r1, r2) = rouge_1_2(&hyp, &doc.reference);
    (r1.f1 + r2.f1) / 2.0
}

/// Greedy selection with its objective after each accepted step.
pub fn greedy_oracle_trace(doc: &Document, max_select: usize) -> (Vec<usize>, Vec<f64>) {
    let mut selected: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut best_so_far = f64::NEG_INFINITY;
    while selected.len() < max_select.min(doc.len()) {
        let mut step_best: Option<(usize, f64)> = None;
        for i in 0..doc.len() {
            if selected.contains(&i) {
                continue;
            }
            selected.push(i);
            let score = oracle_objective(doc, &selected);
            selected.pop();
            if step_best.is_none_or(|(_, s)| score > s) {
                step_best = Some((i, score));
            }
        }
        let Some((i, score)) = step_best else { break };
        // The first sentence is always taken, even at zero objective.
        if !selected.is_empty() && score <= best_so_far {
            break;
        }
        selected.push(i);
        trace.push(score);
        best_so_far = score;
    }
    (selected, trace)
}

/// Per-sentence flags for the greedily built oracle summary.
pub fn greedy_oracle_labels(doc: &Document, max_select: usize) -> Result<Vec<u8>> {
    if doc.is_empty() {
        return Err(Error::InvalidDocument {
            id: doc.id.clone(),
            reason: "no sentences".into(),
        });
    }
    if max_select == 0 {
        return Err(Error::InvalidInput("max_select must be at least 1".into()));
    }
    let (selected, _) = greedy_oracle_trace(doc, max_select);
    let mut flags = vec![0u8; doc.len()];
    for i in selected {
        flags[i] = 1;
    }
    Ok(flags)
}

/// Label every document of `corpus` in place.
pub fn label_corpus(corpus: &mut Corpus, max_select: usize) -> Result<()> {
    for d in &mut corpus.documents {
        d.oracle_labels = Some(greedy_oracle_labels(d, max_select)?);
    }
    Ok(())
}

/// Extraction of the labelled sentences, in document order.
pub fn oracle_extraction(doc: &Document, max_select: usize) -> Result<ExtractionResult> {
    let selected = match doc.labelled_indices() {
        Some(idx) => idx,
        None => {
            let mut idx = greedy_oracle_trace(doc, max_select).0;
            idx.sort_unstable();
            idx
        }
    };
    Ok(ExtractionResult::new(doc.id.clone(), selected))
}

pub fn lead_k(doc: &Document, k: usize) -> ExtractionResult {
    ExtractionResult::new(doc.id.clone(), (0..k.min(doc.len())).collect())
}

/// The seeded permutation applied by [`shuffle_sentences`]: new position `i` holds old sentence `perm[i]`.
pub fn shuffle_permutation(len: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    perm
}

pub fn permute_document(doc: &Document, perm: &[usize]) -> Document {
    let mut out = doc.clone();
    out.sentences = perm.iter().map(|&i| doc.sentences[i].clone()).collect();
    out.oracle_labels = doc
        .oracle_labels
        .as_ref()
        .map(|l| perm.iter().map(|&i| l[i]).collect());
    out
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

/// Uniformly shuffled sentence order; labels follow their sentences, the reference is untouched.
pub fn shuffle_sentences(doc: &Document, seed: u64) -> Document {
    permute_document(doc, &shuffle_permutation(doc.len(), seed))
}

/// Shuffle the sentences of every document in one split. Document `j` uses seed `seed + j`
/// so the outcome does not depend on processing order.
pub fn shuffle_split(corpus: &Corpus, split: Split, seed: u64) -> Corpus {
    let mut out = corpus.clone();
    for (j, &i) in corpus.split_indices(split).iter().enumerate() {
        out.documents[i] = shuffle_sentences(&corpus.documents[i], seed.wrapping_add(j as u64));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainStats {
    pub domain: String,
    pub split_counts: BTreeMap<Split, usize>,
    pub documents: usize,
    pub mean_sentences: f64,
    pub mean_reference_sentences: f64,
    pub mean_tokens: f64,
    pub labelled: usize,
}

impl DomainStats {
    pub fn to_table(&self) -> String {
        let mut s = format!("domain\t{}\n", self.domain);
        for (split, n) in &self.split_counts {
            s.push_str(&format!("{split}\t{n}\n"));
        }
        s.push_str(&format!("documents\t{}\n", self.documents));
        s.push_str(&format!("mean_sentences\t{:.4}\n", self.mean_sentences));
        s.push_str(&format!(
            "mean_reference_sentences\t{:.4}\n",
            self.mean_reference_sentences
        ));
        s.push_str(&format!("mean_tokens\t{:.4}\n", self.mean_tokens));
        s.push_str(&format!("labelled\t{}\n", self.labelled));
        s
    }
}

pub fn domain_stats(corpus: &Corpus) -> Result<DomainStats> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("statistics of an empty corpus".into()));
    }
    let n = corpus.len() as f64;
    let sum = |f: &dyn Fn(&Document) -> usize| corpus.documents.iter().map(f).sum::<usize>() as f64;
    Ok(DomainStats {
        domain: corpus.domain.clone(),
        split_counts: Split::ALL
            .iter()
            .map(|&s| (s, corpus.split_indices(s).len()))
            .collect(),
        documents: corpus.len(),
        mean_sentences: sum(&|d| d.len()) / n,
        mean_reference_sentences: sum(&|d| d.reference.len()) / n,
        mean_tokens: sum(&|d| d.sentences.iter().map(Vec::len).sum()) / n,
        labelled: corpus
            .documents
            .iter()
            .filter(|d| d.oracle_labels.is_some())
            .count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(words: &str) -> Vec<String> {
        words.split_whitespace().map(str::to_string).collect()
    }

    fn doc_of(sents: &[&str], reference: &[&str]) -> Document {
        Document::new(
            "d",
            sents.iter().map(|x| s(x)).collect(),
            reference.iter().map(|x| s(x)).collect(),
        )
    }

    #[test]
    fn exact_match_dominates() {
        let d = doc_of(
            &[
                "the cat sat on the mat",
                "dogs bark loudly",
                "the mat was red",
            ],
            &["the cat sat on the mat"],
        );
        assert_eq!(greedy_oracle_labels(&d, 4).unwrap(), vec![1, 0, 0]);
    }

    #[test]
    fn zero_objective_still_labels_first_by_index() {
        let d = doc_of(&["a b", "c d"], &["x y"]);
        assert_eq!(greedy_oracle_labels(&d, 3).unwrap(), vec![1, 0]);
    }

    #[test]
    fn respects_max_select() {
        let d = doc_of(&["a b", "c d", "e f"], &["a b c d e f"]);
        assert_eq!(greedy_oracle_labels(&d, 2).unwrap().iter().sum::<u8>(), 2);
        assert_eq!(greedy_oracle_labels(&d, 3).unwrap(), vec![1, 1, 1]);
        assert!(greedy_oracle_labels(&d, 0).is_err());
    }

    #[test]
    fn lead_clamps_and_prefixes() {
        let d = doc_of(&["a"; 10], &["a"]);
        assert_eq!(lead_k(&d, 3).selected, vec![0, 1, 2]);
        let d2 = doc_of(&["a", "b"], &["a"]);
        assert_eq!(lead_k(&d2, 3).selected, vec![0, 1]);
    }

    #[test]
    fn shuffle_is_seeded_and_invertible() {
        let d = doc_of(&["a", "b", "c", "d", "e", "f"], &["a"]).with_labels(vec![0, 1, 0, 0, 1, 0]);
        let a = shuffle_sentences(&d, 9);
        assert_eq!(a, shuffle_sentences(&d, 9));
        let perm = shuffle_permutation(d.len(), 9);
        let back = permute_document(&a, &invert_permutation(&perm));
        assert_eq!(back, d);
        assert_eq!(a.reference, d.reference);
        assert_eq!(a.oracle_labels.as_ref().unwrap().iter().sum::<u8>(), 2);
        let one = doc_of(&["only"], &["x"]);
        assert_eq!(shuffle_sentences(&one, 3), one);
    }

    #[test]
    fn stats_means() {
        let d1 = doc_of(&["a"; 10], &["a", "b"]);
        let d2 = doc_of(&["a"; 20], &["a"]);
        let c = Corpus::single_split("t", vec![d1, d2], Split::Train);
        let st = domain_stats(&c).unwrap();
        assert_eq!(st.mean_sentences, 15.0);
        assert_eq!(st.mean_reference_sentences, 1.5);
        assert_eq!(st.split_counts[&Split::Train], 2);
    }
}
