use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::document::{Corpus, Document, Sentence, Split};
use super::ops::greedy_oracle_labels;

/// Knobs for [`synthetic_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub documents: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Sentences copied into the reference.
    pub salient: usize,
    /// Upper bound on the index of a salient sentence (exclusive); `None` = anywhere.
    pub salient_window: Option<usize>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            documents: 64,
            min_sentences: 5,
            max_sentences: 9,
            salient: 2,
            salient_window: None,
            seed: 0,
        }
    }
}

const FILLER: &[&str] = &[
    "the", "a", "of", "to", "and", "in", "on", "for", "with", "was", "is", "by", "at", "from",
    "said", "he", "she", "they", "it", "that", "this", "as", "were", "has", "had", "after",
    "before", "over", "under", "into", "city", "team", "year", "week", "people", "report",
    "police", "school", "market", "game", "house", "state", "group", "plan", "day", "time",
];

const SALIENT: &[&str] = &[
    "crisis", "verdict", "merger", "storm", "election", "outbreak", "strike", "record", "scandal",
    "treaty", "rescue", "launch", "ban", "surge", "collapse", "deal",
];

fn sentence(rng: &mut ChaCha8Rng, salient: bool) -> Sentence {
    let len = rng.gen_range(5..=9);
    let mut s: Sentence = (0..len)
        .map(|_| FILLER.choose(rng).expect("nonempty").to_string())
        .collect();
    if salient {
        for _ in 0..2 {
            let pos = rng.gen_range(0..=s.len());
            s.insert(pos, SALIENT.choose(rng).expect("nonempty").to_string());
        }
    }
    s
}

/// Seeded news-like documents for smoke tests and demos. A few sentences carry marker
/// words and are copied verbatim into the reference, so the greedy oracle recovers them.
/// Documents are labelled and split 80/10/10.
pub fn synthetic_corpus(domain: &str, spec: &SynthSpec) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut docs = Vec::with_capacity(spec.documents);
    for d in 0..spec.documents {
        let n = rng.gen_range(spec.min_sentences..=spec.max_sentences.max(spec.min_sentences));
        let salient_n = spec.salient.min(n);
        let window = spec.salient_window.unwrap_or(n).clamp(salient_n, n);
        let mut positions: Vec<usize> = (0..window).collect();
        positions.shuffle(&mut rng);
        positions.truncate(salient_n);
        positions.sort_unstable();
        let sentences: Vec<Sentence> = (0..n)
            .map(|i| sentence(&mut rng, positions.contains(&i)))
            .collect();
        let reference = positions.iter().map(|&i| sentences[i].clone()).collect();
        let mut doc =
            Document::new(format!("{domain}-{d:05}"), sentences, reference).with_domain(domain);
        doc.oracle_labels =
            Some(greedy_oracle_labels(&doc, salient_n.max(1)).expect("nonempty document"));
        docs.push(doc);
    }
    let n = docs.len();
    let n_train = n * 8 / 10;
    let n_valid = n / 10;
    let mut splits = std::collections::BTreeMap::new();
    splits.insert(Split::Train, (0..n_train).collect());
    splits.insert(Split::Valid, (n_train..n_train + n_valid).collect());
    splits.insert(Split::Test, (n_train + n_valid..n).collect());
    Corpus {
        domain: domain.to_string(),
        documents: docs,
        splits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_labelled() {
        let spec = SynthSpec {
            documents: 20,
            ..SynthSpec::default()
        };
        let a = synthetic_corpus("toy", &spec);
        assert_eq!(a, synthetic_corpus("toy", &spec));
        assert_eq!(a.split_indices(Split::Train).len(), 16);
        a.validate().unwrap();
        for d in &a.documents {
            assert!(d.oracle_labels.as_ref().unwrap().contains(&1));
        }
    }
}
