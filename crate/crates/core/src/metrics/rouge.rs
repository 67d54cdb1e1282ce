//! ROUGE-1, ROUGE-2 and ROUGE-L over pre-tokenized text.

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

/// Precision, recall and F1 for one ROUGE variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    /// Scores from a hit count against hypothesis/reference totals; empty sides score zero.
    pub fn from_counts(hits: usize, hyp_total: usize, ref_total: usize) -> Self {
        let p = if hyp_total > 0 {
            hits as f64 / hyp_total as f64
        } else {
            0.0
        };
        let r = if ref_total > 0 {
            hits as f64 / ref_total as f64
        } else {
            0.0
        };
        Self::from_pr(p, r)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub rouge1: Prf,
    pub rouge2: Prf,
    #[serde(rename = "rougeL")]
    pub rouge_l: Prf,
}

impl RougeScore {
    /// Component-wise arithmetic mean, summed in the given order.
    pub fn mean<'a>(scores: impl IntoIterator<Item = &'a RougeScore>) -> RougeScore {
        let mut acc = [0.0f64; 9];
        let mut n = 0usize;
        for s in scores {
            for (a, v) in acc.iter_mut().zip(s.as_array()) {
                *a += v;
            }
            n += 1;
        }
        if n == 0 {
            return RougeScore::default();
        }
        let m: Vec<f64> = acc.iter().map(|a| a / n as f64).collect();
        let prf = |i: usize| Prf {
            precision: m[i],
            recall: m[i + 1],
            f1: m[i + 2],
        };
        RougeScore {
            rouge1: prf(0),
            rouge2: prf(3),
            rouge_l: prf(6),
        }
    }

    fn as_array(&self) -> [f64; 9] {
        [
            self.rouge1.precision,
            self.rouge1.recall,
            self.rouge1.f1,
            self.rouge2.precision,
            self.rouge2.recall,
            self.rouge2.f1,
            self.rouge_l.precision,
            self.rouge_l.recall,
            self.rouge_l.f1,
        ]
    }

    /// F1 triple scaled to percentages, as reported in result tables.
    pub fn f1_percent(&self) -> [f64; 3] {
        [
            100.0 * self.rouge1.f1,
            100.0 * self.rouge2.f1,
            100.0 * self.rouge_l.f1,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LcsMode {
    /// Union LCS of each reference sentence against every hypothesis sentence.
    #[default]
    SummaryLevel,
    /// Plain LCS between the concatenated token streams.
    SentenceLevel,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RougeOptions {
    pub stem: bool,
    pub lcs: LcsMode,
}

impl RougeOptions {
    pub fn stemmed() -> Self {
        Self {
            stem: true,
            ..Self::default()
        }
    }
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

fn normalise<'a, S: AsRef<[String]>>(text: &'a [S], stem: bool) -> Vec<Vec<Cow<'a, str>>> {
    text.iter()
        .map(|s| {
            s.as_ref()
                .iter()
                .map(|t| {
                    if stem {
                        Cow::Owned(stemmer().stem(t).into_owned())
                    } else {
                        Cow::Borrowed(t.as_str())
                    }
                })
                .collect()
        })
        .collect()
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            let key: Vec<&str> = w.iter().map(|t| t.as_ref()).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

fn rouge_n<T: AsRef<str>>(hyp: &[T], reference: &[T], n: usize) -> Prf {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let hits: usize = h
        .iter()
        .map(|(k, &c)| c.min(r.get(k).copied().unwrap_or(0)))
        .sum();
    Prf::from_counts(
        hits,
        hyp.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

fn lcs_table<T: AsRef<str>>(a: &[T], b: &[T]) -> Vec<Vec<u32>> {
    let mut t = vec![vec![0u32; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1].as_ref() == b[j - 1].as_ref() {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: AsRef<str>>(a: &[T], b: &[T]) -> usize {
    lcs_table(a, b)[a.len()][b.len()] as usize
}

/// Positions in `reference` of one longest common subsequence with `hyp`.
///
/// Backtracking prefers stepping back along `reference` when both directions tie.
pub fn lcs_positions<T: AsRef<str>>(reference: &[T], hyp: &[T]) -> Vec<usize> {
    let t = lcs_table(reference, hyp);
    let (mut i, mut j) = (reference.len(), hyp.len());
    let mut out = Vec::new();
    while i > 0 && j > 0 {
        if reference[i - 1].as_ref() == hyp[j - 1].as_ref() {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if t[i][j - 1] > t[i - 1][j] {
            j -= 1;
        } else {
            i -= 1;
        }
    }
    out.reverse();
    out
}

fn rouge_l_summary<T: AsRef<str>>(hyp: &[Vec<T>], reference: &[Vec<T>]) -> Prf {
    let hyp_total: usize = hyp.iter().map(Vec::len).sum();
    let ref_total: usize = reference.iter().map(Vec::len).sum();
    let mut hyp_left: HashMap<&str, usize> = HashMap::new();
    for t in hyp.iter().flatten() {
        *hyp_left.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut ref_left: HashMap<&str, usize> = HashMap::new();
    for t in reference.iter().flatten() {
        *ref_left.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut hits = 0;
    for r in reference {
        let mut union = std::collections::BTreeSet::new();
        for h in hyp {
            union.extend(lcs_positions(r, h));
        }
        for idx in union {
            let tok = r[idx].as_ref();
            let (Some(rc), Some(hc)) = (ref_left.get(tok).copied(), hyp_left.get(tok).copied())
            else {
                continue;
            };
            if rc > 0 && hc > 0 {
                hits += 1;
                *ref_left.get_mut(tok).unwrap() -= 1;
                *hyp_left.get_mut(tok).unwrap() -= 1;
            }
        }
    }
    Prf::from_counts(hits, hyp_total, ref_total)
}

/// ROUGE-1/2 over the concatenated token streams; ROUGE-L per [`LcsMode`].
///
/// An empty hypothesis scores zero everywhere.
pub fn rouge_scores<H, R>(hypothesis: &[H], reference: &[R], opts: &RougeOptions) -> RougeScore
where
    H: AsRef<[String]>,
    R: AsRef<[String]>,
{
    let hyp = normalise(hypothesis, opts.stem);
    let refs = normalise(reference, opts.stem);
    let hyp_flat: Vec<&str> = hyp.iter().flatten().map(|c| c.as_ref()).collect();
    let ref_flat: Vec<&str> = refs.iter().flatten().map(|c| c.as_ref()).collect();
    if hyp_flat.is_empty() || ref_flat.is_empty() {
        return RougeScore::default();
    }
    let rouge_l = match opts.lcs {
        LcsMode::SummaryLevel => rouge_l_summary(&hyp, &refs),
        LcsMode::SentenceLevel => Prf::from_counts(
            lcs_len(&ref_flat, &hyp_flat),
            hyp_flat.len(),
            ref_flat.len(),
        ),
    };
    RougeScore {
        rouge1: rouge_n(&hyp_flat, &ref_flat, 1),
        rouge2: rouge_n(&hyp_flat, &ref_flat, 2),
        rouge_l,
    }
}

/// ROUGE-1 and ROUGE-2 only (no stemming), over the concatenated token streams.
pub fn rouge_1_2<H, R>(hypothesis: &[H], reference: &[R]) -> (Prf, Prf)
where
    H: AsRef<[String]>,
    R: AsRef<[String]>,
{
    let h: Vec<&str> = hypothesis
        .iter()
        .flat_map(|s| s.as_ref().iter().map(String::as_str))
        .collect();
    let r: Vec<&str> = reference
        .iter()
        .flat_map(|s| s.as_ref().iter().map(String::as_str))
        .collect();
    if h.is_empty() || r.is_empty() {
        return (Prf::default(), Prf::default());
    }
    (rouge_n(&h, &r, 1), rouge_n(&h, &r, 2))
}

/// ROUGE-1 precision of a single sentence against the whole reference.
pub fn unigram_precision<S: AsRef<[String]>>(sentence: &[String], reference: &[S]) -> f64 {
    let r: Vec<&str> = reference
        .iter()
        .flat_map(|s| s.as_ref().iter().map(String::as_str))
        .collect();
    let h: Vec<&str> = sentence.iter().map(String::as_str).collect();
    rouge_n(&h, &r, 1).precision
}
