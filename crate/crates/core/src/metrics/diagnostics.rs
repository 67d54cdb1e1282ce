use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::rouge::{rouge_scores, RougeOptions, RougeScore};
use crate::corpus::{Corpus, Document, ExtractionResult};
use crate::error::{Error, Result};

/// Distinct-to-total ratio of the n-grams in `tokens`. 1.0 means no repeated n-gram.
pub fn repetition_score<T: AsRef<str>>(tokens: &[T], n: usize) -> Result<f64> {
    if n == 0 || tokens.len() < n {
        return Err(Error::InvalidInput(format!(
            "repetition score of order {n} needs at least {n} tokens, got {}",
            tokens.len()
        )));
    }
    let total = tokens.len() - n + 1;
    let distinct: HashSet<Vec<&str>> = tokens
        .windows(n)
        .map(|w| w.iter().map(|t| t.as_ref()).collect())
        .collect();
    Ok(distinct.len() as f64 / total as f64)
}

/// Bucket of sentence `index` in a document of `len` sentences.
pub fn position_bucket(index: usize, len: usize, buckets: usize) -> usize {
    (index * buckets / len).min(buckets - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionalBias {
    /// Shannon entropy in nats.
    pub entropy: f64,
    pub distribution: Vec<f64>,
    pub counted: usize,
    pub skipped: usize,
}

/// Entropy of the bucketed position of each document's first labelled sentence.
/// Documents without labels are skipped and counted.
pub fn positional_bias<'a>(
    docs: impl IntoIterator<Item = &'a Document>,
    buckets: usize,
) -> Result<PositionalBias> {
    if buckets == 0 {
        return Err(Error::InvalidInput("bucket count must be positive".into()));
    }
    let mut counts = vec![0usize; buckets];
    let mut skipped = 0;
    for doc in docs {
        let first = doc
            .oracle_labels
            .as_ref()
            .and_then(|l| l.iter().position(|&f| f != 0));
        match first {
            Some(j) => counts[position_bucket(j, doc.len(), buckets)] += 1,
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("positional bias: skipped {skipped} unlabelled document(s)");
    }
    let counted: usize = counts.iter().sum();
    if counted == 0 {
        return Err(Error::InvalidInput(
            "positional bias needs at least one labelled document".into(),
        ));
    }
    let distribution: Vec<f64> = counts.iter().map(|&c| c as f64 / counted as f64).collect();
    let entropy = distribution
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum::<f64>()
        .max(0.0);
    Ok(PositionalBias {
        entropy,
        distribution,
        counted,
        skipped,
    })
}

fn lookup<'c>(
    index: &BTreeMap<&str, &'c Document>,
    result: &ExtractionResult,
) -> Result<&'c Document> {
    let doc = index
        .get(result.doc_id.as_str())
        .copied()
        .ok_or_else(|| Error::UnknownDocument(result.doc_id.clone()))?;
    result.validate_against(doc)?;
    Ok(doc)
}

/// Mean token length of the k-th selected sentence (1-based k), over results with ≥ k selections.
pub fn length_profile(
    results: &[ExtractionResult],
    corpus: &Corpus,
) -> Result<BTreeMap<usize, f64>> {
    let index = corpus.index_by_id();
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in results {
        let doc = lookup(&index, r)?;
        for (step, &i) in r.selected.iter().enumerate() {
            let e = sums.entry(step + 1).or_insert((0.0, 0));
            e.0 += doc.sentences[i].len() as f64;
            e.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(k, (s, c))| (k, s / c as f64))
        .collect())
}

pub fn document_rouge(
    result: &ExtractionResult,
    doc: &Document,
    opts: &RougeOptions,
) -> RougeScore {
    rouge_scores(&result.summary(doc), &doc.reference, opts)
}

/// Arithmetic mean of per-document ROUGE, accumulated in result order.
pub fn aggregate_rouge(
    results: &[ExtractionResult],
    corpus: &Corpus,
    opts: &RougeOptions,
) -> Result<RougeScore> {
    let index = corpus.index_by_id();
    let per_doc = results
        .iter()
        .map(|r| Ok(document_rouge(r, lookup(&index, r)?, opts)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RougeScore::mean(&per_doc))
}

/// Mean REP_n over summaries with at least n tokens; `None` if no summary qualifies.
pub fn mean_repetition(
    results: &[ExtractionResult],
    corpus: &Corpus,
    n: usize,
) -> Result<Option<f64>> {
    let index = corpus.index_by_id();
    let mut total = 0.0;
    let mut count = 0usize;
    for r in results {
        let doc = lookup(&index, r)?;
        let tokens: Vec<&String> = r.summary(doc).into_iter().flatten().collect();
        if tokens.len() >= n {
            total += repetition_score(&tokens, n)?;
            count += 1;
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub rep: BTreeMap<usize, f64>,
    /// Entropy in nats; `None` when the corpus carries no labels.
    pub pos_bias: Option<f64>,
    pub buckets: usize,
    pub length_profile: BTreeMap<usize, f64>,
    pub rouge: RougeScore,
    pub documents: usize,
}

impl DiagnosticsReport {
    /// One `(name, value)` row per metric, in a fixed order.
    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut rows = Vec::new();
        let r = &self.rouge;
        for (name, prf) in [
            ("rouge1", r.rouge1),
            ("rouge2", r.rouge2),
            ("rougeL", r.rouge_l),
        ] {
            rows.push((format!("{name}.precision"), prf.precision));
            rows.push((format!("{name}.recall"), prf.recall));
            rows.push((format!("{name}.f1"), prf.f1));
        }
        for (n, v) in &self.rep {
            rows.push((format!("rep.{n}"), *v));
        }
        if let Some(pb) = self.pos_bias {
            rows.push((format!("pos_bias.nats.k{}", self.buckets), pb));
        }
        for (k, v) in &self.length_profile {
            rows.push((format!("length.step{k}"), *v));
        }
        rows.push(("documents".into(), self.documents as f64));
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        for (name, v) in self.rows() {
            out.push_str(&format!("{name}\t{v}\n"));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>12}\n", "metric", "value");
        for (name, v) in rows {
            out.push_str(&format!("{name:<width$}  {v:>12.6}\n"));
        }
        out
    }
}

/// Every diagnostic over a set of extractions; positional bias uses the corpus labels.
pub fn diagnose(
    results: &[ExtractionResult],
    corpus: &Corpus,
    rep_orders: &[usize],
    buckets: usize,
    opts: &RougeOptions,
) -> Result<DiagnosticsReport> {
    let mut rep = BTreeMap::new();
    for &n in rep_orders {
        if let Some(v) = mean_repetition(results, corpus, n)? {
            rep.insert(n, v);
        }
    }
    let pos_bias = if corpus.documents.iter().any(|d| d.oracle_labels.is_some()) {
        Some(positional_bias(&corpus.documents, buckets)?.entropy)
    } else {
        None
    };
    Ok(DiagnosticsReport {
        rep,
        pos_bias,
        buckets,
        length_profile: length_profile(results, corpus)?,
        rouge: aggregate_rouge(results, corpus, opts)?,
        documents: results.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn doc(id: &str, lens: &[usize], first_label: usize) -> Document {
        let sentences = lens
            .iter()
            .enumerate()
            .map(|(i, &l)| (0..l).map(|t| format!("w{i}_{t}")).collect())
            .collect::<Vec<Vec<String>>>();
        let mut labels = vec![0u8; lens.len()];
        labels[first_label] = 1;
        Document::new(id, sentences.clone(), vec![sentences[0].clone()]).with_labels(labels)
    }

    #[test]
    fn repetition_worked_values() {
        assert_eq!(repetition_score(&toks("a b c d"), 1).unwrap(), 1.0);
        assert_eq!(repetition_score(&toks("a a a a"), 1).unwrap(), 0.25);
        assert_eq!(repetition_score(&toks("a b a b"), 2).unwrap(), 2.0 / 3.0);
        assert!(repetition_score(&toks("a"), 2).is_err());
    }

    #[test]
    fn positional_bias_extremes() {
        let same: Vec<_> = (0..5).map(|i| doc(&i.to_string(), &[1; 30], 0)).collect();
        assert_eq!(positional_bias(&same, 30).unwrap().entropy, 0.0);
        let uniform: Vec<_> = (0..30).map(|i| doc(&i.to_string(), &[1; 30], i)).collect();
        let pb = positional_bias(&uniform, 30).unwrap();
        assert!((pb.entropy - 30f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn short_documents_use_proportional_buckets() {
        assert_eq!(position_bucket(0, 3, 30), 0);
        assert_eq!(position_bucket(1, 3, 30), 10);
        assert_eq!(position_bucket(2, 3, 30), 20);
        assert_eq!(position_bucket(59, 60, 30), 29);
    }

    #[test]
    fn unlabelled_documents_are_skipped() {
        let mut docs = vec![doc("a", &[1, 1], 0)];
        docs.push(Document::new("b", vec![toks("x")], vec![toks("x")]));
        let pb = positional_bias(&docs, 30).unwrap();
        assert_eq!((pb.counted, pb.skipped), (1, 1));
    }

    #[test]
    fn length_profile_means() {
        let corpus = Corpus::single_split(
            "t",
            vec![doc("a", &[30, 10, 5], 0), doc("b", &[20, 40], 0)],
            Split::Test,
        );
        let results = vec![
            ExtractionResult::new("a", vec![0, 1]),
            ExtractionResult::new("b", vec![1]),
        ];
        let p = length_profile(&results, &corpus).unwrap();
        assert_eq!(p[&1], 35.0);
        assert_eq!(p[&2], 10.0);
        let single = length_profile(&results[..1], &corpus).unwrap();
        assert_eq!(
            single.into_iter().collect::<Vec<_>>(),
            vec![(1, 30.0), (2, 10.0)]
        );
        assert!(length_profile(&[ExtractionResult::new("zz", vec![0])], &corpus).is_err());
    }

    #[test]
    fn aggregate_is_mean_of_documents() {
        let d1 = Document::new("a", vec![toks("x y"), toks("z")], vec![toks("x y")]);
        let d2 = Document::new("b", vec![toks("p q")], vec![toks("p r")]);
        let corpus = Corpus::single_split("t", vec![d1.clone(), d2.clone()], Split::Test);
        let r1 = ExtractionResult::new("a", vec![0]);
        let r2 = ExtractionResult::new("b", vec![0]);
        let opts = RougeOptions::default();
        let one = aggregate_rouge(std::slice::from_ref(&r1), &corpus, &opts).unwrap();
        assert_eq!(one, document_rouge(&r1, &d1, &opts));
        let both = aggregate_rouge(&[r1, r2], &corpus, &opts).unwrap();
        assert!((both.rouge1.f1 - 0.75).abs() < 1e-15);
    }
}
