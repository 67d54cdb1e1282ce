use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Ordered token → row index map.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut v = Vocab::default();
        for t in tokens {
            v.insert(t);
        }
        v
    }

    /// Tokens of `docs` by descending frequency (ties lexicographic), at most `max_size`.
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a Document>, max_size: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for d in docs {
            for t in d.sentences.iter().flatten() {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut by_freq: Vec<(&str, usize)> = counts.into_iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Self::from_tokens(
            by_freq
                .into_iter()
                .take(max_size)
                .map(|(t, _)| t.to_string()),
        )
    }

    pub fn insert(&mut self, token: String) -> usize {
        if let Some(&i) = self.index.get(&token) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(token.clone(), i);
        self.tokens.push(token);
        i
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn stable_hash(token: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic vector for a token missing from a table: uniform in [−0.1, 0.1], seeded by its hash.
pub fn oov_vector(token: &str, dim: usize) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(token));
    Array1::from_shape_fn(dim, |_| rng.gen_range(-0.1..=0.1))
}

/// Word vectors for a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    pub vectors: Array2<f64>,
    pub trainable: bool,
    /// Vocabulary entries that received the out-of-vocabulary vector at construction.
    pub oov_initialised: usize,
    /// Tokens that appeared more than once in the source file.
    pub duplicates: usize,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn lookup(&self, token: &str) -> Array1<f64> {
        match self.vocab.get(token) {
            Some(i) => self.vectors.row(i).to_owned(),
            None => oov_vector(token, self.dim()),
        }
    }
}

/// Table with i.i.d. uniform entries in [−0.1, 0.1].
pub fn random_table(vocab: &Vocab, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    if vocab.is_empty() {
        return Err(Error::InvalidInput(
            "random table over an empty vocabulary".into(),
        ));
    }
    if dim == 0 {
        return Err(Error::InvalidInput(
            "embedding dimension must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = Array2::from_shape_fn((vocab.len(), dim), |_| rng.gen_range(-0.1..=0.1));
    Ok(EmbeddingTable {
        vocab: vocab.clone(),
        vectors,
        trainable: true,
        oov_initialised: 0,
        duplicates: 0,
    })
}

/// Read a whitespace-separated text table (`token v1 ... vd` per line, with an optional
/// `count dim` header) restricted to `vocab`. The first occurrence of a token wins.
pub fn load_table(path: &Path, vocab: &Vocab) -> Result<EmbeddingTable> {
    let err = |reason: String| Error::Embedding {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dim: Option<usize> = None;
    let mut found: HashMap<usize, Array1<f64>> = HashMap::new();
    let mut seen: std::collections::HashSet<String> = Default::default();
    let mut duplicates = 0;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if lineno == 0 && rest.len() == 1 {
            if let (Ok(_), Ok(d)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }
        let values = rest
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| err(format!("line {}: {e}", lineno + 1)))?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(err(format!(
                    "line {}: {} values, expected {d}",
                    lineno + 1,
                    values.len()
                )))
            }
            _ => {}
        }
        if !seen.insert(token.to_string()) {
            duplicates += 1;
            continue;
        }
        if let Some(i) = vocab.get(token) {
            found.insert(i, Array1::from(values));
        }
    }
    let dim = dim
        .filter(|&d| d > 0)
        .ok_or_else(|| err("no vectors".into()))?;
    if duplicates > 0 {
        log::warn!(
            "{}: {duplicates} duplicate token(s), first occurrence kept",
            path.display()
        );
    }
    let mut vectors = Array2::zeros((vocab.len(), dim));
    let mut oov = 0;
    for (i, tok) in vocab.tokens().iter().enumerate() {
        match found.get(&i) {
            Some(v) => vectors.row_mut(i).assign(v),
            None => {
                vectors.row_mut(i).assign(&oov_vector(tok, dim));
                oov += 1;
            }
        }
    }
    Ok(EmbeddingTable {
        vocab: vocab.clone(),
        vectors,
        trainable: true,
        oov_initialised: oov,
        duplicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn vocab(words: &[&str]) -> Vocab {
        Vocab::from_tokens(words.iter().map(|w| w.to_string()))
    }

    #[test]
    fn random_tables_are_seeded_and_bounded() {
        let v = vocab(&["a", "b", "c"]);
        let t1 = random_table(&v, 8, 1).unwrap();
        assert_eq!(t1, random_table(&v, 8, 1).unwrap());
        assert_ne!(t1.vectors, random_table(&v, 8, 2).unwrap().vectors);
        assert!(t1.vectors.iter().all(|x| x.abs() <= 0.1));
        assert!(random_table(&Vocab::default(), 8, 1).is_err());
    }

    #[test]
    fn loads_with_header_duplicates_and_oov() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vec.txt");
        let mut f = File::create(&p).unwrap();
        writeln!(f, "3 2\na 1 2\nb 3 4\na 9 9").unwrap();
        drop(f);
        let t = load_table(&p, &vocab(&["a", "b"])).unwrap();
        assert_eq!(t.oov_initialised, 0);
        assert_eq!(t.duplicates, 1);
        assert_eq!(t.lookup("a").to_vec(), vec![1.0, 2.0]);
        let t = load_table(&p, &vocab(&["a", "zz"])).unwrap();
        assert_eq!(t.oov_initialised, 1);
        assert_eq!(t.lookup("zz"), oov_vector("zz", 2));
        // Lookup is total.
        assert_eq!(t.lookup("never-seen").len(), 2);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vec.txt");
        std::fs::write(&p, "a 1 2\nb 3\n").unwrap();
        assert!(matches!(
            load_table(&p, &vocab(&["a"])),
            Err(Error::Embedding { .. })
        ));
    }

    #[test]
    fn vocab_orders_by_frequency() {
        let d = Document::new(
            "x",
            vec![vec!["b".into(), "a".into(), "b".into()], vec!["c".into()]],
            vec![vec!["a".into()]],
        );
        let v = Vocab::build([&d], 2);
        assert_eq!(v.tokens(), ["b", "a"]);
    }
}
