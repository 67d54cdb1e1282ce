//! Precomputed contextual token vectors and their trainable projection.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Mat, ParamStore, Var};
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::nn::Linear;

pub const STORE_MAGIC: &[u8; 7] = b"SUMCTX1";
/// Document-level stores keep at most this many tokens per article.
pub const TRUNCATION_LIMIT: usize = 512;
/// Width of projected token vectors.
pub const PROJECTED_WIDTH: usize = 128;
pub const PROJECTION_HIDDEN: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoreMode {
    /// Whole article encoded at once, truncated to [`TRUNCATION_LIMIT`] tokens.
    Document,
    /// Each sentence encoded on its own.
    Sentence,
}

impl StoreMode {
    fn byte(self) -> u8 {
        match self {
            StoreMode::Document => 0,
            StoreMode::Sentence => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(StoreMode::Document),
            1 => Ok(StoreMode::Sentence),
            other => Err(Error::Store(format!("unknown mode byte {other}"))),
        }
    }
}

/// Word-aligned contextual vectors for every document of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualStore {
    pub mode: StoreMode,
    pub dim: usize,
    ids: Vec<String>,
    vectors: Vec<Array2<f32>>,
    index: HashMap<String, usize>,
}

/// Rows of a store record that belong to one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub len: usize,
    /// True when the sentence lies wholly beyond the truncation point.
    pub truncated: bool,
}

/// Number of store rows a document should have under `mode`.
pub fn expected_rows(doc: &Document, mode: StoreMode) -> usize {
    match mode {
        StoreMode::Document => doc
            .sentences
            .iter()
            .map(Vec::len)
            .sum::<usize>()
            .min(TRUNCATION_LIMIT),
        StoreMode::Sentence => doc
            .sentences
            .iter()
            .map(|s| s.len().min(TRUNCATION_LIMIT))
            .sum(),
    }
}

pub fn sentence_span(doc: &Document, mode: StoreMode, sentence: usize) -> SentenceSpan {
    let width = |s: &Vec<String>| match mode {
        StoreMode::Document => s.len(),
        StoreMode::Sentence => s.len().min(TRUNCATION_LIMIT),
    };
    let start: usize = doc.sentences[..sentence].iter().map(width).sum();
    let len = width(&doc.sentences[sentence]);
    let available = expected_rows(doc, mode);
    if start >= available {
        return SentenceSpan {
            start: available,
            len: 0,
            truncated: true,
        };
    }
    SentenceSpan {
        start,
        len: len.min(available - start),
        truncated: false,
    }
}

impl ContextualStore {
    pub fn new(mode: StoreMode, dim: usize) -> Self {
        Self {
            mode,
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, vectors: Array2<f32>) -> Result<()> {
        let id = id.into();
        if vectors.ncols() != self.dim {
            return Err(Error::Store(format!(
                "document {id}: width {} differs from store width {}",
                vectors.ncols(),
                self.dim
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::Store(format!("document {id} stored twice")));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vectors.push(vectors);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&Array2<f32>> {
        self.index.get(id).map(|&i| &self.vectors[i])
    }

    pub fn total_rows(&self) -> usize {
        self.vectors.iter().map(|v| v.nrows()).sum()
    }

    /// Token vectors of one sentence as `f64`, or `None` if it is past the truncation point.
    pub fn sentence_tokens(&self, doc: &Document, sentence: usize) -> Result<Option<Mat>> {
        let rows = self
            .get(&doc.id)
            .ok_or_else(|| Error::UnknownDocument(doc.id.clone()))?;
        let span = sentence_span(doc, self.mode, sentence);
        if span.truncated || span.len == 0 {
            return Ok(None);
        }
        if span.start + span.len > rows.nrows() {
            return Err(Error::Store(format!(
                "document {} has {} rows, sentence {sentence} needs {}",
                doc.id,
                rows.nrows(),
                span.start + span.len
            )));
        }
        Ok(Some(
            rows.slice(ndarray::s![span.start..span.start + span.len, ..])
                .mapv(f64::from),
        ))
    }

    /// Mean of a sentence's token vectors. Sentences beyond truncation give the zero vector
    /// and `true`.
    pub fn sentence_rep(&self, doc: &Document, sentence: usize) -> Result<(Array1<f64>, bool)> {
        match self.sentence_tokens(doc, sentence)? {
            Some(t) => Ok((t.mean_axis(ndarray::Axis(0)).expect("nonempty"), false)),
            None => Ok((Array1::zeros(self.dim), true)),
        }
    }

    /// Check every corpus document is present with the row count its mode implies.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        for d in &corpus.documents {
            let rows = self
                .get(&d.id)
                .ok_or_else(|| Error::UnknownDocument(d.id.clone()))?;
            let want = expected_rows(d, self.mode);
            if rows.nrows() != want {
                return Err(Error::Store(format!(
                    "document {}: {} rows, expected {want}",
                    d.id,
                    rows.nrows()
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(STORE_MAGIC).map_err(io)?;
        w.write_all(&[self.mode.byte()]).map_err(io)?;
        w.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        for (id, rows) in self.ids.iter().zip(&self.vectors) {
            w.write_all(&(id.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(id.as_bytes()).map_err(io)?;
            w.write_all(&(rows.nrows() as u32).to_le_bytes())
                .map_err(io)?;
            for v in rows.iter() {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 7];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != STORE_MAGIC {
            return Err(Error::Store("bad magic bytes".into()));
        }
        let mut mode = [0u8; 1];
        read_exact(&mut r, &mut mode, "mode")?;
        let mode = StoreMode::from_byte(mode[0])?;
        let dim = read_u32(&mut r, "dim")? as usize;
        if dim == 0 {
            return Err(Error::Store("zero width".into()));
        }
        let mut store = ContextualStore::new(mode, dim);
        loop {
            let mut len = [0u8; 4];
            match r.read(&mut len[..1]) {
                Ok(0) => break,
                Ok(_) => read_exact(&mut r, &mut len[1..], "id length")?,
                Err(e) => return Err(Error::io(path, e)),
            }
            let mut id = vec![0u8; u32::from_le_bytes(len) as usize];
            read_exact(&mut r, &mut id, "id")?;
            let id = String::from_utf8(id).map_err(|_| Error::Store("id is not UTF-8".into()))?;
            let count = read_u32(&mut r, "token count")? as usize;
            let mut buf = vec![0u8; count * dim * 4];
            read_exact(&mut r, &mut buf, "vectors")?;
            let values: Vec<f32> = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let rows = Array2::from_shape_vec((count, dim), values).expect("sized above");
            store.insert(id, rows)?;
        }
        Ok(store)
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Store(format!("truncated file while reading {what}: {e}")))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

/// Trainable map from concatenated last-four-layer features to [`PROJECTED_WIDTH`] dims:
/// affine, tanh, affine.
#[derive(Debug, Clone)]
pub struct ContextualProjection {
    pub layer_width: usize,
    pub hidden: Linear,
    pub out: Linear,
}

impl ContextualProjection {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        layer_width: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            layer_width,
            hidden: Linear::new(
                params,
                &format!("{name}.hidden"),
                4 * layer_width,
                hidden,
                true,
                rng,
            ),
            out: Linear::new(
                params,
                &format!("{name}.out"),
                hidden,
                PROJECTED_WIDTH,
                true,
                rng,
            ),
        }
    }

    pub fn raw_width(&self) -> usize {
        4 * self.layer_width
    }

    pub fn forward(&self, g: &mut Graph, raw: Var) -> Result<Var> {
        let (_, width) = g.shape(raw);
        if width != self.raw_width() {
            return Err(Error::ShapeMismatch {
                name: "contextual features".into(),
                expected: vec![self.raw_width()],
                found: vec![width],
            });
        }
        let h = self.hidden.forward(g, raw);
        let h = g.tanh(h);
        Ok(self.out.forward(g, h))
    }
}

/// Project raw token features (`tokens × 4·layer_width`) to `tokens × 128`.
pub fn project_contextual(
    raw: &Mat,
    projection: &ContextualProjection,
    params: &ParamStore,
) -> Result<Mat> {
    let mut g = Graph::new(params);
    let x = g.input(raw.clone());
    let y = projection.forward(&mut g, x)?;
    Ok(g.value(y).clone())
}
