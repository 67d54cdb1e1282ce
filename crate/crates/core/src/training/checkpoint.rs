//! Checkpoint archive: magic, JSON manifest, then named f32 tensors.
//!
//! ```text
//! "SUMCKPT1" | u32 manifest_len | manifest JSON
//! per tensor: u32 name_len | name | u32 rows | u32 cols | rows·cols f32 LE
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Mat;
use crate::embeddings::{EmbeddingTable, Vocab};
use crate::error::{Error, Result};

use super::model::{EmbeddingKind, Model, ModelConfig};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SUMCKPT1";

/// Where a checkpoint's parameters came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus: String,
    pub corpus_hash: String,
    pub schema: String,
    pub epoch: usize,
    pub valid_rouge1: Option<f64>,
    pub seed: u64,
    /// Free-form notes, e.g. the policy-gradient estimator used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Earlier stages (pretraining, supervised warm start) this checkpoint continues.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    config: ModelConfig,
    vocab: Vec<String>,
    provenance: Provenance,
    tensors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub vocab: Vec<String>,
    pub tensors: Vec<(String, Mat)>,
    pub provenance: Provenance,
}

impl Checkpoint {
    /// Snapshot a model. Parameters are first rounded to f32 in place, so the in-memory
    /// model and any reload of the archive evaluate identically.
    pub fn capture(model: &mut Model, provenance: Provenance) -> Self {
        model.params.round_to_f32();
        Self {
            config: model.config.clone(),
            vocab: model.vocab.tokens().to_vec(),
            tensors: model
                .params
                .iter()
                .map(|(_, name, m)| (name.to_string(), m.clone()))
                .collect(),
            provenance,
        }
    }

    /// Rebuild the model. The tensors fully determine the parameters; embeddings are not re-read.
    pub fn to_model(&self) -> Result<Model> {
        let vocab = Vocab::from_tokens(self.vocab.iter().cloned());
        let mut config = self.config.clone();
        let table;
        let table_ref = if config.embedding == EmbeddingKind::Pretrained {
            let (_, words) = self
                .tensors
                .iter()
                .find(|(n, _)| n == "embed.words")
                .ok_or_else(|| Error::Checkpoint("missing embed.words tensor".into()))?;
            table = EmbeddingTable {
                vocab: vocab.clone(),
                vectors: words.clone(),
                trainable: config.train_embeddings,
                oov_initialised: 0,
                duplicates: 0,
            };
            Some(&table)
        } else {
            None
        };
        // Ensure a random path does not try to re-derive a table of the wrong width.
        if config.embedding == EmbeddingKind::Random {
            config.embedding_path = None;
        }
        let mut model = Model::new(config, vocab, table_ref)?;
        model.params.load_from(&self.tensors)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let manifest = Manifest {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            provenance: self.provenance.clone(),
            tensors: self.tensors.iter().map(|(n, _)| n.clone()).collect(),
        };
        let json = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| Error::Checkpoint(format!("manifest: {e}")))?;
        let mut buf = Vec::with_capacity(json.len() + 64);
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        push_u32(&mut buf, json.len())?;
        buf.extend_from_slice(&json);
        for (name, m) in &self.tensors {
            push_u32(&mut buf, name.len())?;
            buf.extend_from_slice(name.as_bytes());
            push_u32(&mut buf, m.nrows())?;
            push_u32(&mut buf, m.ncols())?;
            for &x in m.iter() {
                buf.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        w.write_all(&buf)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        let mut r = Cursor {
            bytes: &bytes,
            pos: 0,
        };
        if r.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint(format!(
                "{} is not a checkpoint",
                path.display()
            )));
        }
        let len = r.u32()? as usize;
        let manifest: Manifest = serde_json::from_slice(r.take(len)?)
            .map_err(|e| Error::Checkpoint(format!("manifest: {e}")))?;
        let mut tensors = Vec::with_capacity(manifest.tensors.len());
        for expected in &manifest.tensors {
            let n = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(n)?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
                .to_string();
            if &name != expected {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} out of manifest order (expected {expected})"
                )));
            }
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let raw = r.take(rows * cols * 4)?;
            let data: Vec<f64> = raw
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            let m = Mat::from_shape_vec((rows, cols), data).expect("length checked");
            tensors.push((name, m));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
        }
        Ok(Self {
            config: manifest.config,
            vocab: manifest.vocab,
            tensors,
            provenance: manifest.provenance,
        })
    }
}

fn push_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated archive".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
