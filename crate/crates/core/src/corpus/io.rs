use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::document::{Corpus, Document, ExtractionResult, Sentence, Split};
use crate::error::{Error, LineError, Result};

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    sentences: Option<Vec<Sentence>>,
    reference: Option<Vec<Sentence>>,
    labels: Option<Vec<u8>>,
    domain: Option<String>,
}

fn parse_record(line: &str, domain: &str) -> std::result::Result<Document, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = raw.id.ok_or("missing id")?;
    let sentences = raw.sentences.ok_or("missing sentences")?;
    let reference = raw.reference.ok_or("missing reference")?;
    let record_domain = raw.domain.unwrap_or_default();
    if !record_domain.is_empty() && !domain.is_empty() && record_domain != domain {
        return Err(format!(
            "domain {record_domain} differs from corpus domain {domain}"
        ));
    }
    let doc = Document {
        id,
        sentences,
        reference,
        oracle_labels: raw.labels,
        domain: record_domain,
    };
    doc.validate().map_err(|e| match e {
        Error::InvalidDocument { reason, .. } => reason,
        other => other.to_string(),
    })?;
    Ok(doc)
}

/// Read every record of one line-delimited file. Blank lines are skipped; any malformed
/// line fails the whole read with a per-line report.
pub fn read_documents(path: &Path, domain: &str) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line, domain) {
            Ok(d) => docs.push(d),
            Err(message) => errors.push(LineError {
                line: i + 1,
                message,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            errors,
        });
    }
    Ok(docs)
}

pub fn write_documents<'a>(
    path: &Path,
    docs: impl IntoIterator<Item = &'a Document>,
) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for d in docs {
        let line = serde_json::to_string(d).expect("documents always serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load a corpus from either a single record file or a directory of
/// `train.jsonl` / `valid.jsonl` / `test.jsonl`.
///
/// A single file lands in the split named by its stem (`train`, `valid`, `test`),
/// or in `test` otherwise.
pub fn load_corpus(path: &Path, domain: &str) -> Result<Corpus> {
    let corpus = if path.is_dir() {
        let mut parts = Vec::new();
        for split in Split::ALL {
            let p = path.join(format!("{}.jsonl", split.as_str()));
            if p.exists() {
                parts.push((split, read_documents(&p, domain)?));
            }
        }
        Corpus::from_splits(domain, parts)
    } else {
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            ));
        }
        let split = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(Split::from_name)
            .unwrap_or(Split::Test);
        Corpus::single_split(domain, read_documents(path, domain)?, split)
    };
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(path.to_path_buf()));
    }
    Ok(corpus)
}

/// Write `corpus` as a directory of per-split record files (the inverse of [`load_corpus`]).
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for split in Split::ALL {
        let docs = corpus.split_docs(split);
        let p = dir.join(format!("{}.jsonl", split.as_str()));
        if docs.is_empty() {
            if p.exists() {
                fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
            continue;
        }
        write_documents(&p, docs)?;
    }
    Ok(())
}

pub fn read_extractions(path: &Path) -> Result<Vec<ExtractionResult>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ExtractionResult>(&line) {
            Ok(r) => out.push(r),
            Err(e) => errors.push(LineError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            errors,
        });
    }
    Ok(out)
}

pub fn write_extractions(path: &Path, results: &[ExtractionResult]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in results {
        let line = serde_json::to_string(r).expect("extractions always serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Content hash of a corpus (hex SHA-256 over its canonical serialization, split by split).
pub fn corpus_hash(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    h.update(corpus.domain.as_bytes());
    for split in Split::ALL {
        h.update(split.as_str().as_bytes());
        for d in corpus.split_docs(split) {
            h.update(serde_json::to_vec(d).expect("serializable"));
            h.update(b"\n");
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
