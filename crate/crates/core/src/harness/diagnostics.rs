use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{Corpus, ExtractionResult};
use crate::error::{Error, Result};
use crate::metrics::{diagnose, positional_bias, DiagnosticsReport, RougeOptions};

/// Renders every `plot_*.tsv` found under the directory given on the command line.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Render sumprobe plot-data files: python3 plot.py RUN_DIR"""
import csv, pathlib, sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
for tsv in sorted(root.rglob("plot_*.tsv")):
    with tsv.open() as f:
        header, *rows = list(csv.reader(f, delimiter="\t"))
    if not rows:
        continue
    fig, ax = plt.subplots(figsize=(5, 3))
    if tsv.stem == "plot_delta_r":
        xs = [float(r[1]) for r in rows]
        ys = [float(r[2]) for r in rows]
        ax.scatter(xs, ys)
        for r, x, y in zip(rows, xs, ys):
            ax.annotate(r[0], (x, y))
        ax.set_xlabel(header[1])
        ax.set_ylabel(header[2])
    else:
        xs = [r[0] for r in rows]
        for col in range(1, len(header)):
            ax.plot(xs, [float(r[col]) for r in rows], marker="o", label=header[col])
        ax.set_xlabel(header[0])
        ax.legend()
    fig.tight_layout()
    fig.savefig(tsv.with_suffix(".png"), dpi=120)
    plt.close(fig)
"#;

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Diagnostics for one extraction set, plus plot-data files in `out`:
/// `diagnostics.txt`, `diagnostics.tsv`, `plot_rep.tsv`, `plot_length.tsv` and
/// `plot_position.tsv` (bucketed first-label positions, when the corpus is labelled).
pub fn run_diagnostics(
    extractions: &[ExtractionResult],
    corpus: &Corpus,
    rep_orders: &[usize],
    buckets: usize,
    opts: &RougeOptions,
    out: &Path,
) -> Result<DiagnosticsReport> {
    let report = diagnose(extractions, corpus, rep_orders, buckets, opts)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join("diagnostics.txt"), &report.to_table())?;
    write(&out.join("diagnostics.tsv"), &report.to_tsv())?;

    let mut rep = String::from("n\trep\n");
    for (n, v) in &report.rep {
        writeln!(rep, "{n}\t{v}").unwrap();
    }
    write(&out.join("plot_rep.tsv"), &rep)?;

    let mut len = String::from("step\tmean_length\n");
    for (k, v) in &report.length_profile {
        writeln!(len, "{k}\t{v}").unwrap();
    }
    write(&out.join("plot_length.tsv"), &len)?;

    if report.pos_bias.is_some() {
        let pb = positional_bias(&corpus.documents, buckets)?;
        let mut pos = String::from("bucket\tshare\n");
        for (i, p) in pb.distribution.iter().enumerate() {
            writeln!(pos, "{i}\t{p}").unwrap();
        }
        write(&out.join("plot_position.tsv"), &pos)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{lead_k, Document, Split};

    #[test]
    fn self_extraction_scores_one_and_writes_plot_data() {
        let w = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        let docs = vec![
            Document::new(
                "a",
                vec![w("the cat sat"), w("on a mat")],
                vec![w("the cat sat"), w("on a mat")],
            )
            .with_labels(vec![1, 1]),
            Document::new(
                "b",
                vec![w("dogs bark"), w("loudly at night")],
                vec![w("dogs bark"), w("loudly at night")],
            )
            .with_labels(vec![1, 0]),
        ];
        let corpus = Corpus::single_split("toy", docs, Split::Test);
        let ex: Vec<_> = corpus.documents.iter().map(|d| lead_k(d, 2)).collect();
        let dir = tempfile::tempdir().unwrap();
        let r = run_diagnostics(
            &ex,
            &corpus,
            &[1, 2],
            30,
            &RougeOptions::default(),
            dir.path(),
        )
        .unwrap();
        assert_eq!(r.rouge.rouge1.f1, 1.0);
        assert_eq!(r.rouge.rouge_l.f1, 1.0);
        assert_eq!(r.pos_bias, Some(0.0));
        assert_eq!(r.length_profile[&1], 2.5);
        for f in [
            "diagnostics.tsv",
            "plot_rep.tsv",
            "plot_length.tsv",
            "plot_position.tsv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let pos = std::fs::read_to_string(dir.path().join("plot_position.tsv")).unwrap();
        assert_eq!(pos.lines().count(), 31);
    }
}
