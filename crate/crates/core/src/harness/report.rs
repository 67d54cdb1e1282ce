use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One report row, persisted as `cell.json` in its cell directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// Domain, or another grouping key (e.g. the shuffle seed).
    pub group: String,
    pub label: String,
    /// One entry per report column; `None` for failed or inapplicable cells.
    pub values: Vec<Option<f64>>,
    /// `None` on success.
    pub error: Option<String>,
    /// Checkpoint(s) behind the values, relative to the run directory.
    pub checkpoint: String,
    pub corpus_hash: String,
}

impl CellRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn failed(group: &str, label: &str, columns: usize, error: String) -> Self {
        Self {
            group: group.into(),
            label: label.into(),
            values: vec![None; columns],
            error: Some(error),
            checkpoint: "-".into(),
            corpus_hash: "-".into(),
        }
    }
}

/// The run-level index written before any cell: row order and column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPlan {
    pub title: String,
    pub kind: String,
    pub columns: Vec<String>,
    /// Cell directories relative to the run directory, in row order.
    pub cells: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub plan: ReportPlan,
    pub rows: Vec<CellRecord>,
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

fn short_hash(h: &str) -> &str {
    &h[..h.len().min(12)]
}

impl Report {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    /// Aligned plain-text table. Failed rows read `FAILED` and their errors are listed below.
    pub fn to_text(&self) -> String {
        let mut header = vec!["group".to_string(), "model".to_string()];
        header.extend(self.plan.columns.iter().cloned());
        header.extend(["status".into(), "checkpoint".into(), "corpus".into()]);
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.group.clone(), r.label.clone()];
                row.extend(r.values.iter().map(|v| fmt_value(*v)));
                row.push(if r.ok() { "ok".into() } else { "FAILED".into() });
                row.push(r.checkpoint.clone());
                row.push(short_hash(&r.corpus_hash).to_string());
                row
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                body.iter()
                    .map(|r| r[c].chars().count())
                    .chain([header[c].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric = |c: usize| c >= 2 && c < 2 + self.plan.columns.len();
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    let pad = widths[c] - s.chars().count();
                    if numeric(c) {
                        format!("{}{s}", " ".repeat(pad))
                    } else {
                        format!("{s}{}", " ".repeat(pad))
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = format!("{} ({})\n\n", self.plan.title, self.plan.kind);
        out.push_str(&line(&header));
        out.push_str(&line(
            &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>(),
        ));
        for row in &body {
            out.push_str(&line(row));
        }
        let failed: Vec<&CellRecord> = self.rows.iter().filter(|r| !r.ok()).collect();
        if !failed.is_empty() {
            out.push_str(&format!("\n{} failed cell(s):\n", failed.len()));
            for r in failed {
                out.push_str(&format!(
                    "  {} / {}: {}\n",
                    r.group,
                    r.label,
                    r.error.as_deref().unwrap_or("")
                ));
            }
        }
        if !self.plan.notes.is_empty() {
            out.push('\n');
            for n in &self.plan.notes {
                out.push_str(&format!("note: {n}\n"));
            }
        }
        out
    }

    /// Tab-separated rows with full-precision values.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("group\tmodel");
        for c in &self.plan.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push_str("\tstatus\tcheckpoint\tcorpus_hash\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{}", r.group, r.label));
            for v in &r.values {
                out.push('\t');
                out.push_str(&v.map_or_else(|| "NA".into(), |v| v.to_string()));
            }
            let status = match &r.error {
                None => "ok".to_string(),
                Some(e) => format!("failed: {}", e.replace(['\t', '\n'], " ")),
            };
            out.push_str(&format!(
                "\t{status}\t{}\t{}\n",
                r.checkpoint, r.corpus_hash
            ));
        }
        out
    }

    /// `report.txt` and `report.tsv` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, body) in [
            ("report.txt", self.to_text()),
            ("report.tsv", self.to_tsv()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    /// Rebuild a report from `plan.json` and each cell's `cell.json`. Missing cells
    /// (an interrupted run) become failed rows.
    pub fn assemble(dir: &Path) -> Result<Self> {
        let plan_path = dir.join("plan.json");
        let plan: ReportPlan = read_json(&plan_path)?;
        let rows = plan
            .cells
            .iter()
            .map(|c| {
                let p = dir.join(c).join("cell.json");
                if p.exists() {
                    read_json(&p)
                } else {
                    Ok(CellRecord::failed(
                        c,
                        c,
                        plan.columns.len(),
                        "cell never completed".into(),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { plan, rows })
    }
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let body = serde_json::to_string_pretty(value).expect("serialisable") + "\n";
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}
