use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::corpus::SynthSpec;
use crate::decoders::DecoderKind;
use crate::encoders::EncoderKind;
use crate::error::{Error, Result};
use crate::training::{EmbeddingKind, ModelConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Train the grid and evaluate it on every domain.
    Single,
    /// Lead and Oracle baselines plus the grid, per domain.
    CrossDomain,
    /// The α/β content–position sweep over a self-attention encoder.
    Disentangle,
    /// Train on normal vs sentence-shuffled documents; report the drop.
    Shuffle,
    /// Embedding sources, and optional pretraining on another corpus.
    Knowledge,
    /// Supervised model, then the same model after policy-gradient training.
    RlStack,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Single => "single",
            ExperimentKind::CrossDomain => "cross-domain",
            ExperimentKind::Disentangle => "disentangle",
            ExperimentKind::Shuffle => "shuffle",
            ExperimentKind::Knowledge => "knowledge",
            ExperimentKind::RlStack => "rl-stack",
        }
    }
}

/// One mixing coefficient: a number or `sqrt_d` (square root of the encoder width).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coef {
    Value(f64),
    SqrtD,
}

impl Coef {
    pub fn resolve(self, width: usize) -> f64 {
        match self {
            Coef::Value(v) => v,
            Coef::SqrtD => (width as f64).sqrt(),
        }
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coef::Value(v) => write!(f, "{v}"),
            Coef::SqrtD => f.write_str("sqrt_d"),
        }
    }
}

impl FromStr for Coef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrt_d" | "sqrt(d)" | "√d" => Ok(Coef::SqrtD),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .map(Coef::Value)
                .ok_or_else(|| Error::Config(format!("bad mixing coefficient {t:?}"))),
        }
    }
}

/// An (α, β) pair written as `"alpha,beta"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixPair {
    pub alpha: Coef,
    pub beta: Coef,
}

impl MixPair {
    pub fn is_zero(&self) -> bool {
        matches!((self.alpha, self.beta), (Coef::Value(a), Coef::Value(b)) if a == 0.0 && b == 0.0)
    }

    pub fn defaults() -> Vec<MixPair> {
        super::registry::MIX_REFERENCE
            .iter()
            .map(|(p, _)| p.parse().expect("registry pairs parse"))
            .collect()
    }
}

impl fmt::Display for MixPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.alpha, self.beta)
    }
}

impl FromStr for MixPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("mixing pair {s:?} is not \"alpha,beta\"")))?;
        Ok(MixPair {
            alpha: a.parse()?,
            beta: b.parse()?,
        })
    }
}

impl<'de> Deserialize<'de> for MixPair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    pub output: PathBuf,
    /// Grid axes; an empty axis keeps the `[model]` value.
    #[serde(default)]
    pub encoders: Vec<EncoderKind>,
    #[serde(default)]
    pub decoders: Vec<DecoderKind>,
    #[serde(default)]
    pub embeddings: Vec<EmbeddingKind>,
    /// Disentangle only; defaults to the five reference pairs.
    #[serde(default)]
    pub pairs: Vec<MixPair>,
    /// Shuffle only: each seed trains a normal and a shuffled model.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_true")]
    pub baselines: bool,
    /// `false` skips the grid (cross-domain baselines only).
    #[serde(default = "default_true")]
    pub models: bool,
    #[serde(default = "default_rl_epochs")]
    pub rl_epochs: usize,
    #[serde(default)]
    pub rl_learning_rate: Option<f64>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_true() -> bool {
    true
}

fn default_rl_epochs() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticData {
    #[serde(default = "default_synth_docs")]
    pub documents: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub salient_window: Option<usize>,
}

fn default_synth_docs() -> usize {
    64
}

impl SyntheticData {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            documents: self.documents,
            seed: self.seed,
            salient_window: self.salient_window,
            ..SynthSpec::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Training corpus: a record file or a split directory.
    #[serde(default)]
    pub train: Option<PathBuf>,
    /// Generated stand-in for `train`.
    #[serde(default)]
    pub synthetic: Option<SyntheticData>,
    #[serde(default)]
    pub train_domain: Option<String>,
    /// Evaluation corpora by domain name; empty = the training corpus' test split.
    #[serde(default)]
    pub domains: BTreeMap<String, PathBuf>,
    /// Knowledge only: corpus to pretrain on before fine-tuning.
    #[serde(default)]
    pub pretrain: Option<PathBuf>,
    #[serde(default)]
    pub pretrain_domain: Option<String>,
    /// Pretrained word-vector text table.
    #[serde(default)]
    pub table: Option<PathBuf>,
    /// Contextual stores by domain name (the training corpus included).
    #[serde(default)]
    pub stores: BTreeMap<String, PathBuf>,
}

impl DataSection {
    pub fn train_domain(&self) -> String {
        self.train_domain.clone().unwrap_or_else(|| "train".into())
    }

    pub fn pretrain_domain(&self) -> String {
        self.pretrain_domain
            .clone()
            .unwrap_or_else(|| "pretrain".into())
    }
}

/// A parsed experiment file: `[experiment]`, `[model]`, `[train]` and `[data]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub data: DataSection,
}

/// A grid cell's model, with a filesystem-safe id and a row label.
#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    pub slug: String,
    pub label: String,
    pub config: ModelConfig,
}

pub(crate) fn slugify(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn embedding_label(kind: EmbeddingKind) -> &'static str {
    match kind {
        EmbeddingKind::Random => "random",
        EmbeddingKind::Pretrained => "pretrained",
        EmbeddingKind::Contextual => "contextual",
    }
}

impl ExperimentSpec {
    /// Parse `path`; relative paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.rebase(base);
        spec.validate()?;
        Ok(spec)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.experiment.output);
        for p in [
            &mut self.data.train,
            &mut self.data.pretrain,
            &mut self.data.table,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let Some(p) = self.model.embedding_path.as_mut() {
            fix(p);
        }
        self.data.domains.values_mut().for_each(fix);
        self.data.stores.values_mut().for_each(fix);
    }

    pub fn pairs(&self) -> Vec<MixPair> {
        if self.experiment.pairs.is_empty() {
            MixPair::defaults()
        } else {
            self.experiment.pairs.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        let d = &self.data;
        self.train.validate()?;
        if d.train.is_some() && d.synthetic.is_some() {
            return Err(Error::Config(
                "[data] takes `train` or `synthetic`, not both".into(),
            ));
        }
        let baselines_only = e.kind == ExperimentKind::CrossDomain && !e.models;
        if d.train.is_none() && d.synthetic.is_none() && !(baselines_only && !d.domains.is_empty())
        {
            return Err(Error::Config(
                "[data] needs a `train` corpus or `synthetic` data".into(),
            ));
        }
        let mut paths: Vec<&PathBuf> = d.train.iter().chain(&d.pretrain).chain(&d.table).collect();
        paths.extend(d.domains.values());
        paths.extend(d.stores.values());
        if let Some(missing) = paths.into_iter().find(|p| !p.exists()) {
            return Err(Error::Config(format!(
                "{} does not exist",
                missing.display()
            )));
        }
        match e.kind {
            ExperimentKind::Disentangle => {
                if !e.encoders.is_empty() && e.encoders != [EncoderKind::SelfAttention] {
                    return Err(Error::Config(
                        "the disentangle sweep uses the self-attention encoder only".into(),
                    ));
                }
                if let Some(p) = self.pairs().iter().find(|p| p.is_zero()) {
                    return Err(Error::Config(format!(
                        "mixing pair ({p}) has neither content nor position"
                    )));
                }
            }
            ExperimentKind::RlStack => {
                if self
                    .grid()
                    .iter()
                    .any(|m| m.config.decoder != DecoderKind::Pointer)
                {
                    return Err(Error::Config(
                        "rl-stack needs every grid model to use the pointer decoder".into(),
                    ));
                }
            }
            ExperimentKind::Shuffle if e.seeds.is_empty() => {
                return Err(Error::Config("shuffle needs at least one seed".into()));
            }
            ExperimentKind::Knowledge => {
                if let Some(pre) = &d.pretrain {
                    if Some(pre) == d.train.as_ref() {
                        return Err(Error::Config(
                            "pretraining and target corpus are the same file".into(),
                        ));
                    }
                }
            }
            _ => {}
        }
        for m in self.grid() {
            m.config.validate()?;
        }
        Ok(())
    }

    /// Cross product of the grid axes over the `[model]` base. Lead appears once.
    pub fn grid(&self) -> Vec<GridModel> {
        let e = &self.experiment;
        let base = &self.model;
        let encoders = if e.kind == ExperimentKind::Disentangle {
            vec![EncoderKind::SelfAttention]
        } else if e.encoders.is_empty() {
            vec![base.encoder]
        } else {
            e.encoders.clone()
        };
        let decoders = if e.decoders.is_empty() {
            vec![base.decoder]
        } else {
            e.decoders.clone()
        };
        let embeddings = if e.embeddings.is_empty() {
            vec![base.embedding]
        } else {
            e.embeddings.clone()
        };
        let mut out = Vec::new();
        let mut lead_done = false;
        for &dec in &decoders {
            if dec == DecoderKind::Lead {
                if !lead_done {
                    out.push(GridModel {
                        slug: "lead".into(),
                        label: "Lead".into(),
                        config: ModelConfig {
                            decoder: DecoderKind::Lead,
                            ..base.clone()
                        },
                    });
                    lead_done = true;
                }
                continue;
            }
            for &enc in &encoders {
                for &emb in &embeddings {
                    let mut config = ModelConfig {
                        encoder: enc,
                        decoder: dec,
                        embedding: emb,
                        ..base.clone()
                    };
                    if config.embedding_path.is_none() {
                        config.embedding_path = match emb {
                            EmbeddingKind::Random => None,
                            EmbeddingKind::Pretrained => self.data.table.clone(),
                            EmbeddingKind::Contextual => {
                                self.data.stores.get(&self.data.train_domain()).cloned()
                            }
                        };
                    }
                    let mut label = config.label();
                    if embeddings.len() > 1 || emb != EmbeddingKind::Random {
                        label = format!("{label} [{}]", embedding_label(emb));
                    }
                    if e.kind == ExperimentKind::Disentangle {
                        for pair in self.pairs() {
                            let cfg = ModelConfig {
                                alpha: pair.alpha.resolve(config.width),
                                beta: pair.beta.resolve(config.width),
                                ..config.clone()
                            };
                            let l = format!("({pair}) {label}");
                            out.push(GridModel {
                                slug: slugify(&l),
                                label: l,
                                config: cfg,
                            });
                        }
                    } else {
                        out.push(GridModel {
                            slug: slugify(&label),
                            label,
                            config,
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join("train.jsonl"), "").unwrap();
        d
    }

    #[test]
    fn pairs_parse_and_print() {
        let p: MixPair = "sqrt_d,1".parse().unwrap();
        assert_eq!(p.alpha.resolve(16), 4.0);
        assert_eq!(p.to_string(), "sqrt_d,1");
        assert!("(0,0)".parse::<MixPair>().unwrap().is_zero());
        assert!("1".parse::<MixPair>().is_err());
        assert!("-1,1".parse::<MixPair>().is_err());
        assert_eq!(MixPair::defaults().len(), 5);
    }

    #[test]
    fn grid_is_a_cross_product() {
        let d = dir();
        let spec = ExperimentSpec::parse(
            r#"
            [experiment]
            kind = "cross-domain"
            output = "out"
            encoders = ["recurrent", "self-attention"]
            decoders = ["seqlab", "pointer", "lead"]
            [data]
            train = "train.jsonl"
            "#,
            d.path(),
        )
        .unwrap();
        let grid = spec.grid();
        assert_eq!(grid.len(), 5);
        assert_eq!(grid[0].label, "LSTM+SeqLab");
        assert_eq!(grid[0].slug, "lstm-seqlab");
        assert_eq!(grid[4].label, "Lead");
        assert_eq!(spec.experiment.output, d.path().join("out"));
    }

    #[test]
    fn disentangle_rejects_zero_pair_and_sets_coefficients() {
        let d = dir();
        let text = |pairs: &str| {
            format!(
                "[experiment]\nkind = \"disentangle\"\noutput = \"o\"\npairs = {pairs}\n[model]\nwidth = 16\nheads = 4\n[data]\ntrain = \"train.jsonl\"\n"
            )
        };
        assert!(ExperimentSpec::parse(&text(r#"["1,1", "0,0"]"#), d.path()).is_err());
        let spec = ExperimentSpec::parse(&text(r#"["sqrt_d,1", "0,1"]"#), d.path()).unwrap();
        let grid = spec.grid();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[0].config.alpha, 4.0);
        assert_eq!(grid[0].config.encoder, EncoderKind::SelfAttention);
        assert_eq!(grid[1].config.alpha, 0.0);
    }

    #[test]
    fn data_section_is_checked() {
        let d = dir();
        let missing =
            "[experiment]\nkind = \"single\"\noutput = \"o\"\n[data]\ntrain = \"nope.jsonl\"\n";
        assert!(matches!(
            ExperimentSpec::parse(missing, d.path()),
            Err(Error::Config(_))
        ));
        let both = "[experiment]\nkind = \"single\"\noutput = \"o\"\n[data]\ntrain = \"train.jsonl\"\nsynthetic = {}\n";
        assert!(ExperimentSpec::parse(both, d.path()).is_err());
        let typo = "[experiment]\nkind = \"single\"\noutput = \"o\"\n[model]\nwidht = 3\n[data]\ntrain = \"train.jsonl\"\n";
        assert!(ExperimentSpec::parse(typo, d.path()).is_err());
        let rl = "[experiment]\nkind = \"rl-stack\"\noutput = \"o\"\ndecoders = [\"seqlab\"]\n[data]\ntrain = \"train.jsonl\"\n";
        assert!(ExperimentSpec::parse(rl, d.path()).is_err());
    }
}
