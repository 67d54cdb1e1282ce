use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::{
    corpus_hash, greedy_oracle_labels, load_corpus, oracle_extraction, shuffle_split,
    synthetic_corpus, Corpus, Document, ExtractionResult, Split, DEFAULT_MAX_SELECT,
};
use crate::decoders::DecoderKind;
use crate::embeddings::{load_table, ContextualStore, Vocab};
use crate::encoders::EncoderKind;
use crate::error::{Error, Result};
use crate::metrics::{positional_bias, RougeOptions, RougeScore};
use crate::training::{
    evaluate, fine_tune, train_reinforce, train_supervised, Checkpoint, EmbeddingKind, EpochRecord,
    Model, ModelConfig, Schema, StopReason, TrainConfig, TrainInputs, TrainOutcome,
};

use super::diagnostics::{run_diagnostics, PLOT_SCRIPT};
use super::registry::{lookup_domain, MIX_REFERENCE, POSITION_ONLY_TEXT_R1};
use super::report::{read_json, write_json, CellRecord, Report, ReportPlan};
use super::spec::{slugify, ExperimentKind, ExperimentSpec, GridModel};

const BUCKETS: usize = 30;
const REP_ORDERS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub report: Report,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.report.failures()
    }
}

#[derive(Clone)]
struct Named {
    name: String,
    corpus: Corpus,
    hash: String,
}

#[derive(Serialize)]
struct TrainLog<'a> {
    stop: StopReason,
    best_epoch: usize,
    history: &'a [EpochRecord],
}

type Trained = std::result::Result<(Model, String), String>;

struct Runner<'s> {
    spec: &'s ExperimentSpec,
    dir: PathBuf,
    resume: bool,
    opts: RougeOptions,
    train: Named,
    pretrain: Option<Named>,
    targets: Vec<Named>,
    stores: BTreeMap<String, ContextualStore>,
    models: BTreeMap<String, Trained>,
    plan: ReportPlan,
}

fn ensure_labels(corpus: &mut Corpus) -> Result<()> {
    for d in corpus
        .documents
        .iter_mut()
        .filter(|d| d.oracle_labels.is_none())
    {
        d.oracle_labels = Some(greedy_oracle_labels(d, DEFAULT_MAX_SELECT)?);
    }
    Ok(())
}

fn named(name: String, mut corpus: Corpus) -> Result<Named> {
    ensure_labels(&mut corpus)?;
    corpus.domain = name.clone();
    let hash = corpus_hash(&corpus);
    Ok(Named { name, corpus, hash })
}

fn load_named(name: String, path: &Path) -> Result<Named> {
    named(name, load_corpus(path, "")?)
}

/// The test split when there is one, otherwise every document.
fn evaluation_view(corpus: &Corpus) -> Corpus {
    if corpus.split_indices(Split::Test).is_empty() {
        corpus.clone()
    } else {
        corpus.subset(Split::Test, Split::Test)
    }
}

fn percent(r: &RougeScore) -> Vec<Option<f64>> {
    r.f1_percent().into_iter().map(Some).collect()
}

fn rel(path: &str) -> String {
    path.replace('\\', "/")
}

impl<'s> Runner<'s> {
    fn new(spec: &'s ExperimentSpec, resume: bool) -> Result<Self> {
        let data = &spec.data;
        let train_name = data.train_domain();
        let train = match (&data.train, &data.synthetic) {
            (Some(p), _) => Some(load_named(train_name, p)?),
            (None, Some(s)) => Some(named(
                train_name.clone(),
                synthetic_corpus(&train_name, &s.spec()),
            )?),
            (None, None) => None,
        };
        let pretrain = match &data.pretrain {
            Some(p) => Some(load_named(data.pretrain_domain(), p)?),
            None => None,
        };
        let mut targets = Vec::new();
        for (name, path) in &data.domains {
            let n = load_named(name.clone(), path)?;
            targets.push(Named {
                corpus: evaluation_view(&n.corpus),
                ..n
            });
        }
        let train = match train {
            Some(t) => t,
            // Baselines-only runs need no training corpus; the first domain stands in.
            None => targets.first().cloned().ok_or_else(|| {
                Error::Config("no training corpus and no evaluation domains".into())
            })?,
        };
        if targets.is_empty() {
            let corpus = evaluation_view(&train.corpus);
            targets.push(Named {
                name: train.name.clone(),
                hash: corpus_hash(&corpus),
                corpus,
            });
        }
        let mut stores = BTreeMap::new();
        for (name, path) in &data.stores {
            stores.insert(name.clone(), ContextualStore::read(path)?);
        }
        let dir = spec.experiment.output.clone();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let plan = ReportPlan {
            title: spec
                .experiment
                .name
                .clone()
                .unwrap_or_else(|| spec.experiment.kind.as_str().into()),
            kind: spec.experiment.kind.as_str().into(),
            columns: Vec::new(),
            cells: Vec::new(),
            notes: Vec::new(),
        };
        Ok(Self {
            spec,
            dir,
            resume,
            opts: RougeOptions {
                stem: spec.train.stem,
                ..RougeOptions::default()
            },
            train,
            pretrain,
            targets,
            stores,
            models: BTreeMap::new(),
            plan,
        })
    }

    fn k_for(&self, domain: &str) -> usize {
        match self.spec.experiment.kind {
            ExperimentKind::Single => self.spec.train.extract_k,
            _ => lookup_domain(domain).map_or(self.spec.train.extract_k, |d| d.k),
        }
    }

    fn store(&self, domain: &str, model: &Model) -> Result<Option<&ContextualStore>> {
        if !model.needs_store() {
            return Ok(None);
        }
        self.stores
            .get(domain)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("no contextual store configured for {domain}")))
    }

    fn inputs<'c>(&'c self, corpus: &'c Named, model: &Model) -> Result<TrainInputs<'c>> {
        if corpus.corpus.split_indices(Split::Train).is_empty() {
            return Err(Error::Config(format!(
                "corpus {} has no train split (use a directory with train.jsonl)",
                corpus.name
            )));
        }
        Ok(TrainInputs {
            train: corpus.corpus.split_docs(Split::Train),
            valid: corpus.corpus.split_docs(Split::Valid),
            store: self.store(&corpus.name, model)?,
            corpus: corpus.name.clone(),
            corpus_hash: corpus.hash.clone(),
        })
    }

    fn fresh_model<'d>(
        &self,
        config: &ModelConfig,
        docs: impl IntoIterator<Item = &'d Document>,
    ) -> Result<Model> {
        if config.decoder == DecoderKind::Lead || config.embedding == EmbeddingKind::Contextual {
            return Model::new(config.clone(), Vocab::default(), None);
        }
        let vocab = Vocab::build(docs, config.max_vocab);
        let table = match config.embedding {
            EmbeddingKind::Pretrained => {
                let path = config.embedding_path.as_ref().ok_or_else(|| {
                    Error::Config("pretrained embeddings need a table path".into())
                })?;
                Some(load_table(path, &vocab)?)
            }
            _ => None,
        };
        Model::new(config.clone(), vocab, table.as_ref())
    }

    /// Train (or, when resuming, reload) the model stored under `models/<slug>`.
    fn fit<F>(&mut self, slug: &str, train: F) -> Trained
    where
        F: FnOnce(&Self) -> Result<TrainOutcome>,
    {
        if let Some(done) = self.models.get(slug) {
            return done.clone();
        }
        let ckpt_rel = format!("models/{slug}/model.ckpt");
        let ckpt_path = self.dir.join(&ckpt_rel);
        let log_path = self.dir.join(format!("models/{slug}/train.json"));
        let result = (|| -> Result<Model> {
            if self.resume && ckpt_path.exists() && log_path.exists() {
                log::info!("reusing {}", ckpt_path.display());
                return Checkpoint::load(&ckpt_path)?.to_model();
            }
            log::info!("training {slug}");
            let out = train(self)?;
            out.checkpoint.save(&ckpt_path)?;
            write_json(
                &log_path,
                &TrainLog {
                    stop: out.stop,
                    best_epoch: out.best_epoch,
                    history: &out.history,
                },
            )?;
            Ok(out.model)
        })();
        let entry = result
            .map(|m| (m, ckpt_rel))
            .map_err(|e| format!("training {slug}: {e}"));
        self.models.insert(slug.to_string(), entry.clone());
        entry
    }

    fn supervised(&mut self, gm: &GridModel) -> Trained {
        let cfg = self.spec.train.clone();
        self.fit(&gm.slug, |r| {
            let model = r.fresh_model(&gm.config, r.train.corpus.split_docs(Split::Train))?;
            let inputs = r.inputs(&r.train, &model)?;
            train_supervised(model, &inputs, &cfg)
        })
    }

    fn run_cell<F>(&mut self, cell: String, group: &str, label: &str, body: F) -> CellRecord
    where
        F: FnOnce(&Self, &Path) -> std::result::Result<CellRecord, String>,
    {
        self.plan.cells.push(cell.clone());
        let dir = self.dir.join(&cell);
        let record_path = dir.join("cell.json");
        if self.resume && record_path.exists() {
            if let Ok(r) = read_json::<CellRecord>(&record_path) {
                if r.ok() {
                    return r;
                }
            }
        }
        let columns = self.plan.columns.len();
        let record = body(self, &dir).unwrap_or_else(|e| {
            log::error!("{group} / {label}: {e}");
            CellRecord::failed(group, label, columns, e)
        });
        if let Err(e) = write_json(&record_path, &record) {
            log::error!("{e}");
        }
        if let Err(e) = write_json(&self.dir.join("plan.json"), &self.plan) {
            log::error!("{e}");
        }
        record
    }

    fn score(
        &self,
        extractions: &[ExtractionResult],
        target: &Named,
        dir: &Path,
    ) -> Result<RougeScore> {
        crate::corpus::write_extractions(&dir.join("extractions.jsonl"), extractions)?;
        Ok(run_diagnostics(
            extractions,
            &target.corpus,
            &REP_ORDERS,
            BUCKETS,
            &self.opts,
            dir,
        )?
        .rouge)
    }

    fn score_model(&self, model: &Model, target: &Named, dir: &Path) -> Result<RougeScore> {
        let k = self.k_for(&target.name);
        let eval = evaluate(
            model,
            &target.corpus,
            k,
            self.store(&target.name, model)?,
            &self.opts,
        )?;
        self.score(&eval.extractions, target, dir)
    }

    /// A row scoring `trained` on target `t`, with optional reference columns.
    fn model_row(
        &mut self,
        t: usize,
        gm_slug: &str,
        label: &str,
        trained: &Trained,
        reference: Option<[f64; 3]>,
    ) -> CellRecord {
        let group = self.targets[t].name.clone();
        let cell = format!("cells/{gm_slug}/{}", slugify(&group));
        let with_ref = self.plan.columns.len() > 3;
        self.run_cell(cell, &group, label, |r, dir| {
            let (model, ckpt) = trained.clone()?;
            let target = &r.targets[t];
            let score = r
                .score_model(&model, target, dir)
                .map_err(|e| e.to_string())?;
            let mut values = percent(&score);
            if with_ref {
                values.extend(reference.map_or([None; 3], |v| v.map(Some)));
            }
            Ok(CellRecord {
                group: group.clone(),
                label: label.into(),
                values,
                error: None,
                checkpoint: rel(&ckpt),
                corpus_hash: target.hash.clone(),
            })
        })
    }

    fn baseline_rows(&mut self, t: usize) {
        let name = self.targets[t].name.clone();
        let info = lookup_domain(&name);
        let lead = Model::new(
            ModelConfig {
                decoder: DecoderKind::Lead,
                ..ModelConfig::default()
            },
            Vocab::default(),
            None,
        )
        .map(|m| (m, "-".to_string()))
        .map_err(|e| e.to_string());
        self.model_row(t, "lead", "Lead", &lead, info.map(|d| d.lead));

        let group = name.clone();
        let cell = format!("cells/oracle/{}", slugify(&name));
        self.run_cell(cell, &group, "Oracle", |r, dir| {
            let target = &r.targets[t];
            let ex = target
                .corpus
                .documents
                .iter()
                .map(|d| oracle_extraction(d, DEFAULT_MAX_SELECT))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.to_string())?;
            let score = r.score(&ex, target, dir).map_err(|e| e.to_string())?;
            let mut values = percent(&score);
            values.extend(info.map_or([None; 3], |d| d.oracle.map(Some)));
            Ok(CellRecord {
                group: group.clone(),
                label: "Oracle".into(),
                values,
                error: None,
                checkpoint: "-".into(),
                corpus_hash: target.hash.clone(),
            })
        });
    }

    fn cross_domain(&mut self) -> Result<()> {
        let kind = self.spec.experiment.kind;
        let baselines = kind == ExperimentKind::CrossDomain && self.spec.experiment.baselines;
        self.plan.columns = ["R-1", "R-2", "R-L"].map(String::from).to_vec();
        if kind == ExperimentKind::CrossDomain {
            self.plan
                .columns
                .extend(["ref R-1", "ref R-2", "ref R-L"].map(String::from));
            self.plan
                .notes
                .push("reference columns are the published Lead/Oracle F1 for the domain".into());
        }
        let grid = if self.spec.experiment.models {
            self.spec.grid()
        } else {
            Vec::new()
        };
        let mut cells: BTreeMap<(String, String), CellRecord> = BTreeMap::new();
        for t in 0..self.targets.len() {
            if baselines {
                self.baseline_rows(t);
            }
            for gm in &grid {
                let trained = self.supervised(gm);
                let row = self.model_row(t, &gm.slug, &gm.label, &trained, None);
                cells.insert((self.targets[t].name.clone(), gm.slug.clone()), row);
            }
        }
        if kind == ExperimentKind::CrossDomain {
            self.delta_r_plot(&grid, &cells)?;
        }
        Ok(())
    }

    /// Pointer − SeqLab, averaged over R-1/R-2/R-L and over encoders, against each
    /// domain's positional bias.
    fn delta_r_plot(
        &self,
        grid: &[GridModel],
        cells: &BTreeMap<(String, String), CellRecord>,
    ) -> Result<()> {
        let mut out = String::from("domain\tpos_bias\tdelta_r\n");
        let mut any = false;
        for t in &self.targets {
            let mut diffs = Vec::new();
            for enc in [EncoderKind::Recurrent, EncoderKind::SelfAttention] {
                let find = |dec: DecoderKind| {
                    grid.iter()
                        .find(|g| g.config.encoder == enc && g.config.decoder == dec)
                        .and_then(|g| cells.get(&(t.name.clone(), g.slug.clone())))
                        .filter(|c| c.ok())
                };
                if let (Some(p), Some(s)) = (find(DecoderKind::Pointer), find(DecoderKind::SeqLab))
                {
                    let d: f64 = (0..3)
                        .map(|i| p.values[i].unwrap() - s.values[i].unwrap())
                        .sum::<f64>()
                        / 3.0;
                    diffs.push(d);
                }
            }
            if diffs.is_empty() {
                continue;
            }
            let pb = positional_bias(&t.corpus.documents, BUCKETS)?.entropy;
            let dr = diffs.iter().sum::<f64>() / diffs.len() as f64;
            writeln!(out, "{}\t{pb}\t{dr}", t.name).unwrap();
            any = true;
        }
        if any {
            let dir = self.dir.join("plots");
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let p = dir.join("plot_delta_r.tsv");
            std::fs::write(&p, out).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    fn disentangle(&mut self) -> Result<()> {
        self.plan.columns = ["R-1", "R-2", "R-L", "ref R-1", "ref R-2", "ref R-L"]
            .map(String::from)
            .to_vec();
        self.plan.notes.push(
            "reference columns are the published CNN/DailyMail rows for each (alpha,beta) pair"
                .into(),
        );
        self.plan.notes.push(format!(
            "the position-only row is compared with the table value 40.39; the running text quotes {POSITION_ONLY_TEXT_R1}"
        ));
        let pairs = self.spec.pairs();
        let grid = self.spec.grid();
        for t in 0..self.targets.len() {
            for (i, gm) in grid.iter().enumerate() {
                let pair = pairs[i % pairs.len()].to_string();
                let reference = MIX_REFERENCE
                    .iter()
                    .find(|(p, _)| *p == pair)
                    .map(|(_, v)| *v);
                let trained = self.supervised(gm);
                self.model_row(t, &gm.slug, &gm.label, &trained, reference);
            }
        }
        Ok(())
    }

    fn shuffle(&mut self) -> Result<()> {
        self.plan.columns = [
            "R-1", "R-2", "R-L", "shuf R-1", "shuf R-2", "shuf R-L", "dR-1", "dR-2", "dR-L",
        ]
        .map(String::from)
        .to_vec();
        self.plan
            .notes
            .push("dR = normal - shuffled; both evaluated on the unshuffled test documents".into());
        let grid = self.spec.grid();
        for &seed in &self.spec.experiment.seeds.clone() {
            let shuffled = shuffle_split(&self.train.corpus, Split::Train, seed);
            same_documents(&self.train.corpus, &shuffled)?;
            let shuffled = Named {
                name: self.train.name.clone(),
                hash: corpus_hash(&shuffled),
                corpus: shuffled,
            };
            for gm in &grid {
                let config = ModelConfig {
                    seed: gm.config.seed.wrapping_add(seed),
                    ..gm.config.clone()
                };
                let cfg = self.spec.train.clone();
                let normal = self.fit(&format!("{}-s{seed}", gm.slug), |r| {
                    let model = r.fresh_model(&config, r.train.corpus.split_docs(Split::Train))?;
                    let inputs = r.inputs(&r.train, &model)?;
                    train_supervised(model, &inputs, &cfg)
                });
                let shuf = self.fit(&format!("{}-s{seed}-shuffled", gm.slug), |r| {
                    let model = r.fresh_model(&config, shuffled.corpus.split_docs(Split::Train))?;
                    let inputs = r.inputs(&shuffled, &model)?;
                    train_supervised(model, &inputs, &cfg)
                });
                for t in 0..self.targets.len() {
                    let group = format!("{} seed {seed}", self.targets[t].name);
                    let cell = format!(
                        "cells/{}-s{seed}/{}",
                        gm.slug,
                        slugify(&self.targets[t].name)
                    );
                    let (normal, shuf) = (normal.clone(), shuf.clone());
                    self.run_cell(cell, &group, &gm.label, |r, dir| {
                        let (m1, c1) = normal?;
                        let (m2, c2) = shuf?;
                        let target = &r.targets[t];
                        let a = r
                            .score_model(&m1, target, &dir.join("normal"))
                            .map_err(|e| e.to_string())?;
                        let b = r
                            .score_model(&m2, target, &dir.join("shuffled"))
                            .map_err(|e| e.to_string())?;
                        let (a, b) = (a.f1_percent(), b.f1_percent());
                        let mut values: Vec<Option<f64>> =
                            a.iter().chain(&b).map(|v| Some(*v)).collect();
                        values.extend((0..3).map(|i| Some(a[i] - b[i])));
                        Ok(CellRecord {
                            group: group.clone(),
                            label: gm.label.clone(),
                            values,
                            error: None,
                            checkpoint: format!("{};{}", rel(&c1), rel(&c2)),
                            corpus_hash: target.hash.clone(),
                        })
                    });
                }
            }
        }
        Ok(())
    }

    fn knowledge(&mut self) -> Result<()> {
        self.plan.columns = ["R-1", "R-2", "R-L"].map(String::from).to_vec();
        let grid = self.spec.grid();
        let cfg = self.spec.train.clone();
        for gm in &grid {
            let base = self.supervised(gm);
            let transfer = match &self.pretrain {
                Some(pre) => {
                    let pre_name = pre.name.clone();
                    let slug = format!("{}-pretrained-{}", gm.slug, slugify(&pre_name));
                    let source = self.fit(&format!("{slug}-source"), |r| {
                        let pre = r.pretrain.as_ref().expect("checked above");
                        let docs = pre
                            .corpus
                            .split_docs(Split::Train)
                            .into_iter()
                            .chain(r.train.corpus.split_docs(Split::Train));
                        let model = r.fresh_model(&gm.config, docs)?;
                        let inputs = r.inputs(pre, &model)?;
                        train_supervised(model, &inputs, &cfg)
                    });
                    let tuned = match &source {
                        Ok((_, ckpt)) => {
                            let ckpt_path = self.dir.join(ckpt);
                            self.fit(&slug, |r| {
                                let warm = Checkpoint::load(&ckpt_path)?;
                                let model = warm.to_model()?;
                                fine_tune(&warm, &r.inputs(&r.train, &model)?, &cfg)
                            })
                        }
                        Err(e) => Err(e.clone()),
                    };
                    Some((format!("{} + {pre_name}", gm.label), slug, tuned))
                }
                None => None,
            };
            for t in 0..self.targets.len() {
                self.model_row(t, &gm.slug, &gm.label, &base, None);
                if let Some((label, slug, tuned)) = &transfer {
                    self.model_row(t, slug, label, tuned, None);
                }
            }
        }
        Ok(())
    }

    fn rl_stack(&mut self) -> Result<()> {
        self.plan.columns = ["R-1", "R-2", "R-L"].map(String::from).to_vec();
        self.plan.notes.push("policy gradient: REINFORCE, per-sentence ROUGE-1 precision reward, moving-average baseline".into());
        let grid = self.spec.grid();
        let rl_cfg = TrainConfig {
            schema: Schema::Reinforce,
            max_epochs: self.spec.experiment.rl_epochs,
            learning_rate: self.spec.experiment.rl_learning_rate,
            ..self.spec.train.clone()
        };
        for gm in &grid {
            let sup = self.supervised(gm);
            let slug = format!("{}-rl", gm.slug);
            let rl = match &sup {
                Ok((_, ckpt)) => {
                    let ckpt_path = self.dir.join(ckpt);
                    self.fit(&slug, |r| {
                        let warm = Checkpoint::load(&ckpt_path)?;
                        let model = warm.to_model()?;
                        train_reinforce(&warm, &r.inputs(&r.train, &model)?, &rl_cfg)
                    })
                }
                Err(e) => Err(e.clone()),
            };
            let label = format!("{} + RL", gm.label);
            for t in 0..self.targets.len() {
                self.model_row(t, &gm.slug, &gm.label, &sup, None);
                self.model_row(t, &slug, &label, &rl, None);
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<RunSummary> {
        write_json(&self.dir.join("plan.json"), &self.plan)?;
        let plots = self.dir.join("plots");
        std::fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
        let script = plots.join("plot.py");
        std::fs::write(&script, PLOT_SCRIPT).map_err(|e| Error::io(&script, e))?;
        let report = Report::assemble(&self.dir)?;
        report.write(&self.dir)?;
        Ok(RunSummary {
            dir: self.dir,
            report,
        })
    }
}

/// Shuffling must only reorder sentences within documents.
fn same_documents(a: &Corpus, b: &Corpus) -> Result<()> {
    let key = |d: &Document| {
        let mut s = d.sentences.clone();
        s.sort();
        (d.id.clone(), s, d.reference.clone())
    };
    let mut ka: Vec<_> = a.documents.iter().map(key).collect();
    let mut kb: Vec<_> = b.documents.iter().map(key).collect();
    ka.sort();
    kb.sort();
    if ka != kb {
        return Err(Error::InvalidInput(
            "shuffled corpus differs from the original beyond sentence order".into(),
        ));
    }
    Ok(())
}

/// Run every cell of `spec`, writing models, cells and the report under its output
/// directory. With `resume`, finished cells and trained models are reused. Failed cells
/// are recorded in the report rather than aborting the run.
pub fn run_experiment(spec: &ExperimentSpec, resume: bool) -> Result<RunSummary> {
    let mut runner = Runner::new(spec, resume)?;
    match spec.experiment.kind {
        ExperimentKind::Single | ExperimentKind::CrossDomain => runner.cross_domain()?,
        ExperimentKind::Disentangle => runner.disentangle()?,
        ExperimentKind::Shuffle => runner.shuffle()?,
        ExperimentKind::Knowledge => runner.knowledge()?,
        ExperimentKind::RlStack => runner.rl_stack()?,
    }
    runner.finish()
}

/// Re-assemble and rewrite the report of a finished (or interrupted) run.
pub fn rebuild_report(dir: &Path) -> Result<Report> {
    let report = Report::assemble(dir)?;
    report.write(dir)?;
    Ok(report)
}

/// Train the single model described by `spec` (its grid must have exactly one entry)
/// into `<output>/models/<slug>/`; returns the checkpoint path.
pub fn train_model(spec: &ExperimentSpec) -> Result<PathBuf> {
    let grid = spec.grid();
    let [gm] = grid.as_slice() else {
        return Err(Error::Config(format!(
            "train needs exactly one model, the config describes {}",
            grid.len()
        )));
    };
    if spec.train.schema != Schema::Supervised {
        return Err(Error::Config(
            "train runs supervised training; use an rl-stack experiment for reinforce".into(),
        ));
    }
    let mut runner = Runner::new(spec, false)?;
    let (_, ckpt) = runner.supervised(gm).map_err(Error::Config)?;
    Ok(runner.dir.join(ckpt))
}
