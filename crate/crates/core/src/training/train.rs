use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Adam, Gradients, Graph, Var};
use crate::corpus::{shuffle_permutation, write_extractions, Corpus, Document, ExtractionResult};
use crate::decoders::{Choice, DecoderKind};
use crate::embeddings::ContextualStore;
use crate::error::{Error, Result};
use crate::metrics::{
    diagnose, rouge_scores, unigram_precision, DiagnosticsReport, RougeOptions, RougeScore,
};

use super::checkpoint::{Checkpoint, Provenance};
use super::model::{Model, PreparedDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schema {
    Supervised,
    Reinforce,
}

impl Schema {
    pub fn as_str(self) -> &'static str {
        match self {
            Schema::Supervised => "supervised",
            Schema::Reinforce => "reinforce",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub schema: Schema,
    /// Defaults to 1e-3 (supervised) or 1e-4 (reinforce).
    pub learning_rate: Option<f64>,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub clip_norm: f64,
    pub seed: u64,
    pub extract_k: usize,
    /// Validation evaluations without improvement before stopping.
    pub patience: usize,
    pub baseline_decay: f64,
    /// Stop as soon as validation ROUGE-1 F1 reaches this value.
    pub target_rouge1: Option<f64>,
    pub stem: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schema: Schema::Supervised,
            learning_rate: None,
            batch_size: 32,
            max_epochs: 20,
            clip_norm: 2.0,
            seed: 0,
            extract_k: 3,
            patience: 3,
            baseline_decay: 0.99,
            target_rouge1: None,
            stem: false,
        }
    }
}

impl TrainConfig {
    pub fn lr(&self) -> f64 {
        self.learning_rate.unwrap_or(match self.schema {
            Schema::Supervised => 1e-3,
            Schema::Reinforce => 1e-4,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.lr();
        if lr.is_nan() || lr <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.extract_k == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "extract_k and batch_size must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(Error::Config("baseline decay must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn rouge_options(&self) -> RougeOptions {
        RougeOptions {
            stem: self.stem,
            ..RougeOptions::default()
        }
    }
}

/// Documents and identification for one training run.
#[derive(Debug, Clone)]
pub struct TrainInputs<'a> {
    pub train: Vec<&'a Document>,
    pub valid: Vec<&'a Document>,
    pub store: Option<&'a ContextualStore>,
    pub corpus: String,
    pub corpus_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-document loss accumulated while the epoch's updates were applied.
    pub running_loss: Option<f64>,
    /// Supervised objective over the whole training set after the epoch (supervised only).
    pub train_loss: Option<f64>,
    pub valid_rouge1: Option<f64>,
    pub mean_reward: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    TargetReached,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochRecord>,
    pub stop: StopReason,
    /// Epoch whose parameters the checkpoint holds (0 = initial).
    pub best_epoch: usize,
}

/// Per-sentence reward: ROUGE-1 precision of sentence `i` against the whole reference.
pub fn sentence_reward(doc: &Document, i: usize) -> f64 {
    unigram_precision(&doc.sentences[i], &doc.reference)
}

/// `−Σ_t a_t · log π(i_t | i_<t)` for a fixed index sequence (teacher-forced).
pub fn policy_loss(
    model: &Model,
    g: &mut Graph,
    doc: &PreparedDoc,
    indices: &[usize],
    advantages: &[f64],
) -> Result<Var> {
    let ptr = model
        .pointer()
        .ok_or_else(|| Error::Config("policy loss needs the pointer decoder".into()))?;
    if indices.len() != advantages.len() || indices.is_empty() {
        return Err(Error::InvalidInput(
            "one advantage per selected index required".into(),
        ));
    }
    let ctx = model.context(g, doc)?;
    let steps = ptr.rollout::<ChaCha8Rng>(g, ctx, indices.len(), Choice::Forced(indices))?;
    let lps: Vec<Var> = steps.iter().map(|s| s.log_prob).collect();
    weighted_sum(g, &lps, advantages)
}

fn weighted_sum(g: &mut Graph, lps: &[Var], advantages: &[f64]) -> Result<Var> {
    let terms: Vec<Var> = lps
        .iter()
        .zip(advantages)
        .map(|(&lp, &a)| g.scale(lp, -a))
        .collect();
    let cat = g.concat_cols(&terms);
    Ok(g.sum_all(cat))
}

#[derive(Debug, Clone)]
pub struct PolicySample {
    pub grads: Gradients,
    pub indices: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Value of the surrogate loss `−Σ (r_t − b) log π(i_t)`.
    pub loss: f64,
}

/// One sampled policy-gradient estimate. `reward` maps the sampled indices to per-step rewards.
pub fn reinforce_gradients<F>(
    model: &Model,
    doc: &PreparedDoc,
    k: usize,
    baseline: f64,
    rng: &mut ChaCha8Rng,
    reward: F,
) -> Result<PolicySample>
where
    F: Fn(&[usize]) -> Vec<f64>,
{
    let mut g = Graph::new(&model.params);
    let steps = model.sample(&mut g, doc, k, rng)?;
    let indices: Vec<usize> = steps.iter().map(|s| s.index).collect();
    let rewards = reward(&indices);
    let advantages: Vec<f64> = rewards.iter().map(|r| r - baseline).collect();
    let lps: Vec<Var> = steps.iter().map(|s| s.log_prob).collect();
    let loss = weighted_sum(&mut g, &lps, &advantages)?;
    Ok(PolicySample {
        grads: g.backward(loss).params,
        loss: g.scalar(loss),
        indices,
        rewards,
    })
}

fn prepare_all(
    model: &Model,
    docs: &[&Document],
    store: Option<&ContextualStore>,
) -> Result<Vec<PreparedDoc>> {
    docs.iter().map(|d| model.prepare(d, store)).collect()
}

fn mean_rouge1(
    model: &Model,
    docs: &[&Document],
    prepared: &[PreparedDoc],
    k: usize,
    opts: &RougeOptions,
) -> Result<f64> {
    let mut total = 0.0;
    for (doc, prep) in docs.iter().zip(prepared) {
        let r = model.extract(prep, k)?;
        total += rouge_scores(&r.summary(doc), &doc.reference, opts)
            .rouge1
            .f1;
    }
    Ok(total / docs.len() as f64)
}

/// Mean supervised loss over documents that have a target.
fn supervised_objective(model: &Model, docs: &[PreparedDoc]) -> Result<Option<f64>> {
    let mut total = 0.0;
    let mut n = 0usize;
    for d in docs {
        let mut g = Graph::new(&model.params);
        if let Some(l) = model.supervised_loss(&mut g, d)? {
            total += g.scalar(l);
            n += 1;
        }
    }
    Ok((n > 0).then(|| total / n as f64))
}

/// Parameter values by name.
type Snapshot = Vec<(String, crate::autodiff::Mat)>;

struct EarlyStopper {
    patience: usize,
    target: Option<f64>,
    best: Option<(f64, usize, Snapshot)>,
    bad: usize,
}

impl EarlyStopper {
    /// Returns a stop reason when training should end after this evaluation.
    fn observe(&mut self, r1: f64, epoch: usize, model: &Model) -> Option<StopReason> {
        let improved = self.best.as_ref().is_none_or(|(b, _, _)| r1 > *b);
        if improved {
            let snapshot = model
                .params
                .iter()
                .map(|(_, n, m)| (n.to_string(), m.clone()))
                .collect();
            self.best = Some((r1, epoch, snapshot));
            self.bad = 0;
        } else {
            self.bad += 1;
        }
        if self.target.is_some_and(|t| r1 >= t) {
            return Some(StopReason::TargetReached);
        }
        (self.bad >= self.patience).then_some(StopReason::EarlyStop)
    }
}

enum Objective {
    Supervised,
    Reinforce,
}

fn run(
    mut model: Model,
    inputs: &TrainInputs<'_>,
    cfg: &TrainConfig,
    objective: Objective,
    lr: f64,
    history_from: Vec<Provenance>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if inputs.train.is_empty() {
        return Err(Error::InvalidInput("no training documents".into()));
    }
    let train = prepare_all(&model, &inputs.train, inputs.store)?;
    let valid = prepare_all(&model, &inputs.valid, inputs.store)?;
    let opts = cfg.rouge_options();
    let mut adam = Adam::new(&model.params, lr);
    let mut stopper = EarlyStopper {
        patience: cfg.patience.max(1),
        target: cfg.target_rouge1,
        best: None,
        bad: 0,
    };
    let mut history = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    let mut baseline: Option<f64> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trainable = !model.params.is_empty();

    if !valid.is_empty() {
        let r1 = mean_rouge1(&model, &inputs.valid, &valid, cfg.extract_k, &opts)?;
        stopper.observe(r1, 0, &model);
    }

    for epoch in 1..=cfg.max_epochs {
        if !trainable {
            break;
        }
        let order = shuffle_permutation(train.len(), cfg.seed.wrapping_add(epoch as u64));
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        let mut reward_sum = 0.0;
        let mut reward_count = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros_like(&model.params);
            let mut count = 0usize;
            for &i in batch {
                let prep = &train[i];
                match objective {
                    Objective::Supervised => {
                        let mut g = Graph::new(&model.params);
                        let Some(loss) = model.supervised_loss(&mut g, prep)? else {
                            continue;
                        };
                        let v = g.scalar(loss);
                        if !v.is_finite() {
                            return Err(Error::Diverged {
                                epoch,
                                detail: format!("non-finite loss on document {}", prep.id),
                            });
                        }
                        loss_sum += v;
                        loss_count += 1;
                        grads.add_assign(&g.backward(loss).params);
                    }
                    Objective::Reinforce => {
                        let doc = inputs.train[i];
                        let reward = |idx: &[usize]| -> Vec<f64> {
                            idx.iter().map(|&j| sentence_reward(doc, j)).collect()
                        };
                        let Some(b) = baseline else {
                            // The first rollout only seeds the baseline.
                            let mut g = Graph::new(&model.params);
                            let steps = model.sample(&mut g, prep, cfg.extract_k, &mut rng)?;
                            let idx: Vec<usize> = steps.iter().map(|s| s.index).collect();
                            let r = reward(&idx);
                            baseline = Some(r.iter().sum::<f64>() / r.len() as f64);
                            continue;
                        };
                        let sample =
                            reinforce_gradients(&model, prep, cfg.extract_k, b, &mut rng, reward)?;
                        if !sample.loss.is_finite() {
                            return Err(Error::Diverged {
                                epoch,
                                detail: format!("non-finite policy loss on document {}", prep.id),
                            });
                        }
                        let mean_r =
                            sample.rewards.iter().sum::<f64>() / sample.rewards.len() as f64;
                        loss_sum += sample.loss;
                        loss_count += 1;
                        reward_sum += sample.rewards.iter().sum::<f64>();
                        reward_count += sample.rewards.len();
                        grads.add_assign(&sample.grads);
                        baseline =
                            Some(cfg.baseline_decay * b + (1.0 - cfg.baseline_decay) * mean_r);
                    }
                }
                count += 1;
            }
            if count == 0 {
                continue;
            }
            grads.scale(1.0 / count as f64);
            if !grads.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: "non-finite gradient".into(),
                });
            }
            grads.clip_global_norm(cfg.clip_norm);
            adam.step(&mut model.params, &grads);
        }

        let valid_rouge1 = if valid.is_empty() {
            None
        } else {
            Some(mean_rouge1(
                &model,
                &inputs.valid,
                &valid,
                cfg.extract_k,
                &opts,
            )?)
        };
        let train_loss = match objective {
            Objective::Supervised => supervised_objective(&model, &train)?,
            Objective::Reinforce => None,
        };
        history.push(EpochRecord {
            epoch,
            running_loss: (loss_count > 0).then(|| loss_sum / loss_count as f64),
            train_loss,
            valid_rouge1,
            mean_reward: (reward_count > 0).then(|| reward_sum / reward_count as f64),
        });
        log::info!(
            "epoch {epoch}: loss {:?} valid R-1 {:?}",
            history.last().and_then(|h| h.train_loss.or(h.running_loss)),
            valid_rouge1
        );
        if let Some(r1) = valid_rouge1 {
            if let Some(reason) = stopper.observe(r1, epoch, &model) {
                stop = reason;
                break;
            }
        }
    }

    let (best_epoch, best_r1) = match stopper.best {
        Some((r1, epoch, snapshot)) => {
            model.params.load_from(&snapshot)?;
            (epoch, Some(r1))
        }
        None => (history.len(), None),
    };
    let mut notes = Vec::new();
    if matches!(objective, Objective::Reinforce) {
        notes.push(format!(
            "REINFORCE, per-sentence ROUGE-1 precision reward, moving-average baseline (decay {})",
            cfg.baseline_decay
        ));
    }
    let provenance = Provenance {
        corpus: inputs.corpus.clone(),
        corpus_hash: inputs.corpus_hash.clone(),
        schema: cfg.schema.as_str().into(),
        epoch: best_epoch,
        valid_rouge1: best_r1,
        seed: cfg.seed,
        notes,
        history: history_from,
    };
    let checkpoint = Checkpoint::capture(&mut model, provenance);
    Ok(TrainOutcome {
        model,
        checkpoint,
        history,
        stop,
        best_epoch,
    })
}

/// Cross-entropy training against oracle labels.
pub fn train_supervised(
    model: Model,
    inputs: &TrainInputs<'_>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if cfg.schema != Schema::Supervised {
        return Err(Error::Config(
            "train_supervised needs schema = supervised".into(),
        ));
    }
    if model.decoder_kind() != DecoderKind::Lead {
        if let Some(d) = inputs.train.iter().find(|d| d.oracle_labels.is_none()) {
            return Err(Error::MissingLabels(d.id.clone()));
        }
    }
    run(
        model,
        inputs,
        cfg,
        Objective::Supervised,
        cfg.lr(),
        Vec::new(),
    )
}

/// Policy-gradient training of a pointer model warm-started from `warm_start`.
pub fn train_reinforce(
    warm_start: &Checkpoint,
    inputs: &TrainInputs<'_>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if cfg.schema != Schema::Reinforce {
        return Err(Error::Config(
            "train_reinforce needs schema = reinforce".into(),
        ));
    }
    let model = warm_start.to_model()?;
    if model.decoder_kind() != DecoderKind::Pointer {
        return Err(Error::Config(
            "policy-gradient training needs the pointer decoder".into(),
        ));
    }
    let history = vec![warm_start.provenance.clone()];
    run(model, inputs, cfg, Objective::Reinforce, cfg.lr(), history)
}

/// Continue supervised training from a checkpoint at half the base learning rate.
pub fn fine_tune(
    checkpoint: &Checkpoint,
    inputs: &TrainInputs<'_>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let model = checkpoint.to_model()?;
    let history = vec![checkpoint.provenance.clone()];
    let cfg = TrainConfig {
        schema: Schema::Supervised,
        ..cfg.clone()
    };
    run(
        model,
        inputs,
        &cfg,
        Objective::Supervised,
        0.5 * cfg.lr(),
        history,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rouge: RougeScore,
    pub diagnostics: DiagnosticsReport,
    pub extractions: Vec<ExtractionResult>,
}

impl Evaluation {
    /// Write `extractions.jsonl`, `metrics.tsv` and `metrics.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_extractions(&dir.join("extractions.jsonl"), &self.extractions)?;
        let tsv = dir.join("metrics.tsv");
        std::fs::write(&tsv, self.diagnostics.to_tsv()).map_err(|e| Error::io(&tsv, e))?;
        let json = dir.join("metrics.json");
        let body = serde_json::to_string_pretty(&self.diagnostics).expect("serialisable") + "\n";
        std::fs::write(&json, body).map_err(|e| Error::io(&json, e))
    }
}

/// Greedy extraction of `k` sentences for every document of `corpus`, with diagnostics.
pub fn evaluate(
    model: &Model,
    corpus: &Corpus,
    k: usize,
    store: Option<&ContextualStore>,
    opts: &RougeOptions,
) -> Result<Evaluation> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let extractions = corpus
        .documents
        .iter()
        .map(|d| model.extract_document(d, store, k))
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = diagnose(&extractions, corpus, &[1, 2, 3], 30, opts)?;
    Ok(Evaluation {
        rouge: diagnostics.rouge,
        diagnostics,
        extractions,
    })
}
