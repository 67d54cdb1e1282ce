mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sumprobe_core::corpus::{
    corpus_hash, lead_k, oracle_extraction, synthetic_corpus, Corpus, Document, Split, SynthSpec,
};
use sumprobe_core::decoders::DecoderKind;
use sumprobe_core::embeddings::{StoreMode, Vocab};
use sumprobe_core::encoders::EncoderKind;
use sumprobe_core::metrics::{aggregate_rouge, rouge_scores, RougeOptions};
use sumprobe_core::training::*;
use sumprobe_core::Error;

fn toy_corpus() -> Corpus {
    synthetic_corpus("toy", &SynthSpec::default())
}

fn inputs<'a>(train: &[&'a Document], valid: &[&'a Document], corpus: &Corpus) -> TrainInputs<'a> {
    TrainInputs {
        train: train.to_vec(),
        valid: valid.to_vec(),
        store: None,
        corpus: corpus.domain.clone(),
        corpus_hash: corpus_hash(corpus),
    }
}

fn oracle_rouge1(docs: &[&Document]) -> f64 {
    docs.iter()
        .map(|d| {
            let r = oracle_extraction(d, 4).unwrap();
            rouge_scores(&r.summary(d), &d.reference, &RougeOptions::default())
                .rouge1
                .f1
        })
        .sum::<f64>()
        / docs.len() as f64
}

fn quick_cfg() -> TrainConfig {
    TrainConfig {
        batch_size: 8,
        extract_k: 2,
        ..TrainConfig::default()
    }
}

#[test]
fn training_loss_strictly_decreases_over_ten_epochs() {
    let corpus = toy_corpus();
    let docs: Vec<&Document> = corpus.documents.iter().collect();
    let vocab = Vocab::build(docs.iter().copied(), 1000);
    for enc in [EncoderKind::Recurrent, EncoderKind::SelfAttention] {
        for dec in [DecoderKind::SeqLab, DecoderKind::Pointer] {
            let model = Model::new(common::toy_config(enc, dec), vocab.clone(), None).unwrap();
            let cfg = TrainConfig {
                max_epochs: 10,
                ..quick_cfg()
            };
            let out = train_supervised(model, &inputs(&docs, &[], &corpus), &cfg).unwrap();
            let losses: Vec<f64> = out.history.iter().map(|h| h.train_loss.unwrap()).collect();
            assert_eq!(losses.len(), 10);
            assert!(
                losses.windows(2).all(|w| w[1] < w[0]),
                "{enc:?}+{dec:?}: {losses:?}"
            );
        }
    }
}

#[test]
fn overfit_then_evaluate_reaches_oracle_fraction() {
    let corpus = toy_corpus();
    let docs: Vec<&Document> = corpus.documents.iter().collect();
    let target = 0.95 * oracle_rouge1(&docs);
    let model = Model::new(
        common::toy_config(EncoderKind::Recurrent, DecoderKind::Pointer),
        Vocab::build(docs.iter().copied(), 1000),
        None,
    )
    .unwrap();
    let cfg = TrainConfig {
        max_epochs: 200,
        patience: 200,
        target_rouge1: Some(target),
        ..quick_cfg()
    };
    let out = train_supervised(model, &inputs(&docs, &docs, &corpus), &cfg).unwrap();
    assert_eq!(out.stop, StopReason::TargetReached);
    let whole = Corpus::single_split("toy", corpus.documents.clone(), Split::Test);
    let eval = evaluate(&out.model, &whole, 2, None, &RougeOptions::default()).unwrap();
    assert!(
        eval.rouge.rouge1.f1 >= target,
        "{} < {target}",
        eval.rouge.rouge1.f1
    );
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let corpus = toy_corpus();
    let train = corpus.split_docs(Split::Train);
    let model = Model::new(
        common::toy_config(EncoderKind::SelfAttention, DecoderKind::SeqLab),
        Vocab::build(train.iter().copied(), 1000),
        None,
    )
    .unwrap();
    let cfg = TrainConfig {
        max_epochs: 2,
        ..quick_cfg()
    };
    let out = train_supervised(
        model,
        &inputs(&train, &corpus.split_docs(Split::Valid), &corpus),
        &cfg,
    )
    .unwrap();
    let test = corpus.subset(Split::Test, Split::Test);
    let before = evaluate(&out.model, &test, 2, None, &RougeOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    out.checkpoint.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, out.checkpoint);
    assert_eq!(loaded.provenance.corpus_hash, corpus_hash(&corpus));
    assert_eq!(loaded.provenance.schema, "supervised");
    let after = evaluate(
        &loaded.to_model().unwrap(),
        &test,
        2,
        None,
        &RougeOptions::default(),
    )
    .unwrap();
    assert_eq!(before, after);

    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(Checkpoint::load(&path), Err(Error::Checkpoint(_))));
}

#[test]
fn identical_runs_give_identical_checkpoints() {
    let corpus = toy_corpus();
    let train = corpus.split_docs(Split::Train);
    let run = || {
        let model = Model::new(
            common::toy_config(EncoderKind::Recurrent, DecoderKind::Pointer),
            Vocab::build(train.iter().copied(), 1000),
            None,
        )
        .unwrap();
        let cfg = TrainConfig {
            max_epochs: 2,
            ..quick_cfg()
        };
        train_supervised(model, &inputs(&train, &[], &corpus), &cfg)
            .unwrap()
            .checkpoint
    };
    assert_eq!(run(), run());
}

#[test]
fn fine_tune_with_zero_epochs_is_a_no_op() {
    let corpus = toy_corpus();
    let train = corpus.split_docs(Split::Train);
    let model = Model::new(
        common::toy_config(EncoderKind::Recurrent, DecoderKind::SeqLab),
        Vocab::build(train.iter().copied(), 1000),
        None,
    )
    .unwrap();
    let base = train_supervised(
        model,
        &inputs(&train, &[], &corpus),
        &TrainConfig {
            max_epochs: 1,
            ..quick_cfg()
        },
    )
    .unwrap();
    let tuned = fine_tune(
        &base.checkpoint,
        &inputs(&train, &[], &corpus),
        &TrainConfig {
            max_epochs: 0,
            ..quick_cfg()
        },
    )
    .unwrap();
    assert_eq!(tuned.checkpoint.tensors, base.checkpoint.tensors);
    assert_eq!(tuned.checkpoint.provenance.history.len(), 1);
    let test = corpus.subset(Split::Test, Split::Test);
    let opts = RougeOptions::default();
    assert_eq!(
        evaluate(&base.model, &test, 2, None, &opts).unwrap(),
        evaluate(&tuned.model, &test, 2, None, &opts).unwrap()
    );
}

#[test]
fn fine_tune_on_the_training_corpus_keeps_validation_score() {
    let corpus = toy_corpus();
    let train = corpus.split_docs(Split::Train);
    let valid = corpus.split_docs(Split::Valid);
    let model = Model::new(
        common::toy_config(EncoderKind::Recurrent, DecoderKind::SeqLab),
        Vocab::build(train.iter().copied(), 1000),
        None,
    )
    .unwrap();
    let base = train_supervised(
        model,
        &inputs(&train, &valid, &corpus),
        &TrainConfig {
            max_epochs: 3,
            ..quick_cfg()
        },
    )
    .unwrap();
    let tuned = fine_tune(
        &base.checkpoint,
        &inputs(&train, &valid, &corpus),
        &TrainConfig {
            max_epochs: 5,
            patience: 2,
            ..quick_cfg()
        },
    )
    .unwrap();
    // The restored best includes the starting point, so validation R-1 never drops.
    assert!(
        tuned.checkpoint.provenance.valid_rouge1.unwrap()
            >= base.checkpoint.provenance.valid_rouge1.unwrap() - 1e-6
    );
}

#[test]
fn lead_control_evaluates_like_lead_k() {
    let corpus = toy_corpus();
    let model = Model::new(
        ModelConfig {
            decoder: DecoderKind::Lead,
            ..ModelConfig::default()
        },
        Vocab::default(),
        None,
    )
    .unwrap();
    let opts = RougeOptions::default();
    let eval = evaluate(&model, &corpus, 3, None, &opts).unwrap();
    let lead: Vec<_> = corpus.documents.iter().map(|d| lead_k(d, 3)).collect();
    assert_eq!(eval.extractions, lead);
    assert_eq!(eval.rouge, aggregate_rouge(&lead, &corpus, &opts).unwrap());
}

#[test]
fn reward_is_per_sentence_precision() {
    let doc = Document::new(
        "r",
        vec![
            common::words("the storm hit the coast"),
            common::words("markets rallied"),
            common::words("storm storm pier"),
        ],
        vec![
            common::words("the storm hit the coast"),
            common::words("on sunday"),
        ],
    );
    assert_eq!(sentence_reward(&doc, 0), 1.0);
    assert_eq!(sentence_reward(&doc, 1), 0.0);
    assert!((sentence_reward(&doc, 2) - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn reinforce_requires_pointer_and_matching_schema() {
    let corpus = toy_corpus();
    let train = corpus.split_docs(Split::Train);
    let vocab = Vocab::build(train.iter().copied(), 1000);
    let seqlab = Model::new(
        common::toy_config(EncoderKind::Recurrent, DecoderKind::SeqLab),
        vocab.clone(),
        None,
    )
    .unwrap();
    let sup = train_supervised(
        seqlab,
        &inputs(&train, &[], &corpus),
        &TrainConfig {
            max_epochs: 1,
            ..quick_cfg()
        },
    )
    .unwrap();
    let rl_cfg = TrainConfig {
        schema: Schema::Reinforce,
        max_epochs: 1,
        ..quick_cfg()
    };
    assert!(matches!(
        train_reinforce(&sup.checkpoint, &inputs(&train, &[], &corpus), &rl_cfg),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        train_reinforce(&sup.checkpoint, &inputs(&train, &[], &corpus), &quick_cfg()),
        Err(Error::Config(_))
    ));

    let ptr = Model::new(
        common::toy_config(EncoderKind::Recurrent, DecoderKind::Pointer),
        vocab,
        None,
    )
    .unwrap();
    let sup = train_supervised(
        ptr,
        &inputs(&train, &[], &corpus),
        &TrainConfig {
            max_epochs: 1,
            ..quick_cfg()
        },
    )
    .unwrap();
    let rl = train_reinforce(
        &sup.checkpoint,
        &inputs(&train, &[], &corpus),
        &TrainConfig {
            max_epochs: 2,
            ..rl_cfg
        },
    )
    .unwrap();
    assert_eq!(rl.checkpoint.provenance.schema, "reinforce");
    assert_eq!(rl.checkpoint.provenance.history.len(), 1);
    for h in &rl.history {
        let r = h.mean_reward.unwrap();
        assert!((0.0..=1.0).contains(&r));
    }
    assert_ne!(rl.checkpoint.tensors, sup.checkpoint.tensors);
}

#[test]
fn constant_reward_gradient_averages_to_zero() {
    let doc = Document::new(
        "three",
        vec![
            common::words("a b c"),
            common::words("d e f"),
            common::words("g h"),
        ],
        vec![common::words("a d")],
    );
    let vocab = Vocab::build([&doc], 10);
    let model = Model::new(
        common::tiny_config(EncoderKind::Recurrent, DecoderKind::Pointer),
        vocab,
        None,
    )
    .unwrap();
    let prep = model.prepare(&doc, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let draws = 2000;
    let mut sum: Option<Vec<f64>> = None;
    let mut sq: Option<Vec<f64>> = None;
    for _ in 0..draws {
        let s = reinforce_gradients(&model, &prep, 2, 0.0, &mut rng, |idx| vec![0.7; idx.len()])
            .unwrap();
        let flat = s.grads.flatten(&model.params);
        let acc = sum.get_or_insert_with(|| vec![0.0; flat.len()]);
        let acc2 = sq.get_or_insert_with(|| vec![0.0; flat.len()]);
        for (i, v) in flat.iter().enumerate() {
            acc[i] += v;
            acc2[i] += v * v;
        }
    }
    let n = draws as f64;
    let (sum, sq) = (sum.unwrap(), sq.unwrap());
    let mean_norm = sum.iter().map(|s| (s / n).powi(2)).sum::<f64>().sqrt();
    let se_norm = sum
        .iter()
        .zip(&sq)
        .map(|(s, q)| (q / n - (s / n).powi(2)) / n)
        .sum::<f64>()
        .sqrt();
    assert!(mean_norm <= 3.0 * se_norm, "{mean_norm} vs SE {se_norm}");
}

#[test]
fn divergence_and_missing_labels_abort() {
    let corpus = toy_corpus();
    let train = corpus.split_docs(Split::Train);
    let vocab = Vocab::build(train.iter().copied(), 1000);
    let mut model = Model::new(
        common::toy_config(EncoderKind::Recurrent, DecoderKind::SeqLab),
        vocab.clone(),
        None,
    )
    .unwrap();
    let id = model.params.id("decoder.seqlab.out.b").unwrap();
    model.params.get_mut(id).fill(f64::NAN);
    let err = train_supervised(model, &inputs(&train, &[], &corpus), &quick_cfg()).unwrap_err();
    assert!(matches!(err, Error::Diverged { epoch: 1, .. }), "{err}");

    let mut unlabelled = train[0].clone();
    unlabelled.oracle_labels = None;
    let model = Model::new(
        common::toy_config(EncoderKind::Recurrent, DecoderKind::SeqLab),
        vocab,
        None,
    )
    .unwrap();
    let err =
        train_supervised(model, &inputs(&[&unlabelled], &[], &corpus), &quick_cfg()).unwrap_err();
    assert!(matches!(err, Error::MissingLabels(_)));
}

#[test]
fn contextual_model_trains_and_reloads() {
    let corpus = synthetic_corpus(
        "ctx",
        &SynthSpec {
            documents: 10,
            ..SynthSpec::default()
        },
    );
    let docs: Vec<&Document> = corpus.documents.iter().collect();
    let store = common::random_store(&docs, StoreMode::Sentence, 12, 3);
    let model = Model::new(common::contextual_config(3), Vocab::default(), None).unwrap();
    let mut ins = inputs(&docs, &[], &corpus);
    ins.store = Some(&store);
    let out = train_supervised(
        model,
        &ins,
        &TrainConfig {
            max_epochs: 2,
            ..quick_cfg()
        },
    )
    .unwrap();
    assert!(out
        .checkpoint
        .tensors
        .iter()
        .any(|(n, _)| n == "embed.projection.hidden.w"));
    let reloaded = out.checkpoint.to_model().unwrap();
    let opts = RougeOptions::default();
    assert_eq!(
        evaluate(&out.model, &corpus, 2, Some(&store), &opts).unwrap(),
        evaluate(&reloaded, &corpus, 2, Some(&store), &opts).unwrap()
    );
    assert!(matches!(
        evaluate(&reloaded, &corpus, 2, None, &opts),
        Err(Error::Config(_))
    ));
}
