//! Analytic gradients of every trainable subgraph against central finite differences.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumprobe_core::autodiff::gradcheck::{check_gradients, perturb, GradCheckReport};
use sumprobe_core::autodiff::{Graph, Mat, ParamStore, Var};
use sumprobe_core::decoders::{DecoderKind, PointerDecoder, SeqLabHead};
use sumprobe_core::embeddings::{ContextualProjection, StoreMode, Vocab};
use sumprobe_core::encoders::{
    CnnSentenceEncoder, EncoderKind, RecurrentEncoder, SelfAttentionEncoder,
};
use sumprobe_core::training::{policy_loss, Model};

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

/// A fixed random linear functional of `y`, so every output entry contributes.
fn probe(g: &mut Graph, y: Var, seed: u64) -> Var {
    let (r, c) = g.shape(y);
    let w = g.input(random(r, c, seed));
    let m = g.mul(y, w);
    g.sum_all(m)
}

fn assert_close(what: &str, report: &GradCheckReport) {
    assert!(!report.tensors.is_empty(), "{what}: nothing checked");
    let worst = report.worst().unwrap();
    assert!(
        report.max_rel_error() < TOL,
        "{what}: {} rel error {:.3e}",
        worst.name,
        worst.rel_error
    );
}

#[test]
fn cnn_sentence_encoder_including_embedding_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut p = ParamStore::new();
    let table = p.add("words", random(7, 4, 2));
    let cnn = CnnSentenceEncoder::new(&mut p, "cnn", 4, 6, &mut rng).unwrap();
    perturb(&mut p, 0.1, 99);
    for rows in [
        vec![Some(0), Some(3), None, Some(3), Some(6), Some(1)],
        vec![Some(2)],
    ] {
        let fallback = random(rows.len(), 4, 3);
        let report = check_gradients(&p, STEP, None, |g| {
            let x = g.gather(table, &rows, &fallback);
            let y = cnn.forward(g, x);
            probe(g, y, 4)
        });
        assert_close("cnn", &report);
    }
}

#[test]
fn recurrent_document_encoder() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut p = ParamStore::new();
    let enc = RecurrentEncoder::new(&mut p, "rnn", 5, 2, 6, &mut rng);
    perturb(&mut p, 0.1, 99);
    let x = random(3, 5, 6);
    let report = check_gradients(&p, STEP, None, |g| {
        let xi = g.input(x.clone());
        let y = enc.forward(g, xi);
        probe(g, y, 7)
    });
    assert_close("lstm", &report);
}

#[test]
fn self_attention_document_encoder() {
    for (input, alpha, beta) in [(5, 1.0, 1.0), (8, 0.7, 2.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut p = ParamStore::new();
        let enc =
            SelfAttentionEncoder::new(&mut p, "sa", input, 2, 8, 2, 16, alpha, beta, &mut rng);
        perturb(&mut p, 0.1, 99);
        let x = random(4, input, 9);
        let report = check_gradients(&p, STEP, None, |g| {
            let xi = g.input(x.clone());
            let y = enc.forward(g, xi);
            probe(g, y, 10)
        });
        assert_close("transformer", &report);
    }
}

#[test]
fn seqlab_head_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut p = ParamStore::new();
    let head = SeqLabHead::new(&mut p, "h", 6, 7, &mut rng);
    perturb(&mut p, 0.1, 99);
    let ctx = random(5, 6, 12);
    let report = check_gradients(&p, STEP, None, |g| {
        let c = g.input(ctx.clone());
        head.loss(g, c, &[1, 0, 0, 1, 0])
    });
    assert_close("seqlab", &report);
}

#[test]
fn pointer_decoder_summed_log_probs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut p = ParamStore::new();
    let dec = PointerDecoder::new(&mut p, "ptr", 6, 5, 4, &mut rng);
    perturb(&mut p, 0.1, 99);
    let ctx = random(5, 6, 14);
    let report = check_gradients(&p, STEP, None, |g| {
        let c = g.input(ctx.clone());
        let lps = dec.stepwise_log_probs(g, c, &[3, 0, 4]).unwrap();
        let cat = g.concat_cols(&lps);
        g.sum_all(cat)
    });
    assert_close("pointer", &report);
}

#[test]
fn contextual_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut p = ParamStore::new();
    let proj = ContextualProjection::new(&mut p, "proj", 3, 8, &mut rng);
    perturb(&mut p, 0.1, 99);
    let raw = random(4, 12, 16);
    let report = check_gradients(&p, STEP, None, |g| {
        let x = g.input(raw.clone());
        let y = proj.forward(g, x).unwrap();
        let pooled = g.mean_rows(y);
        probe(g, pooled, 17)
    });
    assert_close("projection", &report);
}

#[test]
fn full_model_supervised_losses() {
    let doc = common::five_sentence_doc();
    let vocab = Vocab::build([&doc], 100);
    for enc in [EncoderKind::Recurrent, EncoderKind::SelfAttention] {
        for dec in [DecoderKind::SeqLab, DecoderKind::Pointer] {
            let mut model = Model::new(common::tiny_config(enc, dec), vocab.clone(), None).unwrap();
            perturb(&mut model.params, 0.1, 99);
            let prep = model.prepare(&doc, None).unwrap();
            let report = check_gradients(&model.params, STEP, None, |g| {
                model.supervised_loss(g, &prep).unwrap().unwrap()
            });
            assert_close(&format!("{enc:?}+{dec:?}"), &report);
        }
    }
}

#[test]
fn policy_gradient_loss_through_contextual_path() {
    let doc = common::five_sentence_doc();
    let cfg = common::contextual_config(3);
    let store = common::random_store(&[&doc], StoreMode::Document, 12, 18);
    let mut model = Model::new(cfg, Vocab::default(), None).unwrap();
    // Larger noise: at initialisation the pooled contextual inputs are small enough that the
    // decoder-state gradients sink below finite-difference resolution.
    perturb(&mut model.params, 0.5, 99);
    let prep = model.prepare(&doc, Some(&store)).unwrap();
    let report = check_gradients(&model.params, STEP, None, |g| {
        policy_loss(&model, g, &prep, &[1, 3], &[0.4, -0.25]).unwrap()
    });
    assert_close("policy loss", &report);
    for t in &report.tensors {
        assert!(t.analytic_norm > 1e-6, "{} carries no gradient", t.name);
    }
    assert!(report
        .tensors
        .iter()
        .any(|t| t.name.starts_with("embed.projection")));
}
