//! Sentence encoder (convolutional) and document encoders (recurrent, self-attention).

mod cnn;
mod recurrent;
mod selfattn;

pub use cnn::{CnnSentenceEncoder, KERNEL_WIDTHS};
pub use recurrent::RecurrentEncoder;
pub use selfattn::{sinusoidal_positions, SelfAttentionEncoder};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Mat, ParamStore, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Recurrent,
    SelfAttention,
}

impl EncoderKind {
    pub fn label(self) -> &'static str {
        match self {
            EncoderKind::Recurrent => "LSTM",
            EncoderKind::SelfAttention => "Transformer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub layers: usize,
    pub width: usize,
    pub heads: usize,
    /// Feed-forward width as a multiple of `width`.
    pub ff_mult: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Permit α = β = 0 (an input with neither content nor position).
    pub allow_zero_mix: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self::recurrent()
    }
}

impl EncoderConfig {
    /// 2 layers × 512.
    pub fn recurrent() -> Self {
        Self {
            kind: EncoderKind::Recurrent,
            layers: 2,
            width: 512,
            heads: 8,
            ff_mult: 4,
            alpha: 1.0,
            beta: 1.0,
            allow_zero_mix: false,
        }
    }

    /// 4 layers × 512, 8 heads.
    pub fn self_attention() -> Self {
        Self {
            kind: EncoderKind::SelfAttention,
            layers: 4,
            ..Self::recurrent()
        }
    }

    /// The recurrent depth × width grid searched for the LSTM encoder.
    pub fn recurrent_grid() -> Vec<EncoderConfig> {
        let mut out = Vec::new();
        for layers in [2, 4, 6, 8] {
            for width in [512, 1024, 2048] {
                out.push(EncoderConfig {
                    layers,
                    width,
                    ..Self::recurrent()
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.width == 0 {
            return Err(Error::Config(
                "encoder needs at least one layer and positive width".into(),
            ));
        }
        if self.kind == EncoderKind::SelfAttention {
            if self.heads == 0 || !self.width.is_multiple_of(self.heads) {
                return Err(Error::Config(format!(
                    "width {} is not divisible by {} heads",
                    self.width, self.heads
                )));
            }
            if !(self.alpha >= 0.0 && self.beta >= 0.0) {
                return Err(Error::Config(
                    "mixing coefficients must be non-negative".into(),
                ));
            }
            if self.alpha == 0.0 && self.beta == 0.0 && !self.allow_zero_mix {
                return Err(Error::Config("alpha and beta are both zero".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum DocumentEncoder {
    Recurrent(RecurrentEncoder),
    SelfAttention(SelfAttentionEncoder),
}

impl DocumentEncoder {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        input: usize,
        cfg: &EncoderConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.kind {
            EncoderKind::Recurrent => DocumentEncoder::Recurrent(RecurrentEncoder::new(
                params, name, input, cfg.layers, cfg.width, rng,
            )),
            EncoderKind::SelfAttention => {
                DocumentEncoder::SelfAttention(SelfAttentionEncoder::new(
                    params,
                    name,
                    input,
                    cfg.layers,
                    cfg.width,
                    cfg.heads,
                    cfg.ff_mult * cfg.width,
                    cfg.alpha,
                    cfg.beta,
                    rng,
                ))
            }
        })
    }

    pub fn output_width(&self) -> usize {
        match self {
            DocumentEncoder::Recurrent(e) => e.width,
            DocumentEncoder::SelfAttention(e) => e.width,
        }
    }

    pub fn forward(&self, g: &mut Graph, sentences: Var) -> Var {
        match self {
            DocumentEncoder::Recurrent(e) => e.forward(g, sentences),
            DocumentEncoder::SelfAttention(e) => e.forward(g, sentences),
        }
    }
}

/// Sentence and contextualised representations of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDocument {
    pub sentence_reps: Mat,
    pub context_reps: Mat,
    pub fingerprint: String,
}

fn check_finite(m: &Mat) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "non-finite sentence representation".into(),
        ))
    }
}

/// Contextualise sentence representations with a document encoder.
pub fn encode_document(
    encoder: &DocumentEncoder,
    params: &ParamStore,
    sentence_reps: &Mat,
) -> Result<Mat> {
    check_finite(sentence_reps)?;
    if sentence_reps.nrows() == 0 {
        return Err(Error::InvalidInput("document without sentences".into()));
    }
    let mut g = Graph::new(params);
    let x = g.input(sentence_reps.clone());
    let y = encoder.forward(&mut g, x);
    Ok(g.value(y).clone())
}

pub fn encode_document_recurrent(
    encoder: &RecurrentEncoder,
    params: &ParamStore,
    sentence_reps: &Mat,
) -> Result<Mat> {
    check_finite(sentence_reps)?;
    let mut g = Graph::new(params);
    let x = g.input(sentence_reps.clone());
    let y = encoder.forward(&mut g, x);
    Ok(g.value(y).clone())
}

pub fn encode_document_selfattn(
    encoder: &SelfAttentionEncoder,
    params: &ParamStore,
    sentence_reps: &Mat,
) -> Result<Mat> {
    check_finite(sentence_reps)?;
    let mut g = Graph::new(params);
    let x = g.input(sentence_reps.clone());
    let y = encoder.forward(&mut g, x);
    Ok(g.value(y).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn config_validation() {
        let mut c = EncoderConfig::self_attention();
        c.heads = 3;
        assert!(c.validate().is_err());
        let mut c = EncoderConfig::self_attention();
        c.alpha = 0.0;
        c.beta = 0.0;
        assert!(c.validate().is_err());
        c.allow_zero_mix = true;
        assert!(c.validate().is_ok());
        assert_eq!(EncoderConfig::recurrent_grid().len(), 12);
    }

    #[test]
    fn single_sentence_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for cfg in [
            EncoderConfig {
                width: 8,
                heads: 2,
                ..EncoderConfig::recurrent()
            },
            EncoderConfig {
                width: 8,
                heads: 2,
                layers: 1,
                ..EncoderConfig::self_attention()
            },
        ] {
            let mut p = ParamStore::new();
            let enc = DocumentEncoder::new(&mut p, "enc", 6, &cfg, &mut rng).unwrap();
            let out = encode_document(&enc, &p, &random(1, 6, 2)).unwrap();
            assert_eq!(out.dim(), (1, 8));
            let out = encode_document(&enc, &p, &random(4, 6, 3)).unwrap();
            assert_eq!(out.dim(), (4, 8));
        }
    }

    #[test]
    fn recurrent_is_order_sensitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = ParamStore::new();
        let enc = RecurrentEncoder::new(&mut p, "rnn", 4, 1, 6, &mut rng);
        let x = random(3, 4, 9);
        let mut rev = x.clone();
        for i in 0..3 {
            rev.row_mut(i).assign(&x.row(2 - i));
        }
        let a = encode_document_recurrent(&enc, &p, &x).unwrap();
        let b = encode_document_recurrent(&enc, &p, &rev).unwrap();
        // Row 0 of `a` and row 2 of `b` see the same sentence but different contexts.
        assert!((&a.row(0) - &b.row(2)).iter().any(|d| d.abs() > 1e-6));
        let mut bad = x.clone();
        bad[[0, 0]] = f64::NAN;
        assert!(encode_document_recurrent(&enc, &p, &bad).is_err());
    }

    #[test]
    fn cnn_output_width_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = ParamStore::new();
        let cnn = CnnSentenceEncoder::new(&mut p, "cnn", 4, 9, &mut rng).unwrap();
        for len in [1, 3, 7, 20] {
            let mut g = Graph::new(&p);
            let x = g.input(random(len, 4, len as u64));
            let y = cnn.forward(&mut g, x);
            assert_eq!(g.shape(y), (1, 9));
        }
        assert!(CnnSentenceEncoder::new(&mut p, "bad", 4, 10, &mut rng).is_err());
    }

    #[test]
    fn duplicating_the_max_token_keeps_pooled_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = ParamStore::new();
        let cnn = CnnSentenceEncoder::new(&mut p, "cnn", 1, 3, &mut rng).unwrap();
        // With one-dimensional words, windows of identical maximal tokens dominate.
        let run = |rows: Vec<f64>| {
            let mut g = Graph::new(&p);
            let n = rows.len();
            let x = g.input(Mat::from_shape_vec((n, 1), rows).unwrap());
            let y = cnn.forward(&mut g, x);
            g.value(y).clone()
        };
        let base = vec![0.1, 0.9, 0.9, 0.9, 0.9, 0.9, -0.2];
        let mut dup = base.clone();
        dup.insert(3, 0.9);
        assert_eq!(run(base), run(dup));
    }
}
