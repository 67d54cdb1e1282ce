use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Mat, ParamId, ParamStore, Var};
use crate::corpus::{lead_k, Document, ExtractionResult};
use crate::decoders::{
    decode_pointer, decode_seqlab, Choice, DecoderConfig, DecoderKind, PointerDecoder, PointerStep,
    SeqLabHead,
};
use crate::embeddings::{
    oov_vector, random_table, ContextualProjection, ContextualStore, EmbeddingTable, Vocab,
    PROJECTED_WIDTH, PROJECTION_HIDDEN,
};
use crate::encoders::{CnnSentenceEncoder, DocumentEncoder, EncoderConfig, EncoderKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    /// Seeded uniform table over the training vocabulary.
    Random,
    /// Text table read from `embedding_path`.
    Pretrained,
    /// Frozen token vectors from a contextual store at `embedding_path`.
    Contextual,
}

/// Full model description. Flat so it maps onto one config-file section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding: EmbeddingKind,
    pub embedding_path: Option<PathBuf>,
    pub train_embeddings: bool,
    pub word_dim: usize,
    /// CNN sentence width d_s (ignored on the contextual path, which yields 128).
    pub sentence_dim: usize,
    /// Per-layer width of the contextual features; stores hold 4 × this.
    pub layer_width: usize,
    pub projection_hidden: usize,

    pub encoder: EncoderKind,
    pub layers: usize,
    pub width: usize,
    pub heads: usize,
    pub ff_mult: usize,
    pub alpha: f64,
    pub beta: f64,
    pub allow_zero_mix: bool,

    pub decoder: DecoderKind,
    pub decoder_hidden: usize,
    pub decoder_state: usize,
    pub attention: usize,

    pub max_sentences: usize,
    pub max_tokens: usize,
    pub max_vocab: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let enc = EncoderConfig::recurrent();
        let dec = DecoderConfig::default();
        Self {
            embedding: EmbeddingKind::Random,
            embedding_path: None,
            train_embeddings: true,
            word_dim: 100,
            sentence_dim: 300,
            layer_width: 768,
            projection_hidden: PROJECTION_HIDDEN,
            encoder: enc.kind,
            layers: enc.layers,
            width: enc.width,
            heads: enc.heads,
            ff_mult: enc.ff_mult,
            alpha: enc.alpha,
            beta: enc.beta,
            allow_zero_mix: false,
            decoder: dec.kind,
            decoder_hidden: dec.hidden,
            decoder_state: dec.state,
            attention: dec.attention,
            max_sentences: 50,
            max_tokens: 100,
            max_vocab: 50_000,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            kind: self.encoder,
            layers: self.layers,
            width: self.width,
            heads: self.heads,
            ff_mult: self.ff_mult,
            alpha: self.alpha,
            beta: self.beta,
            allow_zero_mix: self.allow_zero_mix,
        }
    }

    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            kind: self.decoder,
            hidden: self.decoder_hidden,
            state: self.decoder_state,
            attention: self.attention,
        }
    }

    /// Short human-readable cell label, e.g. `LSTM+Pointer`.
    pub fn label(&self) -> String {
        if self.decoder == DecoderKind::Lead {
            return "Lead".into();
        }
        format!("{}+{}", self.encoder.label(), self.decoder.label())
    }

    pub fn validate(&self) -> Result<()> {
        if self.decoder != DecoderKind::Lead {
            self.encoder_config().validate()?;
        }
        if self.max_sentences == 0 || self.max_tokens == 0 {
            return Err(Error::Config("truncation limits must be positive".into()));
        }
        if matches!(
            self.embedding,
            EmbeddingKind::Pretrained | EmbeddingKind::Contextual
        ) && self.embedding_path.is_none()
            && self.decoder != DecoderKind::Lead
        {
            return Err(Error::Config(
                "embedding_path is required for this embedding kind".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Head {
    SeqLab(SeqLabHead),
    Pointer(PointerDecoder),
    Lead,
}

#[derive(Debug, Clone)]
enum SentenceInput {
    /// Table rows for in-vocabulary tokens; the fallback holds OOV vectors.
    Words {
        rows: Vec<Option<usize>>,
        fallback: Mat,
    },
    /// Raw token features, or `None` past the contextual truncation point.
    Contextual(Option<Mat>),
}

/// A document turned into model inputs (after sentence/token truncation).
#[derive(Debug, Clone)]
pub struct PreparedDoc {
    pub id: String,
    /// Sentence count after truncation.
    pub len: usize,
    inputs: Vec<SentenceInput>,
    /// Oracle labels truncated to `len`.
    pub labels: Option<Vec<u8>>,
}

impl PreparedDoc {
    /// Oracle indices in ascending document order.
    pub fn oracle_order(&self) -> Option<Vec<usize>> {
        self.labels
            .as_ref()
            .map(|l| (0..l.len()).filter(|&i| l[i] == 1).collect())
    }
}

/// Sentence encoder, document encoder and decoder sharing one parameter store.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub vocab: Vocab,
    words: Option<ParamId>,
    cnn: Option<CnnSentenceEncoder>,
    projection: Option<ContextualProjection>,
    encoder: Option<DocumentEncoder>,
    head: Head,
}

impl Model {
    /// Initialise a model. `table` must be given for pretrained embeddings; random tables
    /// are generated from the vocabulary and the model seed.
    pub fn new(
        mut config: ModelConfig,
        vocab: Vocab,
        table: Option<&EmbeddingTable>,
    ) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        if config.decoder == DecoderKind::Lead {
            return Ok(Self {
                config,
                params,
                vocab,
                words: None,
                cnn: None,
                projection: None,
                encoder: None,
                head: Head::Lead,
            });
        }

        let (words, cnn, projection, sentence_width) = match config.embedding {
            EmbeddingKind::Contextual => {
                let proj = ContextualProjection::new(
                    &mut params,
                    "embed.projection",
                    config.layer_width,
                    config.projection_hidden,
                    &mut rng,
                );
                (None, None, Some(proj), PROJECTED_WIDTH)
            }
            kind => {
                let generated;
                let table = match (kind, table) {
                    (_, Some(t)) => t,
                    (EmbeddingKind::Random, None) => {
                        if vocab.is_empty() {
                            return Err(Error::Config(
                                "cannot build embeddings for an empty vocabulary".into(),
                            ));
                        }
                        generated = random_table(&vocab, config.word_dim, config.seed)?;
                        &generated
                    }
                    _ => {
                        return Err(Error::Config(
                            "pretrained embeddings need a loaded table".into(),
                        ))
                    }
                };
                if table.vocab != vocab {
                    return Err(Error::Config(
                        "embedding table vocabulary differs from model vocabulary".into(),
                    ));
                }
                config.word_dim = table.dim();
                let id = if config.train_embeddings {
                    params.add("embed.words", table.vectors.clone())
                } else {
                    params.add_frozen("embed.words", table.vectors.clone())
                };
                let cnn = CnnSentenceEncoder::new(
                    &mut params,
                    "sentence.cnn",
                    config.word_dim,
                    config.sentence_dim,
                    &mut rng,
                )?;
                (Some(id), Some(cnn), None, config.sentence_dim)
            }
        };

        let encoder = DocumentEncoder::new(
            &mut params,
            "document",
            sentence_width,
            &config.encoder_config(),
            &mut rng,
        )?;
        let context_width = encoder.output_width();
        let head = match config.decoder {
            DecoderKind::SeqLab => Head::SeqLab(SeqLabHead::new(
                &mut params,
                "decoder.seqlab",
                context_width,
                config.decoder_hidden,
                &mut rng,
            )),
            DecoderKind::Pointer => Head::Pointer(PointerDecoder::new(
                &mut params,
                "decoder.pointer",
                context_width,
                config.decoder_state,
                config.attention,
                &mut rng,
            )),
            DecoderKind::Lead => unreachable!(),
        };
        Ok(Self {
            config,
            params,
            vocab,
            words,
            cnn,
            projection,
            encoder: Some(encoder),
            head,
        })
    }

    pub fn decoder_kind(&self) -> DecoderKind {
        self.config.decoder
    }

    pub fn pointer(&self) -> Option<&PointerDecoder> {
        match &self.head {
            Head::Pointer(p) => Some(p),
            _ => None,
        }
    }

    pub fn needs_store(&self) -> bool {
        self.config.embedding == EmbeddingKind::Contextual
            && self.config.decoder != DecoderKind::Lead
    }

    /// Truncate and look up one document.
    pub fn prepare(&self, doc: &Document, store: Option<&ContextualStore>) -> Result<PreparedDoc> {
        if doc.is_empty() {
            return Err(Error::InvalidDocument {
                id: doc.id.clone(),
                reason: "no sentences".into(),
            });
        }
        let len = doc.len().min(self.config.max_sentences);
        let labels = doc
            .oracle_labels
            .as_ref()
            .map(|l| l[..len.min(l.len())].to_vec());
        let mut inputs = Vec::new();
        match self.head {
            Head::Lead => {}
            _ if self.projection.is_some() => {
                let store = store.ok_or_else(|| {
                    Error::Config("contextual embeddings need a loaded store".into())
                })?;
                for i in 0..len {
                    inputs.push(SentenceInput::Contextual(store.sentence_tokens(doc, i)?));
                }
            }
            _ => {
                for sentence in &doc.sentences[..len] {
                    let tokens = &sentence[..sentence.len().min(self.config.max_tokens)];
                    let rows: Vec<Option<usize>> =
                        tokens.iter().map(|t| self.vocab.get(t)).collect();
                    let mut fallback = Mat::zeros((tokens.len(), self.config.word_dim));
                    for (j, t) in tokens.iter().enumerate() {
                        if rows[j].is_none() {
                            fallback
                                .row_mut(j)
                                .assign(&oov_vector(t, self.config.word_dim));
                        }
                    }
                    inputs.push(SentenceInput::Words { rows, fallback });
                }
            }
        }
        Ok(PreparedDoc {
            id: doc.id.clone(),
            len,
            inputs,
            labels,
        })
    }

    /// `n × d_s` sentence representations.
    pub fn sentence_reps(&self, g: &mut Graph, doc: &PreparedDoc) -> Result<Var> {
        let mut rows = Vec::with_capacity(doc.len);
        for input in &doc.inputs {
            let rep = match input {
                SentenceInput::Words {
                    rows: idx,
                    fallback,
                } => {
                    let cnn = self.cnn.as_ref().expect("word path has a CNN");
                    let tokens = if idx.is_empty() {
                        g.input(Mat::zeros((1, self.config.word_dim)))
                    } else {
                        g.gather(self.words.expect("word path has a table"), idx, fallback)
                    };
                    cnn.forward(g, tokens)
                }
                SentenceInput::Contextual(Some(raw)) => {
                    let proj = self
                        .projection
                        .as_ref()
                        .expect("contextual path has a projection");
                    let x = g.input(raw.clone());
                    let y = proj.forward(g, x)?;
                    g.mean_rows(y)
                }
                SentenceInput::Contextual(None) => g.input(Mat::zeros((1, PROJECTED_WIDTH))),
            };
            rows.push(rep);
        }
        Ok(g.concat_rows(&rows))
    }

    /// `n × d_c` contextualised sentence representations.
    pub fn context(&self, g: &mut Graph, doc: &PreparedDoc) -> Result<Var> {
        let encoder = self
            .encoder
            .as_ref()
            .ok_or_else(|| Error::Config("the lead control has no encoder".into()))?;
        let reps = self.sentence_reps(g, doc)?;
        Ok(encoder.forward(g, reps))
    }

    /// Supervised loss for one document; `None` when the pointer has no oracle target
    /// (or the model has no parameters).
    pub fn supervised_loss(&self, g: &mut Graph, doc: &PreparedDoc) -> Result<Option<Var>> {
        if matches!(self.head, Head::Lead) {
            return Ok(None);
        }
        let labels = doc
            .labels
            .as_ref()
            .ok_or_else(|| Error::MissingLabels(doc.id.clone()))?;
        if labels.len() != doc.len {
            return Err(Error::InvalidDocument {
                id: doc.id.clone(),
                reason: "label count differs from sentence count".into(),
            });
        }
        match &self.head {
            Head::SeqLab(head) => {
                let ctx = self.context(g, doc)?;
                Ok(Some(head.loss(g, ctx, labels)))
            }
            Head::Pointer(ptr) => {
                let order = doc.oracle_order().unwrap_or_default();
                if order.is_empty() {
                    return Ok(None);
                }
                let ctx = self.context(g, doc)?;
                let lps = ptr.stepwise_log_probs(g, ctx, &order)?;
                let cat = g.concat_cols(&lps);
                let sum = g.sum_all(cat);
                Ok(Some(g.scale(sum, -1.0 / order.len() as f64)))
            }
            Head::Lead => unreachable!(),
        }
    }

    /// Sample `k` pointer steps for policy-gradient training.
    pub fn sample<R: Rng>(
        &self,
        g: &mut Graph,
        doc: &PreparedDoc,
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<PointerStep>> {
        let Head::Pointer(ptr) = &self.head else {
            return Err(Error::Config(
                "policy-gradient training needs the pointer decoder".into(),
            ));
        };
        let ctx = self.context(g, doc)?;
        ptr.rollout(g, ctx, k.min(doc.len), Choice::Sample(rng))
    }

    /// Greedy extraction of `min(k, n)` sentences.
    pub fn extract(&self, doc: &PreparedDoc, k: usize) -> Result<ExtractionResult> {
        let k = k.min(doc.len);
        match &self.head {
            Head::Lead => Ok(ExtractionResult::new(doc.id.clone(), (0..k).collect())),
            Head::SeqLab(head) => {
                let mut g = Graph::new(&self.params);
                let ctx = self.context(&mut g, doc)?;
                let ctx = g.value(ctx).clone();
                let probs = head.probabilities(&self.params, &ctx);
                Ok(decode_seqlab(&doc.id, &probs, k))
            }
            Head::Pointer(ptr) => {
                let mut g = Graph::new(&self.params);
                let ctx = self.context(&mut g, doc)?;
                let ctx = g.value(ctx).clone();
                decode_pointer(ptr, &self.params, &doc.id, &ctx, k)
            }
        }
    }

    /// Greedy extraction straight from a document.
    pub fn extract_document(
        &self,
        doc: &Document,
        store: Option<&ContextualStore>,
        k: usize,
    ) -> Result<ExtractionResult> {
        if matches!(self.head, Head::Lead) {
            return Ok(lead_k(doc, k));
        }
        self.extract(&self.prepare(doc, store)?, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Document {
        let s = |x: &str| x.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        Document::new(
            "t",
            vec![s("a b c"), s("d e"), s("a zz"), s("f")],
            vec![s("a b d")],
        )
        .with_labels(vec![1, 0, 1, 0])
    }

    fn small(decoder: DecoderKind, encoder: EncoderKind) -> ModelConfig {
        ModelConfig {
            word_dim: 4,
            sentence_dim: 6,
            encoder,
            layers: 1,
            width: 8,
            heads: 2,
            ff_mult: 2,
            decoder,
            decoder_hidden: 5,
            decoder_state: 5,
            attention: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn every_combination_runs() {
        let doc = toy();
        let vocab = Vocab::build([&doc], 100);
        for enc in [EncoderKind::Recurrent, EncoderKind::SelfAttention] {
            for dec in [DecoderKind::SeqLab, DecoderKind::Pointer] {
                let m = Model::new(small(dec, enc), vocab.clone(), None).unwrap();
                let p = m.prepare(&doc, None).unwrap();
                let mut g = Graph::new(&m.params);
                let loss = m.supervised_loss(&mut g, &p).unwrap().unwrap();
                assert!(g.scalar(loss).is_finite());
                let r = m.extract(&p, 2).unwrap();
                assert_eq!(r.selected.len(), 2);
                assert_eq!(m.extract(&p, 9).unwrap().selected.len(), 4);
            }
        }
    }

    #[test]
    fn truncation_applies_to_sentences_and_labels() {
        let doc = toy();
        let mut cfg = small(DecoderKind::SeqLab, EncoderKind::Recurrent);
        cfg.max_sentences = 2;
        let m = Model::new(cfg, Vocab::build([&doc], 100), None).unwrap();
        let p = m.prepare(&doc, None).unwrap();
        assert_eq!(p.len, 2);
        assert_eq!(p.labels.as_deref(), Some(&[1, 0][..]));
    }

    #[test]
    fn lead_control_has_no_parameters() {
        let m = Model::new(
            small(DecoderKind::Lead, EncoderKind::Recurrent),
            Vocab::default(),
            None,
        )
        .unwrap();
        assert!(m.params.is_empty());
        assert_eq!(
            m.extract_document(&toy(), None, 3).unwrap().selected,
            vec![0, 1, 2]
        );
    }

    #[test]
    fn missing_labels_are_an_error() {
        let mut doc = toy();
        doc.oracle_labels = None;
        let m = Model::new(
            small(DecoderKind::SeqLab, EncoderKind::Recurrent),
            Vocab::build([&doc], 10),
            None,
        )
        .unwrap();
        let p = m.prepare(&doc, None).unwrap();
        let mut g = Graph::new(&m.params);
        assert!(matches!(
            m.supervised_loss(&mut g, &p),
            Err(Error::MissingLabels(_))
        ));
    }
}
