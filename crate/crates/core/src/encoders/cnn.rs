use ndarray::Array1;
use rand::Rng;

use crate::autodiff::{Graph, Mat, ParamStore, Var};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nn::Linear;

pub const KERNEL_WIDTHS: [usize; 3] = [3, 4, 5];

/// Convolutional sentence encoder: one filter bank per kernel width, ReLU,
/// max-over-time pooling, concatenation.
#[derive(Debug, Clone)]
pub struct CnnSentenceEncoder {
    pub word_dim: usize,
    pub output_dim: usize,
    banks: Vec<(usize, Linear)>,
}

impl CnnSentenceEncoder {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        word_dim: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if output_dim == 0 || !output_dim.is_multiple_of(KERNEL_WIDTHS.len()) {
            return Err(Error::Config(format!(
                "sentence width {output_dim} must be a positive multiple of {}",
                KERNEL_WIDTHS.len()
            )));
        }
        let channels = output_dim / KERNEL_WIDTHS.len();
        let banks = KERNEL_WIDTHS
            .iter()
            .map(|&w| {
                let lin = Linear::new(
                    params,
                    &format!("{name}.conv{w}"),
                    w * word_dim,
                    channels,
                    true,
                    rng,
                );
                (w, lin)
            })
            .collect();
        Ok(Self {
            word_dim,
            output_dim,
            banks,
        })
    }

    /// `tokens` is `len × word_dim`; returns `1 × output_dim`.
    pub fn forward(&self, g: &mut Graph, tokens: Var) -> Var {
        let (len, dim) = g.shape(tokens);
        debug_assert_eq!(dim, self.word_dim);
        let widest = *KERNEL_WIDTHS.iter().max().unwrap();
        let (x, len) = if len < widest {
            let pad = g.input(Mat::zeros((widest - len, dim)));
            (g.concat_rows(&[tokens, pad]), widest)
        } else {
            (tokens, len)
        };
        let mut pooled = Vec::with_capacity(self.banks.len());
        for (w, lin) in &self.banks {
            let windows = len - w + 1;
            let shifted: Vec<Var> = (0..*w).map(|j| g.slice_rows(x, j, windows)).collect();
            let unfolded = g.concat_cols(&shifted);
            let conv = lin.forward(g, unfolded);
            let act = g.relu(conv);
            pooled.push(g.max_rows(act));
        }
        g.concat_cols(&pooled)
    }

    /// Encode one sentence whose words are looked up in `table`.
    pub fn encode_sentence(
        &self,
        params: &ParamStore,
        tokens: &[String],
        table: &EmbeddingTable,
    ) -> Array1<f64> {
        let mut m = Mat::zeros((tokens.len(), table.dim()));
        for (i, t) in tokens.iter().enumerate() {
            m.row_mut(i).assign(&table.lookup(t));
        }
        let mut g = Graph::new(params);
        let x = g.input(m);
        let y = self.forward(&mut g, x);
        g.value(y).row(0).to_owned()
    }
}
