use rand::Rng;

use crate::autodiff::{Graph, Mat, ParamStore, Var};
use crate::nn::{LayerNorm, Linear};

/// Fixed sinusoidal position table, `n × d`. Even columns use sine, odd columns cosine.
pub fn sinusoidal_positions(n: usize, d: usize) -> Mat {
    Mat::from_shape_fn((n, d), |(pos, j)| {
        let pair = (j / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

#[derive(Debug, Clone)]
struct Block {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
    norm_attn: LayerNorm,
    ff_in: Linear,
    ff_out: Linear,
    norm_ff: LayerNorm,
}

/// Multi-head self-attention stack over sentences. The input row for
/// sentence `i` is `alpha · d_i + beta · PE(i)`.
#[derive(Debug, Clone)]
pub struct SelfAttentionEncoder {
    input_proj: Option<Linear>,
    blocks: Vec<Block>,
    pub width: usize,
    pub heads: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl SelfAttentionEncoder {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        input: usize,
        layers: usize,
        width: usize,
        heads: usize,
        ff_width: usize,
        alpha: f64,
        beta: f64,
        rng: &mut R,
    ) -> Self {
        let input_proj = (input != width)
            .then(|| Linear::new(params, &format!("{name}.in"), input, width, false, rng));
        let blocks = (0..layers)
            .map(|l| {
                let p = format!("{name}.b{l}");
                Block {
                    q: Linear::new(params, &format!("{p}.q"), width, width, true, rng),
                    k: Linear::new(params, &format!("{p}.k"), width, width, true, rng),
                    v: Linear::new(params, &format!("{p}.v"), width, width, true, rng),
                    o: Linear::new(params, &format!("{p}.o"), width, width, true, rng),
                    norm_attn: LayerNorm::new(params, &format!("{p}.ln1"), width),
                    ff_in: Linear::new(params, &format!("{p}.ff1"), width, ff_width, true, rng),
                    ff_out: Linear::new(params, &format!("{p}.ff2"), ff_width, width, true, rng),
                    norm_ff: LayerNorm::new(params, &format!("{p}.ln2"), width),
                }
            })
            .collect();
        Self {
            input_proj,
            blocks,
            width,
            heads,
            alpha,
            beta,
        }
    }

    fn attention(&self, g: &mut Graph, block: &Block, x: Var) -> Var {
        let q = block.q.forward(g, x);
        let k = block.k.forward(g, x);
        let v = block.v.forward(g, x);
        let head = self.width / self.heads;
        let scale = 1.0 / (head as f64).sqrt();
        let mut outs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = g.slice_cols(q, h * head, head);
            let kh = g.slice_cols(k, h * head, head);
            let vh = g.slice_cols(v, h * head, head);
            let kt = g.transpose(kh);
            let scores = g.matmul(qh, kt);
            let scores = g.scale(scores, scale);
            let weights = g.softmax_rows(scores, None);
            outs.push(g.matmul(weights, vh));
        }
        let joined = g.concat_cols(&outs);
        block.o.forward(g, joined)
    }

    /// `sentences` is `n × input`; returns `n × width`.
    pub fn forward(&self, g: &mut Graph, sentences: Var) -> Var {
        let n = g.shape(sentences).0;
        let content = match &self.input_proj {
            Some(p) => p.forward(g, sentences),
            None => sentences,
        };
        let content = g.scale(content, self.alpha);
        let pe = g.input(sinusoidal_positions(n, self.width) * self.beta);
        let mut x = g.add(content, pe);
        for block in &self.blocks {
            let a = self.attention(g, block, x);
            let r = g.add(x, a);
            x = block.norm_attn.forward(g, r);
            let h = block.ff_in.forward(g, x);
            let h = g.relu(h);
            let f = block.ff_out.forward(g, h);
            let r = g.add(x, f);
            x = block.norm_ff.forward(g, r);
        }
        x
    }
}
