//! Parameterised building blocks shared by encoders and decoders.

use rand::Rng;

use crate::autodiff::{Graph, ParamId, ParamStore, Var};

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let w = params.add_xavier(format!("{name}.w"), input, output, rng);
        let b = bias.then(|| params.add_zeros(format!("{name}.b"), 1, output));
        Self {
            w,
            b,
            input,
            output,
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let w = g.param(self.w);
        let y = g.matmul(x, w);
        match self.b {
            Some(b) => {
                let b = g.param(b);
                g.add_row(y, b)
            }
            None => y,
        }
    }
}

/// Row-wise layer normalisation with learned gain and bias.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub const EPS: f64 = 1e-5;

    pub fn new(params: &mut ParamStore, name: &str, width: usize) -> Self {
        let gain = params.add(format!("{name}.gain"), ndarray::Array2::ones((1, width)));
        let bias = params.add_zeros(format!("{name}.bias"), 1, width);
        Self { gain, bias }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let n = g.layer_norm_rows(x, Self::EPS);
        let gain = g.param(self.gain);
        let bias = g.param(self.bias);
        let y = g.mul_row(n, gain);
        g.add_row(y, bias)
    }
}

/// Long short-term memory cell with fused gate weights (input, forget, cell, output order).
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub w_input: ParamId,
    pub w_hidden: ParamId,
    pub bias: ParamId,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w_input = params.add_xavier(format!("{name}.w_ih"), input, 4 * hidden, rng);
        let w_hidden = params.add_xavier(format!("{name}.w_hh"), hidden, 4 * hidden, rng);
        // Forget-gate bias starts at 1.
        let mut b = ndarray::Array2::zeros((1, 4 * hidden));
        b.slice_mut(ndarray::s![.., hidden..2 * hidden]).fill(1.0);
        let bias = params.add(format!("{name}.b"), b);
        Self {
            w_input,
            w_hidden,
            bias,
            hidden,
        }
    }

    /// Input projection for a whole sequence at once (rows are time steps), bias included.
    pub fn project_inputs(&self, g: &mut Graph, xs: Var) -> Var {
        let w = g.param(self.w_input);
        let b = g.param(self.bias);
        let p = g.matmul(xs, w);
        g.add_row(p, b)
    }

    /// One step from a pre-projected input row (1 × 4h).
    pub fn step_projected(&self, g: &mut Graph, projected: Var, h: Var, c: Var) -> (Var, Var) {
        let u = g.param(self.w_hidden);
        let rec = g.matmul(h, u);
        let gates = g.add(projected, rec);
        let hd = self.hidden;
        let i = g.slice_cols(gates, 0, hd);
        let f = g.slice_cols(gates, hd, hd);
        let cand = g.slice_cols(gates, 2 * hd, hd);
        let o = g.slice_cols(gates, 3 * hd, hd);
        let i = g.sigmoid(i);
        let f = g.sigmoid(f);
        let cand = g.tanh(cand);
        let o = g.sigmoid(o);
        let keep = g.mul(f, c);
        let write = g.mul(i, cand);
        let c_next = g.add(keep, write);
        let squashed = g.tanh(c_next);
        let h_next = g.mul(o, squashed);
        (h_next, c_next)
    }

    pub fn step(&self, g: &mut Graph, x: Var, h: Var, c: Var) -> (Var, Var) {
        let p = self.project_inputs(g, x);
        self.step_projected(g, p, h, c)
    }
}
