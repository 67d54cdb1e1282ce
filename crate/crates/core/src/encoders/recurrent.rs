use rand::Rng;

use crate::autodiff::{Graph, Mat, ParamStore, Var};
use crate::nn::{Linear, LstmCell};

/// Stacked bidirectional LSTM over the sentence sequence, with the two
/// directions concatenated and projected back to the model width.
#[derive(Debug, Clone)]
pub struct RecurrentEncoder {
    layers: Vec<(LstmCell, LstmCell)>,
    projection: Linear,
    pub width: usize,
}

impl RecurrentEncoder {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        input: usize,
        layers: usize,
        width: usize,
        rng: &mut R,
    ) -> Self {
        let mut stack = Vec::with_capacity(layers);
        let mut in_dim = input;
        for l in 0..layers {
            let fwd = LstmCell::new(params, &format!("{name}.l{l}.fwd"), in_dim, width, rng);
            let bwd = LstmCell::new(params, &format!("{name}.l{l}.bwd"), in_dim, width, rng);
            stack.push((fwd, bwd));
            in_dim = 2 * width;
        }
        let projection = Linear::new(params, &format!("{name}.proj"), 2 * width, width, true, rng);
        Self {
            layers: stack,
            projection,
            width,
        }
    }

    fn run(&self, g: &mut Graph, cell: &LstmCell, xs: Var, reverse: bool) -> Vec<Var> {
        let n = g.shape(xs).0;
        let projected = cell.project_inputs(g, xs);
        let mut h = g.input(Mat::zeros((1, cell.hidden)));
        let mut c = g.input(Mat::zeros((1, cell.hidden)));
        let mut out = vec![h; n];
        let order: Vec<usize> = if reverse {
            (0..n).rev().collect()
        } else {
            (0..n).collect()
        };
        for t in order {
            let p = g.row(projected, t);
            (h, c) = cell.step_projected(g, p, h, c);
            out[t] = h;
        }
        out
    }

    /// `sentences` is `n × input`; returns `n × width`.
    pub fn forward(&self, g: &mut Graph, sentences: Var) -> Var {
        let mut x = sentences;
        for (fwd, bwd) in &self.layers {
            let f = self.run(g, fwd, x, false);
            let b = self.run(g, bwd, x, true);
            let rows: Vec<Var> = f
                .into_iter()
                .zip(b)
                .map(|(f, b)| g.concat_cols(&[f, b]))
                .collect();
            x = g.concat_rows(&rows);
        }
        self.projection.forward(g, x)
    }
}
