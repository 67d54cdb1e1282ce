use rand::Rng;

use crate::autodiff::{sigmoid, Graph, Mat, ParamStore, Var};
use crate::corpus::ExtractionResult;
use crate::nn::Linear;

/// Per-sentence binary scorer: affine, tanh, affine to one logit.
#[derive(Debug, Clone)]
pub struct SeqLabHead {
    hidden: Linear,
    out: Linear,
}

impl SeqLabHead {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            hidden: Linear::new(params, &format!("{name}.hidden"), input, hidden, true, rng),
            out: Linear::new(params, &format!("{name}.out"), hidden, 1, true, rng),
        }
    }

    /// `n × 1` logits.
    pub fn logits(&self, g: &mut Graph, context: Var) -> Var {
        let h = self.hidden.forward(g, context);
        let h = g.tanh(h);
        self.out.forward(g, h)
    }

    pub fn probabilities(&self, params: &ParamStore, context: &Mat) -> Vec<f64> {
        let mut g = Graph::new(params);
        let x = g.input(context.clone());
        let l = self.logits(&mut g, x);
        g.value(l).iter().map(|&v| sigmoid(v)).collect()
    }

    /// Mean binary cross-entropy against 0/1 labels.
    pub fn loss(&self, g: &mut Graph, context: Var, labels: &[u8]) -> Var {
        let l = self.logits(g, context);
        let targets: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
        g.bce_with_logits(l, &targets)
    }
}

/// Indices of the `k` largest scores (ties to the lower index), in ascending document order.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k.min(scores.len()));
    order.sort_unstable();
    order
}

/// Select the top-k sentences from per-sentence probabilities.
pub fn decode_seqlab(doc_id: &str, probabilities: &[f64], k: usize) -> ExtractionResult {
    let selected = top_k_indices(probabilities, k);
    let scores = selected.iter().map(|&i| probabilities[i]).collect();
    ExtractionResult::new(doc_id, selected).with_scores(scores)
}
