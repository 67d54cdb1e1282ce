//! Auto-regressive pointer decoder with a glimpse attention pass.
//!
//! At step t with decoder state h:
//!   glimpse scores  e_i = v_g · tanh(W_g1 s_i + W_g2 h), a = softmax(e)
//!   glimpse vector  g   = Σ a_i W_g1 s_i
//!   pointer scores  u_i = v_p · tanh(W_p1 s_i + W_p2 g)
//! Already-selected sentences are masked out of both softmaxes. The next
//! decoder input is the context vector of the sentence just selected.

use rand::Rng;

use crate::autodiff::{Graph, Mat, ParamId, ParamStore, Var};
use crate::corpus::ExtractionResult;
use crate::error::{Error, Result};
use crate::nn::{Linear, LstmCell};

#[derive(Debug, Clone)]
pub struct PointerDecoder {
    cell: LstmCell,
    init: Linear,
    start: ParamId,
    glimpse_ctx: Linear,
    glimpse_state: Linear,
    glimpse_v: ParamId,
    pointer_ctx: Linear,
    pointer_glimpse: Linear,
    pointer_v: ParamId,
    pub state_width: usize,
}

/// One decoding step.
#[derive(Debug, Clone)]
pub struct PointerStep {
    pub index: usize,
    /// Log-probability of `index` (a 1×1 node).
    pub log_prob: Var,
    /// The full pointer distribution at this step (masked entries are exactly zero).
    pub probs: Vec<f64>,
    pub glimpse: Vec<f64>,
}

/// How the next index is chosen during a rollout.
pub enum Choice<'a, R: Rng> {
    Greedy,
    Sample(&'a mut R),
    Forced(&'a [usize]),
}

impl PointerDecoder {
    pub fn new<R: Rng>(
        params: &mut ParamStore,
        name: &str,
        context_width: usize,
        state_width: usize,
        attention_width: usize,
        rng: &mut R,
    ) -> Self {
        let lin = |p: &mut ParamStore, n: &str, i, o, b, r: &mut R| {
            Linear::new(p, &format!("{name}.{n}"), i, o, b, r)
        };
        let cell = LstmCell::new(
            params,
            &format!("{name}.cell"),
            context_width,
            state_width,
            rng,
        );
        let init = lin(params, "init", context_width, state_width, true, rng);
        let start = params.add_xavier(format!("{name}.start"), 1, context_width, rng);
        let glimpse_ctx = lin(
            params,
            "glimpse.w1",
            context_width,
            attention_width,
            false,
            rng,
        );
        let glimpse_state = lin(
            params,
            "glimpse.w2",
            state_width,
            attention_width,
            false,
            rng,
        );
        let glimpse_v = params.add_xavier(format!("{name}.glimpse.v"), attention_width, 1, rng);
        let pointer_ctx = lin(
            params,
            "pointer.w1",
            context_width,
            attention_width,
            false,
            rng,
        );
        let pointer_glimpse = lin(
            params,
            "pointer.w2",
            attention_width,
            attention_width,
            false,
            rng,
        );
        let pointer_v = params.add_xavier(format!("{name}.pointer.v"), attention_width, 1, rng);
        Self {
            cell,
            init,
            start,
            glimpse_ctx,
            glimpse_state,
            glimpse_v,
            pointer_ctx,
            pointer_glimpse,
            pointer_v,
            state_width,
        }
    }

    /// Run `steps` decoding steps over `context` (`n × d`).
    pub fn rollout<R: Rng>(
        &self,
        g: &mut Graph,
        context: Var,
        steps: usize,
        mut choice: Choice<'_, R>,
    ) -> Result<Vec<PointerStep>> {
        let n = g.shape(context).0;
        if steps > n {
            return Err(Error::InvalidInput(format!(
                "cannot point to {steps} of {n} sentences"
            )));
        }
        if let Choice::Forced(t) = &choice {
            if t.len() != steps {
                return Err(Error::InvalidInput(
                    "target length differs from step count".into(),
                ));
            }
            let mut seen = vec![false; n];
            for &i in t.iter() {
                if i >= n || seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "target index {i} out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }

        let g_ctx = self.glimpse_ctx.forward(g, context);
        let p_ctx = self.pointer_ctx.forward(g, context);
        let v_g = g.param(self.glimpse_v);
        let v_p = g.param(self.pointer_v);
        let mean = g.mean_rows(context);
        let mut h = self.init.forward(g, mean);
        let mut c = g.input(Mat::zeros((1, self.state_width)));
        let mut input = g.param(self.start);
        let mut mask = vec![false; n];
        let mut out = Vec::with_capacity(steps);

        for t in 0..steps {
            (h, c) = self.cell.step(g, input, h, c);

            let hs = self.glimpse_state.forward(g, h);
            let pre = g.add_row(g_ctx, hs);
            let act = g.tanh(pre);
            let e = g.matmul(act, v_g);
            let e = g.transpose(e);
            let a = g.softmax_rows(e, Some(&mask));
            let glimpse = g.matmul(a, g_ctx);

            let gp = self.pointer_glimpse.forward(g, glimpse);
            let pre = g.add_row(p_ctx, gp);
            let act = g.tanh(pre);
            let u = g.matmul(act, v_p);
            let u = g.transpose(u);
            let logp = g.log_softmax_rows(u, Some(&mask));

            let probs: Vec<f64> = g.value(logp).iter().map(|l| l.exp()).collect();
            let index = match &mut choice {
                Choice::Greedy => argmax(&probs, &mask),
                Choice::Sample(rng) => sample(&probs, &mask, *rng),
                Choice::Forced(t_idx) => t_idx[t],
            };
            let log_prob = g.pick(logp, 0, index);
            out.push(PointerStep {
                index,
                log_prob,
                probs,
                glimpse: g.value(a).iter().copied().collect(),
            });
            mask[index] = true;
            input = g.row(context, index);
        }
        Ok(out)
    }

    /// Teacher-forced log π(i_t | i_<t) for each target index, as graph nodes.
    pub fn stepwise_log_probs(
        &self,
        g: &mut Graph,
        context: Var,
        targets: &[usize],
    ) -> Result<Vec<Var>> {
        let steps = self.rollout::<rand::rngs::mock::StepRng>(
            g,
            context,
            targets.len(),
            Choice::Forced(targets),
        )?;
        Ok(steps.into_iter().map(|s| s.log_prob).collect())
    }
}

/// Highest probability among unmasked entries; ties to the lower index.
fn argmax(probs: &[f64], mask: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, &p) in probs.iter().enumerate() {
        if mask[i] {
            continue;
        }
        if best.is_none_or(|b| p > probs[b]) {
            best = Some(i);
        }
    }
    best.expect("at least one unmasked sentence")
}

fn sample<R: Rng>(probs: &[f64], mask: &[bool], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if mask[i] {
            continue;
        }
        acc += p;
        last = Some(i);
        if u < acc {
            return i;
        }
    }
    last.expect("at least one unmasked sentence")
}

/// Greedy extraction of `k` sentences, in selection order.
pub fn decode_pointer(
    decoder: &PointerDecoder,
    params: &ParamStore,
    doc_id: &str,
    context: &Mat,
    k: usize,
) -> Result<ExtractionResult> {
    let mut g = Graph::new(params);
    let ctx = g.input(context.clone());
    let steps = decoder.rollout::<rand::rngs::mock::StepRng>(&mut g, ctx, k, Choice::Greedy)?;
    let scores = steps.iter().map(|s| s.probs[s.index]).collect();
    Ok(ExtractionResult::new(doc_id, steps.iter().map(|s| s.index).collect()).with_scores(scores))
}

/// Teacher-forced log-probabilities of `target_order`.
pub fn pointer_stepwise_logprobs(
    decoder: &PointerDecoder,
    params: &ParamStore,
    context: &Mat,
    target_order: &[usize],
) -> Result<Vec<f64>> {
    let mut g = Graph::new(params);
    let ctx = g.input(context.clone());
    let lps = decoder.stepwise_log_probs(&mut g, ctx, target_order)?;
    Ok(lps.into_iter().map(|v| g.scalar(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (ParamStore, PointerDecoder, Mat) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = ParamStore::new();
        let dec = PointerDecoder::new(&mut p, "ptr", 6, 5, 4, &mut rng);
        let ctx = Mat::from_shape_fn((n, 6), |_| rng.gen_range(-1.0..1.0));
        (p, dec, ctx)
    }

    #[test]
    fn single_candidate_has_log_prob_zero() {
        let (p, dec, ctx) = setup(1);
        let lp = pointer_stepwise_logprobs(&dec, &p, &ctx, &[0]).unwrap();
        assert_eq!(lp, vec![0.0]);
    }

    #[test]
    fn first_step_is_argmax_and_masking_holds() {
        let (p, dec, ctx) = setup(5);
        let mut g = Graph::new(&p);
        let c = g.input(ctx.clone());
        let steps = dec
            .rollout::<ChaCha8Rng>(&mut g, c, 3, Choice::Greedy)
            .unwrap();
        let first = &steps[0];
        let best = (0..5)
            .max_by(|&a, &b| first.probs[a].total_cmp(&first.probs[b]).then(b.cmp(&a)))
            .unwrap();
        assert_eq!(first.index, best);
        assert_eq!(steps[1].probs[steps[0].index], 0.0);
        assert_eq!(steps[1].glimpse[steps[0].index], 0.0);
        for s in &steps {
            assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let r = decode_pointer(&dec, &p, "d", &ctx, 1).unwrap();
        assert_eq!(r.selected, vec![best]);
    }

    #[test]
    fn rejects_bad_targets_and_overlong_decodes() {
        let (p, dec, ctx) = setup(3);
        assert!(pointer_stepwise_logprobs(&dec, &p, &ctx, &[0, 0]).is_err());
        assert!(pointer_stepwise_logprobs(&dec, &p, &ctx, &[3]).is_err());
        assert!(decode_pointer(&dec, &p, "d", &ctx, 4).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let (p, dec, ctx) = setup(6);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = Graph::new(&p);
            let c = g.input(ctx.clone());
            dec.rollout(&mut g, c, 4, Choice::Sample(&mut rng))
                .unwrap()
                .iter()
                .map(|s| s.index)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }
}
