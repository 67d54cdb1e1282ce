//! Central finite-difference checks for analytic gradients.

use super::graph::{Graph, Var};
use super::params::{ParamId, ParamStore};

/// Agreement between analytic and numeric gradients for one parameter tensor.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: String,
    pub entries: usize,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

/// Smallest denominator used by [`relative_error`]. Below this scale, central differences at
/// 64-bit precision are dominated by rounding, so agreement is judged in absolute terms.
pub const NORM_FLOOR: f64 = 1e-5;

/// ‖a − n‖ / max(‖a‖ + ‖n‖, [`NORM_FLOOR`]).
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / (na + nn).max(NORM_FLOOR)
}

/// Add seeded uniform noise in `[-scale, scale]` to every trainable parameter. Zero-initialised
/// biases place ReLU units exactly on their kink; checks are run away from such points.
pub fn perturb(params: &mut ParamStore, scale: f64, seed: u64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<ParamId> = params.ids().collect();
    for id in ids {
        if params.is_trainable(id) {
            params
                .get_mut(id)
                .mapv_inplace(|x| x + rng.gen_range(-scale..=scale));
        }
    }
}

/// Compare backpropagated gradients of `loss` against central differences with step `h`
/// for every trainable parameter (or only those named in `only`, when given).
pub fn check_gradients<F>(
    params: &ParamStore,
    h: f64,
    only: Option<&[ParamId]>,
    loss: F,
) -> GradCheckReport
where
    F: Fn(&mut Graph) -> Var,
{
    let analytic = {
        let mut g = Graph::new(params);
        let out = loss(&mut g);
        g.backward(out).params
    };
    let eval = |p: &ParamStore| {
        let mut g = Graph::new(p);
        let out = loss(&mut g);
        g.scalar(out)
    };

    let mut work = params.clone();
    let mut tensors = Vec::new();
    for id in params.ids() {
        if !params.is_trainable(id) || only.is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let shape = params.get(id).dim();
        let n = params.get(id).len();
        let mut numeric = Vec::with_capacity(n);
        for k in 0..n {
            let idx = (k / shape.1, k % shape.1);
            let orig = work.get(id)[idx];
            work.get_mut(id)[idx] = orig + h;
            let up = eval(&work);
            work.get_mut(id)[idx] = orig - h;
            let down = eval(&work);
            work.get_mut(id)[idx] = orig;
            numeric.push((up - down) / (2.0 * h));
        }
        let an: Vec<f64> = match analytic.get(id) {
            Some(g) => g.iter().copied().collect(),
            None => vec![0.0; n],
        };
        tensors.push(TensorCheck {
            name: params.name(id).to_string(),
            entries: n,
            analytic_norm: an.iter().map(|a| a * a).sum::<f64>().sqrt(),
            numeric_norm: numeric.iter().map(|a| a * a).sum::<f64>().sqrt(),
            rel_error: relative_error(&an, &numeric),
        });
    }
    GradCheckReport { tensors }
}
