use super::params::{Gradients, Mat, ParamStore};

/// Adaptive-moment gradient descent.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Mat>,
    v: Vec<Mat>,
}

impl Adam {
    pub fn new(params: &ParamStore, lr: f64) -> Self {
        let zeros: Vec<Mat> = params.iter().map(|(_, _, p)| Mat::zeros(p.dim())).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Apply one update. Frozen parameters and parameters without a gradient are left alone.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let ids: Vec<_> = params.ids().collect();
        for id in ids {
            if !params.is_trainable(id) {
                continue;
            }
            let Some(g) = grads.get(id) else { continue };
            let i = id.index();
            let (b1, b2) = (self.beta1, self.beta2);
            self.m[i].zip_mut_with(g, |m, &g| *m = b1 * *m + (1.0 - b1) * g);
            self.v[i].zip_mut_with(g, |v, &g| *v = b2 * *v + (1.0 - b2) * g * g);
            let (lr, eps) = (self.lr, self.eps);
            let p = params.get_mut(id);
            ndarray::Zip::from(p)
                .and(&self.m[i])
                .and(&self.v[i])
                .for_each(|p, &m, &v| {
                    *p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Graph;
    use ndarray::array;

    #[test]
    fn minimises_a_quadratic() {
        let mut p = ParamStore::new();
        let w = p.add("w", array![[3.0, -2.0]]);
        let mut opt = Adam::new(&p, 0.1);
        for _ in 0..500 {
            let grads = {
                let mut g = Graph::new(&p);
                let x = g.param(w);
                let sq = g.mul(x, x);
                let s = g.sum_all(sq);
                g.backward(s).params
            };
            opt.step(&mut p, &grads);
        }
        assert!(p.get(w).iter().all(|x| x.abs() < 1e-2), "{:?}", p.get(w));
    }
}
