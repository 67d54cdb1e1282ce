use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

pub type Mat = Array2<f64>;

/// Handle to a tensor registered in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable tensors, kept in registration order.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Mat>,
    trainable: Vec<bool>,
    lookup: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Mat) -> ParamId {
        self.add_with(name, value, true)
    }

    pub fn add_frozen(&mut self, name: impl Into<String>, value: Mat) -> ParamId {
        self.add_with(name, value, false)
    }

    fn add_with(&mut self, name: impl Into<String>, value: Mat, trainable: bool) -> ParamId {
        let name = name.into();
        assert!(
            !self.lookup.contains_key(&name),
            "parameter {name} registered twice"
        );
        let id = ParamId(self.values.len());
        self.lookup.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        self.trainable.push(trainable);
        id
    }

    /// Glorot-uniform initialised matrix.
    pub fn add_xavier<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> ParamId {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let value = Mat::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit));
        self.add(name, value)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Mat::zeros((rows, cols)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Mat {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Mat {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.trainable[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.lookup.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Mat)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    /// Total number of scalar entries.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    /// Replace every tensor by a same-named tensor from `other`, checking shapes.
    pub fn load_from(&mut self, other: &[(String, Mat)]) -> Result<()> {
        if other.len() != self.values.len() {
            return Err(Error::ShapeMismatch {
                name: "<parameter count>".into(),
                expected: vec![self.values.len()],
                found: vec![other.len()],
            });
        }
        for (name, value) in other {
            let id = self.id(name).ok_or_else(|| {
                Error::Checkpoint(format!(
                    "checkpoint tensor {name} has no counterpart in model"
                ))
            })?;
            let current = &self.values[id.0];
            if current.dim() != value.dim() {
                return Err(Error::ShapeMismatch {
                    name: name.clone(),
                    expected: current.shape().to_vec(),
                    found: value.shape().to_vec(),
                });
            }
            self.values[id.0] = value.clone();
        }
        Ok(())
    }

    /// Round every entry to the nearest 32-bit float, so that persisted tensors reload exactly.
    pub fn round_to_f32(&mut self) {
        for v in &mut self.values {
            v.mapv_inplace(|x| x as f32 as f64);
        }
    }
}

/// Per-parameter gradients aligned with a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Mat>>,
}

impl Gradients {
    pub fn zeros_like(params: &ParamStore) -> Self {
        Self {
            grads: vec![None; params.len()],
        }
    }

    pub(crate) fn from_vec(grads: Vec<Option<Mat>>) -> Self {
        Self { grads }
    }

    pub fn get(&self, id: ParamId) -> Option<&Mat> {
        self.grads[id.0].as_ref()
    }

    pub fn accumulate(&mut self, id: ParamId, g: &Mat) {
        match &mut self.grads[id.0] {
            Some(acc) => *acc += g,
            slot @ None => *slot = Some(g.clone()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (i, g) in other.grads.iter().enumerate() {
            if let Some(g) = g {
                self.accumulate(ParamId(i), g);
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.mapv_inplace(|x| x * factor);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.grads
            .iter()
            .flatten()
            .map(|g| g.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescale so the global norm does not exceed `max_norm`. Returns the pre-clip norm.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn is_finite(&self) -> bool {
        self.grads
            .iter()
            .flatten()
            .all(|g| g.iter().all(|x| x.is_finite()))
    }

    /// All gradients flattened in parameter order, zero-filled where absent.
    pub fn flatten(&self, params: &ParamStore) -> Vec<f64> {
        let mut out = Vec::with_capacity(params.num_scalars());
        for id in params.ids() {
            match self.get(id) {
                Some(g) => out.extend(g.iter().copied()),
                None => out.extend(std::iter::repeat_n(0.0, params.get(id).len())),
            }
        }
        out
    }
}
