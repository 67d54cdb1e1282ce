//! Reverse-mode differentiation over dense `f64` matrices.
//!
//! A [`Graph`] records every operation applied to its variables; calling
//! [`Graph::backward`] on a scalar output walks the record in reverse and
//! returns gradients for every parameter touched.

use ndarray::{concatenate, s, Array2, Axis};

use super::params::{Gradients, Mat, ParamId, ParamStore};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Gather {
        param: ParamId,
        rows: Vec<Option<usize>>,
    },
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softmax(Var),
    LogSoftmax {
        x: Var,
        mask: Option<Vec<bool>>,
    },
    LayerNorm {
        x: Var,
        inv_std: Vec<f64>,
    },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows {
        x: Var,
        start: usize,
    },
    SliceCols {
        x: Var,
        start: usize,
    },
    Transpose(Var),
    MaxRows {
        x: Var,
        argmax: Vec<usize>,
    },
    MeanRows(Var),
    SumAll(Var),
    Pick {
        x: Var,
        row: usize,
        col: usize,
    },
    BceWithLogits {
        logits: Var,
        targets: Vec<f64>,
    },
}

struct Node {
    // `None` for parameter leaves, whose value lives in the store.
    value: Option<Mat>,
    op: Op,
}

pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

fn softmax_row(row: ndarray::ArrayView1<f64>, mask: Option<&[bool]>, out: &mut [f64]) {
    let allowed = |j: usize| mask.is_none_or(|m| !m[j]);
    let max = row
        .iter()
        .enumerate()
        .filter(|(j, _)| allowed(*j))
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (j, &x) in row.iter().enumerate() {
        out[j] = if allowed(j) { (x - max).exp() } else { 0.0 };
        sum += out[j];
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Mat {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(m), _) => m,
            (None, Op::Param(id)) => self.params.get(*id),
            (None, _) => unreachable!("non-parameter node without value"),
        }
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(m.dim(), (1, 1));
        m[[0, 0]]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).dim()
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Mat) -> Var {
        self.push(value, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    /// Rows of a parameter matrix; `None` rows are taken from `fallback` and receive no gradient.
    pub fn gather(&mut self, param: ParamId, rows: &[Option<usize>], fallback: &Mat) -> Var {
        let table = self.params.get(param);
        let width = table.ncols();
        assert_eq!(fallback.nrows(), rows.len());
        let mut out = Mat::zeros((rows.len(), width));
        for (i, r) in rows.iter().enumerate() {
            match r {
                Some(r) => out.row_mut(i).assign(&table.row(*r)),
                None => out.row_mut(i).assign(&fallback.row(i)),
            }
        }
        self.push(
            out,
            Op::Gather {
                param,
                rows: rows.to_vec(),
            },
        )
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, Op::Sub(a, b))
    }

    /// `a + row` with the 1×d `row` broadcast over every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1);
        let v = self.value(a) + self.value(row);
        self.push(v, Op::AddRow(a, row))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1);
        let v = self.value(a) * self.value(row);
        self.push(v, Op::MulRow(a, row))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, Op::Scale(a, c))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    /// Row-wise softmax. Masked columns (`true`) get probability exactly zero.
    pub fn softmax_rows(&mut self, x: Var, mask: Option<&[bool]>) -> Var {
        let xv = self.value(x);
        let mut out = Mat::zeros(xv.dim());
        let mut buf = vec![0.0; xv.ncols()];
        for (i, row) in xv.rows().into_iter().enumerate() {
            softmax_row(row, mask, &mut buf);
            out.row_mut(i)
                .iter_mut()
                .zip(&buf)
                .for_each(|(o, b)| *o = *b);
        }
        self.push(out, Op::Softmax(x))
    }

    /// Row-wise log-softmax. Masked columns hold negative infinity.
    pub fn log_softmax_rows(&mut self, x: Var, mask: Option<&[bool]>) -> Var {
        let xv = self.value(x);
        let allowed = |j: usize| mask.is_none_or(|m| !m[j]);
        let mut out = Mat::zeros(xv.dim());
        for (i, row) in xv.rows().into_iter().enumerate() {
            let max = row
                .iter()
                .enumerate()
                .filter(|(j, _)| allowed(*j))
                .map(|(_, &x)| x)
                .fold(f64::NEG_INFINITY, f64::max);
            let lse = max
                + row
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| allowed(*j))
                    .map(|(_, &x)| (x - max).exp())
                    .sum::<f64>()
                    .ln();
            for (j, &x) in row.iter().enumerate() {
                out[[i, j]] = if allowed(j) {
                    x - lse
                } else {
                    f64::NEG_INFINITY
                };
            }
        }
        self.push(
            out,
            Op::LogSoftmax {
                x,
                mask: mask.map(<[bool]>::to_vec),
            },
        )
    }

    /// Normalise each row to zero mean and unit variance (no affine part).
    pub fn layer_norm_rows(&mut self, x: Var, eps: f64) -> Var {
        let xv = self.value(x);
        let d = xv.ncols() as f64;
        let mut out = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.nrows());
        for mut row in out.rows_mut() {
            let mean = row.sum() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let inv = 1.0 / (var + eps).sqrt();
            row.mapv_inplace(|v| (v - mean) * inv);
            inv_std.push(inv);
        }
        self.push(out, Op::LayerNorm { x, inv_std })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = concatenate(Axis(1), &views).expect("row counts must agree");
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = concatenate(Axis(0), &views).expect("column counts must agree");
        self.push(v, Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let v = self.value(x).slice(s![start..start + len, ..]).to_owned();
        self.push(v, Op::SliceRows { x, start })
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let v = self.value(x).slice(s![.., start..start + len]).to_owned();
        self.push(v, Op::SliceCols { x, start })
    }

    pub fn row(&mut self, x: Var, i: usize) -> Var {
        self.slice_rows(x, i, 1)
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let v = self.value(x).t().to_owned();
        self.push(v, Op::Transpose(x))
    }

    /// Column-wise max over rows (max-over-time pooling); ties go to the first row.
    pub fn max_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut out = Mat::zeros((1, xv.ncols()));
        let mut argmax = Vec::with_capacity(xv.ncols());
        for (j, col) in xv.columns().into_iter().enumerate() {
            let mut best = 0;
            for (i, &v) in col.iter().enumerate() {
                if v > col[best] {
                    best = i;
                }
            }
            out[[0, j]] = col[best];
            argmax.push(best);
        }
        self.push(out, Op::MaxRows { x, argmax })
    }

    pub fn mean_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let v = xv
            .mean_axis(Axis(0))
            .expect("nonempty")
            .insert_axis(Axis(0));
        self.push(v, Op::MeanRows(x))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let v = Mat::from_elem((1, 1), self.value(x).sum());
        self.push(v, Op::SumAll(x))
    }

    pub fn pick(&mut self, x: Var, row: usize, col: usize) -> Var {
        let v = Mat::from_elem((1, 1), self.value(x)[[row, col]]);
        self.push(v, Op::Pick { x, row, col })
    }

    /// Mean binary cross-entropy between `sigmoid(logits)` and `targets` (logits n×1).
    pub fn bce_with_logits(&mut self, logits: Var, targets: &[f64]) -> Var {
        let lv = self.value(logits);
        assert_eq!(lv.len(), targets.len());
        let n = targets.len() as f64;
        let total: f64 = lv
            .iter()
            .zip(targets)
            .map(|(&x, &y)| x.max(0.0) - x * y + (-x.abs()).exp().ln_1p())
            .sum();
        let v = Mat::from_elem((1, 1), total / n);
        self.push(
            v,
            Op::BceWithLogits {
                logits,
                targets: targets.to_vec(),
            },
        )
    }

    /// Gradients of the scalar `output` with respect to every parameter and node.
    pub fn backward(&self, output: Var) -> Backward {
        assert_eq!(self.shape(output), (1, 1), "backward needs a scalar output");
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut pgrads: Vec<Option<Mat>> = vec![None; self.params.len()];
        grads[output.0] = Some(Mat::from_elem((1, 1), 1.0));

        fn acc(slot: &mut Option<Mat>, g: Mat) {
            match slot {
                Some(a) => *a += &g,
                None => *slot = Some(g),
            }
        }

        for idx in (0..=output.0).rev() {
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => grads[idx] = Some(dy),
                Op::Param(id) => acc(&mut pgrads[id.0], dy.clone()),
                Op::Gather { param, rows } => {
                    let table = self.params.get(*param);
                    let slot = pgrads[param.0].get_or_insert_with(|| Mat::zeros(table.dim()));
                    for (i, r) in rows.iter().enumerate() {
                        if let Some(r) = r {
                            let mut dst = slot.row_mut(*r);
                            dst += &dy.row(i);
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = dy.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&dy);
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads[a.0], dy.clone());
                    acc(&mut grads[b.0], dy);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads[b.0], -&dy);
                    acc(&mut grads[a.0], dy);
                }
                Op::AddRow(a, r) => {
                    let gr = dy.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads[r.0], gr);
                    acc(&mut grads[a.0], dy);
                }
                Op::Mul(a, b) => {
                    let ga = &dy * self.value(*b);
                    let gb = &dy * self.value(*a);
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::MulRow(a, r) => {
                    let ga = &dy * self.value(*r);
                    let gr = (&dy * self.value(*a))
                        .sum_axis(Axis(0))
                        .insert_axis(Axis(0));
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[r.0], gr);
                }
                Op::Scale(a, c) => acc(&mut grads[a.0], dy * *c),
                Op::Tanh(a) => {
                    let y = node.value.as_ref().unwrap();
                    let g = &dy * &y.mapv(|t| 1.0 - t * t);
                    acc(&mut grads[a.0], g);
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().unwrap();
                    let g = &dy * &y.mapv(|t| t * (1.0 - t));
                    acc(&mut grads[a.0], g);
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let mut g = dy;
                    g.zip_mut_with(x, |g, &x| {
                        if x <= 0.0 {
                            *g = 0.0
                        }
                    });
                    acc(&mut grads[a.0], g);
                }
                Op::Softmax(x) => {
                    let y = node.value.as_ref().unwrap();
                    let mut g = Mat::zeros(y.dim());
                    for i in 0..y.nrows() {
                        let dot: f64 = y.row(i).iter().zip(dy.row(i)).map(|(p, d)| p * d).sum();
                        for j in 0..y.ncols() {
                            g[[i, j]] = y[[i, j]] * (dy[[i, j]] - dot);
                        }
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::LogSoftmax { x, mask } => {
                    let y = node.value.as_ref().unwrap();
                    let allowed = |j: usize| mask.as_ref().is_none_or(|m| !m[j]);
                    let mut g = Mat::zeros(y.dim());
                    for i in 0..y.nrows() {
                        let total: f64 = (0..y.ncols())
                            .filter(|&j| allowed(j))
                            .map(|j| dy[[i, j]])
                            .sum();
                        for j in (0..y.ncols()).filter(|&j| allowed(j)) {
                            g[[i, j]] = dy[[i, j]] - y[[i, j]].exp() * total;
                        }
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::LayerNorm { x, inv_std } => {
                    let y = node.value.as_ref().unwrap();
                    let d = y.ncols() as f64;
                    let mut g = Mat::zeros(y.dim());
                    for i in 0..y.nrows() {
                        let mean_dy = dy.row(i).sum() / d;
                        let mean_dyy: f64 = dy
                            .row(i)
                            .iter()
                            .zip(y.row(i))
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                            / d;
                        for j in 0..y.ncols() {
                            g[[i, j]] = inv_std[i] * (dy[[i, j]] - mean_dy - y[[i, j]] * mean_dyy);
                        }
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        let g = dy.slice(s![.., offset..offset + w]).to_owned();
                        acc(&mut grads[p.0], g);
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let h = self.value(*p).nrows();
                        let g = dy.slice(s![offset..offset + h, ..]).to_owned();
                        acc(&mut grads[p.0], g);
                        offset += h;
                    }
                }
                Op::SliceRows { x, start } => {
                    let mut g = Mat::zeros(self.value(*x).dim());
                    g.slice_mut(s![*start..*start + dy.nrows(), ..]).assign(&dy);
                    acc(&mut grads[x.0], g);
                }
                Op::SliceCols { x, start } => {
                    let mut g = Mat::zeros(self.value(*x).dim());
                    g.slice_mut(s![.., *start..*start + dy.ncols()]).assign(&dy);
                    acc(&mut grads[x.0], g);
                }
                Op::Transpose(x) => acc(&mut grads[x.0], dy.t().to_owned()),
                Op::MaxRows { x, argmax } => {
                    let mut g = Mat::zeros(self.value(*x).dim());
                    for (j, &i) in argmax.iter().enumerate() {
                        g[[i, j]] = dy[[0, j]];
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::MeanRows(x) => {
                    let (n, d) = self.value(*x).dim();
                    let row = dy.row(0).mapv(|v| v / n as f64);
                    let g = Array2::from_shape_fn((n, d), |(_, j)| row[j]);
                    acc(&mut grads[x.0], g);
                }
                Op::SumAll(x) => {
                    let g = Mat::from_elem(self.value(*x).dim(), dy[[0, 0]]);
                    acc(&mut grads[x.0], g);
                }
                Op::Pick { x, row, col } => {
                    let mut g = Mat::zeros(self.value(*x).dim());
                    g[[*row, *col]] = dy[[0, 0]];
                    acc(&mut grads[x.0], g);
                }
                Op::BceWithLogits { logits, targets } => {
                    let lv = self.value(*logits);
                    let n = targets.len() as f64;
                    let mut g = Mat::zeros(lv.dim());
                    for ((gi, &x), &y) in g.iter_mut().zip(lv.iter()).zip(targets) {
                        *gi = dy[[0, 0]] * (sigmoid(x) - y) / n;
                    }
                    acc(&mut grads[logits.0], g);
                }
            }
        }

        Backward {
            params: Gradients::from_vec(pgrads),
            inputs: grads,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Result of a backward pass.
pub struct Backward {
    pub params: Gradients,
    inputs: Vec<Option<Mat>>,
}

impl Backward {
    /// Gradient with respect to an [`Graph::input`] node, if it influenced the output.
    pub fn input_grad(&self, v: Var) -> Option<&Mat> {
        self.inputs.get(v.0).and_then(Option::as_ref)
    }
}
