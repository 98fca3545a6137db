//! Flat operation tape with reverse-mode gradient replay.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::{AutodiffError, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

impl TensorId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Numeric mode for forward results.
///
/// `F64` is the default and is required by the gradient checks. `F32` rounds
/// every op output (and registered leaves) through 32-bit precision, for
/// training runs that trade accuracy for speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Precision {
    #[default]
    F64,
    F32,
}

/// Batch-norm execution mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Batch-norm running averages, updated in train mode only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl RunningStats {
    pub fn new(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            momentum: 0.1,
            eps: 1e-5,
        }
    }
}

enum Op {
    Leaf,
    MatMul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    AddBias(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    Softplus(usize),
    Exp(usize),
    Log(usize),
    SumAll(usize),
    MeanAll(usize),
    RowSum(usize),
    ConcatCols(Vec<usize>),
    RowGather(usize, Vec<usize>),
    ScatterSum(usize, Vec<usize>),
    CosineSim {
        a: usize,
        b: usize,
        norm_a: Vec<f64>,
        norm_b: Vec<f64>,
    },
    BatchNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    BatchNormEval {
        x: usize,
        gamma: usize,
        beta: usize,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Ordered record of forward operations.
///
/// Operands always precede outputs, so one reverse pass over the records
/// visits every node exactly once. Tensors recorded here are confined to one
/// worker; independent tapes may run in parallel.
pub struct Tape {
    nodes: Vec<Node>,
    precision: Precision,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::with_precision(Precision::F64)
    }

    pub fn with_precision(precision: Precision) -> Self {
        Self { nodes: Vec::new(), precision }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: TensorId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn round(&self, mut t: Tensor) -> Tensor {
        if self.precision == Precision::F32 {
            for v in t.values_mut() {
                *v = *v as f32 as f64;
            }
        }
        t
    }

    fn push(&mut self, op_name: &'static str, op: Op, value: Tensor) -> Result<TensorId> {
        let value = self.round(value);
        if !value.all_finite() {
            return Err(AutodiffError::NonFinite { op: op_name });
        }
        self.nodes.push(Node { value, op });
        Ok(TensorId(self.nodes.len() - 1))
    }

    /// Record a non-parameter input (data, masks).
    pub fn constant(&mut self, t: Tensor) -> Result<TensorId> {
        self.push("constant", Op::Leaf, t)
    }

    /// Record a trainable parameter; gradients are produced for it.
    pub fn param(&mut self, t: &Tensor) -> Result<TensorId> {
        self.push("param", Op::Leaf, t.clone())
    }

    fn shape_err(op: &'static str, detail: String) -> AutodiffError {
        AutodiffError::ShapeMismatch { op, detail }
    }

    fn mat_dims(&self, op: &'static str, id: TensorId) -> Result<(usize, usize)> {
        let t = self.value(id);
        if t.shape().len() != 2 {
            return Err(Self::shape_err(op, format!("expected matrix, got shape {:?}", t.shape())));
        }
        Ok((t.shape()[0], t.shape()[1]))
    }

    /// `[n,k] @ [k,m] -> [n,m]`
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (n, k) = self.mat_dims("matmul", a)?;
        let (k2, m) = self.mat_dims("matmul", b)?;
        if k != k2 {
            return Err(Self::shape_err("matmul", format!("[{}x{}] @ [{}x{}]", n, k, k2, m)));
        }
        let out = matmul_plain(self.value(a).values(), self.value(b).values(), n, k, m);
        self.push("matmul", Op::MatMul(a.0, b.0), Tensor::matrix(n, m, out)?)
    }

    pub fn transpose(&mut self, a: TensorId) -> Result<TensorId> {
        let (n, m) = self.mat_dims("transpose", a)?;
        let v = self.value(a).values();
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                out[j * n + i] = v[i * m + j];
            }
        }
        self.push("transpose", Op::Transpose(a.0), Tensor::matrix(m, n, out)?)
    }

    /// Elementwise sum of two same-shape tensors.
    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Self::shape_err(
                "add",
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        let out: Vec<f64> = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        self.push("add", Op::Add(a.0, b.0), Tensor::new(shape, out)?)
    }

    /// `[n,d] + [d]` row broadcast (bias add).
    pub fn add_bias(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId> {
        let (n, d) = self.mat_dims("add-bias", a)?;
        let bt = self.value(bias);
        if bt.shape() != [d] {
            return Err(Self::shape_err(
                "add-bias",
                format!("matrix [{}x{}] with bias {:?}", n, d, bt.shape()),
            ));
        }
        let bv = bt.values().to_vec();
        let av = self.value(a).values();
        let mut out = Vec::with_capacity(n * d);
        for i in 0..n {
            for j in 0..d {
                out.push(av[i * d + j] + bv[j]);
            }
        }
        self.push("add-bias", Op::AddBias(a.0, bias.0), Tensor::matrix(n, d, out)?)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Self::shape_err(
                "multiply",
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        let out: Vec<f64> = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        self.push("multiply", Op::Mul(a.0, b.0), Tensor::new(shape, out)?)
    }

    /// Multiply every element by the constant `c`.
    pub fn scale(&mut self, a: TensorId, c: f64) -> Result<TensorId> {
        let out: Vec<f64> = self.value(a).values().iter().map(|x| x * c).collect();
        let shape = self.value(a).shape().to_vec();
        self.push("scale", Op::Scale(a.0, c), Tensor::new(shape, out)?)
    }

    pub fn relu(&mut self, a: TensorId) -> Result<TensorId> {
        let out: Vec<f64> = self.value(a).values().iter().map(|x| x.max(0.0)).collect();
        let shape = self.value(a).shape().to_vec();
        self.push("relu", Op::Relu(a.0), Tensor::new(shape, out)?)
    }

    pub fn softplus(&mut self, a: TensorId) -> Result<TensorId> {
        let out: Vec<f64> = self
            .value(a)
            .values()
            .iter()
            .map(|&x| x.max(0.0) + (-x.abs()).exp().ln_1p())
            .collect();
        let shape = self.value(a).shape().to_vec();
        self.push("softplus", Op::Softplus(a.0), Tensor::new(shape, out)?)
    }

    pub fn exp(&mut self, a: TensorId) -> Result<TensorId> {
        let out: Vec<f64> = self.value(a).values().iter().map(|x| x.exp()).collect();
        let shape = self.value(a).shape().to_vec();
        self.push("exp", Op::Exp(a.0), Tensor::new(shape, out)?)
    }

    pub fn log(&mut self, a: TensorId) -> Result<TensorId> {
        let out: Vec<f64> = self.value(a).values().iter().map(|x| x.ln()).collect();
        let shape = self.value(a).shape().to_vec();
        self.push("log", Op::Log(a.0), Tensor::new(shape, out)?)
    }

    /// Sum of all elements, as a scalar.
    pub fn sum_reduce(&mut self, a: TensorId) -> Result<TensorId> {
        let s: f64 = self.value(a).values().iter().sum();
        self.push("sum-reduce", Op::SumAll(a.0), Tensor::scalar(s))
    }

    /// Mean of all elements, as a scalar.
    pub fn mean_reduce(&mut self, a: TensorId) -> Result<TensorId> {
        let t = self.value(a);
        if t.is_empty() {
            return Err(AutodiffError::InvalidOperand {
                op: "mean-reduce",
                detail: "empty tensor".into(),
            });
        }
        let s: f64 = t.values().iter().sum::<f64>() / t.len() as f64;
        self.push("mean-reduce", Op::MeanAll(a.0), Tensor::scalar(s))
    }

    /// Per-row sum of a matrix: `[n,m] -> [n]`.
    pub fn row_sum(&mut self, a: TensorId) -> Result<TensorId> {
        let (n, m) = self.mat_dims("row-sum", a)?;
        let v = self.value(a).values();
        let out: Vec<f64> = (0..n).map(|i| v[i * m..(i + 1) * m].iter().sum()).collect();
        self.push("row-sum", Op::RowSum(a.0), Tensor::vector(out))
    }

    /// Concatenate matrices with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        if parts.is_empty() {
            return Err(AutodiffError::InvalidOperand {
                op: "concatenate",
                detail: "no operands".into(),
            });
        }
        let (n, _) = self.mat_dims("concatenate", parts[0])?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (np, mp) = self.mat_dims("concatenate", p)?;
            if np != n {
                return Err(Self::shape_err("concatenate", format!("row counts {} vs {}", n, np)));
            }
            widths.push(mp);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; n * total];
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let v = self.value(p).values();
            for i in 0..n {
                out[i * total + offset..i * total + offset + w]
                    .copy_from_slice(&v[i * w..(i + 1) * w]);
            }
            offset += w;
        }
        self.push(
            "concatenate",
            Op::ConcatCols(parts.iter().map(|p| p.0).collect()),
            Tensor::matrix(n, total, out)?,
        )
    }

    /// Select rows by index: `[n,d]` gathered at `m` indices -> `[m,d]`.
    pub fn row_gather(&mut self, a: TensorId, index: &[usize]) -> Result<TensorId> {
        let (n, d) = self.mat_dims("row-gather", a)?;
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(AutodiffError::InvalidOperand {
                op: "row-gather",
                detail: format!("index {} out of range for {} rows", bad, n),
            });
        }
        let v = self.value(a).values();
        let mut out = Vec::with_capacity(index.len() * d);
        for &i in index {
            out.extend_from_slice(&v[i * d..(i + 1) * d]);
        }
        self.push(
            "row-gather",
            Op::RowGather(a.0, index.to_vec()),
            Tensor::matrix(index.len(), d, out)?,
        )
    }

    /// Segment sum: rows of `[n,d]` are added into `segments` output rows by
    /// index (`out[index[i]] += x[i]`).
    pub fn scatter_sum(&mut self, a: TensorId, index: &[usize], segments: usize) -> Result<TensorId> {
        let (n, d) = self.mat_dims("scatter-sum", a)?;
        if index.len() != n {
            return Err(Self::shape_err(
                "scatter-sum",
                format!("{} rows with {} indices", n, index.len()),
            ));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= segments) {
            return Err(AutodiffError::InvalidOperand {
                op: "scatter-sum",
                detail: format!("segment {} out of range for {} segments", bad, segments),
            });
        }
        let v = self.value(a).values();
        let mut out = vec![0.0; segments * d];
        for (i, &seg) in index.iter().enumerate() {
            let dst = &mut out[seg * d..(seg + 1) * d];
            let src = &v[i * d..(i + 1) * d];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += s;
            }
        }
        self.push(
            "scatter-sum",
            Op::ScatterSum(a.0, index.to_vec()),
            Tensor::matrix(segments, d, out)?,
        )
    }

    /// All-pairs cosine similarity between rows: `[n,d] x [m,d] -> [n,m]`.
    pub fn cosine_similarity(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (n, d) = self.mat_dims("cosine-similarity", a)?;
        let (m, d2) = self.mat_dims("cosine-similarity", b)?;
        if d != d2 {
            return Err(Self::shape_err("cosine-similarity", format!("widths {} vs {}", d, d2)));
        }
        let row_norms = |t: &Tensor| -> Vec<f64> {
            (0..t.rows())
                .map(|i| t.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect()
        };
        let norm_a = row_norms(self.value(a));
        let norm_b = row_norms(self.value(b));
        if norm_a.iter().chain(&norm_b).any(|&x| x == 0.0) {
            return Err(AutodiffError::InvalidOperand {
                op: "cosine-similarity",
                detail: "zero-norm row".into(),
            });
        }
        let av = self.value(a).values();
        let bv = self.value(b).values();
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let ar = &av[i * d..(i + 1) * d];
            for j in 0..m {
                let br = &bv[j * d..(j + 1) * d];
                let dot: f64 = ar.iter().zip(br).map(|(x, y)| x * y).sum();
                out[i * m + j] = dot / (norm_a[i] * norm_b[j]);
            }
        }
        self.push(
            "cosine-similarity",
            Op::CosineSim { a: a.0, b: b.0, norm_a, norm_b },
            Tensor::matrix(n, m, out)?,
        )
    }

    /// Per-column batch normalization with affine scale and shift.
    ///
    /// Train mode normalizes by the batch statistics (biased variance, no
    /// epsilon beyond a divide-by-zero floor) and folds them into `running`
    /// with its momentum; eval mode normalizes by the running averages with
    /// `running.eps`.
    pub fn batch_norm(
        &mut self,
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        running: &mut RunningStats,
        mode: BnMode,
    ) -> Result<TensorId> {
        let (n, d) = self.mat_dims("batch-norm", x)?;
        if self.value(gamma).shape() != [d] || self.value(beta).shape() != [d] {
            return Err(Self::shape_err(
                "batch-norm",
                format!(
                    "input [{}x{}] with scale {:?} / shift {:?}",
                    n,
                    d,
                    self.value(gamma).shape(),
                    self.value(beta).shape()
                ),
            ));
        }
        if running.mean.len() != d {
            return Err(Self::shape_err(
                "batch-norm",
                format!("running stats of width {} for input width {}", running.mean.len(), d),
            ));
        }
        if n == 0 {
            return Err(AutodiffError::InvalidOperand { op: "batch-norm", detail: "empty batch".into() });
        }
        let xv = self.value(x).values().to_vec();
        let (mean, inv_std) = match mode {
            BnMode::Train => {
                let mut mean = vec![0.0; d];
                for i in 0..n {
                    for j in 0..d {
                        mean[j] += xv[i * d + j];
                    }
                }
                for m in &mut mean {
                    *m /= n as f64;
                }
                let mut var = vec![0.0; d];
                for i in 0..n {
                    for j in 0..d {
                        let c = xv[i * d + j] - mean[j];
                        var[j] += c * c;
                    }
                }
                for v in &mut var {
                    *v /= n as f64;
                }
                let mom = running.momentum;
                let unbias = if n > 1 { n as f64 / (n as f64 - 1.0) } else { 1.0 };
                for j in 0..d {
                    running.mean[j] = (1.0 - mom) * running.mean[j] + mom * mean[j];
                    running.var[j] = (1.0 - mom) * running.var[j] + mom * var[j] * unbias;
                }
                let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / v.max(1e-12).sqrt()).collect();
                (mean, inv_std)
            }
            BnMode::Eval => {
                let inv_std: Vec<f64> =
                    running.var.iter().map(|&v| 1.0 / (v + running.eps).sqrt()).collect();
                (running.mean.clone(), inv_std)
            }
        };
        let gv = self.value(gamma).values().to_vec();
        let bv = self.value(beta).values().to_vec();
        let mut xhat = vec![0.0; n * d];
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            for j in 0..d {
                let h = (xv[i * d + j] - mean[j]) * inv_std[j];
                xhat[i * d + j] = h;
                out[i * d + j] = gv[j] * h + bv[j];
            }
        }
        // Eval mode treats the normalization statistics as constants, so its
        // backward rule differs from train mode; record a distinct op.
        let (name, op): (&'static str, Op) = match mode {
            BnMode::Train => (
                "batch-norm(train)",
                Op::BatchNorm { x: x.0, gamma: gamma.0, beta: beta.0, xhat, inv_std },
            ),
            BnMode::Eval => (
                "batch-norm(eval)",
                Op::BatchNormEval { x: x.0, gamma: gamma.0, beta: beta.0, xhat, inv_std },
            ),
        };
        self.push(name, op, Tensor::matrix(n, d, out)?)
    }

    /// Reverse pass: gradients of `loss` with respect to every node.
    ///
    /// `loss` must be a scalar recorded on this tape. Parameters are not
    /// mutated; the caller applies updates.
    pub fn backward(&self, loss: TensorId) -> Result<Gradients> {
        if loss.0 >= self.nodes.len() {
            return Err(AutodiffError::InvalidOperand {
                op: "backward",
                detail: "loss not recorded on this tape".into(),
            });
        }
        if !self.value(loss).is_scalar() {
            return Err(AutodiffError::InvalidOperand {
                op: "backward",
                detail: format!("loss must be scalar, got shape {:?}", self.value(loss).shape()),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.accumulate_operands(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate_operands(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let gv = g.values();
        let mut add_to = |target: usize, delta: Vec<f64>| {
            let shape = self.nodes[target].value.shape().to_vec();
            match &mut grads[target] {
                Some(t) => {
                    for (o, d) in t.values_mut().iter_mut().zip(&delta) {
                        *o += d;
                    }
                }
                slot @ None => {
                    *slot = Some(Tensor::new(shape, delta).expect("gradient shape"));
                }
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let at = &self.nodes[*a].value;
                let bt = &self.nodes[*b].value;
                let (n, k) = (at.rows(), at.cols());
                let m = bt.cols();
                // dA = G Bᵀ
                let mut da = vec![0.0; n * k];
                for i in 0..n {
                    let grow = &gv[i * m..(i + 1) * m];
                    for p in 0..k {
                        let brow = bt.row(p);
                        da[i * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                    }
                }
                add_to(*a, da);
                // dB = Aᵀ G
                let mut db = vec![0.0; k * m];
                for i in 0..n {
                    let arow = at.row(i);
                    let grow = &gv[i * m..(i + 1) * m];
                    for (p, &av) in arow.iter().enumerate() {
                        if av != 0.0 {
                            let dst = &mut db[p * m..(p + 1) * m];
                            for (o, &gx) in dst.iter_mut().zip(grow) {
                                *o += av * gx;
                            }
                        }
                    }
                }
                add_to(*b, db);
            }
            Op::Transpose(a) => {
                let (m, n) = (node.value.rows(), node.value.cols());
                let mut da = vec![0.0; n * m];
                for i in 0..m {
                    for j in 0..n {
                        da[j * m + i] = gv[i * n + j];
                    }
                }
                add_to(*a, da);
            }
            Op::Add(a, b) => {
                add_to(*a, gv.to_vec());
                add_to(*b, gv.to_vec());
            }
            Op::AddBias(a, bias) => {
                add_to(*a, gv.to_vec());
                let d = self.nodes[*bias].value.len();
                let n = node.value.rows();
                let mut db = vec![0.0; d];
                for i in 0..n {
                    for j in 0..d {
                        db[j] += gv[i * d + j];
                    }
                }
                add_to(*bias, db);
            }
            Op::Mul(a, b) => {
                let av = self.nodes[*a].value.values();
                let bv = self.nodes[*b].value.values();
                add_to(*a, gv.iter().zip(bv).map(|(g, y)| g * y).collect());
                add_to(*b, gv.iter().zip(av).map(|(g, x)| g * x).collect());
            }
            Op::Scale(a, c) => {
                add_to(*a, gv.iter().map(|g| g * c).collect());
            }
            Op::Relu(a) => {
                let av = self.nodes[*a].value.values();
                // subgradient at exactly 0 is 0
                add_to(*a, gv.iter().zip(av).map(|(g, &x)| if x > 0.0 { *g } else { 0.0 }).collect());
            }
            Op::Softplus(a) => {
                let av = self.nodes[*a].value.values();
                add_to(
                    *a,
                    gv.iter().zip(av).map(|(g, &x)| g / (1.0 + (-x).exp())).collect(),
                );
            }
            Op::Exp(a) => {
                let out = node.value.values();
                add_to(*a, gv.iter().zip(out).map(|(g, y)| g * y).collect());
            }
            Op::Log(a) => {
                let av = self.nodes[*a].value.values();
                add_to(*a, gv.iter().zip(av).map(|(g, x)| g / x).collect());
            }
            Op::SumAll(a) => {
                let n = self.nodes[*a].value.len();
                add_to(*a, vec![gv[0]; n]);
            }
            Op::MeanAll(a) => {
                let n = self.nodes[*a].value.len();
                add_to(*a, vec![gv[0] / n as f64; n]);
            }
            Op::RowSum(a) => {
                let (n, m) = (self.nodes[*a].value.rows(), self.nodes[*a].value.cols());
                let mut da = vec![0.0; n * m];
                for i in 0..n {
                    da[i * m..(i + 1) * m].fill(gv[i]);
                }
                add_to(*a, da);
            }
            Op::ConcatCols(parts) => {
                let n = node.value.rows();
                let total = node.value.cols();
                let mut offset = 0;
                for &p in parts {
                    let w = self.nodes[p].value.cols();
                    let mut dp = vec![0.0; n * w];
                    for i in 0..n {
                        dp[i * w..(i + 1) * w]
                            .copy_from_slice(&gv[i * total + offset..i * total + offset + w]);
                    }
                    add_to(p, dp);
                    offset += w;
                }
            }
            Op::RowGather(a, index) => {
                let (n, d) = (self.nodes[*a].value.rows(), self.nodes[*a].value.cols());
                let mut da = vec![0.0; n * d];
                for (i, &src) in index.iter().enumerate() {
                    let dst = &mut da[src * d..(src + 1) * d];
                    let grow = &gv[i * d..(i + 1) * d];
                    for (o, g) in dst.iter_mut().zip(grow) {
                        *o += g;
                    }
                }
                add_to(*a, da);
            }
            Op::ScatterSum(a, index) => {
                let d = node.value.cols();
                let n = self.nodes[*a].value.rows();
                let mut da = vec![0.0; n * d];
                for (i, &seg) in index.iter().enumerate() {
                    da[i * d..(i + 1) * d].copy_from_slice(&gv[seg * d..(seg + 1) * d]);
                }
                add_to(*a, da);
            }
            Op::CosineSim { a, b, norm_a, norm_b } => {
                let at = &self.nodes[*a].value;
                let bt = &self.nodes[*b].value;
                let (n, d) = (at.rows(), at.cols());
                let m = bt.rows();
                let sv = node.value.values();
                let mut da = vec![0.0; n * d];
                let mut db = vec![0.0; m * d];
                for i in 0..n {
                    let ar = at.row(i);
                    for j in 0..m {
                        let g = gv[i * m + j];
                        if g == 0.0 {
                            continue;
                        }
                        let br = bt.row(j);
                        let s = sv[i * m + j];
                        let inv_ab = 1.0 / (norm_a[i] * norm_b[j]);
                        let ca = s / (norm_a[i] * norm_a[i]);
                        let cb = s / (norm_b[j] * norm_b[j]);
                        for t in 0..d {
                            da[i * d + t] += g * (br[t] * inv_ab - ca * ar[t]);
                            db[j * d + t] += g * (ar[t] * inv_ab - cb * br[t]);
                        }
                    }
                }
                add_to(*a, da);
                add_to(*b, db);
            }
            Op::BatchNorm { x, gamma, beta, xhat, inv_std } => {
                let (n, d) = (node.value.rows(), node.value.cols());
                let gamma_v = self.nodes[*gamma].value.values();
                // dgamma, dbeta
                let mut dgamma = vec![0.0; d];
                let mut dbeta = vec![0.0; d];
                for i in 0..n {
                    for j in 0..d {
                        dgamma[j] += gv[i * d + j] * xhat[i * d + j];
                        dbeta[j] += gv[i * d + j];
                    }
                }
                // dx through the batch statistics (train) or fixed stats (eval,
                // where the per-column sums vanish from the formula only if the
                // stats are constants; eval is handled by BatchNormEval below)
                let mut sum_dh = vec![0.0; d];
                let mut sum_dh_h = vec![0.0; d];
                for i in 0..n {
                    for j in 0..d {
                        let dh = gv[i * d + j] * gamma_v[j];
                        sum_dh[j] += dh;
                        sum_dh_h[j] += dh * xhat[i * d + j];
                    }
                }
                let mut dx = vec![0.0; n * d];
                let nf = n as f64;
                for i in 0..n {
                    for j in 0..d {
                        let dh = gv[i * d + j] * gamma_v[j];
                        dx[i * d + j] =
                            inv_std[j] / nf * (nf * dh - sum_dh[j] - xhat[i * d + j] * sum_dh_h[j]);
                    }
                }
                add_to(*x, dx);
                add_to(*gamma, dgamma);
                add_to(*beta, dbeta);
            }
            Op::BatchNormEval { x, gamma, beta, xhat, inv_std } => {
                let (n, d) = (node.value.rows(), node.value.cols());
                let gamma_v = self.nodes[*gamma].value.values();
                let mut dgamma = vec![0.0; d];
                let mut dbeta = vec![0.0; d];
                let mut dx = vec![0.0; n * d];
                for i in 0..n {
                    for j in 0..d {
                        let g = gv[i * d + j];
                        dgamma[j] += g * xhat[i * d + j];
                        dbeta[j] += g;
                        dx[i * d + j] = g * gamma_v[j] * inv_std[j];
                    }
                }
                add_to(*x, dx);
                add_to(*gamma, dgamma);
                add_to(*beta, dbeta);
            }
        }
    }
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for a node, if the loss depends on it.
    pub fn get(&self, id: TensorId) -> Option<&Tensor> {
        self.grads.get(id.index()).and_then(|g| g.as_ref())
    }

    /// Gradient for a node, a zero tensor of the node's shape when absent.
    pub fn get_or_zeros(&self, id: TensorId, shape: &[usize]) -> Tensor {
        match self.get(id) {
            Some(t) => t.clone(),
            None => Tensor::zeros(shape.to_vec()),
        }
    }
}

fn matmul_plain(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * m..(i + 1) * m];
        for (p, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let brow = &b[p * m..(p + 1) * m];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
    }
    out
}
