//! Define-by-run reverse-mode automatic differentiation.
//!
//! Each operation eagerly computes its output tensor and records itself on
//! the graph; [`Graph::backward`] walks the tape in reverse creation order
//! and accumulates gradients. A graph is built per training step and
//! dropped afterwards; node values never mutate once created.

use crate::autodiff::params::{ParamId, ParamSet};
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// Elementwise add; rhs may match a trailing suffix of lhs's shape
    /// (bias broadcast over leading axes).
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    MatMul(NodeId, NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Relu(NodeId),
    Sqrt(NodeId),
    Scale(NodeId, f64),
    Conv1d(NodeId, NodeId),
    MeanLastAxis(NodeId),
    Sum(NodeId),
    ConcatTime(Vec<NodeId>),
    SliceTime(NodeId, usize, usize),
    MseLoss(NodeId, NodeId),
    BceLoss(NodeId, NodeId),
    MomentLoss(NodeId, NodeId),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// A single-use computation tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Column statistics over the batch axis of a `[B, N]` tensor: per-column
/// mean and standard deviation `sqrt(population_var + 1e-6)`.
fn batch_moments(data: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let mut means = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            means[c] += data[r * cols + c];
        }
    }
    for m in &mut means {
        *m /= rows as f64;
    }
    let mut stds = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let d = data[r * cols + c] - means[c];
            stds[c] += d * d;
        }
    }
    for s in &mut stds {
        *s = (*s / rows as f64 + 1e-6).sqrt();
    }
    (means, stds)
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient buffer of `id` after a [`Graph::backward`] call; `None` if
    /// the node was not reached.
    pub fn grad(&self, id: NodeId) -> Option<&[f64]> {
        self.grads[id.0].as_deref()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.grads.push(None);
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf)
    }

    fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    fn data(&self, id: NodeId) -> &[f64] {
        self.nodes[id.0].value.data()
    }

    fn check_broadcast(&self, a: NodeId, b: NodeId, op: &str) -> Result<()> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        if sa == sb || (sb.len() < sa.len() && sa.ends_with(sb)) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{op}: shapes {sa:?} and {sb:?} are incompatible"
            )))
        }
    }

    fn check_equal_shapes(&self, a: NodeId, b: NodeId, op: &str) -> Result<()> {
        if self.shape(a) == self.shape(b) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{op}: shapes {:?} and {:?} must be equal",
                self.shape(a),
                self.shape(b)
            )))
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_broadcast(a, b, "add")?;
        let nb = self.data(b).len();
        let data: Vec<f64> = self
            .data(a)
            .iter()
            .enumerate()
            .map(|(i, &x)| x + self.data(b)[i % nb])
            .collect();
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_equal_shapes(a, b, "sub")?;
        let data: Vec<f64> = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| x - y)
            .collect();
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push(value, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_equal_shapes(a, b, "elementwise_mul")?;
        let data: Vec<f64> = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape(format!(
                "matmul: incompatible shapes {sa:?} x {sb:?}"
            )));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        let ad = self.data(a);
        let bd = self.data(b);
        for i in 0..m {
            for l in 0..k {
                let a_il = ad[i * k + l];
                let brow = &bd[l * n..(l + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += a_il * brow[j];
                }
            }
        }
        let value = Tensor::matrix(m, n, out)?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    fn unary(&mut self, x: NodeId, f: impl Fn(f64) -> f64, op: Op) -> NodeId {
        let data: Vec<f64> = self.data(x).iter().map(|&v| f(v)).collect();
        let value = Tensor::new(self.shape(x).to_vec(), data).expect("same shape");
        self.push(value, op)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(x, f64::tanh, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.unary(x, stable_sigmoid, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.unary(x, |v| v.max(0.0), Op::Relu(x))
    }

    /// Elementwise square root; the input must be non-negative.
    pub fn sqrt(&mut self, x: NodeId) -> NodeId {
        self.unary(x, f64::sqrt, Op::Sqrt(x))
    }

    /// Multiplication by a compile-time constant.
    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        self.unary(x, |v| c * v, Op::Scale(x, c))
    }

    /// Valid-padding 1-d convolution, stride 1: input `[B, N]` and kernel
    /// `[K, W]` produce `[B, K, N - W + 1]`.
    pub fn conv1d(&mut self, input: NodeId, kernel: NodeId) -> Result<NodeId> {
        let (si, sk) = (self.shape(input), self.shape(kernel));
        if si.len() != 2 || sk.len() != 2 {
            return Err(Error::shape(format!(
                "conv1d: input {si:?} and kernel {sk:?} must be rank 2"
            )));
        }
        let (b, n) = (si[0], si[1]);
        let (k, w) = (sk[0], sk[1]);
        if w > n {
            return Err(Error::shape(format!(
                "conv1d: kernel width {w} exceeds series length {n}"
            )));
        }
        let l = n - w + 1;
        let idata = self.data(input);
        let kdata = self.data(kernel);
        let mut out = vec![0.0; b * k * l];
        for bi in 0..b {
            for ki in 0..k {
                let krow = &kdata[ki * w..(ki + 1) * w];
                let orow = &mut out[(bi * k + ki) * l..(bi * k + ki + 1) * l];
                for li in 0..l {
                    let mut acc = 0.0;
                    for wi in 0..w {
                        acc += idata[bi * n + li + wi] * krow[wi];
                    }
                    orow[li] = acc;
                }
            }
        }
        let value = Tensor::new(vec![b, k, l], out)?;
        Ok(self.push(value, Op::Conv1d(input, kernel)))
    }

    /// Mean over the last axis: `[..., L]` becomes `[...]` (a rank-1 input
    /// becomes a `[1]` scalar).
    pub fn global_mean_over_time(&mut self, x: NodeId) -> NodeId {
        let shape = self.shape(x).to_vec();
        let l = *shape.last().unwrap();
        let out_shape = if shape.len() == 1 {
            vec![1]
        } else {
            shape[..shape.len() - 1].to_vec()
        };
        let rows: usize = out_shape.iter().product();
        let data = self.data(x);
        let out: Vec<f64> = (0..rows)
            .map(|r| data[r * l..(r + 1) * l].iter().sum::<f64>() / l as f64)
            .collect();
        let value = Tensor::new(out_shape, out).expect("consistent shape");
        self.push(value, Op::MeanLastAxis(x))
    }

    /// Sum of all elements, as a `[1]` tensor.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let total: f64 = self.data(x).iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(x))
    }

    /// Concatenates rank-2 tensors along the time (column) axis.
    pub fn concat_time(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::shape("concat_time: no inputs"));
        }
        let rows = {
            let s0 = self.shape(parts[0]);
            if s0.len() != 2 {
                return Err(Error::shape("concat_time: inputs must be rank 2"));
            }
            s0[0]
        };
        let mut total_cols = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.len() != 2 || s[0] != rows {
                return Err(Error::shape(format!(
                    "concat_time: shape {s:?} incompatible with {rows} rows"
                )));
            }
            total_cols += s[1];
        }
        let mut out = vec![0.0; rows * total_cols];
        let mut offset = 0;
        for &p in parts {
            let cols = self.shape(p)[1];
            let data = self.data(p);
            for r in 0..rows {
                out[r * total_cols + offset..r * total_cols + offset + cols]
                    .copy_from_slice(&data[r * cols..(r + 1) * cols]);
            }
            offset += cols;
        }
        let value = Tensor::matrix(rows, total_cols, out)?;
        Ok(self.push(value, Op::ConcatTime(parts.to_vec())))
    }

    /// Column slice `[start, start+len)` of a rank-2 tensor.
    pub fn slice_time(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let s = self.shape(x);
        if s.len() != 2 {
            return Err(Error::shape("slice_time: input must be rank 2"));
        }
        let (rows, cols) = (s[0], s[1]);
        if len == 0 || start + len > cols {
            return Err(Error::shape(format!(
                "slice_time: [{start}, {start}+{len}) out of bounds for {cols} columns"
            )));
        }
        let data = self.data(x);
        let mut out = vec![0.0; rows * len];
        for r in 0..rows {
            out[r * len..(r + 1) * len]
                .copy_from_slice(&data[r * cols + start..r * cols + start + len]);
        }
        let value = Tensor::matrix(rows, len, out)?;
        Ok(self.push(value, Op::SliceTime(x, start, len)))
    }

    /// Mean squared error over all elements, as a `[1]` tensor.
    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        self.check_equal_shapes(pred, target, "mse_loss")?;
        let n = self.data(pred).len() as f64;
        let total: f64 = self
            .data(pred)
            .iter()
            .zip(self.data(target))
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        Ok(self.push(Tensor::scalar(total / n), Op::MseLoss(pred, target)))
    }

    /// Logit-safe binary cross-entropy: `pred` holds raw logits, `target`
    /// probabilities in `[0, 1]`. Mean over all elements, as `[1]`.
    pub fn bce_loss(&mut self, logits: NodeId, target: NodeId) -> Result<NodeId> {
        self.check_equal_shapes(logits, target, "bce_loss")?;
        let n = self.data(logits).len() as f64;
        let total: f64 = self
            .data(logits)
            .iter()
            .zip(self.data(target))
            .map(|(&z, &y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
            .sum();
        Ok(self.push(Tensor::scalar(total / n), Op::BceLoss(logits, target)))
    }

    /// Batch-moment matching loss between two `[B, N]` tensors: mean over
    /// columns of |mean gap| plus mean over columns of |std gap|, where the
    /// moments are taken across the batch axis.
    pub fn moment_loss(&mut self, fake: NodeId, real: NodeId) -> Result<NodeId> {
        self.check_equal_shapes(fake, real, "moment_loss")?;
        let s = self.shape(fake);
        if s.len() != 2 {
            return Err(Error::shape("moment_loss: inputs must be rank 2"));
        }
        let (rows, cols) = (s[0], s[1]);
        let (mf, sf) = batch_moments(self.data(fake), rows, cols);
        let (mr, sr) = batch_moments(self.data(real), rows, cols);
        let mean_gap: f64 = mf.iter().zip(&mr).map(|(a, b)| (a - b).abs()).sum::<f64>() / cols as f64;
        let std_gap: f64 = sf.iter().zip(&sr).map(|(a, b)| (a - b).abs()).sum::<f64>() / cols as f64;
        Ok(self.push(
            Tensor::scalar(mean_gap + std_gap),
            Op::MomentLoss(fake, real),
        ))
    }

    /// Accumulates `d loss / d node` into every node reachable from `loss`.
    /// Repeated calls without a fresh graph keep accumulating.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(Error::usage(format!(
                "backward requires a scalar loss, shape is {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let n = self.nodes.len();
        // seed buffers reached in this pass; older accumulated grads stay
        let mut reached = vec![false; n];
        reached[loss.0] = true;
        let mut pass: Vec<Option<Vec<f64>>> = (0..n).map(|_| None).collect();
        pass[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            if pass[i].is_none() {
                continue;
            }
            let gout = pass[i].take().unwrap();
            // fold this pass's gradient into the persistent accumulator
            {
                let slot = &mut self.grads[i];
                match slot {
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&gout) {
                            *a += g;
                        }
                    }
                    None => *slot = Some(gout.clone()),
                }
            }
            let send = |pass: &mut Vec<Option<Vec<f64>>>, parent: NodeId, contrib: Vec<f64>| {
                match &mut pass[parent.0] {
                    Some(buf) => {
                        for (b, c) in buf.iter_mut().zip(&contrib) {
                            *b += c;
                        }
                    }
                    None => pass[parent.0] = Some(contrib),
                }
            };
            match self.nodes[i].op.clone() {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    send(&mut pass, a, gout.clone());
                    let nb = self.nodes[b.0].value.numel();
                    let mut gb = vec![0.0; nb];
                    for (j, g) in gout.iter().enumerate() {
                        gb[j % nb] += g;
                    }
                    send(&mut pass, b, gb);
                }
                Op::Sub(a, b) => {
                    send(&mut pass, a, gout.clone());
                    send(&mut pass, b, gout.iter().map(|g| -g).collect());
                }
                Op::Mul(a, b) => {
                    let ga: Vec<f64> = gout
                        .iter()
                        .zip(self.data(b))
                        .map(|(g, v)| g * v)
                        .collect();
                    let gb: Vec<f64> = gout
                        .iter()
                        .zip(self.data(a))
                        .map(|(g, v)| g * v)
                        .collect();
                    send(&mut pass, a, ga);
                    send(&mut pass, b, gb);
                }
                Op::MatMul(a, b) => {
                    let (m, k) = (self.shape(a)[0], self.shape(a)[1]);
                    let nn = self.shape(b)[1];
                    let ad = self.data(a);
                    let bd = self.data(b);
                    // dA = dC . B^T
                    let mut ga = vec![0.0; m * k];
                    for i2 in 0..m {
                        for j in 0..nn {
                            let g = gout[i2 * nn + j];
                            for l in 0..k {
                                ga[i2 * k + l] += g * bd[l * nn + j];
                            }
                        }
                    }
                    // dB = A^T . dC
                    let mut gb = vec![0.0; k * nn];
                    for i2 in 0..m {
                        for l in 0..k {
                            let av = ad[i2 * k + l];
                            for j in 0..nn {
                                gb[l * nn + j] += av * gout[i2 * nn + j];
                            }
                        }
                    }
                    send(&mut pass, a, ga);
                    send(&mut pass, b, gb);
                }
                Op::Tanh(x) => {
                    let own = self.data(NodeId(i));
                    let gx: Vec<f64> = gout
                        .iter()
                        .zip(own)
                        .map(|(g, t)| g * (1.0 - t * t))
                        .collect();
                    send(&mut pass, x, gx);
                }
                Op::Sigmoid(x) => {
                    let own = self.data(NodeId(i));
                    let gx: Vec<f64> = gout
                        .iter()
                        .zip(own)
                        .map(|(g, s)| g * s * (1.0 - s))
                        .collect();
                    send(&mut pass, x, gx);
                }
                Op::Relu(x) => {
                    let inp = self.data(x);
                    let gx: Vec<f64> = gout
                        .iter()
                        .zip(inp)
                        .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                        .collect();
                    send(&mut pass, x, gx);
                }
                Op::Sqrt(x) => {
                    let own = self.data(NodeId(i));
                    let gx: Vec<f64> = gout
                        .iter()
                        .zip(own)
                        .map(|(g, s)| g * 0.5 / s)
                        .collect();
                    send(&mut pass, x, gx);
                }
                Op::Scale(x, c) => {
                    send(&mut pass, x, gout.iter().map(|g| c * g).collect());
                }
                Op::Conv1d(input, kernel) => {
                    let (b, n) = (self.shape(input)[0], self.shape(input)[1]);
                    let (k, w) = (self.shape(kernel)[0], self.shape(kernel)[1]);
                    let l = n - w + 1;
                    let idata = self.data(input);
                    let kdata = self.data(kernel);
                    let mut gi = vec![0.0; b * n];
                    let mut gk = vec![0.0; k * w];
                    for bi in 0..b {
                        for ki in 0..k {
                            let gofs = (bi * k + ki) * l;
                            for li in 0..l {
                                let g = gout[gofs + li];
                                for wi in 0..w {
                                    gi[bi * n + li + wi] += g * kdata[ki * w + wi];
                                    gk[ki * w + wi] += g * idata[bi * n + li + wi];
                                }
                            }
                        }
                    }
                    send(&mut pass, input, gi);
                    send(&mut pass, kernel, gk);
                }
                Op::MeanLastAxis(x) => {
                    let shape = self.shape(x);
                    let l = *shape.last().unwrap();
                    let rows = self.nodes[x.0].value.numel() / l;
                    let mut gx = vec![0.0; rows * l];
                    for r in 0..rows {
                        let g = gout[r] / l as f64;
                        for c in 0..l {
                            gx[r * l + c] = g;
                        }
                    }
                    send(&mut pass, x, gx);
                }
                Op::Sum(x) => {
                    let nx = self.nodes[x.0].value.numel();
                    send(&mut pass, x, vec![gout[0]; nx]);
                }
                Op::ConcatTime(parts) => {
                    let total_cols = self.shape(NodeId(i))[1];
                    let rows = self.shape(NodeId(i))[0];
                    let mut offset = 0;
                    for &p in &parts {
                        let cols = self.shape(p)[1];
                        let mut gp = vec![0.0; rows * cols];
                        for r in 0..rows {
                            gp[r * cols..(r + 1) * cols].copy_from_slice(
                                &gout[r * total_cols + offset..r * total_cols + offset + cols],
                            );
                        }
                        send(&mut pass, p, gp);
                        offset += cols;
                    }
                }
                Op::SliceTime(x, start, len) => {
                    let (rows, cols) = (self.shape(x)[0], self.shape(x)[1]);
                    let mut gx = vec![0.0; rows * cols];
                    for r in 0..rows {
                        gx[r * cols + start..r * cols + start + len]
                            .copy_from_slice(&gout[r * len..(r + 1) * len]);
                    }
                    send(&mut pass, x, gx);
                }
                Op::MseLoss(pred, target) => {
                    let n = self.nodes[pred.0].value.numel() as f64;
                    let g = gout[0];
                    let pd = self.data(pred);
                    let td = self.data(target);
                    let gp: Vec<f64> = pd
                        .iter()
                        .zip(td)
                        .map(|(p, t)| g * 2.0 * (p - t) / n)
                        .collect();
                    let gt: Vec<f64> = gp.iter().map(|v| -v).collect();
                    send(&mut pass, pred, gp);
                    send(&mut pass, target, gt);
                }
                Op::BceLoss(logits, target) => {
                    let n = self.nodes[logits.0].value.numel() as f64;
                    let g = gout[0];
                    let zd = self.data(logits);
                    let yd = self.data(target);
                    let gz: Vec<f64> = zd
                        .iter()
                        .zip(yd)
                        .map(|(&z, &y)| g * (stable_sigmoid(z) - y) / n)
                        .collect();
                    let gy: Vec<f64> = zd.iter().map(|&z| g * (-z) / n).collect();
                    send(&mut pass, logits, gz);
                    send(&mut pass, target, gy);
                }
                Op::MomentLoss(fake, real) => {
                    let (rows, cols) = (self.shape(fake)[0], self.shape(fake)[1]);
                    let g = gout[0];
                    let fd = self.data(fake);
                    let rd = self.data(real);
                    let (mf, sf) = batch_moments(fd, rows, cols);
                    let (mr, sr) = batch_moments(rd, rows, cols);
                    let bn = rows as f64;
                    let cn = cols as f64;
                    let mut gf = vec![0.0; rows * cols];
                    let mut gr = vec![0.0; rows * cols];
                    for c in 0..cols {
                        let mean_sign = sign(mf[c] - mr[c]);
                        let std_sign = sign(sf[c] - sr[c]);
                        for r in 0..rows {
                            let idx = r * cols + c;
                            gf[idx] = g
                                * (mean_sign / (cn * bn)
                                    + std_sign * (fd[idx] - mf[c]) / (cn * bn * sf[c]));
                            gr[idx] = g
                                * (-mean_sign / (cn * bn)
                                    - std_sign * (rd[idx] - mr[c]) / (cn * bn * sr[c]));
                        }
                    }
                    send(&mut pass, fake, gf);
                    send(&mut pass, real, gr);
                }
            }
        }
        Ok(())
    }
}

/// Leaf nodes for every parameter of a [`ParamSet`], so layers can address
/// parameters by [`ParamId`] while building a graph.
pub struct BoundParams {
    nodes: Vec<NodeId>,
}

impl BoundParams {
    pub fn bind(graph: &mut Graph, params: &ParamSet) -> Self {
        let nodes = params
            .ids()
            .map(|id| graph.leaf(params.tensor(id).clone()))
            .collect();
        BoundParams { nodes }
    }

    pub fn node(&self, id: ParamId) -> NodeId {
        self.nodes[id.0]
    }

    /// Gradient per parameter, indexed by `ParamId`; `None` where the loss
    /// did not reach the parameter.
    pub fn grads(&self, graph: &Graph) -> Vec<Option<Vec<f64>>> {
        self.nodes
            .iter()
            .map(|&n| graph.grad(n).map(<[f64]>::to_vec))
            .collect()
    }
}
