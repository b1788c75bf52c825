use std::sync::Arc;

use super::linalg::{matmul_into, matmul_nt_into, matmul_tn_into};
use super::{Scalar, Tensor};
use crate::{Error, Result};

/// Slope used for the attention nonlinearity unless configured otherwise.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Relu,
    Sigmoid,
    LeakyRelu(f64),
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, T),
    ScaleBy(Var, Var),
    Act(Var, Activation),
    GatherRows(Var, Arc<[u32]>),
    SegmentSoftmax(Var, Arc<[usize]>),
    SegmentAggregate {
        alpha: Var,
        z: Var,
        src: Arc<[u32]>,
        offsets: Arc<[usize]>,
    },
    NormalizeRows(Var),
    Sum(Var),
    // Fused losses cache d(loss)/d(input) at record time.
    Bce(Var, Vec<T>),
    SupCon(Var, Vec<T>),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
    grad: Option<Tensor<T>>,
}

/// Records tensor operations in execution order and replays them backward.
///
/// A tape is meant to live for one forward/backward pass; start a fresh one
/// (or call [`Tape::clear`]) before every optimizer step.
pub struct Tape<T: Scalar = f32> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn ensure_finite<T: Scalar>(op: &'static str, data: &[T]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn sigmoid_f64(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn segment_softmax_into<T: Scalar>(logits: &[T], offsets: &[usize], out: &mut [T]) -> Result<()> {
    if offsets.last().copied().unwrap_or(0) != logits.len() {
        return Err(Error::shape(
            "neighborhood_softmax",
            format!("offsets end at {:?}, {} logits", offsets.last(), logits.len()),
        ));
    }
    for (g, w) in offsets.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            return Err(Error::EmptyGroup {
                op: "neighborhood_softmax",
                node: g,
            });
        }
        let seg = &logits[lo..hi];
        let max = seg.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for (o, &l) in out[lo..hi].iter_mut().zip(seg) {
            *o = (l - max).exp();
            total = total + *o;
        }
        for o in &mut out[lo..hi] {
            *o = *o / total;
        }
    }
    ensure_finite("neighborhood_softmax", out)
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a trainable leaf.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Records a leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Gradient of the last [`backward`](Self::backward) target with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&Tensor<T>> {
        self.nodes[v.0].grad.as_ref()
    }

    fn matrix_dims(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows(), t.cols())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.matrix_dims(a);
        let (k2, n) = self.matrix_dims(b);
        if k != k2 {
            return Err(Error::shape("matmul", format!("[{m}x{k}] x [{k2}x{n}]")));
        }
        let mut out = vec![T::zero(); m * n];
        matmul_into(self.value(a).data(), self.value(b).data(), m, k, n, &mut out);
        ensure_finite("matmul", &out)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b), rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out: Vec<T> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x + y)
            .collect();
        ensure_finite("add", &out)?;
        let shape = self.value(a).shape().to_vec();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::from_parts(shape, out), Op::Add(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out: Vec<T> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        ensure_finite("mul", &out)?;
        let shape = self.value(a).shape().to_vec();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::from_parts(shape, out), Op::Mul(a, b), rg))
    }

    /// Adds `bias` (length = column count) to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.matrix_dims(x);
        if self.value(bias).len() != n {
            return Err(Error::shape(
                "add_row",
                format!("bias of {} for {n} columns", self.value(bias).len()),
            ));
        }
        let b = self.value(bias).data();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_mut(n.max(1)) {
            for (o, &bv) in row.iter_mut().zip(b) {
                *o = *o + bv;
            }
        }
        ensure_finite("add_row", &out)?;
        let rg = self.rg(x) || self.rg(bias);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::AddRow(x, bias), rg))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let c = T::of(c);
        let out: Vec<T> = self.value(x).data().iter().map(|&v| v * c).collect();
        ensure_finite("scale", &out)?;
        let shape = self.value(x).shape().to_vec();
        let rg = self.rg(x);
        Ok(self.push(Tensor::from_parts(shape, out), Op::Scale(x, c), rg))
    }

    /// Multiplies every element of `x` by the single element of `s`.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(Error::shape("scale_by", "scale must have one element"));
        }
        let c = self.value(s).data()[0];
        let out: Vec<T> = self.value(x).data().iter().map(|&v| v * c).collect();
        ensure_finite("scale_by", &out)?;
        let shape = self.value(x).shape().to_vec();
        let rg = self.rg(x) || self.rg(s);
        Ok(self.push(Tensor::from_parts(shape, out), Op::ScaleBy(x, s), rg))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var> {
        let xs = self.value(x).data();
        let out: Vec<T> = match kind {
            Activation::Relu => xs.iter().map(|&v| v.max(T::zero())).collect(),
            Activation::Sigmoid => xs.iter().map(|&v| sigmoid(v)).collect(),
            Activation::LeakyRelu(slope) => {
                let s = T::of(slope);
                xs.iter().map(|&v| if v > T::zero() { v } else { v * s }).collect()
            }
        };
        ensure_finite("activation", &out)?;
        let shape = self.value(x).shape().to_vec();
        let rg = self.rg(x);
        Ok(self.push(Tensor::from_parts(shape, out), Op::Act(x, kind), rg))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Relu)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Sigmoid)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        self.activation(x, Activation::LeakyRelu(slope))
    }

    /// `out[r] = x[index[r]]` row-wise.
    pub fn gather_rows(&mut self, x: Var, index: Arc<[u32]>) -> Result<Var> {
        let (m, n) = self.matrix_dims(x);
        let xs = self.value(x).data();
        let mut out = Vec::with_capacity(index.len() * n);
        for &r in index.iter() {
            let r = r as usize;
            if r >= m {
                return Err(Error::shape("gather_rows", format!("row {r} of {m}")));
            }
            out.extend_from_slice(&xs[r * n..(r + 1) * n]);
        }
        let rg = self.rg(x);
        let shape = vec![index.len(), n];
        Ok(self.push(Tensor::from_parts(shape, out), Op::GatherRows(x, index), rg))
    }

    /// Softmax of a per-edge scalar within each destination segment.
    pub fn segment_softmax(&mut self, logits: Var, offsets: Arc<[usize]>) -> Result<Var> {
        let l = self.value(logits).data();
        let mut out = vec![T::zero(); l.len()];
        segment_softmax_into(l, &offsets, &mut out)?;
        let rg = self.rg(logits);
        let shape = vec![out.len()];
        Ok(self.push(Tensor::from_parts(shape, out), Op::SegmentSoftmax(logits, offsets), rg))
    }

    /// `out[g] = Σ_{e ∈ segment g} alpha[e] · z[src[e]]`.
    pub fn segment_aggregate(&mut self, alpha: Var, z: Var, src: Arc<[u32]>, offsets: Arc<[usize]>) -> Result<Var> {
        let (m, n) = self.matrix_dims(z);
        let a = self.value(alpha).data();
        if a.len() != src.len() || offsets.last().copied() != Some(src.len()) {
            return Err(Error::shape(
                "segment_aggregate",
                format!("{} weights, {} sources", a.len(), src.len()),
            ));
        }
        let zs = self.value(z).data();
        let groups = offsets.len() - 1;
        let mut out = vec![T::zero(); groups * n];
        for g in 0..groups {
            let row = &mut out[g * n..(g + 1) * n];
            for e in offsets[g]..offsets[g + 1] {
                let s = src[e] as usize;
                if s >= m {
                    return Err(Error::shape("segment_aggregate", format!("source {s} of {m}")));
                }
                let w = a[e];
                for (o, &zv) in row.iter_mut().zip(&zs[s * n..(s + 1) * n]) {
                    *o = *o + w * zv;
                }
            }
        }
        ensure_finite("segment_aggregate", &out)?;
        let rg = self.rg(alpha) || self.rg(z);
        Ok(self.push(
            Tensor::from_parts(vec![groups, n], out),
            Op::SegmentAggregate { alpha, z, src, offsets },
            rg,
        ))
    }

    /// Scales every row to unit L2 norm. A zero row is an error.
    pub fn normalize_rows(&mut self, x: Var) -> Result<Var> {
        let (m, n) = self.matrix_dims(x);
        let mut out = self.value(x).data().to_vec();
        for (r, row) in out.chunks_mut(n.max(1)).enumerate() {
            let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
            if !(norm > T::zero()) {
                return Err(Error::ZeroNorm { row: r });
            }
            row.iter_mut().for_each(|v| *v = *v / norm);
        }
        ensure_finite("normalize_rows", &out)?;
        let rg = self.rg(x);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::NormalizeRows(x), rg))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s: T = self.value(x).data().iter().copied().sum();
        ensure_finite("sum", &[s])?;
        let rg = self.rg(x);
        Ok(self.push(Tensor::from_parts(vec![1], vec![s]), Op::Sum(x), rg))
    }

    /// Mean binary cross entropy over `rows` of `logits` against `targets`,
    /// evaluated in the overflow-free logits form.
    pub fn bce_with_logits(&mut self, logits: Var, targets: &Tensor<T>, rows: &[usize]) -> Result<Var> {
        let lt = self.value(logits);
        if lt.shape() != targets.shape() {
            return Err(Error::shape(
                "bce_with_logits",
                format!("logits {:?} vs targets {:?}", lt.shape(), targets.shape()),
            ));
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("bce loss over an empty node set".into()));
        }
        let (m, d) = (lt.rows(), lt.cols());
        let count = (rows.len() * d) as f64;
        let mut total = 0.0f64;
        let mut grad = vec![T::zero(); lt.len()];
        for &r in rows {
            if r >= m {
                return Err(Error::shape("bce_with_logits", format!("row {r} of {m}")));
            }
            for c in 0..d {
                let i = r * d + c;
                let l = lt.data()[i].as_f64();
                let t = targets.data()[i].as_f64();
                total += l.max(0.0) - l * t + (-l.abs()).exp().ln_1p();
                grad[i] = grad[i] + T::of((sigmoid_f64(l) - t) / count);
            }
        }
        let loss = T::of(total / count);
        ensure_finite("bce_with_logits", &[loss])?;
        let rg = self.rg(logits);
        Ok(self.push(Tensor::from_parts(vec![1], vec![loss]), Op::Bce(logits, grad), rg))
    }

    /// Supervised contrastive loss over a batch of (unit-norm) projections.
    ///
    /// Each anchor contrasts its same-label partners against every other
    /// sample in the batch; anchors without partners are skipped.
    pub fn supcon(&mut self, z: Var, labels: &[u32], temperature: f64) -> Result<Var> {
        let (b, d) = self.matrix_dims(z);
        if labels.len() != b {
            return Err(Error::shape("supcon", format!("{} labels for {b} rows", labels.len())));
        }
        if b < 2 {
            return Err(Error::InvalidArgument("supcon needs a batch of at least 2".into()));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidArgument(format!("temperature {temperature}")));
        }
        let zs: Vec<f64> = self.value(z).data().iter().map(|v| v.as_f64()).collect();
        let mut sim = vec![0.0f64; b * b];
        matmul_nt_into(&zs, &zs, b, d, b, &mut sim);
        sim.iter_mut().for_each(|s| *s /= temperature);

        let anchors: Vec<usize> = (0..b)
            .filter(|&i| (0..b).any(|p| p != i && labels[p] == labels[i]))
            .collect();
        if anchors.is_empty() {
            return Err(Error::InvalidArgument("no anchor in the batch has a positive".into()));
        }
        let na = anchors.len() as f64;
        let mut total = 0.0;
        let mut g_sim = vec![0.0f64; b * b];
        for &i in &anchors {
            let row = &sim[i * b..(i + 1) * b];
            let max = (0..b)
                .filter(|&a| a != i)
                .map(|a| row[a])
                .fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = (0..b).filter(|&a| a != i).map(|a| (row[a] - max).exp()).sum();
            let lse = max + denom.ln();
            let positives: Vec<usize> = (0..b).filter(|&p| p != i && labels[p] == labels[i]).collect();
            let np = positives.len() as f64;
            total += -positives.iter().map(|&p| row[p] - lse).sum::<f64>() / np;
            for a in (0..b).filter(|&a| a != i) {
                g_sim[i * b + a] += (row[a] - lse).exp() / na;
            }
            for &p in &positives {
                g_sim[i * b + p] -= 1.0 / (np * na);
            }
        }
        // dL/dZ = (G + Gᵀ) Z / temperature
        let mut sym = vec![0.0f64; b * b];
        for i in 0..b {
            for j in 0..b {
                sym[i * b + j] = (g_sim[i * b + j] + g_sim[j * b + i]) / temperature;
            }
        }
        let mut gz = vec![0.0f64; b * d];
        matmul_into(&sym, &zs, b, b, d, &mut gz);
        let loss = T::of(total / na);
        ensure_finite("supcon", &[loss])?;
        let grad: Vec<T> = gz.into_iter().map(T::of).collect();
        ensure_finite("supcon", &grad)?;
        let rg = self.rg(z);
        Ok(self.push(Tensor::from_parts(vec![1], vec![loss]), Op::SupCon(z, grad), rg))
    }

    /// Propagates d`loss`/d(·) to every recorded value that requires a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::shape("backward", "loss must be a single value"));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.backprop_node(idx, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        for (idx, g) in grads.into_iter().enumerate() {
            if let Some(g) = g {
                ensure_finite("backward", &g)?;
                let shape = self.nodes[idx].value.shape().to_vec();
                self.nodes[idx].grad = Some(Tensor::from_parts(shape, g));
            }
        }
        Ok(())
    }

    fn accumulate(&self, grads: &mut [Option<Vec<T>>], v: Var, f: impl FnOnce(&mut [T])) {
        if !self.rg(v) {
            return;
        }
        let len = self.value(v).len();
        let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); len]);
        f(slot);
    }

    fn backprop_node(&self, idx: usize, g: &[T], grads: &mut [Option<Vec<T>>]) -> Result<()> {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.matrix_dims(*a);
                let n = self.matrix_dims(*b).1;
                if self.rg(*a) {
                    let mut ga = vec![T::zero(); m * k];
                    matmul_nt_into(g, self.value(*b).data(), m, n, k, &mut ga);
                    self.accumulate(grads, *a, |s| add_assign(s, &ga));
                }
                if self.rg(*b) {
                    let mut gb = vec![T::zero(); k * n];
                    matmul_tn_into(self.value(*a).data(), g, k, m, n, &mut gb);
                    self.accumulate(grads, *b, |s| add_assign(s, &gb));
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |s| add_assign(s, g));
                self.accumulate(grads, *b, |s| add_assign(s, g));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(grads, *a, |s| {
                    for ((o, &gi), &y) in s.iter_mut().zip(g).zip(bv) {
                        *o = *o + gi * y;
                    }
                });
                self.accumulate(grads, *b, |s| {
                    for ((o, &gi), &x) in s.iter_mut().zip(g).zip(av) {
                        *o = *o + gi * x;
                    }
                });
            }
            Op::AddRow(x, bias) => {
                self.accumulate(grads, *x, |s| add_assign(s, g));
                let n = self.value(*bias).len();
                self.accumulate(grads, *bias, |s| {
                    for row in g.chunks(n.max(1)) {
                        add_assign(s, row);
                    }
                });
            }
            Op::Scale(x, c) => {
                self.accumulate(grads, *x, |s| {
                    for (o, &gi) in s.iter_mut().zip(g) {
                        *o = *o + gi * *c;
                    }
                });
            }
            Op::ScaleBy(x, sc) => {
                let c = self.value(*sc).data()[0];
                let xv = self.value(*x).data();
                self.accumulate(grads, *x, |s| {
                    for (o, &gi) in s.iter_mut().zip(g) {
                        *o = *o + gi * c;
                    }
                });
                self.accumulate(grads, *sc, |s| {
                    let dot: T = g.iter().zip(xv).map(|(&gi, &xi)| gi * xi).sum();
                    s[0] = s[0] + dot;
                });
            }
            Op::Act(x, kind) => {
                let xv = self.value(*x).data();
                let yv = node.value.data();
                self.accumulate(grads, *x, |s| {
                    for i in 0..s.len() {
                        let d = match kind {
                            Activation::Relu => {
                                if xv[i] > T::zero() {
                                    T::one()
                                } else {
                                    T::zero()
                                }
                            }
                            Activation::Sigmoid => yv[i] * (T::one() - yv[i]),
                            Activation::LeakyRelu(slope) => {
                                if xv[i] > T::zero() {
                                    T::one()
                                } else {
                                    T::of(*slope)
                                }
                            }
                        };
                        s[i] = s[i] + g[i] * d;
                    }
                });
            }
            Op::GatherRows(x, index) => {
                let n = self.matrix_dims(*x).1;
                self.accumulate(grads, *x, |s| {
                    for (r, &src) in index.iter().enumerate() {
                        let src = src as usize;
                        add_assign(&mut s[src * n..(src + 1) * n], &g[r * n..(r + 1) * n]);
                    }
                });
            }
            Op::SegmentSoftmax(l, offsets) => {
                let y = node.value.data();
                self.accumulate(grads, *l, |s| {
                    for w in offsets.windows(2) {
                        let (lo, hi) = (w[0], w[1]);
                        let dot: T = (lo..hi).map(|e| g[e] * y[e]).sum();
                        for e in lo..hi {
                            s[e] = s[e] + y[e] * (g[e] - dot);
                        }
                    }
                });
            }
            Op::SegmentAggregate { alpha, z, src, offsets } => {
                let n = self.matrix_dims(*z).1;
                let zv = self.value(*z).data();
                let av = self.value(*alpha).data();
                self.accumulate(grads, *alpha, |s| {
                    for grp in 0..offsets.len() - 1 {
                        let gr = &g[grp * n..(grp + 1) * n];
                        for e in offsets[grp]..offsets[grp + 1] {
                            let j = src[e] as usize;
                            let dot: T = gr.iter().zip(&zv[j * n..(j + 1) * n]).map(|(&a, &b)| a * b).sum();
                            s[e] = s[e] + dot;
                        }
                    }
                });
                self.accumulate(grads, *z, |s| {
                    for grp in 0..offsets.len() - 1 {
                        let gr = &g[grp * n..(grp + 1) * n];
                        for e in offsets[grp]..offsets[grp + 1] {
                            let j = src[e] as usize;
                            for (o, &gi) in s[j * n..(j + 1) * n].iter_mut().zip(gr) {
                                *o = *o + av[e] * gi;
                            }
                        }
                    }
                });
            }
            Op::NormalizeRows(x) => {
                let n = self.matrix_dims(*x).1.max(1);
                let xv = self.value(*x).data();
                let yv = node.value.data();
                self.accumulate(grads, *x, |s| {
                    for r in 0..xv.len() / n {
                        let span = r * n..(r + 1) * n;
                        let xr = &xv[span.clone()];
                        let yr = &yv[span.clone()];
                        let gr = &g[span.clone()];
                        let norm = xr.iter().map(|&v| v * v).sum::<T>().sqrt();
                        let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                        for ((o, &gi), &yi) in s[span].iter_mut().zip(gr).zip(yr) {
                            *o = *o + (gi - yi * dot) / norm;
                        }
                    }
                });
            }
            Op::Sum(x) => {
                self.accumulate(grads, *x, |s| s.iter_mut().for_each(|o| *o = *o + g[0]));
            }
            Op::Bce(x, cached) | Op::SupCon(x, cached) => {
                self.accumulate(grads, *x, |s| {
                    for (o, &c) in s.iter_mut().zip(cached) {
                        *o = *o + g[0] * c;
                    }
                });
            }
        }
        Ok(())
    }
}

fn add_assign<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity_and_projector() {
        let mut tape = Tape::<f64>::new();
        let eye = tape.constant(t(&[2, 2], &[1., 0., 0., 1.]));
        let m = tape.constant(t(&[2, 2], &[1., 2., 3., 4.]));
        let out = tape.matmul(eye, m).unwrap();
        assert_eq!(tape.value(out).data(), &[1., 2., 3., 4.]);

        let p = tape.constant(t(&[2, 2], &[1., 0., 0., 0.]));
        let q = tape.constant(t(&[2, 2], &[5., 6., 7., 8.]));
        let out = tape.matmul(p, q).unwrap();
        assert_eq!(tape.value(out).data(), &[5., 6., 0., 0.]);
    }

    #[test]
    fn matmul_shape_mismatch() {
        let mut tape = Tape::<f64>::new();
        let a = tape.constant(Tensor::zeros([2, 3]));
        let b = tape.constant(Tensor::zeros([2, 3]));
        assert!(matches!(tape.matmul(a, b), Err(Error::Shape { .. })));
    }

    #[test]
    fn activations() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(t(&[3], &[-1., 0., 2.]));
        let r = tape.relu(x).unwrap();
        assert_eq!(tape.value(r).data(), &[0., 0., 2.]);
        let z = tape.constant(t(&[1], &[0.]));
        let s = tape.sigmoid(z).unwrap();
        assert_eq!(tape.value(s).data(), &[0.5]);
        let n = tape.constant(t(&[1], &[-2.]));
        let l = tape.leaky_relu(n, DEFAULT_LEAKY_SLOPE).unwrap();
        assert!((tape.value(l).data()[0] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_extremes_stay_finite() {
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::new([2], vec![-1000.0f32, 1000.0]).unwrap());
        let s = tape.sigmoid(x).unwrap();
        assert_eq!(tape.value(s).data(), &[0.0, 1.0]);
    }

    #[test]
    fn segment_softmax_examples() {
        let one = crate::numerics::neighborhood_softmax(&[3.7f64], &[0, 1]).unwrap();
        assert_eq!(one, vec![1.0]);
        let two = crate::numerics::neighborhood_softmax(&[0.3f64, 0.3], &[0, 2]).unwrap();
        assert_eq!(two, vec![0.5, 0.5]);
        let three = crate::numerics::neighborhood_softmax(&[1.0f64, 2.0, 3.0], &[0, 3]).unwrap();
        let z: f64 = [1.0f64, 2.0, 3.0].iter().map(|v| v.exp()).sum();
        for (got, l) in three.iter().zip([1.0f64, 2.0, 3.0]) {
            assert!((got - l.exp() / z).abs() < 1e-6);
        }
        for (got, want) in three.iter().zip([0.0900, 0.2447, 0.6652]) {
            assert!((got - want).abs() < 1e-4);
        }
    }

    #[test]
    fn segment_softmax_rejects_empty_group() {
        let err = crate::numerics::neighborhood_softmax(&[1.0f64], &[0, 0, 1]).unwrap_err();
        assert!(matches!(err, Error::EmptyGroup { node: 0, .. }));
    }

    #[test]
    fn non_finite_is_an_error() {
        assert!(matches!(Tensor::new([1], vec![f32::NAN]), Err(Error::NonFinite(_))));
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::new([1], vec![f32::MAX]).unwrap());
        assert!(matches!(tape.add(x, x), Err(Error::NonFinite("add"))));
    }

    #[test]
    fn normalize_zero_row_fails() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(t(&[2, 2], &[1., 1., 0., 0.]));
        assert!(matches!(tape.normalize_rows(x), Err(Error::ZeroNorm { row: 1 })));
    }

    #[test]
    fn backward_of_sum_of_squares() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(t(&[2], &[1., 2.]));
        let sq = tape.mul(x, x).unwrap();
        let s = tape.sum(sq).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[2., 4.]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(t(&[2], &[1., 2.]));
        let c = tape.constant(t(&[2], &[3., 4.]));
        let p = tape.mul(x, c).unwrap();
        let s = tape.sum(p).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[3., 4.]);
        assert!(tape.grad(c).is_none());
    }

    #[test]
    fn bce_reference_values() {
        let mut tape = Tape::<f64>::new();
        let logits = tape.constant(Tensor::zeros([2, 3]));
        let targets = t(&[2, 3], &[1., 1., 0., 0., 0., 0.]);
        let loss = tape.bce_with_logits(logits, &targets, &[0, 1]).unwrap();
        assert!((tape.value(loss).data()[0] - std::f64::consts::LN_2).abs() < 1e-12);

        let sure = tape.constant(t(&[1, 1], &[30.]));
        let loss = tape.bce_with_logits(sure, &t(&[1, 1], &[1.]), &[0]).unwrap();
        assert!(tape.value(loss).data()[0] < 1e-9);

        assert!(tape.bce_with_logits(logits, &targets, &[]).is_err());
    }

    #[test]
    fn supcon_identical_pair_is_zero() {
        let mut tape = Tape::<f64>::new();
        let z = tape.constant(t(&[2, 2], &[1., 0., 1., 0.]));
        let loss = tape.supcon(z, &[3, 3], 0.07).unwrap();
        assert!(tape.value(loss).data()[0].abs() < 1e-12);
    }

    #[test]
    fn supcon_contract_errors() {
        let mut tape = Tape::<f64>::new();
        let one = tape.constant(t(&[1, 2], &[1., 0.]));
        assert!(tape.supcon(one, &[0], 0.1).is_err());
        let z = tape.constant(t(&[3, 2], &[1., 0., 0., 1., 0.6, 0.8]));
        assert!(tape.supcon(z, &[0, 1, 2], 0.1).is_err());
    }
}
