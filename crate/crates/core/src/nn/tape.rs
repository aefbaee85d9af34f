//! Reverse-mode recording of one forward pass.
//!
//! A `Tape` borrows the parameter store immutably, records every operation
//! with its output value, and `backward` walks the record in reverse,
//! accumulating parameter gradients into a `Gradients` buffer. Parameter
//! values are never copied onto the tape.

use rand::Rng;

use super::param::{Gradients, ParamId, ParamStore};
use crate::error::{PcgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output length equals input length; the kernel is centered.
    Same,
    /// Only positions where the kernel fits entirely.
    Valid,
}

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Conv1d {
        x: Var,
        k: Var,
        bias: Option<Var>,
        c_in: usize,
        c_out: usize,
        klen: usize,
        l_in: usize,
        l_out: usize,
        offset: usize,
    },
    MatVec {
        w: Var,
        x: Var,
        b: Option<Var>,
        rows: usize,
        cols: usize,
    },
    Add(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    MaxPool2 {
        x: Var,
        argmax: Vec<usize>,
    },
    Concat(Vec<Var>),
    Dropout {
        x: Var,
        mask: Vec<f64>,
    },
    Mirror(Var),
    SoftmaxCe {
        logits: Var,
        probs: Vec<f64>,
        target: usize,
        weight: f64,
    },
    Mse {
        x: Var,
        target: Vec<f64>,
    },
    Dot(Var, Var),
    SumAll(Var),
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    shape: Vec<usize>,
    op: Op,
    requires_grad: bool,
}

pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, shape: Vec<usize>, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            shape,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match self.nodes[v.0].op {
            Op::Param(id) => &self.store.get(id).value.data,
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn input(&mut self, data: Vec<f64>, shape: Vec<usize>) -> Result<Var> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(PcgError::Shape(format!(
                "input of {} values does not fill {shape:?}",
                data.len()
            )));
        }
        self.nodes.push(Node {
            value: data,
            shape,
            op: Op::Input,
            requires_grad: false,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let p = self.store.get(id);
        self.nodes.push(Node {
            value: Vec::new(),
            shape: p.value.shape.clone(),
            op: Op::Param(id),
            requires_grad: p.trainable,
        });
        Var(self.nodes.len() - 1)
    }

    /// Eq.-style convolution: y[c, n] = b[c] + sum_{ci, i} k[c, ci, i] * x[ci, n + offset - i],
    /// with offset K/2 for `Same` and K-1 for `Valid`; out-of-range samples are zero.
    pub fn conv1d(&mut self, x: Var, k: Var, bias: Option<Var>, padding: Padding) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ks = self.shape(k).to_vec();
        let (c_in, l_in) = match xs.as_slice() {
            [c, l] => (*c, *l),
            [l] => (1, *l),
            _ => return Err(PcgError::Shape(format!("conv1d input must be [C, L], got {xs:?}"))),
        };
        let (c_out, kc, klen) = match ks.as_slice() {
            [o, c, k] => (*o, *c, *k),
            [k] => (1, 1, *k),
            _ => return Err(PcgError::Shape(format!("conv1d kernel must be [Co, Ci, K], got {ks:?}"))),
        };
        if kc != c_in {
            return Err(PcgError::Shape(format!(
                "kernel expects {kc} input channels, input has {c_in}"
            )));
        }
        if klen == 0 || klen > l_in {
            return Err(PcgError::Shape(format!(
                "kernel length {klen} exceeds input length {l_in}"
            )));
        }
        if let Some(b) = bias {
            if self.value(b).len() != c_out {
                return Err(PcgError::Shape("conv1d bias must have one value per output channel".into()));
            }
        }
        let (l_out, offset) = match padding {
            Padding::Same => (l_in, klen / 2),
            Padding::Valid => (l_in - klen + 1, klen - 1),
        };
        let xv = self.value(x);
        let kv = self.value(k);
        let mut y = vec![0.0; c_out * l_out];
        for co in 0..c_out {
            let yrow = &mut y[co * l_out..(co + 1) * l_out];
            if let Some(b) = bias {
                let bv = self.value(b)[co];
                yrow.iter_mut().for_each(|v| *v = bv);
            }
            for ci in 0..c_in {
                let xrow = &xv[ci * l_in..(ci + 1) * l_in];
                for i in 0..klen {
                    let w = kv[(co * c_in + ci) * klen + i];
                    let shift = offset as isize - i as isize;
                    let n_lo = (-shift).max(0) as usize;
                    let n_hi = ((l_in as isize - shift).min(l_out as isize)).max(0) as usize;
                    if n_lo >= n_hi {
                        continue;
                    }
                    let j_lo = (n_lo as isize + shift) as usize;
                    for (yv, xv) in yrow[n_lo..n_hi].iter_mut().zip(&xrow[j_lo..j_lo + (n_hi - n_lo)]) {
                        *yv += w * xv;
                    }
                }
            }
        }
        let mut inputs = vec![x, k];
        inputs.extend(bias);
        Ok(self.push(
            y,
            vec![c_out, l_out],
            Op::Conv1d {
                x,
                k,
                bias,
                c_in,
                c_out,
                klen,
                l_in,
                l_out,
                offset,
            },
            &inputs,
        ))
    }

    /// y = W x (+ b) for W of shape [rows, cols].
    pub fn matvec(&mut self, w: Var, x: Var, b: Option<Var>) -> Result<Var> {
        let ws = self.shape(w).to_vec();
        let [rows, cols] = ws.as_slice() else {
            return Err(PcgError::Shape(format!("weight must be 2-D, got {ws:?}")));
        };
        let (rows, cols) = (*rows, *cols);
        if self.value(x).len() != cols {
            return Err(PcgError::Shape(format!(
                "weight has {cols} columns, input has {} values",
                self.value(x).len()
            )));
        }
        if let Some(b) = b {
            if self.value(b).len() != rows {
                return Err(PcgError::Shape(format!("bias must have {rows} values")));
            }
        }
        let wv = self.value(w);
        let xv = self.value(x);
        let mut y: Vec<f64> = wv
            .chunks_exact(cols)
            .map(|row| row.iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        if let Some(b) = b {
            for (yv, bv) in y.iter_mut().zip(self.value(b)) {
                *yv += bv;
            }
        }
        let mut inputs = vec![w, x];
        inputs.extend(b);
        Ok(self.push(y, vec![rows], Op::MatVec { w, x, b, rows, cols }, &inputs))
    }

    fn same_len(&self, a: Var, b: Var) -> Result<()> {
        if self.value(a).len() != self.value(b).len() {
            return Err(PcgError::Shape(format!(
                "elementwise operands differ in length ({} vs {})",
                self.value(a).len(),
                self.value(b).len()
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b)?;
        let y = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(y, shape, Op::Add(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b)?;
        let y = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(y, shape, Op::Mul(a, b), &[a, b]))
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let y = self.value(a).iter().map(|&v| f(v)).collect();
        let shape = self.shape(a).to_vec();
        self.push(y, shape, op, &[a])
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        self.unary(a, Op::OneMinus(a), |v| 1.0 - v)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Scale(a, c), |v| c * v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |v| v.max(0.0))
    }

    /// Non-overlapping max-pool of width 2 along the last axis of [C, L];
    /// the lowest index wins ties and a trailing odd sample is dropped.
    pub fn max_pool2(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        let (c, l) = match s.as_slice() {
            [c, l] => (*c, *l),
            [l] => (1, *l),
            _ => return Err(PcgError::Shape(format!("max-pool input must be [C, L], got {s:?}"))),
        };
        let lo = l / 2;
        let xv = self.value(x);
        let mut y = Vec::with_capacity(c * lo);
        let mut argmax = Vec::with_capacity(c * lo);
        for ch in 0..c {
            for n in 0..lo {
                let i = ch * l + 2 * n;
                let pick = if xv[i + 1] > xv[i] { i + 1 } else { i };
                y.push(xv[pick]);
                argmax.push(pick);
            }
        }
        Ok(self.push(y, vec![c, lo], Op::MaxPool2 { x, argmax }, &[x]))
    }

    /// Flattening concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut y = Vec::with_capacity(parts.iter().map(|&p| self.value(p).len()).sum());
        for &p in parts {
            y.extend_from_slice(self.value(p));
        }
        let n = y.len();
        self.push(y, vec![n], Op::Concat(parts.to_vec()), parts)
    }

    /// Inverted dropout: in training, each value is zeroed with probability `p`
    /// and survivors are scaled by 1/(1-p). Identity otherwise.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, training: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(PcgError::Parameter(format!("dropout probability {p} not in [0, 1)")));
        }
        if !training || p == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let y = self.value(x).iter().zip(&mask).map(|(a, m)| a * m).collect();
        let shape = self.shape(x).to_vec();
        Ok(self.push(y, shape, Op::Dropout { x, mask }, &[x]))
    }

    /// Expands a half kernel [b0..b_{N/2}] to the symmetric [b0..b_N].
    pub fn mirror(&mut self, half: Var) -> Var {
        let h = self.value(half);
        let n = 2 * h.len() - 1;
        let y: Vec<f64> = (0..n).map(|i| h[i.min(n - 1 - i)]).collect();
        self.push(y, vec![n], Op::Mirror(half), &[half])
    }

    /// Class-weighted cross-entropy of softmax(logits) against `target`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize, weight: f64) -> Result<Var> {
        let lv = self.value(logits);
        if target >= lv.len() {
            return Err(PcgError::Shape(format!(
                "target class {target} out of range for {} logits",
                lv.len()
            )));
        }
        let probs = softmax(lv);
        let max = lv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + lv.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        let loss = weight * (lse - lv[target]);
        Ok(self.push(
            vec![loss],
            vec![1],
            Op::SoftmaxCe {
                logits,
                probs,
                target,
                weight,
            },
            &[logits],
        ))
    }

    /// Mean squared error against a constant target.
    pub fn mse(&mut self, x: Var, target: Vec<f64>) -> Result<Var> {
        let xv = self.value(x);
        if xv.len() != target.len() || target.is_empty() {
            return Err(PcgError::Shape(format!(
                "mse target has {} values, prediction {}",
                target.len(),
                xv.len()
            )));
        }
        let loss = xv.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / xv.len() as f64;
        Ok(self.push(vec![loss], vec![1], Op::Mse { x, target }, &[x]))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b)?;
        let s = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        Ok(self.push(vec![s], vec![1], Op::Dot(a, b), &[a, b]))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(vec![s], vec![1], Op::SumAll(a), &[a])
    }

    /// Sum of scalar nodes.
    pub fn sum(&mut self, terms: &[Var]) -> Result<Var> {
        let Some((&first, rest)) = terms.split_first() else {
            return Err(PcgError::Parameter("sum of no terms".into()));
        };
        let mut acc = first;
        for &t in rest {
            acc = self.add(acc, t)?;
        }
        Ok(acc)
    }

    fn grad_slot<'g>(
        &self,
        node_grads: &'g mut [Vec<f64>],
        grads: &'g mut Gradients,
        v: Var,
    ) -> Option<&'g mut [f64]> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        match node.op {
            Op::Param(id) => Some(grads.slot(id, self.store.get(id).value.len())),
            _ => {
                let g = &mut node_grads[v.0];
                if g.is_empty() {
                    g.resize(node.value.len(), 0.0);
                }
                Some(g)
            }
        }
    }

    /// Accumulates d(loss)/d(param) into `grads` for every trainable parameter reached.
    pub fn backward(&self, loss: Var, grads: &mut Gradients) -> Result<()> {
        self.backward_scaled(loss, 1.0, grads)
    }

    /// As `backward`, for `scale * loss`.
    pub fn backward_scaled(&self, loss: Var, scale: f64, grads: &mut Gradients) -> Result<()> {
        if loss.0 >= self.nodes.len() {
            return Err(PcgError::State("backward called on a value not recorded by this tape".into()));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(PcgError::State("backward needs a scalar loss".into()));
        }
        let mut node_grads: Vec<Vec<f64>> = vec![Vec::new(); loss.0 + 1];
        if self.nodes[loss.0].requires_grad {
            node_grads[loss.0] = vec![scale];
        }
        for idx in (0..=loss.0).rev() {
            let g = std::mem::take(&mut node_grads[idx]);
            if g.is_empty() {
                continue;
            }
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input | Op::Param(_) => {}
                Op::Conv1d {
                    x,
                    k,
                    bias,
                    c_in,
                    c_out,
                    klen,
                    l_in,
                    l_out,
                    offset,
                } => {
                    let (c_in, c_out, klen, l_in, l_out, offset) = (*c_in, *c_out, *klen, *l_in, *l_out, *offset);
                    let xv = self.value(*x);
                    let kv = self.value(*k);
                    let range = |i: usize| {
                        let shift = offset as isize - i as isize;
                        let n_lo = (-shift).max(0) as usize;
                        let n_hi = ((l_in as isize - shift).min(l_out as isize)).max(0) as usize;
                        (shift, n_lo, n_hi)
                    };
                    if let Some(dx) = self.grad_slot(&mut node_grads, grads, *x) {
                        for co in 0..c_out {
                            let grow = &g[co * l_out..(co + 1) * l_out];
                            for ci in 0..c_in {
                                let dxrow = &mut dx[ci * l_in..(ci + 1) * l_in];
                                for i in 0..klen {
                                    let w = kv[(co * c_in + ci) * klen + i];
                                    let (shift, n_lo, n_hi) = range(i);
                                    if n_lo >= n_hi {
                                        continue;
                                    }
                                    let j_lo = (n_lo as isize + shift) as usize;
                                    for (d, gv) in dxrow[j_lo..j_lo + (n_hi - n_lo)].iter_mut().zip(&grow[n_lo..n_hi]) {
                                        *d += w * gv;
                                    }
                                }
                            }
                        }
                    }
                    if let Some(dk) = self.grad_slot(&mut node_grads, grads, *k) {
                        for co in 0..c_out {
                            let grow = &g[co * l_out..(co + 1) * l_out];
                            for ci in 0..c_in {
                                let xrow = &xv[ci * l_in..(ci + 1) * l_in];
                                for i in 0..klen {
                                    let (shift, n_lo, n_hi) = range(i);
                                    if n_lo >= n_hi {
                                        continue;
                                    }
                                    let j_lo = (n_lo as isize + shift) as usize;
                                    let s: f64 = grow[n_lo..n_hi]
                                        .iter()
                                        .zip(&xrow[j_lo..j_lo + (n_hi - n_lo)])
                                        .map(|(a, b)| a * b)
                                        .sum();
                                    dk[(co * c_in + ci) * klen + i] += s;
                                }
                            }
                        }
                    }
                    if let Some(b) = bias {
                        if let Some(db) = self.grad_slot(&mut node_grads, grads, *b) {
                            for co in 0..c_out {
                                db[co] += g[co * l_out..(co + 1) * l_out].iter().sum::<f64>();
                            }
                        }
                    }
                }
                Op::MatVec { w, x, b, rows, cols } => {
                    let (rows, cols) = (*rows, *cols);
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    if let Some(dx) = self.grad_slot(&mut node_grads, grads, *x) {
                        for r in 0..rows {
                            if g[r] == 0.0 {
                                continue;
                            }
                            for (d, wv) in dx.iter_mut().zip(&wv[r * cols..(r + 1) * cols]) {
                                *d += g[r] * wv;
                            }
                        }
                    }
                    if let Some(dw) = self.grad_slot(&mut node_grads, grads, *w) {
                        for r in 0..rows {
                            if g[r] == 0.0 {
                                continue;
                            }
                            for (d, xv) in dw[r * cols..(r + 1) * cols].iter_mut().zip(xv) {
                                *d += g[r] * xv;
                            }
                        }
                    }
                    if let Some(b) = b {
                        if let Some(db) = self.grad_slot(&mut node_grads, grads, *b) {
                            db.iter_mut().zip(&g).for_each(|(d, gv)| *d += gv);
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        if let Some(d) = self.grad_slot(&mut node_grads, grads, v) {
                            d.iter_mut().zip(&g).for_each(|(d, gv)| *d += gv);
                        }
                    }
                }
                Op::Mul(a, b) => {
                    for (v, other) in [(*a, *b), (*b, *a)] {
                        let ov = self.value(other);
                        if let Some(d) = self.grad_slot(&mut node_grads, grads, v) {
                            for ((d, gv), o) in d.iter_mut().zip(&g).zip(ov) {
                                *d += gv * o;
                            }
                        }
                    }
                }
                Op::OneMinus(a) => {
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *a) {
                        d.iter_mut().zip(&g).for_each(|(d, gv)| *d -= gv);
                    }
                }
                Op::Scale(a, c) => {
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *a) {
                        d.iter_mut().zip(&g).for_each(|(d, gv)| *d += c * gv);
                    }
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *a) {
                        for ((d, gv), y) in d.iter_mut().zip(&g).zip(y) {
                            *d += gv * y * (1.0 - y);
                        }
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *a) {
                        for ((d, gv), y) in d.iter_mut().zip(&g).zip(y) {
                            *d += gv * (1.0 - y * y);
                        }
                    }
                }
                Op::Relu(a) => {
                    let xv = self.value(*a);
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *a) {
                        for ((d, gv), x) in d.iter_mut().zip(&g).zip(xv) {
                            if *x > 0.0 {
                                *d += gv;
                            }
                        }
                    }
                }
                Op::MaxPool2 { x, argmax } => {
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *x) {
                        for (&i, gv) in argmax.iter().zip(&g) {
                            d[i] += gv;
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        if let Some(d) = self.grad_slot(&mut node_grads, grads, p) {
                            d.iter_mut().zip(&g[at..at + n]).for_each(|(d, gv)| *d += gv);
                        }
                        at += n;
                    }
                }
                Op::Dropout { x, mask } => {
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *x) {
                        for ((d, gv), m) in d.iter_mut().zip(&g).zip(mask) {
                            *d += gv * m;
                        }
                    }
                }
                Op::Mirror(half) => {
                    let n = g.len();
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *half) {
                        for (i, gv) in g.iter().enumerate() {
                            d[i.min(n - 1 - i)] += gv;
                        }
                    }
                }
                Op::SoftmaxCe {
                    logits,
                    probs,
                    target,
                    weight,
                } => {
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *logits) {
                        for (c, (d, p)) in d.iter_mut().zip(probs).enumerate() {
                            let onehot = if c == *target { 1.0 } else { 0.0 };
                            *d += g[0] * weight * (p - onehot);
                        }
                    }
                }
                Op::Mse { x, target } => {
                    let xv = self.value(*x);
                    let n = xv.len() as f64;
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *x) {
                        for ((d, a), t) in d.iter_mut().zip(xv).zip(target) {
                            *d += g[0] * 2.0 * (a - t) / n;
                        }
                    }
                }
                Op::Dot(a, b) => {
                    for (v, other) in [(*a, *b), (*b, *a)] {
                        let ov = self.value(other);
                        if let Some(d) = self.grad_slot(&mut node_grads, grads, v) {
                            d.iter_mut().zip(ov).for_each(|(d, o)| *d += g[0] * o);
                        }
                    }
                }
                Op::SumAll(a) => {
                    if let Some(d) = self.grad_slot(&mut node_grads, grads, *a) {
                        d.iter_mut().for_each(|d| *d += g[0]);
                    }
                }
            }
        }
        Ok(())
    }
}
