//! Tensor-level Wengert tape.
//!
//! Every forward op appends one node holding its output value and whatever
//! it needs for the backward pass. Nodes only reference earlier nodes, so a
//! single reverse sweep visits each node once.

use std::collections::HashMap;

use rand::Rng;

use super::{AutodiffError, ParamGrads, ParamId, ParamStore, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Param,
    MatVec,
    MatTVec,
    Add,
    AddScalar,
    Mul,
    Scale(f64),
    Sigmoid,
    Tanh,
    Relu,
    Concat,
    Slice { start: usize },
    Stack,
    GatherRows(Vec<usize>),
    ConvMaxPool { windows: Vec<usize>, argmax: Vec<Option<usize>> },
    Softmax,
    SoftmaxXent { target: usize, probs: Vec<f64> },
    Sum,
    AddN,
    Dot,
    Dropout { mask: Vec<f64> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param => "param",
            Op::MatVec => "matvec",
            Op::MatTVec => "mat_t_vec",
            Op::Add => "add",
            Op::AddScalar => "add_scalar",
            Op::Mul => "mul",
            Op::Scale(_) => "scale",
            Op::Sigmoid => "sigmoid",
            Op::Tanh => "tanh",
            Op::Relu => "relu",
            Op::Concat => "concat",
            Op::Slice { .. } => "slice",
            Op::Stack => "stack",
            Op::GatherRows(_) => "gather_rows",
            Op::ConvMaxPool { .. } => "conv_ngram_maxpool",
            Op::Softmax => "softmax",
            Op::SoftmaxXent { .. } => "softmax_cross_entropy",
            Op::Sum => "sum",
            Op::AddN => "add_n",
            Op::Dot => "dot",
            Op::Dropout { .. } => "dropout",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    inputs: Vec<usize>,
    value: Tensor,
    requires_grad: bool,
}

/// Append-only record of forward computations.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn shape_err(op: &str, msg: String) -> AutodiffError {
    AutodiffError::Shape(format!("{op}: {msg}"))
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, inputs: Vec<usize>, value: Tensor) -> Result<Var, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite { op: op.name(), pass: "forward" });
        }
        let requires_grad = match op {
            Op::Leaf => false,
            Op::Param => true,
            _ => inputs.iter().any(|&i| self.nodes[i].requires_grad),
        };
        self.nodes.push(Node { op, inputs, value, requires_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records a constant (no gradient is propagated into it).
    pub fn constant(&mut self, t: Tensor) -> Result<Var, AutodiffError> {
        self.push(Op::Leaf, vec![], t)
    }

    /// Records a free variable that receives a gradient.
    pub fn variable(&mut self, t: Tensor) -> Result<Var, AutodiffError> {
        let v = self.push(Op::Leaf, vec![], t)?;
        self.nodes[v.0].requires_grad = true;
        Ok(v)
    }

    /// Brings a parameter onto the tape; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Result<Var, AutodiffError> {
        if let Some(&n) = self.param_nodes.get(&id) {
            return Ok(Var(n));
        }
        let v = self.push(Op::Param, vec![], store.get(id).clone())?;
        self.param_nodes.insert(id, v.0);
        Ok(v)
    }

    fn val(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// `W x` for a 2-d `W` (m×n) and vector `x` (n).
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, AutodiffError> {
        let (wt, xt) = (self.val(w), self.val(x));
        if wt.shape().len() != 2 || wt.cols() != xt.len() {
            return Err(shape_err("matvec", format!("{:?} x {:?}", wt.shape(), xt.shape())));
        }
        let m = wt.rows();
        let out: Vec<f64> = (0..m).map(|r| dot(wt.row(r), xt.data())).collect();
        self.push(Op::MatVec, vec![w.0, x.0], Tensor::vector(out))
    }

    /// `Wᵀ x` for a 2-d `W` (m×n) and vector `x` (m).
    pub fn mat_t_vec(&mut self, w: Var, x: Var) -> Result<Var, AutodiffError> {
        let (wt, xt) = (self.val(w), self.val(x));
        if wt.shape().len() != 2 || wt.rows() != xt.len() {
            return Err(shape_err("mat_t_vec", format!("{:?}ᵀ x {:?}", wt.shape(), xt.shape())));
        }
        let mut out = vec![0.0; wt.cols()];
        for (r, &xr) in xt.data().iter().enumerate() {
            axpy(xr, wt.row(r), &mut out);
        }
        self.push(Op::MatTVec, vec![w.0, x.0], Tensor::vector(out))
    }

    fn same_len(&self, op: &str, a: Var, b: Var) -> Result<(), AutodiffError> {
        let (la, lb) = (self.val(a).len(), self.val(b).len());
        if la != lb {
            return Err(shape_err(op, format!("lengths {la} and {lb}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_len("add", a, b)?;
        let mut out = self.val(a).clone();
        out.add_assign(self.val(b));
        self.push(Op::Add, vec![a.0, b.0], out)
    }

    /// Adds the single value of `s` to every component of `x`.
    pub fn add_scalar(&mut self, x: Var, s: Var) -> Result<Var, AutodiffError> {
        if !self.val(s).is_scalar() {
            return Err(shape_err("add_scalar", format!("{:?} is not scalar", self.val(s).shape())));
        }
        let k = self.val(s).data()[0];
        let mut out = self.val(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v += k);
        self.push(Op::AddScalar, vec![x.0, s.0], out)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_len("mul", a, b)?;
        let mut out = self.val(a).clone();
        for (o, y) in out.data_mut().iter_mut().zip(self.val(b).data()) {
            *o *= y;
        }
        self.push(Op::Mul, vec![a.0, b.0], out)
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Result<Var, AutodiffError> {
        let mut out = self.val(x).clone();
        out.scale(k);
        self.push(Op::Scale(k), vec![x.0], out)
    }

    fn unary(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Result<Var, AutodiffError> {
        let mut out = self.val(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v = f(*v));
        self.push(op, vec![x.0], out)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.unary(x, Op::Sigmoid, sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.unary(x, Op::Tanh, f64::tanh)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.unary(x, Op::Relu, |v| v.max(0.0))
    }

    /// Concatenates vectors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        if parts.is_empty() {
            return Err(shape_err("concat", "no inputs".into()));
        }
        let mut out = Vec::new();
        for p in parts {
            out.extend_from_slice(self.val(*p).data());
        }
        self.push(Op::Concat, parts.iter().map(|v| v.0).collect(), Tensor::vector(out))
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var, AutodiffError> {
        let xt = self.val(x);
        if len == 0 || start + len > xt.len() {
            return Err(shape_err("slice", format!("[{start}, {}) of {}", start + len, xt.len())));
        }
        let out = Tensor::vector(xt.data()[start..start + len].to_vec());
        self.push(Op::Slice { start }, vec![x.0], out)
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var, AutodiffError> {
        let Some(first) = rows.first() else {
            return Err(shape_err("stack", "no rows".into()));
        };
        let n = self.val(*first).len();
        let mut out = Vec::with_capacity(n * rows.len());
        for r in rows {
            let t = self.val(*r);
            if t.len() != n {
                return Err(shape_err("stack", format!("row lengths {n} and {}", t.len())));
            }
            out.extend_from_slice(t.data());
        }
        let t = Tensor::matrix(rows.len(), n, out)?;
        self.push(Op::Stack, rows.iter().map(|v| v.0).collect(), t)
    }

    /// Selects rows of a matrix (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var, AutodiffError> {
        let t = self.val(table);
        if t.shape().len() != 2 || ids.is_empty() {
            return Err(shape_err("gather_rows", format!("table {:?}, {} ids", t.shape(), ids.len())));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= t.rows()) {
            return Err(shape_err("gather_rows", format!("row {bad} of {}", t.rows())));
        }
        let d = t.cols();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            out.extend_from_slice(t.row(i));
        }
        let out = Tensor::matrix(ids.len(), d, out)?;
        self.push(Op::GatherRows(ids.to_vec()), vec![table.0], out)
    }

    /// N-gram convolution over the rows of `rows` (n×D), then ReLU and
    /// max-pooling over positions.
    ///
    /// `filters[k]` is `(W, b)` for window size `windows[k]`, with `W` of shape
    /// F × (w·D) (window rows flattened in order) and `b` of length F. The
    /// output concatenates the F pooled features of each window size.
    pub fn conv_ngram_maxpool(
        &mut self,
        rows: Var,
        windows: &[usize],
        filters: &[(Var, Var)],
    ) -> Result<Var, AutodiffError> {
        if windows.len() != filters.len() || windows.is_empty() {
            return Err(shape_err("conv_ngram_maxpool", "one (W, b) pair per window size".into()));
        }
        let r = self.val(rows);
        if r.shape().len() != 2 {
            return Err(shape_err("conv_ngram_maxpool", format!("rows {:?}", r.shape())));
        }
        let (n, d) = (r.rows(), r.cols());
        let mut out = Vec::new();
        let mut argmax = Vec::new();
        let mut inputs = vec![rows.0];
        for (&w, &(wv, bv)) in windows.iter().zip(filters) {
            let (wt, bt) = (self.val(wv), self.val(bv));
            if w == 0 || n < w {
                return Err(shape_err(
                    "conv_ngram_maxpool",
                    format!("window {w} needs at least {w} rows, got {n} (pad first)"),
                ));
            }
            if wt.shape().len() != 2 || wt.cols() != w * d || bt.len() != wt.rows() {
                return Err(shape_err(
                    "conv_ngram_maxpool",
                    format!("window {w}: W {:?}, b {:?}, D={d}", wt.shape(), bt.shape()),
                ));
            }
            let positions = n - w + 1;
            for f in 0..wt.rows() {
                let filt = wt.row(f);
                let mut best = f64::NEG_INFINITY;
                let mut best_p = 0;
                for p in 0..positions {
                    let window = &r.data()[p * d..(p + w) * d];
                    let resp = dot(filt, window);
                    if resp > best {
                        best = resp;
                        best_p = p;
                    }
                }
                let pre = best + bt.data()[f];
                if pre > 0.0 {
                    out.push(pre);
                    argmax.push(Some(best_p));
                } else {
                    out.push(0.0);
                    argmax.push(None);
                }
            }
            inputs.push(wv.0);
            inputs.push(bv.0);
        }
        let op = Op::ConvMaxPool { windows: windows.to_vec(), argmax };
        self.push(op, inputs, Tensor::vector(out))
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var, AutodiffError> {
        let probs = softmax_values(self.val(x).data());
        self.push(Op::Softmax, vec![x.0], Tensor::vector(probs))
    }

    /// `-log softmax(logits)[target]` as a scalar.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var, AutodiffError> {
        let l = self.val(logits);
        if target >= l.len() {
            return Err(shape_err("softmax_cross_entropy", format!("target {target} of {}", l.len())));
        }
        let probs = softmax_values(l.data());
        let loss = -probs[target].max(f64::MIN_POSITIVE).ln();
        self.push(Op::SoftmaxXent { target, probs }, vec![logits.0], Tensor::scalar(loss))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, AutodiffError> {
        let s = self.val(x).sum();
        self.push(Op::Sum, vec![x.0], Tensor::scalar(s))
    }

    /// Elementwise sum of same-shaped values.
    pub fn add_n(&mut self, xs: &[Var]) -> Result<Var, AutodiffError> {
        let Some(first) = xs.first() else {
            return Err(shape_err("add_n", "no inputs".into()));
        };
        let mut out = self.val(*first).clone();
        for x in &xs[1..] {
            let t = self.val(*x);
            if t.len() != out.len() {
                return Err(shape_err("add_n", format!("lengths {} and {}", out.len(), t.len())));
            }
            out.add_assign(t);
        }
        self.push(Op::AddN, xs.iter().map(|v| v.0).collect(), out)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_len("dot", a, b)?;
        let s = dot(self.val(a).data(), self.val(b).data());
        self.push(Op::Dot, vec![a.0, b.0], Tensor::scalar(s))
    }

    /// Inverted dropout: each component is zeroed with probability `p` and
    /// survivors are scaled by `1/(1-p)`. `p == 0` records nothing.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, rng: &mut R) -> Result<Var, AutodiffError> {
        if !(0.0..1.0).contains(&p) {
            return Err(AutodiffError::InvalidArgument(format!("dropout rate {p} outside [0, 1)")));
        }
        if p == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> =
            (0..self.val(x).len()).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect();
        let mut out = self.val(x).clone();
        for (o, m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        self.push(Op::Dropout { mask }, vec![x.0], out)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutodiffError> {
        let lt = self.val(loss);
        if !lt.is_scalar() {
            return Err(AutodiffError::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            if !g.is_finite() {
                return Err(AutodiffError::NonFinite { op: node.op.name(), pass: "backward" });
            }
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        let params = self.param_nodes.iter().map(|(&p, &n)| (p, n)).collect();
        Ok(Gradients { grads, params })
    }

    /// Gradient slot of node `i`, created as zeros on first use; `None` for
    /// nodes that need no gradient.
    fn accumulator<'a>(&self, i: usize, grads: &'a mut [Option<Tensor>]) -> Option<&'a mut Tensor> {
        if !self.nodes[i].requires_grad {
            return None;
        }
        Some(grads[i].get_or_insert_with(|| self.nodes[i].value.zeros_like()))
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<(), AutodiffError> {
        let inp = &node.inputs;
        let send = |i: usize, t: Tensor, grads: &mut [Option<Tensor>]| {
            if !self.nodes[i].requires_grad {
                return;
            }
            match &mut grads[i] {
                Some(acc) => acc.add_assign(&t),
                slot @ None => *slot = Some(t),
            }
        };
        let gd = g.data();
        match &node.op {
            Op::Leaf | Op::Param => {}
            Op::MatVec => {
                let (w, x) = (&self.nodes[inp[0]].value, &self.nodes[inp[1]].value);
                if let Some(gw) = self.accumulator(inp[0], grads) {
                    let n = w.cols();
                    for (r, &gr) in gd.iter().enumerate() {
                        if gr != 0.0 {
                            axpy(gr, x.data(), &mut gw.data_mut()[r * n..(r + 1) * n]);
                        }
                    }
                }
                if self.nodes[inp[1]].requires_grad {
                    let mut gx = vec![0.0; x.len()];
                    for (r, &gr) in gd.iter().enumerate() {
                        if gr != 0.0 {
                            axpy(gr, w.row(r), &mut gx);
                        }
                    }
                    send(inp[1], Tensor::vector(gx), grads);
                }
            }
            Op::MatTVec => {
                let (w, x) = (&self.nodes[inp[0]].value, &self.nodes[inp[1]].value);
                if let Some(gw) = self.accumulator(inp[0], grads) {
                    let n = w.cols();
                    for (r, &xr) in x.data().iter().enumerate() {
                        if xr != 0.0 {
                            axpy(xr, gd, &mut gw.data_mut()[r * n..(r + 1) * n]);
                        }
                    }
                }
                if self.nodes[inp[1]].requires_grad {
                    let gx: Vec<f64> = (0..w.rows()).map(|r| dot(w.row(r), gd)).collect();
                    send(inp[1], Tensor::vector(gx), grads);
                }
            }
            Op::Add => {
                send(inp[0], g.clone(), grads);
                send(inp[1], g.clone(), grads);
            }
            Op::AddScalar => {
                send(inp[0], g.clone(), grads);
                send(inp[1], Tensor::scalar(g.sum()), grads);
            }
            Op::Mul => {
                let (a, b) = (&self.nodes[inp[0]].value, &self.nodes[inp[1]].value);
                let ga: Vec<f64> = gd.iter().zip(b.data()).map(|(g, y)| g * y).collect();
                let gb: Vec<f64> = gd.iter().zip(a.data()).map(|(g, x)| g * x).collect();
                send(inp[0], Tensor::new(a.shape().to_vec(), ga)?, grads);
                send(inp[1], Tensor::new(b.shape().to_vec(), gb)?, grads);
            }
            Op::Scale(k) => {
                let mut t = g.clone();
                t.scale(*k);
                send(inp[0], t, grads);
            }
            Op::Sigmoid | Op::Tanh | Op::Relu => {
                let y = node.value.data();
                let gx: Vec<f64> = match node.op {
                    Op::Sigmoid => gd.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect(),
                    Op::Tanh => gd.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect(),
                    _ => gd.iter().zip(y).map(|(g, y)| if *y > 0.0 { *g } else { 0.0 }).collect(),
                };
                send(inp[0], Tensor::new(node.value.shape().to_vec(), gx)?, grads);
            }
            Op::Concat => {
                let mut off = 0;
                for &i in inp {
                    let len = self.nodes[i].value.len();
                    send(i, Tensor::vector(gd[off..off + len].to_vec()), grads);
                    off += len;
                }
            }
            Op::Slice { start } => {
                let x = &self.nodes[inp[0]].value;
                let mut gx = x.zeros_like();
                gx.data_mut()[*start..*start + gd.len()].copy_from_slice(gd);
                send(inp[0], gx, grads);
            }
            Op::Stack => {
                let n = node.value.cols();
                for (r, &i) in inp.iter().enumerate() {
                    send(i, Tensor::vector(gd[r * n..(r + 1) * n].to_vec()), grads);
                }
            }
            Op::GatherRows(ids) => {
                let table = &self.nodes[inp[0]].value;
                let d = table.cols();
                if let Some(gt) = self.accumulator(inp[0], grads) {
                    for (r, &id) in ids.iter().enumerate() {
                        axpy(1.0, &gd[r * d..(r + 1) * d], &mut gt.data_mut()[id * d..(id + 1) * d]);
                    }
                }
            }
            Op::ConvMaxPool { windows, argmax } => {
                let rows = &self.nodes[inp[0]].value;
                let d = rows.cols();
                let mut grows = rows.zeros_like();
                let mut feat = 0;
                for (k, &w) in windows.iter().enumerate() {
                    let (wi, bi) = (inp[1 + 2 * k], inp[2 + 2 * k]);
                    let wt = &self.nodes[wi].value;
                    let mut gw = wt.zeros_like();
                    let mut gb = vec![0.0; wt.rows()];
                    let cols = wt.cols();
                    for f in 0..wt.rows() {
                        let (gf, am) = (gd[feat], argmax[feat]);
                        feat += 1;
                        let Some(p) = am else { continue };
                        if gf == 0.0 {
                            continue;
                        }
                        gb[f] += gf;
                        let window = &rows.data()[p * d..(p + w) * d];
                        axpy(gf, window, &mut gw.data_mut()[f * cols..(f + 1) * cols]);
                        axpy(gf, wt.row(f), &mut grows.data_mut()[p * d..(p + w) * d]);
                    }
                    send(wi, gw, grads);
                    send(bi, Tensor::vector(gb), grads);
                }
                send(inp[0], grows, grads);
            }
            Op::Softmax => {
                let y = node.value.data();
                let inner = dot(gd, y);
                let gx: Vec<f64> = y.iter().zip(gd).map(|(y, g)| y * (g - inner)).collect();
                send(inp[0], Tensor::vector(gx), grads);
            }
            Op::SoftmaxXent { target, probs } => {
                let k = gd[0];
                let mut gx: Vec<f64> = probs.iter().map(|p| p * k).collect();
                gx[*target] -= k;
                let shape = self.nodes[inp[0]].value.shape().to_vec();
                send(inp[0], Tensor::new(shape, gx)?, grads);
            }
            Op::Sum => {
                let x = &self.nodes[inp[0]].value;
                let gx = vec![gd[0]; x.len()];
                send(inp[0], Tensor::new(x.shape().to_vec(), gx)?, grads);
            }
            Op::AddN => {
                for &i in inp {
                    send(i, g.clone(), grads);
                }
            }
            Op::Dot => {
                let (a, b) = (&self.nodes[inp[0]].value, &self.nodes[inp[1]].value);
                let mut ga = b.clone();
                ga.scale(gd[0]);
                let mut gb = a.clone();
                gb.scale(gd[0]);
                send(inp[0], ga, grads);
                send(inp[1], gb, grads);
            }
            Op::Dropout { mask } => {
                let gx: Vec<f64> = gd.iter().zip(mask).map(|(g, m)| g * m).collect();
                send(inp[0], Tensor::new(node.value.shape().to_vec(), gx)?, grads);
            }
        }
        Ok(())
    }
}

fn softmax_values(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Result of [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: Vec<(ParamId, usize)>,
}

impl Gradients {
    /// Gradient of the loss with respect to a recorded value, if it received one.
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.iter().find(|(p, _)| *p == id).and_then(|&(_, n)| self.grads.get(n)?.as_ref())
    }

    /// Collects parameter gradients into a store-sized container.
    pub fn into_param_grads(self, num_params: usize) -> ParamGrads {
        let mut out = ParamGrads::new(num_params);
        for (p, n) in &self.params {
            if let Some(Some(g)) = self.grads.get(*n) {
                out.add(*p, g);
            }
        }
        out
    }
}
