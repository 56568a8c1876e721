//! Reverse-mode differentiation over a flat op tape.
//!
//! Every node value is a `Vec<f64>` (scalars are length-1 vectors); matrices
//! only enter through `MatVec` and `Row` against the parameter set. A forward
//! pass builds the tape; `backward` walks it once in reverse and accumulates
//! parameter gradients by id. Tapes are cheap and per-example: build, read,
//! drop.

use crate::params::{Gradients, ParamSet};

pub type Var = usize;

#[derive(Debug)]
enum Op {
    /// Constant input; no gradient flows into it.
    Leaf,
    /// A row of parameter tensor `p` (embedding rows, bias vectors).
    Row { p: usize, row: usize },
    /// W * x for parameter matrix W.
    MatVec { p: usize, x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    /// Elementwise product.
    Mul(Var, Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    /// Numerically stable softmax over the whole vector.
    Softmax(Var),
    Ln(Var),
    Abs(Var),
    Clamp { x: Var, lo: f64, hi: f64 },
    /// Dot product of equal-length vectors; scalar output.
    Dot(Var, Var),
    /// Sum of all entries; scalar output.
    Sum(Var),
    MulConst { x: Var, c: f64 },
    AddConst(Var),
    /// Vector scaled by a scalar node.
    Scale { x: Var, s: Var },
    /// 1/x for a scalar node.
    Recip(Var),
    /// sum_j weights[j] * items[j]; items are equal-length vectors.
    MixVecs { weights: Var, items: Vec<Var> },
    /// Identity forward, zero backward (BPTT truncation).
    Detach,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    ops: Vec<Op>,
    vals: Vec<Vec<f64>>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Tape { params, ops: Vec::new(), vals: Vec::new() }
    }

    pub fn params(&self) -> &ParamSet {
        self.params
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.vals[v]
    }

    pub fn scalar(&self, v: Var) -> f64 {
        debug_assert_eq!(self.vals[v].len(), 1);
        self.vals[v][0]
    }

    fn push(&mut self, op: Op, val: Vec<f64>) -> Var {
        self.ops.push(op);
        self.vals.push(val);
        self.vals.len() - 1
    }

    pub fn leaf(&mut self, val: Vec<f64>) -> Var {
        self.push(Op::Leaf, val)
    }

    pub fn scalar_leaf(&mut self, v: f64) -> Var {
        self.leaf(vec![v])
    }

    pub fn zeros(&mut self, n: usize) -> Var {
        self.leaf(vec![0.0; n])
    }

    pub fn row(&mut self, p: usize, row: usize) -> Var {
        let val = self.params.tensor(p).row(row).to_vec();
        self.push(Op::Row { p, row }, val)
    }

    /// Convenience for 1 x n parameters stored as a single row.
    pub fn vector_param(&mut self, p: usize) -> Var {
        self.row(p, 0)
    }

    pub fn matvec(&mut self, p: usize, x: Var) -> Var {
        let val = self.params.tensor(p).matvec(&self.vals[x]);
        self.push(Op::MatVec { p, x }, val)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let val = self.vals[a].iter().zip(&self.vals[b]).map(|(x, y)| x + y).collect();
        self.push(Op::Add(a, b), val)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let val = self.vals[a].iter().zip(&self.vals[b]).map(|(x, y)| x - y).collect();
        self.push(Op::Sub(a, b), val)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let val = self.vals[a].iter().zip(&self.vals[b]).map(|(x, y)| x * y).collect();
        self.push(Op::Mul(a, b), val)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut val = Vec::new();
        for &p in parts {
            val.extend_from_slice(&self.vals[p]);
        }
        self.push(Op::Concat(parts.to_vec()), val)
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        let val = self.vals[x][start..start + len].to_vec();
        self.push(Op::Slice { x, start }, val)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let val = self.vals[x].iter().map(|v| v.max(0.0)).collect();
        self.push(Op::Relu(x), val)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let val = self.vals[x].iter().map(|&v| sigmoid(v)).collect();
        self.push(Op::Sigmoid(x), val)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let val = self.vals[x].iter().map(|v| v.tanh()).collect();
        self.push(Op::Tanh(x), val)
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let xs = &self.vals[x];
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xs.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        let val = exps.iter().map(|e| e / z).collect();
        self.push(Op::Softmax(x), val)
    }

    pub fn ln(&mut self, x: Var) -> Var {
        let val = self.vals[x].iter().map(|v| v.ln()).collect();
        self.push(Op::Ln(x), val)
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let val = self.vals[x].iter().map(|v| v.abs()).collect();
        self.push(Op::Abs(x), val)
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let val = self.vals[x].iter().map(|v| v.clamp(lo, hi)).collect();
        self.push(Op::Clamp { x, lo, hi }, val)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let v: f64 = self.vals[a].iter().zip(&self.vals[b]).map(|(x, y)| x * y).sum();
        self.push(Op::Dot(a, b), vec![v])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let v: f64 = self.vals[x].iter().sum();
        self.push(Op::Sum(x), vec![v])
    }

    pub fn mul_const(&mut self, x: Var, c: f64) -> Var {
        let val = self.vals[x].iter().map(|v| v * c).collect();
        self.push(Op::MulConst { x, c }, val)
    }

    pub fn add_const(&mut self, x: Var, c: f64) -> Var {
        let val = self.vals[x].iter().map(|v| v + c).collect();
        self.push(Op::AddConst(x), val)
    }

    pub fn scale(&mut self, x: Var, s: Var) -> Var {
        let sv = self.vals[s][0];
        let val = self.vals[x].iter().map(|v| v * sv).collect();
        self.push(Op::Scale { x, s }, val)
    }

    pub fn recip(&mut self, x: Var) -> Var {
        let val = self.vals[x].iter().map(|v| 1.0 / v).collect();
        self.push(Op::Recip(x), val)
    }

    pub fn mix_vecs(&mut self, weights: Var, items: &[Var]) -> Var {
        debug_assert_eq!(self.vals[weights].len(), items.len());
        let n = self.vals[items[0]].len();
        let mut val = vec![0.0; n];
        for (j, &it) in items.iter().enumerate() {
            let w = self.vals[weights][j];
            for (acc, v) in val.iter_mut().zip(&self.vals[it]) {
                *acc += w * v;
            }
        }
        self.push(Op::MixVecs { weights, items: items.to_vec() }, val)
    }

    pub fn detach(&mut self, x: Var) -> Var {
        let val = self.vals[x].clone();
        self.push(Op::Detach, val)
    }

    /// Mean of a stack of scalar nodes.
    pub fn mean_scalars(&mut self, xs: &[Var]) -> Var {
        let v = self.concat(xs);
        let s = self.sum(v);
        self.mul_const(s, 1.0 / xs.len() as f64)
    }

    /// Picks one element as a scalar node.
    pub fn at(&mut self, x: Var, idx: usize) -> Var {
        self.slice(x, idx, 1)
    }

    /// Backpropagates from scalar node `loss`, accumulating into `grads`.
    pub fn backward(&self, loss: Var, grads: &mut Gradients) {
        let mut adj: Vec<Vec<f64>> = self.vals.iter().map(|v| vec![0.0; v.len()]).collect();
        adj[loss][0] = 1.0;

        for i in (0..self.ops.len()).rev() {
            let go = std::mem::take(&mut adj[i]);
            if go.iter().all(|v| *v == 0.0) {
                continue;
            }
            match &self.ops[i] {
                Op::Leaf => {}
                Op::Row { p, row } => {
                    let t = &mut grads.by_id[*p];
                    let cols = t.cols;
                    for (c, g) in go.iter().enumerate() {
                        t.data[row * cols + c] += g;
                    }
                }
                Op::MatVec { p, x } => {
                    let w = self.params.tensor(*p);
                    let xv = &self.vals[*x];
                    {
                        let gt = &mut grads.by_id[*p];
                        for (r, g) in go.iter().enumerate() {
                            if *g == 0.0 {
                                continue;
                            }
                            let base = r * w.cols;
                            for (c, xc) in xv.iter().enumerate() {
                                gt.data[base + c] += g * xc;
                            }
                        }
                    }
                    let gx = &mut adj[*x];
                    for (r, g) in go.iter().enumerate() {
                        if *g == 0.0 {
                            continue;
                        }
                        let row = w.row(r);
                        for (c, wv) in row.iter().enumerate() {
                            gx[c] += g * wv;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for (g, v) in adj[*a].iter_mut().zip(&go) {
                        *g += v;
                    }
                    for (g, v) in adj[*b].iter_mut().zip(&go) {
                        *g += v;
                    }
                }
                Op::Sub(a, b) => {
                    for (g, v) in adj[*a].iter_mut().zip(&go) {
                        *g += v;
                    }
                    for (g, v) in adj[*b].iter_mut().zip(&go) {
                        *g -= v;
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.vals[*a].clone(), self.vals[*b].clone());
                    for ((g, v), bv) in adj[*a].iter_mut().zip(&go).zip(&bv) {
                        *g += v * bv;
                    }
                    for ((g, v), av) in adj[*b].iter_mut().zip(&go).zip(&av) {
                        *g += v * av;
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.vals[p].len();
                        for (g, v) in adj[p].iter_mut().zip(&go[off..off + n]) {
                            *g += v;
                        }
                        off += n;
                    }
                }
                Op::Slice { x, start } => {
                    for (k, v) in go.iter().enumerate() {
                        adj[*x][start + k] += v;
                    }
                }
                Op::Relu(x) => {
                    let xv = &self.vals[*x];
                    for ((g, v), xv) in adj[*x].iter_mut().zip(&go).zip(xv) {
                        if *xv > 0.0 {
                            *g += v;
                        }
                    }
                }
                Op::Sigmoid(x) => {
                    let yv = &self.vals[i];
                    for ((g, v), y) in adj[*x].iter_mut().zip(&go).zip(yv) {
                        *g += v * y * (1.0 - y);
                    }
                }
                Op::Tanh(x) => {
                    let yv = &self.vals[i];
                    for ((g, v), y) in adj[*x].iter_mut().zip(&go).zip(yv) {
                        *g += v * (1.0 - y * y);
                    }
                }
                Op::Softmax(x) => {
                    let y = &self.vals[i];
                    let inner: f64 = go.iter().zip(y).map(|(g, y)| g * y).sum();
                    for ((g, v), y) in adj[*x].iter_mut().zip(&go).zip(y) {
                        *g += y * (v - inner);
                    }
                }
                Op::Ln(x) => {
                    let xv = &self.vals[*x];
                    for ((g, v), x) in adj[*x].iter_mut().zip(&go).zip(xv) {
                        *g += v / x;
                    }
                }
                Op::Abs(x) => {
                    let xv = &self.vals[*x];
                    for ((g, v), x) in adj[*x].iter_mut().zip(&go).zip(xv) {
                        if *x > 0.0 {
                            *g += v;
                        } else if *x < 0.0 {
                            *g -= v;
                        }
                    }
                }
                Op::Clamp { x, lo, hi } => {
                    let xv = &self.vals[*x];
                    for ((g, v), x) in adj[*x].iter_mut().zip(&go).zip(xv) {
                        if *x > *lo && *x < *hi {
                            *g += v;
                        }
                    }
                }
                Op::Dot(a, b) => {
                    let g = go[0];
                    let (av, bv) = (self.vals[*a].clone(), self.vals[*b].clone());
                    for (ga, b) in adj[*a].iter_mut().zip(&bv) {
                        *ga += g * b;
                    }
                    for (gb, a) in adj[*b].iter_mut().zip(&av) {
                        *gb += g * a;
                    }
                }
                Op::Sum(x) => {
                    let g = go[0];
                    for gx in adj[*x].iter_mut() {
                        *gx += g;
                    }
                }
                Op::MulConst { x, c } => {
                    for (g, v) in adj[*x].iter_mut().zip(&go) {
                        *g += v * c;
                    }
                }
                Op::AddConst(x) => {
                    for (g, v) in adj[*x].iter_mut().zip(&go) {
                        *g += v;
                    }
                }
                Op::Scale { x, s } => {
                    let sv = self.vals[*s][0];
                    let xv = self.vals[*x].clone();
                    for (g, v) in adj[*x].iter_mut().zip(&go) {
                        *g += v * sv;
                    }
                    let gs: f64 = go.iter().zip(&xv).map(|(g, x)| g * x).sum();
                    adj[*s][0] += gs;
                }
                Op::Recip(x) => {
                    let xv = &self.vals[*x];
                    for ((g, v), x) in adj[*x].iter_mut().zip(&go).zip(xv) {
                        *g -= v / (x * x);
                    }
                }
                Op::MixVecs { weights, items } => {
                    let wv = self.vals[*weights].clone();
                    for (j, &it) in items.iter().enumerate() {
                        let itv = self.vals[it].clone();
                        let gw: f64 = go.iter().zip(&itv).map(|(g, v)| g * v).sum();
                        adj[*weights][j] += gw;
                        let w = wv[j];
                        for (g, v) in adj[it].iter_mut().zip(&go) {
                            *g += w * v;
                        }
                    }
                }
                Op::Detach => {}
            }
        }
    }
}
