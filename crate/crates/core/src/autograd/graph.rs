use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Array;
use crate::{Error, Result};

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);

/// Differentiable primitives. Attributes ride along in the variant.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    /// `[m, n] x [n] -> [m]` or `[m, n] x [n, p] -> [m, p]`.
    MatMul,
    Add,
    Sub,
    /// Elementwise product.
    Mul,
    /// Concatenation of vectors.
    Concat,
    Sigmoid,
    Tanh,
    /// Inputs `[x, slope]` with `slope` of shape `[1]`.
    PRelu,
    Softmax,
    /// Inner product of two equal-length vectors, shape `[1]`.
    Dot,
    /// Multiplication by a constant.
    Scale(f64),
    /// Inputs `[x, s]`: `x` times the one-element node `s`.
    ScaleBy,
    SumOfSquares,
    Sum,
    Slice { start: usize, len: usize },
    /// Sum of one or more equal-shape inputs, added left to right.
    AddN,
    /// Inputs `[pre_i, pre_f, pre_o, pre_c, c]`, all `[h]`. Output `[2h]`
    /// holds the next hidden state followed by the next cell state.
    LstmCell,
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::MatMul => "matmul",
            Primitive::Add => "add",
            Primitive::Sub => "sub",
            Primitive::Mul => "elementwise_multiply",
            Primitive::Concat => "concat",
            Primitive::Sigmoid => "sigmoid",
            Primitive::Tanh => "tanh",
            Primitive::PRelu => "prelu",
            Primitive::Softmax => "softmax",
            Primitive::Dot => "dot",
            Primitive::Scale(_) => "scale",
            Primitive::ScaleBy => "scale_by",
            Primitive::SumOfSquares => "sum_of_squares",
            Primitive::Sum => "sum",
            Primitive::Slice { .. } => "slice",
            Primitive::AddN => "add_n",
            Primitive::LstmCell => "lstm_cell",
        }
    }
}

/// Dropout is only active in `Train`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    #[default]
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    graph: u64,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Param,
    Constant,
    Prim(Primitive),
    /// Pre-scaled keep mask.
    Dropout(Vec<f64>),
}

#[derive(Debug)]
struct Node {
    value: Array,
    op: Op,
    parents: Vec<usize>,
    needs_grad: bool,
    /// Accumulated gradient, parameters only.
    grad: Option<Vec<f64>>,
}

/// Append-only computation graph. Node creation order is a topological
/// order, so backward is a single reverse sweep.
#[derive(Debug)]
pub struct Graph {
    id: u64,
    nodes: Vec<Node>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self {
            id: NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Array) -> Var {
        self.push(value, Op::Param, Vec::new(), true)
    }

    /// A leaf that never receives gradient.
    pub fn constant(&mut self, value: Array) -> Var {
        self.push(value, Op::Constant, Vec::new(), false)
    }

    pub fn value(&self, v: Var) -> &Array {
        &self.nodes[v.index].value
    }

    fn push(&mut self, value: Array, op: Op, parents: Vec<usize>, needs_grad: bool) -> Var {
        let index = self.nodes.len();
        self.nodes.push(Node {
            value,
            op,
            parents,
            needs_grad,
            grad: None,
        });
        Var {
            graph: self.id,
            index,
        }
    }

    fn check(&self, v: Var) -> Result<usize> {
        if v.graph != self.id || v.index >= self.nodes.len() {
            return Err(Error::DetachedNode);
        }
        Ok(v.index)
    }

    pub fn apply(&mut self, prim: Primitive, inputs: &[Var]) -> Result<Var> {
        let idx = inputs
            .iter()
            .map(|&v| self.check(v))
            .collect::<Result<Vec<_>>>()?;
        let vals: Vec<&Array> = idx.iter().map(|&i| &self.nodes[i].value).collect();
        let value = eval(&prim, &vals)?;
        if !value.all_finite() {
            return Err(Error::NonFinite(format!("output of {}", prim.name())));
        }
        let needs_grad = idx.iter().any(|&i| self.nodes[i].needs_grad);
        Ok(self.push(value, Op::Prim(prim), idx, needs_grad))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Add, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Mul, &[a, b])
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        self.apply(Primitive::Concat, parts)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.apply(Primitive::Sigmoid, &[x])
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.apply(Primitive::Tanh, &[x])
    }

    pub fn prelu(&mut self, x: Var, slope: Var) -> Result<Var> {
        self.apply(Primitive::PRelu, &[x, slope])
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        self.apply(Primitive::Softmax, &[x])
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Dot, &[a, b])
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        self.apply(Primitive::Scale(c), &[x])
    }

    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        self.apply(Primitive::ScaleBy, &[x, s])
    }

    pub fn sum_of_squares(&mut self, x: Var) -> Result<Var> {
        self.apply(Primitive::SumOfSquares, &[x])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        self.apply(Primitive::Sum, &[x])
    }

    pub fn add_n(&mut self, parts: &[Var]) -> Result<Var> {
        self.apply(Primitive::AddN, parts)
    }

    /// Fused gate nonlinearities and state update of an LSTM step.
    pub fn lstm_cell(&mut self, pre: [Var; 4], c: Var) -> Result<Var> {
        self.apply(Primitive::LstmCell, &[pre[0], pre[1], pre[2], pre[3], c])
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        self.apply(Primitive::Slice { start, len }, &[x])
    }

    /// `W x + b`.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        let wx = self.matmul(w, x)?;
        self.add(wx, b)
    }

    /// Inverted dropout: surviving entries are rescaled by `1 / (1 - rate)`
    /// so evaluation is the identity.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        rate: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must lie in [0, 1), got {rate}"
            )));
        }
        let i = self.check(x)?;
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let src = &self.nodes[i].value;
        let mask: Vec<f64> = (0..src.len())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let data = src.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let value = Array::with_shape(src.shape(), data)?;
        let needs_grad = self.nodes[i].needs_grad;
        Ok(self.push(value, Op::Dropout(mask), vec![i], needs_grad))
    }

    /// Clears accumulated parameter gradients.
    pub fn zero_gradients(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    /// Reverse sweep from a one-element root. Parameter gradients accumulate
    /// across calls until [`Graph::zero_gradients`].
    pub fn backward(&mut self, root: Var) -> Result<Gradients> {
        let r = self.check(root)?;
        if self.nodes[r].value.len() != 1 {
            return Err(Error::NonScalarRoot(self.nodes[r].value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; r + 1];
        grads[r] = Some(vec![1.0]);
        for i in (0..=r).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Param => {
                    grads[i] = Some(g);
                }
                Op::Constant => {}
                Op::Dropout(mask) => {
                    let p = node.parents[0];
                    if self.nodes[p].needs_grad {
                        let gp = slot(&mut grads, p, mask.len());
                        for k in 0..mask.len() {
                            gp[k] += g[k] * mask[k];
                        }
                    }
                }
                Op::Prim(prim) => self.backprop(prim, i, &g, &mut grads),
            }
        }
        for (i, g) in grads.into_iter().enumerate() {
            if let (Some(g), Op::Param) = (g, &self.nodes[i].op) {
                let acc = &mut self.nodes[i].grad;
                match acc {
                    Some(a) => a.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                    None => *acc = Some(g),
                }
            }
        }
        Ok(Gradients {
            graph: self.id,
            grads: self
                .nodes
                .iter()
                .map(|n| match n.op {
                    Op::Param => Some(match &n.grad {
                        Some(g) => Array::with_shape(n.value.shape(), g.clone())
                            .expect("gradient shape matches value"),
                        None => Array::zeros(n.value.shape()),
                    }),
                    _ => None,
                })
                .collect(),
        })
    }

    fn backprop(&self, prim: &Primitive, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let ps = &node.parents;
        let y = node.value.data();
        let needs = |p: usize| self.nodes[p].needs_grad;
        let val = |p: usize| &self.nodes[p].value;
        match prim {
            Primitive::MatMul => {
                let (a, b) = (val(ps[0]), val(ps[1]));
                let (m, n) = (a.rows(), a.cols());
                let p = if b.is_vector() { 1 } else { b.cols() };
                if p == 1 {
                    matvec_backward(a, b.data(), g, needs(ps[0]), needs(ps[1]), ps, grads);
                    return;
                }
                if needs(ps[0]) {
                    let ga = slot(grads, ps[0], m * n);
                    // ga = g . b^T
                    for r in 0..m {
                        let grow = &g[r * p..(r + 1) * p];
                        let garow = &mut ga[r * n..(r + 1) * n];
                        for (k, gak) in garow.iter_mut().enumerate() {
                            let brow = &b.data()[k * p..(k + 1) * p];
                            *gak += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                }
                if needs(ps[1]) {
                    let gb = slot(grads, ps[1], n * p);
                    // gb = a^T . g
                    for r in 0..m {
                        let arow = a.row(r);
                        let grow = &g[r * p..(r + 1) * p];
                        for (k, &ark) in arow.iter().enumerate() {
                            let gbrow = &mut gb[k * p..(k + 1) * p];
                            for (x, &gv) in gbrow.iter_mut().zip(grow) {
                                *x += ark * gv;
                            }
                        }
                    }
                }
            }
            Primitive::Add | Primitive::Sub => {
                let sign = if *prim == Primitive::Sub { -1.0 } else { 1.0 };
                if needs(ps[0]) {
                    add_into(slot(grads, ps[0], g.len()), g, 1.0);
                }
                if needs(ps[1]) {
                    add_into(slot(grads, ps[1], g.len()), g, sign);
                }
            }
            Primitive::Mul => {
                for (me, other) in [(0, 1), (1, 0)] {
                    if needs(ps[me]) {
                        let o = val(ps[other]).data();
                        let gp = slot(grads, ps[me], g.len());
                        for k in 0..g.len() {
                            gp[k] += g[k] * o[k];
                        }
                    }
                }
            }
            Primitive::Concat => {
                let mut off = 0;
                for &p in ps {
                    let n = val(p).len();
                    if needs(p) {
                        add_into(slot(grads, p, n), &g[off..off + n], 1.0);
                    }
                    off += n;
                }
            }
            Primitive::Sigmoid => {
                let gp = slot(grads, ps[0], g.len());
                for k in 0..g.len() {
                    gp[k] += g[k] * y[k] * (1.0 - y[k]);
                }
            }
            Primitive::Tanh => {
                let gp = slot(grads, ps[0], g.len());
                for k in 0..g.len() {
                    gp[k] += g[k] * (1.0 - y[k] * y[k]);
                }
            }
            Primitive::PRelu => {
                let x = val(ps[0]).data();
                let a = val(ps[1]).item();
                if needs(ps[0]) {
                    let gx = slot(grads, ps[0], g.len());
                    for k in 0..g.len() {
                        gx[k] += if x[k] > 0.0 { g[k] } else { a * g[k] };
                    }
                }
                if needs(ps[1]) {
                    let s: f64 = (0..g.len()).filter(|&k| x[k] <= 0.0).map(|k| g[k] * x[k]).sum();
                    slot(grads, ps[1], 1)[0] += s;
                }
            }
            Primitive::Softmax => {
                let dotgy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                let gp = slot(grads, ps[0], g.len());
                for k in 0..g.len() {
                    gp[k] += y[k] * (g[k] - dotgy);
                }
            }
            Primitive::Dot => {
                for (me, other) in [(0, 1), (1, 0)] {
                    if needs(ps[me]) {
                        let o = val(ps[other]).data();
                        let gp = slot(grads, ps[me], o.len());
                        add_into(gp, o, g[0]);
                    }
                }
            }
            Primitive::Scale(c) => add_into(slot(grads, ps[0], g.len()), g, *c),
            Primitive::ScaleBy => {
                let x = val(ps[0]).data();
                let s = val(ps[1]).item();
                if needs(ps[0]) {
                    add_into(slot(grads, ps[0], g.len()), g, s);
                }
                if needs(ps[1]) {
                    let d: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
                    slot(grads, ps[1], 1)[0] += d;
                }
            }
            Primitive::SumOfSquares => {
                let x = val(ps[0]).data();
                add_into(slot(grads, ps[0], x.len()), x, 2.0 * g[0]);
            }
            Primitive::Sum => {
                let n = val(ps[0]).len();
                slot(grads, ps[0], n).iter_mut().for_each(|v| *v += g[0]);
            }
            Primitive::Slice { start, .. } => {
                let n = val(ps[0]).len();
                add_into(&mut slot(grads, ps[0], n)[*start..*start + g.len()], g, 1.0);
            }
            Primitive::AddN => {
                for &p in ps {
                    if needs(p) {
                        add_into(slot(grads, p, g.len()), g, 1.0);
                    }
                }
            }
            Primitive::LstmCell => {
                let h = g.len() / 2;
                let (gh, gc) = g.split_at(h);
                let c_next = &y[h..];
                let c_prev = val(ps[4]).data();
                let (mut di, mut df, mut d_o, mut dc) = (vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]);
                let mut dprev = vec![0.0; h];
                for k in 0..h {
                    let [i, f, o, cand] = [0, 1, 2, 3].map(|q| val(ps[q]).data()[k]);
                    let (i, f, o, cand) = (sigmoid(i), sigmoid(f), sigmoid(o), cand.tanh());
                    let tc = c_next[k].tanh();
                    let dcell = gc[k] + gh[k] * o * (1.0 - tc * tc);
                    d_o[k] = gh[k] * tc * o * (1.0 - o);
                    di[k] = dcell * cand * i * (1.0 - i);
                    df[k] = dcell * c_prev[k] * f * (1.0 - f);
                    dc[k] = dcell * i * (1.0 - cand * cand);
                    dprev[k] = dcell * f;
                }
                for (q, d) in [di, df, d_o, dc, dprev].iter().enumerate() {
                    if needs(ps[q]) {
                        add_into(slot(grads, ps[q], h), d, 1.0);
                    }
                }
            }
        }
    }
}

/// Gradients of `y = A x` for a vector `x`.
fn matvec_backward(
    a: &Array,
    x: &[f64],
    g: &[f64],
    need_a: bool,
    need_x: bool,
    ps: &[usize],
    grads: &mut [Option<Vec<f64>>],
) {
    let (m, n) = (a.rows(), a.cols());
    if need_a {
        let ga = slot(grads, ps[0], m * n);
        for (r, &gr) in g.iter().enumerate() {
            add_into(&mut ga[r * n..(r + 1) * n], x, gr);
        }
    }
    if need_x {
        let gx = slot(grads, ps[1], n);
        for (r, &gr) in g.iter().enumerate() {
            add_into(gx, a.row(r), gr);
        }
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], i: usize, n: usize) -> &mut Vec<f64> {
    grads[i].get_or_insert_with(|| vec![0.0; n])
}

fn add_into(dst: &mut [f64], src: &[f64], c: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

fn shape_err(p: &Primitive, a: &Array, b: &Array) -> Error {
    Error::Shape {
        primitive: p.name(),
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn unary_shape_err(p: &Primitive, a: &Array) -> Error {
    Error::Shape {
        primitive: p.name(),
        left: a.shape().to_vec(),
        right: Vec::new(),
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

fn eval(p: &Primitive, v: &[&Array]) -> Result<Array> {
    let arity = match p {
        Primitive::Concat | Primitive::AddN => v.len().max(1),
        Primitive::LstmCell => 5,
        Primitive::MatMul
        | Primitive::Add
        | Primitive::Sub
        | Primitive::Mul
        | Primitive::PRelu
        | Primitive::Dot
        | Primitive::ScaleBy => 2,
        _ => 1,
    };
    if v.len() != arity {
        return Err(Error::InvalidArgument(format!(
            "{} takes {arity} inputs, got {}",
            p.name(),
            v.len()
        )));
    }
    let map = |a: &Array, f: &dyn Fn(f64) -> f64| {
        Array::with_shape(a.shape(), a.data().iter().map(|&x| f(x)).collect())
    };
    match p {
        Primitive::MatMul => {
            let (a, b) = (v[0], v[1]);
            if !a.is_matrix() || b.shape().len() > 2 || a.cols() != b.rows() {
                return Err(shape_err(p, a, b));
            }
            let (m, n) = (a.rows(), a.cols());
            if b.is_vector() {
                let x = b.data();
                let out = (0..m)
                    .map(|r| a.row(r).iter().zip(x).fold(0.0, |acc, (w, v)| acc + w * v))
                    .collect();
                return Ok(Array::vector(out));
            }
            let pc = b.cols();
            let mut out = vec![0.0; m * pc];
            for r in 0..m {
                let arow = a.row(r);
                let orow = &mut out[r * pc..(r + 1) * pc];
                for k in 0..n {
                    let ark = arow[k];
                    let brow = &b.data()[k * pc..(k + 1) * pc];
                    for (o, &bv) in orow.iter_mut().zip(brow) {
                        *o += ark * bv;
                    }
                }
            }
            Array::with_shape(&[m, pc], out)
        }
        Primitive::Add | Primitive::Sub | Primitive::Mul => {
            let (a, b) = (v[0], v[1]);
            if a.shape() != b.shape() {
                return Err(shape_err(p, a, b));
            }
            let f: fn(f64, f64) -> f64 = match p {
                Primitive::Add => |x, y| x + y,
                Primitive::Sub => |x, y| x - y,
                _ => |x, y| x * y,
            };
            let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
            Array::with_shape(a.shape(), data)
        }
        Primitive::Concat => {
            if let Some(bad) = v.iter().find(|a| !a.is_vector()) {
                return Err(shape_err(p, v[0], bad));
            }
            Ok(Array::vector(v.iter().flat_map(|a| a.data().iter().copied()).collect()))
        }
        Primitive::Sigmoid => map(v[0], &sigmoid),
        Primitive::Tanh => map(v[0], &f64::tanh),
        Primitive::PRelu => {
            let (x, a) = (v[0], v[1]);
            if a.len() != 1 {
                return Err(shape_err(p, x, a));
            }
            let s = a.item();
            map(x, &|t| if t > 0.0 { t } else { s * t })
        }
        Primitive::Softmax => {
            let x = v[0];
            if !x.is_vector() {
                return Err(unary_shape_err(p, x));
            }
            let m = x.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = x.data().iter().map(|&t| (t - m).exp()).collect();
            let z: f64 = e.iter().sum();
            Ok(Array::vector(e.into_iter().map(|t| t / z).collect()))
        }
        Primitive::Dot => {
            let (a, b) = (v[0], v[1]);
            if !a.is_vector() || a.shape() != b.shape() {
                return Err(shape_err(p, a, b));
            }
            Ok(Array::scalar(a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()))
        }
        Primitive::Scale(c) => map(v[0], &|t| c * t),
        Primitive::ScaleBy => {
            let (x, s) = (v[0], v[1]);
            if s.len() != 1 {
                return Err(shape_err(p, x, s));
            }
            let s = s.item();
            map(x, &|t| s * t)
        }
        Primitive::SumOfSquares => Ok(Array::scalar(v[0].data().iter().map(|x| x * x).sum())),
        Primitive::Sum => Ok(Array::scalar(v[0].data().iter().sum())),
        Primitive::Slice { start, len } => {
            let x = v[0];
            if !x.is_vector() || *len == 0 || start + len > x.len() {
                return Err(Error::Shape {
                    primitive: p.name(),
                    left: x.shape().to_vec(),
                    right: vec![*start, *len],
                });
            }
            Ok(Array::vector(x.data()[*start..start + len].to_vec()))
        }
        Primitive::AddN => {
            if let Some(bad) = v.iter().find(|a| a.shape() != v[0].shape()) {
                return Err(shape_err(p, v[0], bad));
            }
            let mut out = v[0].data().to_vec();
            for a in &v[1..] {
                add_into(&mut out, a.data(), 1.0);
            }
            Array::with_shape(v[0].shape(), out)
        }
        Primitive::LstmCell => {
            if let Some(bad) = v.iter().find(|a| !a.is_vector() || a.shape() != v[0].shape()) {
                return Err(shape_err(p, v[0], bad));
            }
            let h = v[0].len();
            let mut out = vec![0.0; 2 * h];
            for k in 0..h {
                let [i, f, o, cand, c] = [0, 1, 2, 3, 4].map(|q| v[q].data()[k]);
                let c_next = sigmoid(f) * c + sigmoid(i) * cand.tanh();
                out[k] = sigmoid(o) * c_next.tanh();
                out[h + k] = c_next;
            }
            Ok(Array::vector(out))
        }
    }
}

/// Gradient table produced by [`Graph::backward`]. Every parameter leaf has
/// an entry; leaves the root does not depend on get zeros.
#[derive(Debug)]
pub struct Gradients {
    graph: u64,
    grads: Vec<Option<Array>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Result<&Array> {
        if v.graph != self.graph {
            return Err(Error::DetachedNode);
        }
        self.grads
            .get(v.index)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::InvalidArgument("not a parameter leaf".into()))
    }

    /// Moves out the gradient of `v`; a second take of the same leaf fails.
    pub fn take(&mut self, v: Var) -> Result<Array> {
        if v.graph != self.graph {
            return Err(Error::DetachedNode);
        }
        self.grads
            .get_mut(v.index)
            .and_then(Option::take)
            .ok_or_else(|| Error::InvalidArgument("not a parameter leaf".into()))
    }

    /// Moves out the gradients of `params`, in order.
    pub fn take_all(mut self, params: &[Var]) -> Result<Vec<Array>> {
        params.iter().map(|&v| self.take(v)).collect()
    }
}
