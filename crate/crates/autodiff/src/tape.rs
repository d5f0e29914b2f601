//! Operation tape and the differentiable op set.
//!
//! Every op appends one node. Nodes whose inputs all have
//! `requires_grad == false` are recorded as constants and skipped by
//! [`Tape::backward`].

use crate::error::{shape_err, AutodiffError, Result};
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat { inputs: Vec<Var>, axis: usize },
    Transpose(Var),
    Tanh(Var),
    Sigmoid(Var),
    LogSigmoid(Var),
    Exp(Var),
    Log(Var),
    RowSoftmax(Var),
    LogSoftmax(Var),
    Embedding { table: Var, indices: Vec<usize> },
    Select { input: Var, indices: Vec<usize> },
    Sum(Var),
    Mean(Var),
    SquaredError(Var, Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    requires_grad: bool,
    op: Op,
}

/// Gradients produced by one backward pass, keyed by leaf [`Var`].
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

/// Records executed operations so a scalar loss can be differentiated.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
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

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Drop all nodes and make the tape usable again.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.consumed = false;
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn item(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<Var> {
        self.check_live()?;
        if !value.is_finite() {
            return Err(AutodiffError::NumericDomain {
                op: "leaf",
                detail: "non-finite value".into(),
            });
        }
        Ok(self.push_node(value, requires_grad, Op::Leaf))
    }

    pub fn param(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, false)
    }

    fn check_live(&self) -> Result<()> {
        if self.consumed {
            Err(AutodiffError::TapeConsumed)
        } else {
            Ok(())
        }
    }

    fn check_var(&self, v: Var) -> Result<()> {
        if v.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(AutodiffError::UnknownVar {
                index: v.0,
                len: self.nodes.len(),
            })
        }
    }

    fn push_node(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, name: &'static str, value: Tensor, inputs: &[Var], op: Op) -> Result<Var> {
        if !value.is_finite() {
            return Err(AutodiffError::NumericDomain {
                op: name,
                detail: "result is not finite".into(),
            });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let op = if requires_grad { op } else { Op::Leaf };
        Ok(self.push_node(value, requires_grad, op))
    }

    fn prepare(&self, inputs: &[Var]) -> Result<()> {
        self.check_live()?;
        inputs.iter().try_for_each(|&v| self.check_var(v))
    }

    fn two_d(&self, op: &'static str, v: Var) -> Result<(usize, usize)> {
        let s = self.nodes[v.0].value.shape();
        if s.len() != 2 {
            return Err(shape_err(op, format!("expected a 2-D tensor, got {s:?}")));
        }
        Ok((s[0], s[1]))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(shape_err(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn map_unary(&mut self, name: &'static str, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Result<Var> {
        self.prepare(&[a])?;
        let x = self.value(a);
        let out = Tensor::new(x.shape().to_vec(), x.values().iter().map(|&v| f(v)).collect())?;
        self.push(name, out, &[a], op)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.prepare(&[a, b])?;
        let (m, k) = self.two_d("matmul", a)?;
        let (k2, n) = self.two_d("matmul", b)?;
        if k != k2 {
            return Err(shape_err("matmul", format!("[{m}, {k}] x [{k2}, {n}]")));
        }
        let (av, bv) = (self.value(a).values(), self.value(b).values());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = av[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                for (o, &bpj) in orow.iter_mut().zip(brow) {
                    *o += aip * bpj;
                }
            }
        }
        let out = Tensor::new(vec![m, n], out)?;
        self.push("matmul", out, &[a, b], Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.prepare(&[a, b])?;
        self.same_shape("add", a, b)?;
        let x = self.value(a);
        let y = self.value(b);
        let vals = x.values().iter().zip(y.values()).map(|(p, q)| p + q).collect();
        let out = Tensor::new(x.shape().to_vec(), vals)?;
        self.push("add", out, &[a, b], Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.prepare(&[a, b])?;
        self.same_shape("sub", a, b)?;
        let x = self.value(a);
        let y = self.value(b);
        let vals = x.values().iter().zip(y.values()).map(|(p, q)| p - q).collect();
        let out = Tensor::new(x.shape().to_vec(), vals)?;
        self.push("sub", out, &[a, b], Op::Sub(a, b))
    }

    /// Elementwise product. One operand may be single-element, in which
    /// case it scales the other.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.prepare(&[a, b])?;
        let x = self.value(a);
        let y = self.value(b);
        let out = if x.shape() == y.shape() {
            let vals = x.values().iter().zip(y.values()).map(|(p, q)| p * q).collect();
            Tensor::new(x.shape().to_vec(), vals)?
        } else if x.is_scalar() {
            let s = x.item();
            Tensor::new(y.shape().to_vec(), y.values().iter().map(|q| s * q).collect())?
        } else if y.is_scalar() {
            let s = y.item();
            Tensor::new(x.shape().to_vec(), x.values().iter().map(|p| p * s).collect())?
        } else {
            return Err(shape_err("mul", format!("{:?} vs {:?}", x.shape(), y.shape())));
        };
        self.push("mul", out, &[a, b], Op::Mul(a, b))
    }

    /// Multiply by a constant scalar.
    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        if !c.is_finite() {
            return Err(AutodiffError::NumericDomain {
                op: "scale",
                detail: format!("factor {c}"),
            });
        }
        self.map_unary("scale", a, |v| v * c, Op::Scale(a, c))
    }

    /// Concatenate 2-D tensors along `axis` (0 stacks rows, 1 joins columns).
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        self.prepare(inputs)?;
        if inputs.is_empty() {
            return Err(shape_err("concat", "no inputs"));
        }
        if axis > 1 {
            return Err(shape_err("concat", format!("axis {axis} on 2-D tensors")));
        }
        let dims: Vec<(usize, usize)> = inputs
            .iter()
            .map(|&v| self.two_d("concat", v))
            .collect::<Result<_>>()?;
        let out = if axis == 0 {
            let cols = dims[0].1;
            if dims.iter().any(|d| d.1 != cols) {
                return Err(shape_err("concat", format!("column extents differ: {dims:?}")));
            }
            let rows = dims.iter().map(|d| d.0).sum();
            let mut vals = Vec::with_capacity(rows * cols);
            for &v in inputs {
                vals.extend_from_slice(self.value(v).values());
            }
            Tensor::new(vec![rows, cols], vals)?
        } else {
            let rows = dims[0].0;
            if dims.iter().any(|d| d.0 != rows) {
                return Err(shape_err("concat", format!("row extents differ: {dims:?}")));
            }
            let cols: usize = dims.iter().map(|d| d.1).sum();
            let mut vals = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for &v in inputs {
                    vals.extend_from_slice(self.value(v).row_slice(r));
                }
            }
            Tensor::new(vec![rows, cols], vals)?
        };
        self.push(
            "concat",
            out,
            inputs,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
        )
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.prepare(&[a])?;
        let (m, n) = self.two_d("transpose", a)?;
        let x = self.value(a).values();
        let mut vals = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                vals[j * m + i] = x[i * n + j];
            }
        }
        let out = Tensor::new(vec![n, m], vals)?;
        self.push("transpose", out, &[a], Op::Transpose(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.map_unary("tanh", a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.map_unary("sigmoid", a, sigmoid, Op::Sigmoid(a))
    }

    /// `ln(sigmoid(x))`, computed without forming `sigmoid(x)`.
    pub fn log_sigmoid(&mut self, a: Var) -> Result<Var> {
        self.map_unary("log_sigmoid", a, log_sigmoid, Op::LogSigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.prepare(&[a])?;
        if let Some(&bad) = self.value(a).values().iter().find(|&&v| v.exp().is_infinite()) {
            return Err(AutodiffError::NumericDomain {
                op: "exp",
                detail: format!("exp({bad}) overflows"),
            });
        }
        self.map_unary("exp", a, f64::exp, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.prepare(&[a])?;
        if let Some(&bad) = self.value(a).values().iter().find(|&&v| v <= 0.0) {
            return Err(AutodiffError::NumericDomain {
                op: "log",
                detail: format!("log({bad}) undefined"),
            });
        }
        self.map_unary("log", a, f64::ln, Op::Log(a))
    }

    /// Softmax over each row of a 2-D tensor, max-subtracted.
    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        self.prepare(&[a])?;
        let (m, n) = self.two_d("row_softmax", a)?;
        let x = self.value(a).values();
        let mut vals = vec![0.0; m * n];
        for r in 0..m {
            softmax_into(&x[r * n..(r + 1) * n], &mut vals[r * n..(r + 1) * n]);
        }
        let out = Tensor::new(vec![m, n], vals)?;
        self.push("row_softmax", out, &[a], Op::RowSoftmax(a))
    }

    /// Log-softmax over each row of a 2-D tensor.
    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        self.prepare(&[a])?;
        let (m, n) = self.two_d("log_softmax", a)?;
        let x = self.value(a).values();
        let mut vals = vec![0.0; m * n];
        for r in 0..m {
            let row = &x[r * n..(r + 1) * n];
            let lse = log_sum_exp(row);
            for (o, &v) in vals[r * n..(r + 1) * n].iter_mut().zip(row) {
                *o = v - lse;
            }
        }
        let out = Tensor::new(vec![m, n], vals)?;
        self.push("log_softmax", out, &[a], Op::LogSoftmax(a))
    }

    /// Gather rows of a `[V, E]` table into an `[indices.len(), E]` tensor.
    pub fn embedding_lookup(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        self.prepare(&[table])?;
        let (rows, cols) = self.two_d("embedding_lookup", table)?;
        if indices.is_empty() {
            return Err(shape_err("embedding_lookup", "no indices"));
        }
        let t = self.value(table);
        let mut vals = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            if i >= rows {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "embedding_lookup",
                    index: i,
                    extent: rows,
                });
            }
            vals.extend_from_slice(t.row_slice(i));
        }
        let out = Tensor::new(vec![indices.len(), cols], vals)?;
        self.push(
            "embedding_lookup",
            out,
            &[table],
            Op::Embedding {
                table,
                indices: indices.to_vec(),
            },
        )
    }

    /// Pick elements by flat row-major index into a `[1, k]` tensor.
    pub fn select(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        self.prepare(&[a])?;
        if indices.is_empty() {
            return Err(shape_err("select", "no indices"));
        }
        let x = self.value(a).values();
        let mut vals = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= x.len() {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "select",
                    index: i,
                    extent: x.len(),
                });
            }
            vals.push(x[i]);
        }
        let out = Tensor::row(vals);
        self.push(
            "select",
            out,
            &[a],
            Op::Select {
                input: a,
                indices: indices.to_vec(),
            },
        )
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.prepare(&[a])?;
        let s = self.value(a).values().iter().sum();
        self.push("sum", Tensor::scalar(s), &[a], Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        self.prepare(&[a])?;
        let x = self.value(a);
        let s = x.values().iter().sum::<f64>() / x.len() as f64;
        self.push("mean", Tensor::scalar(s), &[a], Op::Mean(a))
    }

    /// `sum((a - b)^2)` as a single-element tensor.
    pub fn squared_error(&mut self, a: Var, b: Var) -> Result<Var> {
        self.prepare(&[a, b])?;
        self.same_shape("squared_error", a, b)?;
        let s = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        self.push("squared_error", Tensor::scalar(s), &[a, b], Op::SquaredError(a, b))
    }

    /// Back-propagate from a single-element `loss`, consuming the tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        self.check_live()?;
        if self.nodes.is_empty() {
            return Err(AutodiffError::EmptyTape);
        }
        self.check_var(loss)?;
        let shape = self.value(loss).shape().to_vec();
        if !self.value(loss).is_scalar() {
            return Err(AutodiffError::NonScalarLoss { shape });
        }
        self.consumed = true;

        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut leaf_grads: Vec<Option<Tensor>> = vec![None; n];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let nodes = &self.nodes;
            let mut acc = |v: Var, f: &dyn Fn(&mut [f64])| {
                let input = &nodes[v.0];
                if !input.requires_grad {
                    return;
                }
                let buf = grads[v.0].get_or_insert_with(|| vec![0.0; input.value.len()]);
                f(buf);
            };
            let y = node.value.values();
            match &node.op {
                Op::Leaf => {
                    leaf_grads[i] = Some(Tensor::new(node.value.shape().to_vec(), g)?);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k) = (av.rows(), av.cols());
                    let nn = bv.cols();
                    let (av, bv) = (av.values(), bv.values());
                    acc(*a, &|buf| {
                        for i in 0..m {
                            let grow = &g[i * nn..(i + 1) * nn];
                            for p in 0..k {
                                let brow = &bv[p * nn..(p + 1) * nn];
                                buf[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                            }
                        }
                    });
                    acc(*b, &|buf| {
                        for i in 0..m {
                            let grow = &g[i * nn..(i + 1) * nn];
                            for p in 0..k {
                                let aip = av[i * k + p];
                                if aip == 0.0 {
                                    continue;
                                }
                                for (o, &gj) in buf[p * nn..(p + 1) * nn].iter_mut().zip(grow) {
                                    *o += aip * gj;
                                }
                            }
                        }
                    });
                }
                Op::Add(a, b) => {
                    acc(*a, &|buf| add_into(buf, &g));
                    acc(*b, &|buf| add_into(buf, &g));
                }
                Op::Sub(a, b) => {
                    acc(*a, &|buf| add_into(buf, &g));
                    acc(*b, &|buf| buf.iter_mut().zip(&g).for_each(|(o, gi)| *o -= gi));
                }
                Op::Mul(a, b) => {
                    let (xa, xb) = (self.value(*a), self.value(*b));
                    let (av, bv) = (xa.values(), xb.values());
                    if xa.shape() == xb.shape() {
                        acc(*a, &|buf| {
                            for ((o, gi), bi) in buf.iter_mut().zip(&g).zip(bv) {
                                *o += gi * bi;
                            }
                        });
                        acc(*b, &|buf| {
                            for ((o, gi), ai) in buf.iter_mut().zip(&g).zip(av) {
                                *o += gi * ai;
                            }
                        });
                    } else if xa.is_scalar() {
                        let s = av[0];
                        acc(*a, &|buf| buf[0] += g.iter().zip(bv).map(|(gi, bi)| gi * bi).sum::<f64>());
                        acc(*b, &|buf| buf.iter_mut().zip(&g).for_each(|(o, gi)| *o += gi * s));
                    } else {
                        let s = bv[0];
                        acc(*a, &|buf| buf.iter_mut().zip(&g).for_each(|(o, gi)| *o += gi * s));
                        acc(*b, &|buf| buf[0] += g.iter().zip(av).map(|(gi, ai)| gi * ai).sum::<f64>());
                    }
                }
                Op::Scale(a, c) => {
                    let c = *c;
                    acc(*a, &|buf| buf.iter_mut().zip(&g).for_each(|(o, gi)| *o += gi * c));
                }
                Op::Concat { inputs, axis } => {
                    let total_cols = node.value.cols();
                    let mut offset = 0;
                    for &v in inputs {
                        let (r, c) = (self.value(v).rows(), self.value(v).cols());
                        if *axis == 0 {
                            let start = offset * total_cols;
                            acc(v, &|buf| add_into(buf, &g[start..start + r * c]));
                            offset += r;
                        } else {
                            let off = offset;
                            acc(v, &|buf| {
                                for row in 0..r {
                                    let src = &g[row * total_cols + off..row * total_cols + off + c];
                                    add_into(&mut buf[row * c..(row + 1) * c], src);
                                }
                            });
                            offset += c;
                        }
                    }
                }
                Op::Transpose(a) => {
                    let (m, nn) = (self.value(*a).rows(), self.value(*a).cols());
                    acc(*a, &|buf| {
                        for i in 0..m {
                            for j in 0..nn {
                                buf[i * nn + j] += g[j * m + i];
                            }
                        }
                    });
                }
                Op::Tanh(a) => acc(*a, &|buf| {
                    for ((o, gi), yi) in buf.iter_mut().zip(&g).zip(y) {
                        *o += gi * (1.0 - yi * yi);
                    }
                }),
                Op::Sigmoid(a) => acc(*a, &|buf| {
                    for ((o, gi), yi) in buf.iter_mut().zip(&g).zip(y) {
                        *o += gi * yi * (1.0 - yi);
                    }
                }),
                Op::LogSigmoid(a) => {
                    let x = self.value(*a).values();
                    acc(*a, &|buf| {
                        for ((o, gi), xi) in buf.iter_mut().zip(&g).zip(x) {
                            *o += gi * sigmoid(-xi);
                        }
                    })
                }
                Op::Exp(a) => acc(*a, &|buf| {
                    for ((o, gi), yi) in buf.iter_mut().zip(&g).zip(y) {
                        *o += gi * yi;
                    }
                }),
                Op::Log(a) => {
                    let x = self.value(*a).values();
                    acc(*a, &|buf| {
                        for ((o, gi), xi) in buf.iter_mut().zip(&g).zip(x) {
                            *o += gi / xi;
                        }
                    })
                }
                Op::RowSoftmax(a) => {
                    let nn = node.value.cols();
                    acc(*a, &|buf| {
                        for ((brow, grow), yrow) in buf.chunks_mut(nn).zip(g.chunks(nn)).zip(y.chunks(nn)) {
                            let dot: f64 = grow.iter().zip(yrow).map(|(gi, yi)| gi * yi).sum();
                            for ((o, gi), yi) in brow.iter_mut().zip(grow).zip(yrow) {
                                *o += yi * (gi - dot);
                            }
                        }
                    })
                }
                Op::LogSoftmax(a) => {
                    let nn = node.value.cols();
                    acc(*a, &|buf| {
                        for ((brow, grow), yrow) in buf.chunks_mut(nn).zip(g.chunks(nn)).zip(y.chunks(nn)) {
                            let gsum: f64 = grow.iter().sum();
                            for ((o, gi), yi) in brow.iter_mut().zip(grow).zip(yrow) {
                                *o += gi - yi.exp() * gsum;
                            }
                        }
                    })
                }
                Op::Embedding { table, indices } => {
                    let cols = self.value(*table).cols();
                    acc(*table, &|buf| {
                        for (k, &idx) in indices.iter().enumerate() {
                            add_into(&mut buf[idx * cols..(idx + 1) * cols], &g[k * cols..(k + 1) * cols]);
                        }
                    })
                }
                Op::Select { input, indices } => acc(*input, &|buf| {
                    for (k, &idx) in indices.iter().enumerate() {
                        buf[idx] += g[k];
                    }
                }),
                Op::Sum(a) => {
                    let g0 = g[0];
                    acc(*a, &|buf| buf.iter_mut().for_each(|o| *o += g0));
                }
                Op::Mean(a) => {
                    let g0 = g[0] / self.value(*a).len() as f64;
                    acc(*a, &|buf| buf.iter_mut().for_each(|o| *o += g0));
                }
                Op::SquaredError(a, b) => {
                    let (av, bv) = (self.value(*a).values(), self.value(*b).values());
                    let g0 = g[0];
                    acc(*a, &|buf| {
                        for ((o, ai), bi) in buf.iter_mut().zip(av).zip(bv) {
                            *o += 2.0 * (ai - bi) * g0;
                        }
                    });
                    acc(*b, &|buf| {
                        for ((o, ai), bi) in buf.iter_mut().zip(av).zip(bv) {
                            *o -= 2.0 * (ai - bi) * g0;
                        }
                    });
                }
            }
        }

        // Leaves that require grad but did not reach the loss get zeros.
        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && leaf_grads[i].is_none() {
                leaf_grads[i] = Some(Tensor::zeros(node.value.shape()));
            }
        }
        Ok(Gradients { grads: leaf_grads })
    }
}

fn add_into(buf: &mut [f64], g: &[f64]) {
    for (o, gi) in buf.iter_mut().zip(g) {
        *o += gi;
    }
}

/// Logistic function, evaluated without overflow for either sign.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Max-subtracted softmax of `xs` written into `out`.
pub fn softmax_into(xs: &[f64], out: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(xs) {
        *o = (v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}
