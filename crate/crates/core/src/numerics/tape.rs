//! Reverse-mode gradient tape over [`Tensor`] values.
//!
//! A [`Tape`] records every operation whose inputs depend on a tracked leaf.
//! Operations on untracked inputs are evaluated eagerly and stored as
//! constants. [`Tape::backward`] consumes the tape and returns [`Gradients`]
//! for every tracked node. One tape serves one forward/backward pass; tapes
//! are not `Sync` by intent of use and must not be shared across threads.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    Tanh(usize),
    Exp(usize),
    Log(usize),
    Sum(usize),
    MeanRows(usize),
    Transpose(usize),
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    Row(usize, usize),
    SoftmaxRows(usize, f64),
    LogSoftmaxRows(usize, f64),
    NormalizeRows(usize, Vec<f64>),
    Pick(usize, Vec<(usize, usize)>),
    // per-column population std; 0 marks a degenerate column
    StandardizeCols(usize, Vec<f64>),
    OffDiag(usize),
}

impl Op {
    fn parents(&self) -> Vec<usize> {
        use Op::*;
        match self {
            Leaf => vec![],
            MatMul(a, b) | Add(a, b) | Sub(a, b) | Mul(a, b) | AddRow(a, b) => vec![*a, *b],
            Scale(a, _)
            | Tanh(a)
            | Exp(a)
            | Log(a)
            | Sum(a)
            | MeanRows(a)
            | Transpose(a)
            | Row(a, _)
            | SoftmaxRows(a, _)
            | LogSoftmaxRows(a, _)
            | NormalizeRows(a, _)
            | Pick(a, _)
            | StandardizeCols(a, _)
            | OffDiag(a) => vec![*a],
            ConcatRows(ps) | ConcatCols(ps) => ps.clone(),
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; `None` when `v` is untracked
    /// or unreachable from the loss.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Stores the gradient for `v` into `target.grad` (zeros when unreachable).
    pub fn write_into(&self, v: Var, target: &mut Tensor) -> Result<()> {
        let grad = match self.get(v) {
            Some(g) => g.data().to_vec(),
            None => vec![0.0; target.len()],
        };
        target.set_grad(grad)
    }
}

/// Per-column standardization used by the decorrelation loss: each column is
/// centered and divided by its population standard deviation. Columns with
/// zero variance are only centered; their index is reported as degenerate.
pub fn standardize_columns(x: &Tensor) -> (Tensor, Vec<f64>) {
    let (rows, cols) = x.shape();
    let n = rows as f64;
    let mut out = x.clone();
    let mut stds = vec![0.0; cols];
    for c in 0..cols {
        let mean = (0..rows).map(|r| x.get(r, c)).sum::<f64>() / n;
        let var = (0..rows).map(|r| (x.get(r, c) - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        // relative threshold: floating noise in a constant column is not variance
        let scale = (0..rows).map(|r| x.get(r, c).abs()).fold(0.0, f64::max);
        let degenerate = std <= 1e-14 * scale.max(1e-300) || std == 0.0;
        for r in 0..rows {
            let centered = if degenerate { 0.0 } else { x.get(r, c) - mean };
            out.set(r, c, if degenerate { centered } else { centered / std });
        }
        stds[c] = if degenerate { 0.0 } else { std };
    }
    (out.with_requires_grad(false), stds)
}

fn softmax_row(z: &[f64], temperature: f64) -> Vec<f64> {
    let max = z.iter().map(|v| v / temperature).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v / temperature - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_softmax_row(z: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = z.iter().map(|v| v / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    scaled.into_iter().map(|v| v - lse).collect()
}

/// Numerically stable row-vector softmax with temperature.
pub fn softmax(v: &Tensor, temperature: f64) -> Result<Tensor> {
    if !(temperature > 0.0) {
        return Err(Error::Parameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let mut out = Vec::with_capacity(v.len());
    for r in 0..v.rows() {
        out.extend(softmax_row(v.row(r), temperature));
    }
    Tensor::from_vec(v.rows(), v.cols(), out)
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

    /// Registers `t`; tracked iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        let tracked = t.requires_grad();
        self.push_leaf(t.clone(), tracked)
    }

    /// Registers `t` as a tracked leaf regardless of its flag.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.push_leaf(t.clone(), true)
    }

    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push_leaf(t.clone(), false)
    }

    fn push_leaf(&mut self, value: Tensor, tracked: bool) -> Var {
        self.nodes.push(Node {
            value: value.with_requires_grad(tracked),
            op: Op::Leaf,
            tracked,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let tracked = op.parents().iter().any(|p| self.nodes[*p].tracked);
        let op = if tracked { op } else { Op::Leaf };
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn is_tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a.0, b.0)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(value, Op::Add(a.0, b.0)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.push(value, Op::Sub(a.0, b.0)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_with(self.value(b), "mul", |x, y| x * y)?;
        Ok(self.push(value, Op::Mul(a.0, b.0)))
    }

    /// Broadcast-adds a 1×cols row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let value = self.value(a).add_row(self.value(row))?;
        Ok(self.push(value, Op::AddRow(a.0, row.0)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).scale(c);
        self.push(value, Op::Scale(a.0, c))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.push(value, Op::Tanh(a.0))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp);
        self.push(value, Op::Exp(a.0))
    }

    pub fn ln(&mut self, a: Var) -> Result<Var> {
        if self.value(a).data().iter().any(|v| *v <= 0.0) {
            return Err(Error::Numeric("log of a non-positive entry".into()));
        }
        let value = self.value(a).map(f64::ln);
        Ok(self.push(value, Op::Log(a.0)))
    }

    /// Sum of all entries as a 1×1 tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).sum());
        self.push(value, Op::Sum(a.0))
    }

    /// Column means as a 1×cols row.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let value = self.value(a).mean_rows();
        self.push(value, Op::MeanRows(a.0))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.push(value, Op::Transpose(a.0))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Parameter("concat_rows of nothing".into()));
        }
        let tensors: Vec<Tensor> = parts.iter().map(|p| self.value(*p).clone()).collect();
        let value = Tensor::vstack(&tensors)?;
        Ok(self.push(value, Op::ConcatRows(parts.iter().map(|p| p.0).collect())))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Parameter("concat_cols of nothing".into()));
        }
        let tensors: Vec<Tensor> = parts.iter().map(|p| self.value(*p).clone()).collect();
        let value = Tensor::hstack(&tensors)?;
        Ok(self.push(value, Op::ConcatCols(parts.iter().map(|p| p.0).collect())))
    }

    /// Selects row `r` as a 1×cols tensor.
    pub fn row(&mut self, a: Var, r: usize) -> Result<Var> {
        let t = self.value(a);
        if r >= t.rows() {
            return Err(Error::Index {
                index: r,
                len: t.rows(),
            });
        }
        let value = t.row_tensor(r);
        Ok(self.push(value, Op::Row(a.0, r)))
    }

    pub fn softmax_rows(&mut self, a: Var, temperature: f64) -> Result<Var> {
        let value = softmax(self.value(a), temperature)?;
        Ok(self.push(value, Op::SoftmaxRows(a.0, temperature)))
    }

    pub fn log_softmax_rows(&mut self, a: Var, temperature: f64) -> Result<Var> {
        if !(temperature > 0.0) {
            return Err(Error::Parameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let t = self.value(a);
        let mut out = Vec::with_capacity(t.len());
        for r in 0..t.rows() {
            out.extend(log_softmax_row(t.row(r), temperature));
        }
        let value = Tensor::from_vec(t.rows(), t.cols(), out)?;
        Ok(self.push(value, Op::LogSoftmaxRows(a.0, temperature)))
    }

    /// Scales every row to unit Euclidean norm; zero rows are a numeric error.
    pub fn normalize_rows(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let mut out = t.clone();
        let mut norms = Vec::with_capacity(t.rows());
        for r in 0..t.rows() {
            let n = super::tensor::l2_norm(t.row(r));
            if n == 0.0 || !n.is_finite() {
                return Err(Error::Numeric(format!("row {r} has norm {n}; cosine undefined")));
            }
            out.row_mut(r).iter_mut().for_each(|v| *v /= n);
            norms.push(n);
        }
        let out = out.with_requires_grad(false);
        Ok(self.push(out, Op::NormalizeRows(a.0, norms)))
    }

    /// Gathers `entries` (row, col) into an n×1 column.
    pub fn pick(&mut self, a: Var, entries: &[(usize, usize)]) -> Result<Var> {
        let t = self.value(a);
        let mut out = Vec::with_capacity(entries.len());
        for &(r, c) in entries {
            if r >= t.rows() || c >= t.cols() {
                return Err(Error::Index {
                    index: r * t.cols() + c,
                    len: t.len(),
                });
            }
            out.push(t.get(r, c));
        }
        let value = Tensor::column_vector(&out);
        Ok(self.push(value, Op::Pick(a.0, entries.to_vec())))
    }

    /// Column-wise standardization (population std); see [`standardize_columns`].
    pub fn standardize_cols(&mut self, a: Var) -> Var {
        let (value, stds) = standardize_columns(self.value(a));
        self.push(value, Op::StandardizeCols(a.0, stds))
    }

    /// Zeroes the diagonal of a square matrix.
    pub fn off_diagonal(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.rows() != t.cols() {
            return Err(Error::shape("off_diagonal", t.shape(), (t.cols(), t.cols())));
        }
        let mut value = t.clone().with_requires_grad(false);
        for i in 0..t.rows() {
            value.set(i, i, 0.0);
        }
        Ok(self.push(value, Op::OffDiag(a.0)))
    }

    /// Runs reverse accumulation from a 1×1 `loss`, consuming the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(Error::shape("backward", shape, (1, 1)));
        }
        let nodes = self.nodes;
        let mut grads: Vec<Option<Vec<f64>>> = (0..nodes.len()).map(|_| None).collect();
        if nodes[loss.0].tracked {
            grads[loss.0] = Some(vec![1.0]);
        }

        for i in (0..=loss.0).rev() {
            let node = &nodes[i];
            if !node.tracked || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            propagate(&nodes, &mut grads, node, &g);
            grads[i] = Some(g);
        }

        let grads = grads
            .into_iter()
            .zip(&nodes)
            .map(|(g, n)| {
                g.filter(|_| n.tracked)
                    .map(|g| Tensor::from_vec(n.value.rows(), n.value.cols(), g).expect("gradient shape"))
            })
            .collect();
        Ok(Gradients { grads })
    }
}

fn accumulate(nodes: &[Node], grads: &mut [Option<Vec<f64>>], p: usize, f: impl FnOnce(&mut [f64])) {
    if !nodes[p].tracked {
        return;
    }
    let len = nodes[p].value.len();
    let slot = grads[p].get_or_insert_with(|| vec![0.0; len]);
    f(slot);
}

fn propagate(nodes: &[Node], grads: &mut [Option<Vec<f64>>], node: &Node, g: &[f64]) {
    let out = &node.value;
    let (rows, cols) = out.shape();
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let av = &nodes[*a].value;
            let bv = &nodes[*b].value;
            let gt = Tensor::from_vec(rows, cols, g.to_vec()).expect("grad shape");
            if nodes[*a].tracked {
                let da = gt.matmul(&bv.transpose()).expect("matmul grad");
                accumulate(nodes, grads, *a, |s| add_into(s, da.data()));
            }
            if nodes[*b].tracked {
                let db = av.transpose().matmul(&gt).expect("matmul grad");
                accumulate(nodes, grads, *b, |s| add_into(s, db.data()));
            }
        }
        Op::Add(a, b) => {
            accumulate(nodes, grads, *a, |s| add_into(s, g));
            accumulate(nodes, grads, *b, |s| add_into(s, g));
        }
        Op::Sub(a, b) => {
            accumulate(nodes, grads, *a, |s| add_into(s, g));
            accumulate(nodes, grads, *b, |s| s.iter_mut().zip(g).for_each(|(s, g)| *s -= g));
        }
        Op::Mul(a, b) => {
            let av = nodes[*a].value.data();
            let bv = nodes[*b].value.data();
            accumulate(nodes, grads, *a, |s| {
                for ((s, g), y) in s.iter_mut().zip(g).zip(bv) {
                    *s += g * y;
                }
            });
            accumulate(nodes, grads, *b, |s| {
                for ((s, g), x) in s.iter_mut().zip(g).zip(av) {
                    *s += g * x;
                }
            });
        }
        Op::AddRow(a, row) => {
            accumulate(nodes, grads, *a, |s| add_into(s, g));
            accumulate(nodes, grads, *row, |s| {
                for r in 0..rows {
                    add_into(s, &g[r * cols..(r + 1) * cols]);
                }
            });
        }
        Op::Scale(a, c) => {
            accumulate(nodes, grads, *a, |s| s.iter_mut().zip(g).for_each(|(s, g)| *s += c * g));
        }
        Op::Tanh(a) => accumulate(nodes, grads, *a, |s| {
            for ((s, g), y) in s.iter_mut().zip(g).zip(out.data()) {
                *s += g * (1.0 - y * y);
            }
        }),
        Op::Exp(a) => accumulate(nodes, grads, *a, |s| {
            for ((s, g), y) in s.iter_mut().zip(g).zip(out.data()) {
                *s += g * y;
            }
        }),
        Op::Log(a) => {
            let x = nodes[*a].value.data();
            accumulate(nodes, grads, *a, |s| {
                for ((s, g), x) in s.iter_mut().zip(g).zip(x) {
                    *s += g / x;
                }
            })
        }
        Op::Sum(a) => accumulate(nodes, grads, *a, |s| s.iter_mut().for_each(|s| *s += g[0])),
        Op::MeanRows(a) => {
            let n = nodes[*a].value.rows();
            accumulate(nodes, grads, *a, |s| {
                for r in 0..n {
                    for c in 0..cols {
                        s[r * cols + c] += g[c] / n as f64;
                    }
                }
            })
        }
        Op::Transpose(a) => accumulate(nodes, grads, *a, |s| {
            // out is rows×cols, parent is cols×rows
            for r in 0..rows {
                for c in 0..cols {
                    s[c * rows + r] += g[r * cols + c];
                }
            }
        }),
        Op::ConcatRows(parts) => {
            let mut offset = 0;
            for p in parts {
                let len = nodes[*p].value.len();
                accumulate(nodes, grads, *p, |s| add_into(s, &g[offset..offset + len]));
                offset += len;
            }
        }
        Op::ConcatCols(parts) => {
            let mut offset = 0;
            for p in parts {
                let pc = nodes[*p].value.cols();
                accumulate(nodes, grads, *p, |s| {
                    for r in 0..rows {
                        add_into(
                            &mut s[r * pc..(r + 1) * pc],
                            &g[r * cols + offset..r * cols + offset + pc],
                        );
                    }
                });
                offset += pc;
            }
        }
        Op::Row(a, r) => accumulate(nodes, grads, *a, |s| add_into(&mut s[r * cols..(r + 1) * cols], g)),
        Op::SoftmaxRows(a, t) => accumulate(nodes, grads, *a, |s| {
            for r in 0..rows {
                let y = out.row(r);
                let gr = &g[r * cols..(r + 1) * cols];
                let inner: f64 = y.iter().zip(gr).map(|(y, g)| y * g).sum();
                for c in 0..cols {
                    s[r * cols + c] += y[c] * (gr[c] - inner) / t;
                }
            }
        }),
        Op::LogSoftmaxRows(a, t) => accumulate(nodes, grads, *a, |s| {
            for r in 0..rows {
                let y = out.row(r);
                let gr = &g[r * cols..(r + 1) * cols];
                let total: f64 = gr.iter().sum();
                for c in 0..cols {
                    s[r * cols + c] += (gr[c] - y[c].exp() * total) / t;
                }
            }
        }),
        Op::NormalizeRows(a, norms) => accumulate(nodes, grads, *a, |s| {
            for r in 0..rows {
                let y = out.row(r);
                let gr = &g[r * cols..(r + 1) * cols];
                let inner: f64 = y.iter().zip(gr).map(|(y, g)| y * g).sum();
                for c in 0..cols {
                    s[r * cols + c] += (gr[c] - y[c] * inner) / norms[r];
                }
            }
        }),
        Op::Pick(a, entries) => {
            let pc = nodes[*a].value.cols();
            accumulate(nodes, grads, *a, |s| {
                for (k, (r, c)) in entries.iter().enumerate() {
                    s[r * pc + c] += g[k];
                }
            })
        }
        Op::StandardizeCols(a, stds) => accumulate(nodes, grads, *a, |s| {
            let n = rows as f64;
            for c in 0..cols {
                let gm = (0..rows).map(|r| g[r * cols + c]).sum::<f64>() / n;
                if stds[c] == 0.0 {
                    for r in 0..rows {
                        s[r * cols + c] += g[r * cols + c] - gm;
                    }
                } else {
                    let gy = (0..rows).map(|r| g[r * cols + c] * out.get(r, c)).sum::<f64>() / n;
                    for r in 0..rows {
                        s[r * cols + c] += (g[r * cols + c] - gm - out.get(r, c) * gy) / stds[c];
                    }
                }
            }
        }),
        Op::OffDiag(a) => accumulate(nodes, grads, *a, |s| {
            for r in 0..rows {
                for c in 0..cols {
                    if r != c {
                        s[r * cols + c] += g[r * cols + c];
                    }
                }
            }
        }),
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let p = softmax(&Tensor::row_vector(&[0.3, 0.3]), 0.7).unwrap();
        assert_eq!(p.data(), &[0.5, 0.5]);

        let p = softmax(&Tensor::row_vector(&[1.0, 0.0]), 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((p.get(0, 0) - e / (e + 1.0)).abs() < 1e-15);
        assert!((p.get(0, 0) - 0.7311).abs() < 1e-4);
        assert!((p.get(0, 1) - 0.2689).abs() < 1e-4);

        let p = softmax(&Tensor::row_vector(&[10.0, -10.0]), 0.01).unwrap();
        assert!(p.get(0, 0) >= 1.0 - 1e-12);
        assert!(p.is_finite());
    }

    #[test]
    fn softmax_rejects_nonpositive_temperature() {
        let v = Tensor::row_vector(&[1.0, 2.0]);
        assert!(matches!(softmax(&v, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(softmax(&v, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn sum_gives_all_ones_gradient() {
        let x = Tensor::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.0, 7.0]])
            .unwrap()
            .with_requires_grad(true);
        let mut tape = Tape::new();
        let xv = tape.leaf(&x);
        let loss = tape.sum(xv);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(xv).unwrap().data(), &[1.0; 6]);
    }

    #[test]
    fn quadratic_gradient_is_two_x() {
        let x = Tensor::column_vector(&[2.0, 3.0]).with_requires_grad(true);
        let mut tape = Tape::new();
        let xv = tape.leaf(&x);
        let xt = tape.transpose(xv);
        let loss = tape.matmul(xt, xv).unwrap();
        assert_eq!(tape.value(loss).item().unwrap(), 13.0);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(xv).unwrap().data(), &[4.0, 6.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::new();
        let x = tape.param(&Tensor::zeros(2, 2));
        assert!(matches!(tape.backward(x), Err(Error::Shape { .. })));
    }

    #[test]
    fn untracked_ops_are_constants() {
        let mut tape = Tape::new();
        let a = tape.constant(&Tensor::identity(2));
        let b = tape.constant(&Tensor::filled(2, 1, 1.0));
        let c = tape.matmul(a, b).unwrap();
        assert!(!tape.is_tracked(c));
        let w = tape.param(&Tensor::filled(1, 2, 1.0));
        let d = tape.matmul(w, c).unwrap();
        assert!(tape.is_tracked(d));
        let grads = tape.backward(d).unwrap();
        assert!(grads.get(a).is_none());
        assert_eq!(grads.get(w).unwrap().data(), &[1.0, 1.0]);
    }

    #[test]
    fn standardize_handles_constant_columns() {
        let x = Tensor::from_rows(&[[1.0, 5.0], [3.0, 5.0]]).unwrap();
        let (y, stds) = standardize_columns(&x);
        assert_eq!(y.data(), &[-1.0, 0.0, 1.0, 0.0]);
        assert_eq!(stds, vec![1.0, 0.0]);
    }
}
