//! Tape-based reverse-mode differentiation over [`Tensor`] values.
//!
//! Operations are recorded in execution order; [`Tape::backward`] walks the
//! record in exact reverse order, accumulating adjoints that start at zero.

use super::activation;
use super::Tensor;
use crate::dsl::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// `x * w^T`; with `hollow = Some(l)` entries `(r, r % l)` of `w` count as zero.
    MatMulT { x: Var, w: Var, hollow: Option<usize> },
    Cols { x: Var, start: usize },
    BroadcastRows(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    MulRow(Var, Var),
    AddRow(Var, Var),
    Act(Activation, Var),
    Scale(Var, f64),
    /// Mean of squared differences against a constant target, optionally
    /// restricted to a 0/1 mask of the same shape.
    Mse { pred: Var, target: Tensor, count: f64 },
    /// Mean softmax cross entropy over rows.
    SoftmaxCe { logits: Var, labels: Vec<usize>, probs: Tensor },
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<Var>,
}

/// Adjoints of the registered parameters, in registration order.
pub struct Gradients {
    pub grads: Vec<Tensor>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Tensor::is_finite)
    }
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

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// A constant input (no gradient reported).
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// A trainable leaf; its adjoint is returned by [`Tape::backward`].
    pub fn param(&mut self, t: Tensor) -> Var {
        let v = self.push(t, Op::Leaf);
        self.params.push(v);
        v
    }

    pub fn matmul_t(&mut self, x: Var, w: Var, hollow: Option<usize>) -> Var {
        let xv = self.value(x);
        let wv = self.value(w);
        assert_eq!(xv.cols(), wv.cols(), "matmul_t inner dimension mismatch");
        let (b, k, m) = (xv.rows(), xv.cols(), wv.rows());
        let mut out = Tensor::zeros(b, m);
        {
            let od = out.data_mut();
            let (xd, wd) = (xv.data(), wv.data());
            for i in 0..b {
                let xr = &xd[i * k..(i + 1) * k];
                for r in 0..m {
                    let wr = &wd[r * k..(r + 1) * k];
                    let mut s: f64 = xr.iter().zip(wr).map(|(a, c)| a * c).sum();
                    if let Some(l) = hollow {
                        s -= xr[r % l] * wr[r % l];
                    }
                    od[i * m + r] = s;
                }
            }
        }
        self.push(out, Op::MatMulT { x, w, hollow })
    }

    pub fn cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let xv = self.value(x);
        assert!(start + len <= xv.cols(), "column slice out of range");
        let mut out = Tensor::zeros(xv.rows(), len);
        for r in 0..xv.rows() {
            for c in 0..len {
                out.set(r, c, xv.get(r, start + c));
            }
        }
        self.push(out, Op::Cols { x, start })
    }

    /// Repeats a `1 x c` row `rows` times.
    pub fn broadcast_rows(&mut self, v: Var, rows: usize) -> Var {
        let vv = self.value(v);
        assert_eq!(vv.rows(), 1, "broadcast_rows needs a row vector");
        let mut data = Vec::with_capacity(rows * vv.cols());
        for _ in 0..rows {
            data.extend_from_slice(vv.data());
        }
        let out = Tensor::from_vec(rows, vv.cols(), data);
        self.push(out, Op::BroadcastRows(v))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(out, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip_map(self.value(b), |x, y| x / y);
        self.push(out, Op::Div(a, b))
    }

    /// `x * row` with the `1 x c` row broadcast over all rows of `x`.
    pub fn mul_row(&mut self, x: Var, row: Var) -> Var {
        let out = row_op(self.value(x), self.value(row), |a, b| a * b);
        self.push(out, Op::MulRow(x, row))
    }

    pub fn add_row(&mut self, x: Var, row: Var) -> Var {
        let out = row_op(self.value(x), self.value(row), |a, b| a + b);
        self.push(out, Op::AddRow(x, row))
    }

    pub fn act(&mut self, f: Activation, x: Var) -> Var {
        let out = self.value(x).map(|v| activation::apply(f, v));
        self.push(out, Op::Act(f, x))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x).map(|v| v * c);
        self.push(out, Op::Scale(x, c))
    }

    /// Mean squared error against `target`.
    pub fn mse(&mut self, pred: Var, target: Tensor) -> Var {
        let pv = self.value(pred);
        assert_eq!(pv.shape(), target.shape(), "mse shape mismatch");
        let count = pv.len() as f64;
        let s: f64 = pv.data().iter().zip(target.data()).map(|(p, t)| (p - t) * (p - t)).sum();
        self.push(Tensor::scalar(s / count), Op::Mse { pred, target, count })
    }

    /// Mean over rows of softmax cross entropy (natural log).
    pub fn softmax_ce(&mut self, logits: Var, labels: Vec<usize>) -> Var {
        let lv = self.value(logits);
        assert_eq!(lv.rows(), labels.len(), "one label per row");
        let probs = softmax(lv);
        let mut total = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            assert!(y < lv.cols(), "label out of range");
            total += log_softmax_at(lv.row(r), y);
        }
        let loss = -total / labels.len() as f64;
        self.push(Tensor::scalar(loss), Op::SoftmaxCe { logits, labels, probs })
    }

    /// Reverse sweep from the scalar `loss`; returns the adjoints of all
    /// parameters registered with [`Tape::param`].
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).len(), 1, "backward needs a scalar loss");
        let mut adj: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Tensor::scalar(1.0));

        fn acc(adj: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut adj[v.0] {
                Some(a) => a.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    adj[i] = Some(g);
                }
                Op::MatMulT { x, w, hollow } => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    let (b, k, m) = (xv.rows(), xv.cols(), wv.rows());
                    let mut dx = Tensor::zeros(b, k);
                    let mut dw = Tensor::zeros(m, k);
                    {
                        let (gd, xd, wd) = (g.data(), xv.data(), wv.data());
                        let dxd = dx.data_mut();
                        for bi in 0..b {
                            for r in 0..m {
                                let gr = gd[bi * m + r];
                                if gr == 0.0 {
                                    continue;
                                }
                                let skip = hollow.map(|l| r % l);
                                for c in 0..k {
                                    if Some(c) == skip {
                                        continue;
                                    }
                                    dxd[bi * k + c] += gr * wd[r * k + c];
                                }
                            }
                        }
                        let dwd = dw.data_mut();
                        for bi in 0..b {
                            for r in 0..m {
                                let gr = gd[bi * m + r];
                                if gr == 0.0 {
                                    continue;
                                }
                                for c in 0..k {
                                    dwd[r * k + c] += gr * xd[bi * k + c];
                                }
                            }
                        }
                        if let Some(l) = hollow {
                            for r in 0..m {
                                dwd[r * k + r % l] = 0.0;
                            }
                        }
                    }
                    acc(&mut adj, *x, dx);
                    acc(&mut adj, *w, dw);
                }
                Op::Cols { x, start } => {
                    let xv = self.value(*x);
                    let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            dx.set(r, start + c, g.get(r, c));
                        }
                    }
                    acc(&mut adj, *x, dx);
                }
                Op::BroadcastRows(v) => {
                    acc(&mut adj, *v, col_sums(&g));
                }
                Op::Add(a, b) => {
                    acc(&mut adj, *a, g.clone());
                    acc(&mut adj, *b, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut adj, *a, g.clone());
                    acc(&mut adj, *b, g.map(|v| -v));
                }
                Op::Mul(a, b) => {
                    let da = g.zip_map(self.value(*b), |g, y| g * y);
                    let db = g.zip_map(self.value(*a), |g, x| g * x);
                    acc(&mut adj, *a, da);
                    acc(&mut adj, *b, db);
                }
                Op::Div(a, b) => {
                    let bv = self.value(*b);
                    let da = g.zip_map(bv, |g, y| g / y);
                    // d(a/b)/db = -(a/b)/b
                    let q = &node.value;
                    let db = g.zip_map(q, |g, q| g * q).zip_map(bv, |t, y| -t / y);
                    acc(&mut adj, *a, da);
                    acc(&mut adj, *b, db);
                }
                Op::MulRow(x, row) => {
                    let rv = self.value(*row);
                    let dx = row_op(&g, rv, |g, r| g * r);
                    let drow = col_sums(&g.zip_map(self.value(*x), |g, x| g * x));
                    acc(&mut adj, *x, dx);
                    acc(&mut adj, *row, drow);
                }
                Op::AddRow(x, row) => {
                    acc(&mut adj, *row, col_sums(&g));
                    acc(&mut adj, *x, g);
                }
                Op::Act(f, x) => {
                    let xv = self.value(*x);
                    let yv = &node.value;
                    let mut d = g;
                    for ((d, &xi), &yi) in d.data_mut().iter_mut().zip(xv.data()).zip(yv.data()) {
                        *d *= activation::derivative(*f, xi, yi);
                    }
                    acc(&mut adj, *x, d);
                }
                Op::Scale(x, c) => {
                    acc(&mut adj, *x, g.map(|v| v * c));
                }
                Op::Mse { pred, target, count } => {
                    let s = g.item() * 2.0 / count;
                    let d = self.value(*pred).zip_map(target, |p, t| s * (p - t));
                    acc(&mut adj, *pred, d);
                }
                Op::SoftmaxCe { logits, labels, probs } => {
                    let s = g.item() / labels.len() as f64;
                    let mut d = probs.clone();
                    for (r, &y) in labels.iter().enumerate() {
                        d.set(r, y, d.get(r, y) - 1.0);
                    }
                    acc(&mut adj, *logits, d.map(|v| v * s));
                }
            }
        }

        let grads = self
            .params
            .iter()
            .map(|p| {
                adj.get(p.0)
                    .and_then(|a| a.clone())
                    .unwrap_or_else(|| {
                        let v = self.value(*p);
                        Tensor::zeros(v.rows(), v.cols())
                    })
            })
            .collect();
        Gradients { grads }
    }
}

fn row_op(x: &Tensor, row: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    assert_eq!(row.rows(), 1, "row operand must be a row vector");
    assert_eq!(x.cols(), row.cols(), "row operand width mismatch");
    let c = x.cols();
    let mut out = x.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v = f(*v, row.data()[i % c]);
    }
    out
}

fn col_sums(g: &Tensor) -> Tensor {
    let mut s = Tensor::zeros(1, g.cols());
    for r in 0..g.rows() {
        for c in 0..g.cols() {
            s.data_mut()[c] += g.get(r, c);
        }
    }
    s
}

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: &Tensor) -> Tensor {
    let mut out = logits.clone();
    let c = logits.cols();
    for r in 0..logits.rows() {
        let row = &mut out.data_mut()[r * c..(r + 1) * c];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    out
}

/// `log softmax(row)[k]`, computed stably.
pub fn log_softmax_at(row: &[f64], k: usize) -> f64 {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
    row[k] - m - z.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_output_derivative() {
        // y = s - s^2 at s = 0.25 -> dy/ds = 0.5
        let mut t = Tape::new();
        let s = t.param(Tensor::scalar(0.25));
        let sq = t.mul(s, s);
        let y = t.sub(s, sq);
        let g = t.backward(y);
        assert_eq!(g.grads[0].item(), 0.5);
    }

    #[test]
    fn srelu_gradient() {
        let mut t = Tape::new();
        let x = t.param(Tensor::row_vector(vec![0.5, 1.5]));
        let y = t.act(Activation::Srelu, x);
        let ones = t.constant(Tensor::from_vec(1, 2, vec![1.0, 1.0]));
        let s = t.matmul_t(y, ones, None);
        let g = t.backward(s);
        assert_eq!(g.grads[0].data(), &[1.0, 0.0]);
    }

    #[test]
    fn hollow_matmul_ignores_and_masks_diagonal() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::from_vec(1, 2, vec![1.0, 2.0]));
        // two stacked 2x2 blocks
        let w = t.param(Tensor::from_vec(4, 2, vec![9.0, 1.0, 1.0, 9.0, 9.0, 3.0, 3.0, 9.0]));
        let y = t.matmul_t(x, w, Some(2));
        assert_eq!(t.value(y).data(), &[2.0, 1.0, 6.0, 3.0]);
        let ones = t.constant(Tensor::from_vec(1, 4, vec![1.0; 4]));
        let s = t.matmul_t(y, ones, None);
        let g = t.backward(s);
        assert_eq!(g.grads[0].data(), &[0.0, 2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn division_quotient_rule() {
        let mut t = Tape::new();
        let a = t.param(Tensor::scalar(3.0));
        let b = t.param(Tensor::scalar(2.0));
        let q = t.div(a, b);
        let g = t.backward(q);
        assert_eq!(g.grads[0].item(), 0.5);
        assert_eq!(g.grads[1].item(), -0.75);
    }

    #[test]
    fn saturated_cross_entropy_is_zero() {
        let mut t = Tape::new();
        let l = t.constant(Tensor::from_vec(1, 3, vec![1000.0, 0.0, 0.0]));
        let ce = t.softmax_ce(l, vec![0]);
        assert!(t.value(ce).item().abs() < 1e-12);
    }

    #[test]
    fn uniform_logits_give_log_classes() {
        for n in 2..=24 {
            let mut t = Tape::new();
            let l = t.constant(Tensor::zeros(3, n));
            let ce = t.softmax_ce(l, vec![0, 1, n - 1]);
            assert!((t.value(ce).item() - (n as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_differences_on_mixed_graph() {
        let build = |t: &mut Tape, w: Tensor| {
            let x = t.constant(Tensor::from_vec(2, 3, vec![0.3, -0.2, 0.5, 0.1, 0.4, -0.6]));
            let wv = t.param(w);
            let h = t.matmul_t(x, wv, None);
            let a = t.act(Activation::Tanh, h);
            let r = t.constant(Tensor::row_vector(vec![1.5, -0.5]));
            let m = t.mul_row(a, r);
            let d = t.div(m, a);
            let s = t.add(m, d);
            t.mse(s, Tensor::from_vec(2, 2, vec![0.1, 0.2, 0.3, 0.4]))
        };
        let w0 = Tensor::from_vec(2, 3, vec![0.2, -0.1, 0.3, 0.5, 0.4, -0.2]);
        let mut t = Tape::new();
        let loss = build(&mut t, w0.clone());
        let g = t.backward(loss).grads.remove(0);
        for i in 0..w0.len() {
            let eps = 1e-6;
            let mut wp = w0.clone();
            wp.data_mut()[i] += eps;
            let mut wm = w0.clone();
            wm.data_mut()[i] -= eps;
            let mut tp = Tape::new();
            let lp = build(&mut tp, wp);
            let mut tm = Tape::new();
            let lm = build(&mut tm, wm);
            let fd = (tp.value(lp).item() - tm.value(lm).item()) / (2.0 * eps);
            assert!((fd - g.data()[i]).abs() < 1e-8, "{i}: {fd} vs {}", g.data()[i]);
        }
    }
}
