//! Append-only reverse-mode tape.
//!
//! Each operation appends a node holding its output value and a persistent
//! gradient buffer. `backward` walks the nodes in reverse with fresh scratch
//! adjoints and *adds* the result into the persistent buffers, so calling it
//! twice on the same tape accumulates exactly twice the single-pass gradient.

use super::{NumericsError, Result, Tensor};

/// Handle to a node on a [`Tape`]. Only valid for the tape that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Tanh(usize),
    Sigmoid(usize),
    Relu(usize),
    Softmax(usize),
    Sum(usize),
    Transpose(usize),
    Column(usize, usize),
    SliceRows { src: usize, start: usize },
    LogAt(usize, usize),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    grad: Vec<f64>,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn matmul_2d(a: &Tensor, b: &Tensor) -> Vec<f64> {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    for i in 0..m {
        for p in 0..k {
            let aip = ad[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aip * brow[j];
            }
        }
    }
    out
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

    /// Accumulated gradient of `v` over all `backward` calls so far.
    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].grad
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        let grad = vec![0.0; value.numel()];
        self.nodes.push(Node { op, value, grad });
        Var(self.nodes.len() - 1)
    }

    /// Registers an input tensor. Its gradient is still tracked; callers that
    /// treat it as a constant simply never read it back.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.push(Op::Leaf, Tensor::scalar(value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape().len() != 2 || tb.shape().len() != 2 || ta.cols() != tb.rows() {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul",
                detail: format!("{:?} x {:?}", ta.shape(), tb.shape()),
            });
        }
        let out = Tensor::new(vec![ta.rows(), tb.cols()], matmul_2d(ta, tb))?;
        Ok(self.push(Op::MatMul(a.0, b.0), out))
    }

    fn binary_elementwise(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: impl Fn(usize, usize) -> Op,
    ) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape() != tb.shape() {
            return Err(NumericsError::ShapeMismatch {
                op: name,
                detail: format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            });
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(op(a.0, b.0), out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise("add", a, b, |x, y| x + y, Op::Add)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise("mul", a, b, |x, y| x * y, Op::Mul)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|x| c * x).collect();
        let out = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        self.push(Op::Scale(a.0, c), out)
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|x| f(*x)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        self.push(op, out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(a.0))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a.0))
    }

    /// Softmax over all entries, shape preserved. Entries of −infinity map to
    /// exactly 0; stabilization subtracts the max over finite entries.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let ta = &self.nodes[a.0].value;
        let max = ta
            .data()
            .iter()
            .copied()
            .filter(|x| x.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(NumericsError::AllMasked);
        }
        let exps: Vec<f64> = ta
            .data()
            .iter()
            .map(|&x| if x == f64::NEG_INFINITY { 0.0 } else { (x - max).exp() })
            .collect();
        let z: f64 = exps.iter().sum();
        let data = exps.iter().map(|e| e / z).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(Op::Softmax(a.0), out))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push(Op::Sum(a.0), Tensor::scalar(s))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let ta = &self.nodes[a.0].value;
        if ta.shape().len() != 2 {
            return Err(NumericsError::ShapeMismatch {
                op: "transpose",
                detail: format!("expected matrix, got {:?}", ta.shape()),
            });
        }
        let (m, n) = (ta.rows(), ta.cols());
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = ta.get2(i, j);
            }
        }
        let out = Tensor::new(vec![n, m], data)?;
        Ok(self.push(Op::Transpose(a.0), out))
    }

    /// Column `j` of a matrix as an [m x 1] matrix.
    pub fn column(&mut self, a: Var, j: usize) -> Result<Var> {
        let ta = &self.nodes[a.0].value;
        if ta.shape().len() != 2 || j >= ta.cols() {
            return Err(NumericsError::ShapeMismatch {
                op: "column",
                detail: format!("column {} of {:?}", j, ta.shape()),
            });
        }
        let m = ta.rows();
        let data = (0..m).map(|i| ta.get2(i, j)).collect();
        let out = Tensor::new(vec![m, 1], data)?;
        Ok(self.push(Op::Column(a.0, j), out))
    }

    /// Rows `start..start+len` of a matrix.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let ta = &self.nodes[a.0].value;
        if ta.shape().len() != 2 || start + len > ta.rows() {
            return Err(NumericsError::ShapeMismatch {
                op: "slice_rows",
                detail: format!("rows {}..{} of {:?}", start, start + len, ta.shape()),
            });
        }
        let n = ta.cols();
        let data = ta.data()[start * n..(start + len) * n].to_vec();
        let out = Tensor::new(vec![len, n], data)?;
        Ok(self.push(Op::SliceRows { src: a.0, start }, out))
    }

    /// Natural log of a single entry, as a scalar node. Used for log-probs of
    /// sampled actions, so the entry must be strictly positive.
    pub fn log_at(&mut self, a: Var, index: usize) -> Result<Var> {
        let p = self.nodes[a.0].value.data()[index];
        if p <= 0.0 {
            return Err(NumericsError::NonPositiveLog { index, value: p });
        }
        Ok(self.push(Op::LogAt(a.0, index), Tensor::scalar(p.ln())))
    }

    /// Reverse sweep from a scalar loss. Adds this pass's adjoints into every
    /// node's persistent gradient buffer.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let loss_numel = self.nodes[loss.0].value.numel();
        if loss_numel != 1 {
            return Err(NumericsError::NonScalarLoss { numel: loss_numel });
        }
        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.numel()])
            .collect();
        adj[loss.0][0] = 1.0;

        for id in (0..=loss.0).rev() {
            if adj[id].iter().all(|&g| g == 0.0) {
                continue;
            }
            // Take this node's adjoint out so we can borrow parents mutably.
            let g = std::mem::take(&mut adj[id]);
            match self.nodes[id].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let gm = Tensor::new(self.nodes[id].value.shape().to_vec(), g.clone())
                        .expect("adjoint shape");
                    // dA = G · Bᵀ
                    let bt = transpose_tensor(&self.nodes[b].value);
                    add_into(&mut adj[a], &matmul_2d(&gm, &bt));
                    // dB = Aᵀ · G
                    let at = transpose_tensor(&self.nodes[a].value);
                    add_into(&mut adj[b], &matmul_2d(&at, &gm));
                }
                Op::Add(a, b) => {
                    add_into(&mut adj[a], &g);
                    add_into(&mut adj[b], &g);
                }
                Op::Mul(a, b) => {
                    let (bd, ad): (Vec<f64>, Vec<f64>) = (
                        self.nodes[b].value.data().to_vec(),
                        self.nodes[a].value.data().to_vec(),
                    );
                    for (i, gi) in g.iter().enumerate() {
                        adj[a][i] += gi * bd[i];
                        adj[b][i] += gi * ad[i];
                    }
                }
                Op::Scale(a, c) => {
                    for (i, gi) in g.iter().enumerate() {
                        adj[a][i] += gi * c;
                    }
                }
                Op::Tanh(a) => {
                    let y = self.nodes[id].value.data();
                    for (i, gi) in g.iter().enumerate() {
                        adj[a][i] += gi * (1.0 - y[i] * y[i]);
                    }
                }
                Op::Sigmoid(a) => {
                    let y = self.nodes[id].value.data();
                    for (i, gi) in g.iter().enumerate() {
                        adj[a][i] += gi * y[i] * (1.0 - y[i]);
                    }
                }
                Op::Relu(a) => {
                    let x = self.nodes[a].value.data();
                    for (i, gi) in g.iter().enumerate() {
                        if x[i] > 0.0 {
                            adj[a][i] += gi;
                        }
                    }
                }
                Op::Softmax(a) => {
                    // dx_i = y_i (g_i − Σ_j g_j y_j); masked entries have y=0.
                    let y = self.nodes[id].value.data();
                    let dot: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    for i in 0..g.len() {
                        adj[a][i] += y[i] * (g[i] - dot);
                    }
                }
                Op::Sum(a) => {
                    for slot in adj[a].iter_mut() {
                        *slot += g[0];
                    }
                }
                Op::Transpose(a) => {
                    let (m, n) = (self.nodes[a].value.rows(), self.nodes[a].value.cols());
                    for i in 0..m {
                        for j in 0..n {
                            adj[a][i * n + j] += g[j * m + i];
                        }
                    }
                }
                Op::Column(a, j) => {
                    let n = self.nodes[a].value.cols();
                    for (i, gi) in g.iter().enumerate() {
                        adj[a][i * n + j] += gi;
                    }
                }
                Op::SliceRows { src, start } => {
                    let n = self.nodes[src].value.cols();
                    for (k, gi) in g.iter().enumerate() {
                        adj[src][start * n + k] += gi;
                    }
                }
                Op::LogAt(a, index) => {
                    let p = self.nodes[a].value.data()[index];
                    adj[a][index] += g[0] / p;
                }
            }
            adj[id] = g;
        }

        for (node, scratch) in self.nodes.iter_mut().zip(adj) {
            add_into(&mut node.grad, &scratch);
        }
        Ok(())
    }
}

fn transpose_tensor(t: &Tensor) -> Tensor {
    let (m, n) = (t.rows(), t.cols());
    let mut data = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            data[j * m + i] = t.get2(i, j);
        }
    }
    Tensor::new(vec![n, m], data).expect("transpose shape")
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
