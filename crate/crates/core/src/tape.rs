//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every kernel applied during a forward pass as a node
//! holding its output value. [`Tape::backward`] walks the nodes in reverse,
//! accumulating adjoints, and returns the gradient of a scalar loss with
//! respect to every node registered through [`Tape::param`].
//!
//! Kernels: matmul, add/sub, row-broadcast bias, elementwise multiply,
//! absolute-difference gather over edge pairs, sigmoid, relu, softplus, sqrt,
//! floored log, row-softmax, row-sum, mean over rows, sum, column concat,
//! scalar scale/shift, transpose, edge-gate scatter and symmetric adjacency
//! normalization.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{floored_ln, gemm, sigmoid, softmax, softplus, Tensor, LOG_FLOOR};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Ordered `(row, row)` index pairs, typically `(parent, child)` edges.
pub type Pairs = Arc<[(usize, usize)]>;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRowBias(Var, Var),
    AddScalar(Var, f64),
    Scale(Var, f64),
    Sigmoid(Var),
    Relu(Var),
    Softplus(Var),
    Sqrt(Var),
    Log(Var),
    RowSoftmax(Var),
    RowSum(Var),
    MeanRows(Var),
    Sum(Var),
    ConcatCols(Var, Var),
    Transpose(Var),
    AbsDiffGather(Var, Pairs),
    EdgeScale(Var, Var, Pairs),
    SymNormalize(Var),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients of a scalar loss, keyed by parameter key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    by_key: BTreeMap<usize, Tensor>,
}

impl Gradients {
    pub fn get(&self, key: usize) -> Option<&Tensor> {
        self.by_key.get(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Tensor)> {
        self.by_key.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
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

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// A constant input; receives no gradient in the returned map.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push_raw(Op::Leaf, value)
    }

    /// A differentiable input reported under `key` by [`Tape::backward`].
    pub fn param(&mut self, key: usize, value: Tensor) -> Var {
        self.push_raw(Op::Param(key), value)
    }

    fn push_raw(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op) -> Result<Var> {
        let value = evaluate(&op, &self.nodes)?;
        Ok(self.push_raw(op, value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Mul(a, b))
    }

    /// `a + bias` with a `1 × cols` bias broadcast over every row.
    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        self.push(Op::AddRowBias(a, bias))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        self.push(Op::AddScalar(a, c))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.push(Op::Scale(a, c))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Relu(a))
    }

    pub fn softplus(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Softplus(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Sqrt(a))
    }

    /// `ln(max(a, 1e-12))`; the floor is flat, so its derivative is zero there.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Log(a))
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        self.push(Op::RowSoftmax(a))
    }

    /// `n × m → n × 1`.
    pub fn row_sum(&mut self, a: Var) -> Result<Var> {
        self.push(Op::RowSum(a))
    }

    /// `n × m → 1 × m`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        self.push(Op::MeanRows(a))
    }

    /// Sum of all entries as a `1 × 1` tensor.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Sum(a))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::ConcatCols(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Transpose(a))
    }

    /// Row `e` of the output is `|h[i] - h[j]|` for the `e`-th pair `(i, j)`.
    pub fn abs_diff_gather(&mut self, h: Var, pairs: Pairs) -> Result<Var> {
        self.push(Op::AbsDiffGather(h, pairs))
    }

    /// Output equals `adj` scaled by `gates[e]` at each pair `e`, zero elsewhere.
    pub fn edge_scale(&mut self, adj: Var, gates: Var, pairs: Pairs) -> Result<Var> {
        self.push(Op::EdgeScale(adj, gates, pairs))
    }

    /// `D^{-1/2} (A + I) D^{-1/2}` with `D` the row sums of `A + I`.
    pub fn sym_normalize(&mut self, adj: Var) -> Result<Var> {
        self.push(Op::SymNormalize(adj))
    }

    /// Recomputes every non-input node from the recorded inputs.
    pub fn replay(&self) -> Result<Vec<Tensor>> {
        let mut nodes: Vec<Node> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let value = match node.op {
                Op::Leaf | Op::Param(_) => node.value.clone(),
                ref op => evaluate(op, &nodes)?,
            };
            nodes.push(Node {
                op: node.op.clone(),
                value,
            });
        }
        Ok(nodes.into_iter().map(|n| n.value).collect())
    }

    /// Gradient of the scalar `loss` with respect to every registered param.
    ///
    /// Params that the loss does not depend on receive zero tensors. A param
    /// key registered more than once accumulates over all its occurrences.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let adjoints = self.adjoints(loss)?;
        let mut by_key: BTreeMap<usize, Tensor> = BTreeMap::new();
        for (node, adj) in self.nodes.iter().zip(adjoints) {
            if let Op::Param(key) = node.op {
                let grad = adj.unwrap_or_else(|| {
                    let (r, c) = node.value.shape();
                    Tensor::zeros(r, c)
                });
                match by_key.get_mut(&key) {
                    Some(existing) => existing.accumulate(&grad),
                    None => {
                        by_key.insert(key, grad);
                    }
                }
            }
        }
        Ok(Gradients { by_key })
    }

    /// Whether each node is a param or computed from one.
    fn depends_on_params(&self) -> Vec<bool> {
        let mut needs = vec![false; self.nodes.len()];
        for (idx, node) in self.nodes.iter().enumerate() {
            needs[idx] = match &node.op {
                Op::Leaf => false,
                Op::Param(_) => true,
                Op::MatMul(a, b)
                | Op::Add(a, b)
                | Op::Sub(a, b)
                | Op::Mul(a, b)
                | Op::AddRowBias(a, b)
                | Op::ConcatCols(a, b)
                | Op::EdgeScale(a, b, _) => needs[a.0] || needs[b.0],
                Op::AddScalar(a, _)
                | Op::Scale(a, _)
                | Op::Sigmoid(a)
                | Op::Relu(a)
                | Op::Softplus(a)
                | Op::Sqrt(a)
                | Op::Log(a)
                | Op::RowSoftmax(a)
                | Op::RowSum(a)
                | Op::MeanRows(a)
                | Op::Sum(a)
                | Op::Transpose(a)
                | Op::AbsDiffGather(a, _)
                | Op::SymNormalize(a) => needs[a.0],
            };
        }
        needs
    }

    fn adjoints(&self, loss: Var) -> Result<Vec<Option<Tensor>>> {
        if self.shape(loss) != (1, 1) {
            let (r, c) = self.shape(loss);
            return Err(Error::shape("backward", format!("loss is {r}x{c}, not scalar")));
        }
        let needs = self.depends_on_params();
        let mut adj: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            if !needs[idx] {
                continue;
            }
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            let out = &node.value;
            match &node.op {
                Op::Leaf | Op::Param(_) => {
                    adj[idx] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    if needs[a.0] {
                        add_into(&mut adj, *a, gemm(&g, false, bv, true)?);
                    }
                    if needs[b.0] {
                        add_into(&mut adj, *b, gemm(av, true, &g, false)?);
                    }
                }
                Op::Add(a, b) => {
                    add_into(&mut adj, *b, g.clone());
                    add_into(&mut adj, *a, g);
                }
                Op::Sub(a, b) => {
                    add_into(&mut adj, *b, g.scale(-1.0));
                    add_into(&mut adj, *a, g);
                }
                Op::Mul(a, b) => {
                    let da = g.zip_map(self.value(*b), |x, y| x * y);
                    let db = g.zip_map(self.value(*a), |x, y| x * y);
                    add_into(&mut adj, *a, da);
                    add_into(&mut adj, *b, db);
                }
                Op::AddRowBias(a, bias) => {
                    add_into(&mut adj, *bias, column_sums(&g));
                    add_into(&mut adj, *a, g);
                }
                Op::AddScalar(a, _) => add_into(&mut adj, *a, g),
                Op::Scale(a, c) => add_into(&mut adj, *a, g.scale(*c)),
                Op::Sigmoid(a) => {
                    let da = g.zip_map(out, |gv, y| gv * y * (1.0 - y));
                    add_into(&mut adj, *a, da);
                }
                Op::Relu(a) => {
                    let da = g.zip_map(self.value(*a), |gv, x| if x > 0.0 { gv } else { 0.0 });
                    add_into(&mut adj, *a, da);
                }
                Op::Softplus(a) => {
                    let da = g.zip_map(self.value(*a), |gv, x| gv * sigmoid(x));
                    add_into(&mut adj, *a, da);
                }
                Op::Sqrt(a) => {
                    let da = g.zip_map(out, |gv, y| gv / (2.0 * y));
                    add_into(&mut adj, *a, da);
                }
                Op::Log(a) => {
                    let da = g.zip_map(self.value(*a), |gv, x| if x > LOG_FLOOR { gv / x } else { 0.0 });
                    add_into(&mut adj, *a, da);
                }
                Op::RowSoftmax(a) => {
                    let mut da = Tensor::zeros(out.rows(), out.cols());
                    for r in 0..out.rows() {
                        let y = out.row(r);
                        let gr = g.row(r);
                        let dot: f64 = y.iter().zip(gr).map(|(p, q)| p * q).sum();
                        for ((d, &yv), &gv) in da.row_mut(r).iter_mut().zip(y).zip(gr) {
                            *d = yv * (gv - dot);
                        }
                    }
                    add_into(&mut adj, *a, da);
                }
                Op::RowSum(a) => {
                    let (r, c) = self.shape(*a);
                    let mut da = Tensor::zeros(r, c);
                    for i in 0..r {
                        let gi = g.get(i, 0);
                        da.row_mut(i).iter_mut().for_each(|d| *d = gi);
                    }
                    add_into(&mut adj, *a, da);
                }
                Op::MeanRows(a) => {
                    let (r, c) = self.shape(*a);
                    let inv = 1.0 / r as f64;
                    let mut da = Tensor::zeros(r, c);
                    for i in 0..r {
                        for (d, gv) in da.row_mut(i).iter_mut().zip(g.row(0)) {
                            *d = gv * inv;
                        }
                    }
                    add_into(&mut adj, *a, da);
                }
                Op::Sum(a) => {
                    let (r, c) = self.shape(*a);
                    add_into(&mut adj, *a, Tensor::filled(r, c, g.data()[0]));
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.shape(*a).1;
                    let cb = self.shape(*b).1;
                    let mut da = Tensor::zeros(g.rows(), ca);
                    let mut db = Tensor::zeros(g.rows(), cb);
                    for r in 0..g.rows() {
                        da.row_mut(r).copy_from_slice(&g.row(r)[..ca]);
                        db.row_mut(r).copy_from_slice(&g.row(r)[ca..]);
                    }
                    add_into(&mut adj, *a, da);
                    add_into(&mut adj, *b, db);
                }
                Op::Transpose(a) => add_into(&mut adj, *a, g.transpose()),
                Op::AbsDiffGather(h, pairs) => {
                    let hv = self.value(*h);
                    let mut dh = Tensor::zeros(hv.rows(), hv.cols());
                    for (e, &(i, j)) in pairs.iter().enumerate() {
                        for k in 0..hv.cols() {
                            let diff = hv.get(i, k) - hv.get(j, k);
                            let s = if diff > 0.0 {
                                1.0
                            } else if diff < 0.0 {
                                -1.0
                            } else {
                                0.0
                            };
                            let contrib = g.get(e, k) * s;
                            dh.row_mut(i)[k] += contrib;
                            dh.row_mut(j)[k] -= contrib;
                        }
                    }
                    add_into(&mut adj, *h, dh);
                }
                Op::EdgeScale(a, gates, pairs) => {
                    let av = self.value(*a);
                    let gv = self.value(*gates);
                    let mut da = Tensor::zeros(av.rows(), av.cols());
                    let mut dg = Tensor::zeros(gv.rows(), 1);
                    for (e, &(i, j)) in pairs.iter().enumerate() {
                        let up = g.get(i, j);
                        da.set(i, j, up * gv.get(e, 0));
                        dg.set(e, 0, up * av.get(i, j));
                    }
                    add_into(&mut adj, *a, da);
                    add_into(&mut adj, *gates, dg);
                }
                Op::SymNormalize(a) if needs[a.0] => {
                    let av = self.value(*a);
                    add_into(&mut adj, *a, sym_normalize_adjoint(av, &g));
                }
                Op::SymNormalize(_) => {}
            }
        }
        Ok(adj)
    }
}

fn add_into(adj: &mut [Option<Tensor>], v: Var, grad: Tensor) {
    match &mut adj[v.0] {
        Some(existing) => existing.accumulate(&grad),
        slot @ None => *slot = Some(grad),
    }
}

fn column_sums(g: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(1, g.cols());
    for r in 0..g.rows() {
        for (o, v) in out.data_mut().iter_mut().zip(g.row(r)) {
            *o += v;
        }
    }
    out
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

fn check_pairs(op: &'static str, rows: usize, pairs: &[(usize, usize)]) -> Result<()> {
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= rows || j >= rows) {
        return Err(Error::shape(op, format!("pair ({i}, {j}) outside {rows} rows")));
    }
    Ok(())
}

/// Symmetric normalization of a non-negative square matrix with self-loops.
pub fn sym_normalize(a: &Tensor) -> Result<Tensor> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape("normalize_adjacency", format!("{:?} is not square", a.shape())));
    }
    if let Some(v) = a.data().iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Numeric(format!("adjacency entry {v} is negative or NaN")));
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / (a.row(i).iter().sum::<f64>() + 1.0).sqrt())
        .collect();
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let m = a.get(i, j) + if i == j { 1.0 } else { 0.0 };
            out.set(i, j, inv_sqrt[i] * m * inv_sqrt[j]);
        }
    }
    Ok(out)
}

fn sym_normalize_adjoint(a: &Tensor, g: &Tensor) -> Tensor {
    let n = a.rows();
    let m = |i: usize, j: usize| a.get(i, j) + if i == j { 1.0 } else { 0.0 };
    let degree: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum::<f64>() + 1.0).collect();
    let s: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    // dL/ds_k collects the row-k and column-k appearances of s_k.
    let mut ds = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let gm = g.get(i, j) * m(i, j);
            ds[i] += gm * s[j];
            ds[j] += gm * s[i];
        }
    }
    let dd: Vec<f64> = (0..n).map(|k| ds[k] * -0.5 * s[k] / degree[k]).collect();
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, g.get(i, j) * s[i] * s[j] + dd[i]);
        }
    }
    out
}

fn evaluate(op: &Op, nodes: &[Node]) -> Result<Tensor> {
    let val = |v: &Var| &nodes[v.0].value;
    Ok(match op {
        Op::Leaf | Op::Param(_) => unreachable!("inputs carry their own value"),
        Op::MatMul(a, b) => val(a).matmul(val(b))?,
        Op::Add(a, b) => {
            same_shape("add", val(a), val(b))?;
            val(a).zip_map(val(b), |x, y| x + y)
        }
        Op::Sub(a, b) => {
            same_shape("sub", val(a), val(b))?;
            val(a).zip_map(val(b), |x, y| x - y)
        }
        Op::Mul(a, b) => {
            same_shape("mul", val(a), val(b))?;
            val(a).zip_map(val(b), |x, y| x * y)
        }
        Op::AddRowBias(a, bias) => {
            let (av, bv) = (val(a), val(bias));
            if bv.rows() != 1 || bv.cols() != av.cols() {
                return Err(Error::shape(
                    "add_row_bias",
                    format!("bias {:?} for input {:?}", bv.shape(), av.shape()),
                ));
            }
            let mut out = av.clone();
            for r in 0..out.rows() {
                for (o, b) in out.row_mut(r).iter_mut().zip(bv.data()) {
                    *o += b;
                }
            }
            out
        }
        Op::AddScalar(a, c) => val(a).map(|x| x + c),
        Op::Scale(a, c) => val(a).map(|x| x * c),
        Op::Sigmoid(a) => val(a).map(sigmoid),
        Op::Relu(a) => val(a).map(|x| x.max(0.0)),
        Op::Softplus(a) => val(a).map(softplus),
        Op::Sqrt(a) => {
            let av = val(a);
            if av.data().iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Numeric("sqrt of a non-positive value".into()));
            }
            av.map(f64::sqrt)
        }
        Op::Log(a) => val(a).map(floored_ln),
        Op::RowSoftmax(a) => {
            let av = val(a);
            let mut out = Tensor::zeros(av.rows(), av.cols());
            for r in 0..av.rows() {
                out.row_mut(r).copy_from_slice(&softmax(av.row(r)));
            }
            out
        }
        Op::RowSum(a) => {
            let av = val(a);
            let sums = (0..av.rows()).map(|r| av.row(r).iter().sum()).collect();
            Tensor::from_vec(av.rows(), 1, sums)?
        }
        Op::MeanRows(a) => {
            let av = val(a);
            if av.rows() == 0 {
                return Err(Error::shape("mean_rows", "no rows to average"));
            }
            av.mean_rows()
        }
        Op::Sum(a) => Tensor::scalar(val(a).sum()),
        Op::ConcatCols(a, b) => {
            let (av, bv) = (val(a), val(b));
            if av.rows() != bv.rows() {
                return Err(Error::shape(
                    "concat_cols",
                    format!("{:?} vs {:?}", av.shape(), bv.shape()),
                ));
            }
            let mut out = Tensor::zeros(av.rows(), av.cols() + bv.cols());
            for r in 0..av.rows() {
                let row = out.row_mut(r);
                row[..av.cols()].copy_from_slice(av.row(r));
                row[av.cols()..].copy_from_slice(bv.row(r));
            }
            out
        }
        Op::Transpose(a) => val(a).transpose(),
        Op::AbsDiffGather(h, pairs) => {
            let hv = val(h);
            check_pairs("abs_diff_gather", hv.rows(), pairs)?;
            let mut out = Tensor::zeros(pairs.len(), hv.cols());
            for (e, &(i, j)) in pairs.iter().enumerate() {
                for ((o, x), y) in out.row_mut(e).iter_mut().zip(hv.row(i)).zip(hv.row(j)) {
                    *o = (x - y).abs();
                }
            }
            out
        }
        Op::EdgeScale(a, gates, pairs) => {
            let (av, gv) = (val(a), val(gates));
            check_pairs("edge_scale", av.rows(), pairs)?;
            if av.rows() != av.cols() || gv.shape() != (pairs.len(), 1) {
                return Err(Error::shape(
                    "edge_scale",
                    format!(
                        "adjacency {:?}, gates {:?}, {} pairs",
                        av.shape(),
                        gv.shape(),
                        pairs.len()
                    ),
                ));
            }
            let mut out = Tensor::zeros(av.rows(), av.cols());
            for (e, &(i, j)) in pairs.iter().enumerate() {
                out.set(i, j, gv.get(e, 0) * av.get(i, j));
            }
            out
        }
        Op::SymNormalize(a) => sym_normalize(val(a))?,
    })
}
