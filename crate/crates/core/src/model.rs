//! The edge-enhanced Bayesian GCN forward pass.
//!
//! For each direction (top-down over `A`, bottom-up over `Aᵀ`) two blocks are
//! stacked. Block `l` first re-weights the edges of the current adjacency
//! from the previous node features, then applies a graph convolution over the
//! symmetrically normalized re-weighted adjacency:
//!
//! ```text
//! d_ij  = |h_i - h_j|                       (elementwise)
//! g_ij  = relu(d_ij · W_f + b_f)            (T latent relation features)
//! r_ij  = g_ij · W_r + b_r                  (relation logits)
//! A'_ij = Σ_t sigmoid(r_ij,t) · A_ij        (on the original support only)
//! H'    = relu(norm(A') · H · W + b)
//! ```
//!
//! The relation likelihood is `softmax(r_ij)`; the Gaussian posterior over
//! relation logits has mean `g · W_μ + b_μ` and variance
//! `softplus(g · W_δ + b_δ) + 1e-6`. The graph embedding is the concatenation
//! of the mean-pooled final node features of both directions, followed by a
//! softmax classifier. Edge-inference heads are shared by the two directions
//! and kept per layer; GCL weights are per direction and layer.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cascade::PropagationGraph;
use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::seed;
use crate::tape::{Pairs, Tape, Var};
use crate::tensor::{sigmoid, Tensor};

pub const DEFAULT_HIDDEN: usize = 64;
pub const NUM_LAYERS: usize = 2;
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    TopDown,
    BottomUp,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::TopDown, Direction::BottomUp];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::TopDown => "td",
            Direction::BottomUp => "bu",
        }
    }

    fn ordinal(self) -> u64 {
        match self {
            Direction::TopDown => 0,
            Direction::BottomUp => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: usize,
    /// Number of latent relation types `T`.
    pub relations: usize,
    pub classes: usize,
    /// When false every gate is fixed to 1 and the network is a plain
    /// bidirectional two-layer GCN.
    pub edge_inference: bool,
}

impl Architecture {
    pub fn new(input_dim: usize, relations: usize, classes: usize) -> Self {
        Architecture {
            input_dim,
            hidden: DEFAULT_HIDDEN,
            relations,
            classes,
            edge_inference: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 {
            return Err(Error::Config("input and hidden dimensions must be positive".into()));
        }
        if self.relations == 0 {
            return Err(Error::Config("at least one latent relation type is required".into()));
        }
        if self.classes < 2 {
            return Err(Error::Config("at least two classes are required".into()));
        }
        Ok(())
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 1 {
            self.input_dim
        } else {
            self.hidden
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GclSlots {
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EdgeSlots {
    feature_weight: usize,
    feature_bias: usize,
    relation_weight: usize,
    relation_bias: usize,
    mean_weight: usize,
    mean_bias: usize,
    var_weight: usize,
    var_bias: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    /// `gcl[direction][layer - 1]`
    gcl: [[GclSlots; NUM_LAYERS]; 2],
    edge: Option<[EdgeSlots; NUM_LAYERS]>,
    classifier_weight: usize,
    classifier_bias: usize,
}

/// Every learnable tensor of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub store: ParamStore,
    layout: Layout,
}

/// The tensors of one edge-inference block, detached from a store.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeHead {
    pub feature_weight: Tensor,
    pub feature_bias: Tensor,
    pub relation_weight: Tensor,
    pub relation_bias: Tensor,
    pub mean_weight: Tensor,
    pub mean_bias: Tensor,
    pub var_weight: Tensor,
    pub var_bias: Tensor,
}

impl EdgeHead {
    pub fn zeros(input_dim: usize, relations: usize) -> Self {
        let t = relations;
        EdgeHead {
            feature_weight: Tensor::zeros(input_dim, t),
            feature_bias: Tensor::zeros(1, t),
            relation_weight: Tensor::zeros(t, t),
            relation_bias: Tensor::zeros(1, t),
            mean_weight: Tensor::zeros(t, t),
            mean_bias: Tensor::zeros(1, t),
            var_weight: Tensor::zeros(t, t),
            var_bias: Tensor::zeros(1, t),
        }
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-a..=a)).collect();
    Tensor::from_vec(rows, cols, data).expect("sized")
}

impl ModelParams {
    /// Glorot-uniform weights and zero biases, drawn from `seed`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::rng(seed, &[0x1417]);
        let mut store = ParamStore::new();
        let h = arch.hidden;
        let t = arch.relations;

        let mut gcl = [[GclSlots { weight: 0, bias: 0 }; NUM_LAYERS]; 2];
        for dir in Direction::BOTH {
            for layer in 1..=NUM_LAYERS {
                let fan_in = arch.layer_input(layer);
                let weight = store.push(
                    format!("gcl{layer}.{}.weight", dir.as_str()),
                    glorot(fan_in, h, &mut rng),
                );
                let bias = store.push(format!("gcl{layer}.{}.bias", dir.as_str()), Tensor::zeros(1, h));
                gcl[dir.ordinal() as usize][layer - 1] = GclSlots { weight, bias };
            }
        }

        let edge = if arch.edge_inference {
            let mut slots = Vec::with_capacity(NUM_LAYERS);
            for layer in 1..=NUM_LAYERS {
                let fan_in = arch.layer_input(layer);
                let mut push = |part: &str, value: Tensor| store.push(format!("edge{layer}.{part}"), value);
                slots.push(EdgeSlots {
                    feature_weight: push("feature.weight", glorot(fan_in, t, &mut rng)),
                    feature_bias: push("feature.bias", Tensor::zeros(1, t)),
                    relation_weight: push("relation.weight", glorot(t, t, &mut rng)),
                    relation_bias: push("relation.bias", Tensor::zeros(1, t)),
                    mean_weight: push("mean.weight", glorot(t, t, &mut rng)),
                    mean_bias: push("mean.bias", Tensor::zeros(1, t)),
                    var_weight: push("var.weight", glorot(t, t, &mut rng)),
                    var_bias: push("var.bias", Tensor::zeros(1, t)),
                });
            }
            Some([slots[0], slots[1]])
        } else {
            None
        };

        let classifier_weight = store.push("classifier.weight", glorot(2 * h, arch.classes, &mut rng));
        let classifier_bias = store.push("classifier.bias", Tensor::zeros(1, arch.classes));
        Ok(ModelParams {
            arch,
            store,
            layout: Layout {
                gcl,
                edge,
                classifier_weight,
                classifier_bias,
            },
        })
    }

    /// Rebuilds params from a store whose names and shapes match `arch`.
    pub fn from_store(arch: Architecture, store: ParamStore) -> Result<Self> {
        let template = ModelParams::init(arch, 0)?;
        if template.store.len() != store.len() {
            return Err(Error::Structural(format!(
                "expected {} parameter tensors, found {}",
                template.store.len(),
                store.len()
            )));
        }
        for ((name, expected), (got_name, got)) in template.store.iter().zip(store.iter()) {
            if name != got_name || expected.shape() != got.shape() {
                return Err(Error::Structural(format!(
                    "parameter {got_name} {:?} does not match {name} {:?}",
                    got.shape(),
                    expected.shape()
                )));
            }
            if !got.is_finite() {
                return Err(Error::Numeric(format!("parameter {got_name} is not finite")));
            }
        }
        Ok(ModelParams {
            arch,
            store,
            layout: template.layout,
        })
    }

    pub fn edge_head(&self, layer: usize) -> Option<EdgeHead> {
        let slots = self.layout.edge?[layer - 1];
        let get = |i: usize| self.store.get(i).clone();
        Some(EdgeHead {
            feature_weight: get(slots.feature_weight),
            feature_bias: get(slots.feature_bias),
            relation_weight: get(slots.relation_weight),
            relation_bias: get(slots.relation_bias),
            mean_weight: get(slots.mean_weight),
            mean_bias: get(slots.mean_bias),
            var_weight: get(slots.var_weight),
            var_bias: get(slots.var_bias),
        })
    }

    pub fn set_edge_head(&mut self, layer: usize, head: &EdgeHead) -> Result<()> {
        let slots = self
            .layout
            .edge
            .ok_or_else(|| Error::Config("edge inference is disabled".into()))?[layer - 1];
        let pairs = [
            (slots.feature_weight, &head.feature_weight),
            (slots.feature_bias, &head.feature_bias),
            (slots.relation_weight, &head.relation_weight),
            (slots.relation_bias, &head.relation_bias),
            (slots.mean_weight, &head.mean_weight),
            (slots.mean_bias, &head.mean_bias),
            (slots.var_weight, &head.var_weight),
            (slots.var_bias, &head.var_bias),
        ];
        for (slot, value) in pairs {
            if self.store.get(slot).shape() != value.shape() {
                return Err(Error::shape("set_edge_head", self.store.name(slot).to_string()));
            }
            *self.store.get_mut(slot) = value.clone();
        }
        Ok(())
    }

    /// `(weight, bias)` of the GCL of `direction` at `layer`.
    pub fn gcl(&self, direction: Direction, layer: usize) -> (&Tensor, &Tensor) {
        let s = self.layout.gcl[direction.ordinal() as usize][layer - 1];
        (self.store.get(s.weight), self.store.get(s.bias))
    }

    pub fn classifier(&self) -> (&Tensor, &Tensor) {
        (
            self.store.get(self.layout.classifier_weight),
            self.store.get(self.layout.classifier_bias),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Relation logits for the consistency pathway are sampled with noise
    /// derived from this seed.
    Train { noise_seed: u64 },
    /// The posterior mean is used in place of a sample.
    Eval,
}

/// Standard-normal noise for one edge, a pure function of its identity.
pub fn relation_noise(seed: u64, direction: Direction, layer: usize, edge: (usize, usize), relations: usize) -> Vec<f64> {
    let mut rng = seed::rng(
        seed,
        &[direction.ordinal(), layer as u64, edge.0 as u64, edge.1 as u64],
    );
    (0..relations).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Nonzero support of `adj` in row-major order.
pub fn support(adj: &Tensor) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..adj.rows() {
        for j in 0..adj.cols() {
            if adj.get(i, j) != 0.0 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Tape handles for one edge-inference block.
#[derive(Debug, Clone)]
pub struct EdgeVars {
    pub direction: Direction,
    pub layer: usize,
    pub pairs: Pairs,
    pub features: Var,
    pub logits: Var,
    pub gates: Var,
    pub likelihood: Var,
    pub mean: Var,
    pub variance: Var,
    pub sample: Var,
    pub posterior: Var,
}

#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub logits: Var,
    pub probs: Var,
    pub embedding: Var,
    pub edges: Vec<EdgeVars>,
    /// `(direction, layer, refined adjacency)`.
    pub adjacency: Vec<(Direction, usize, Var)>,
}

struct EdgeHeadVars {
    feature_weight: Var,
    feature_bias: Var,
    relation_weight: Var,
    relation_bias: Var,
    mean_weight: Var,
    mean_bias: Var,
    var_weight: Var,
    var_bias: Var,
}

fn linear(tape: &mut Tape, x: Var, w: Var, b: Var) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    tape.add_row_bias(xw, b)
}

#[allow(clippy::too_many_arguments)]
fn edge_block(
    tape: &mut Tape,
    h: Var,
    adj: Var,
    pairs: Pairs,
    head: &EdgeHeadVars,
    direction: Direction,
    layer: usize,
    mode: Mode,
) -> Result<(Var, EdgeVars)> {
    let diffs = tape.abs_diff_gather(h, pairs.clone())?;
    let pre = linear(tape, diffs, head.feature_weight, head.feature_bias)?;
    let features = tape.relu(pre)?;
    let logits = linear(tape, features, head.relation_weight, head.relation_bias)?;
    let activations = tape.sigmoid(logits)?;
    let gates = tape.row_sum(activations)?;
    let refined = tape.edge_scale(adj, gates, pairs.clone())?;
    let likelihood = tape.row_softmax(logits)?;

    let mean = linear(tape, features, head.mean_weight, head.mean_bias)?;
    let raw_var = linear(tape, features, head.var_weight, head.var_bias)?;
    let soft = tape.softplus(raw_var)?;
    let variance = tape.add_scalar(soft, VARIANCE_FLOOR)?;
    let sample = match mode {
        Mode::Eval => mean,
        Mode::Train { noise_seed } => {
            let t = tape.shape(mean).1;
            let mut eps = Tensor::zeros(pairs.len(), t);
            for (e, &edge) in pairs.iter().enumerate() {
                eps.row_mut(e)
                    .copy_from_slice(&relation_noise(noise_seed, direction, layer, edge, t));
            }
            let eps = tape.leaf(eps);
            let std = tape.sqrt(variance)?;
            let scaled = tape.mul(std, eps)?;
            tape.add(mean, scaled)?
        }
    };
    let posterior = tape.row_softmax(sample)?;
    Ok((
        refined,
        EdgeVars {
            direction,
            layer,
            pairs,
            features,
            logits,
            gates,
            likelihood,
            mean,
            variance,
            sample,
            posterior,
        },
    ))
}

fn gcl_block(tape: &mut Tape, norm_adj: Var, h: Var, w: Var, b: Var) -> Result<Var> {
    let agg = tape.matmul(norm_adj, h)?;
    let lin = linear(tape, agg, w, b)?;
    tape.relu(lin)
}

/// Records the full forward pass on `tape`. `vars` are the bound params of
/// `params.store`, in store order.
pub fn forward_on_tape(
    tape: &mut Tape,
    vars: &[Var],
    params: &ModelParams,
    graph: &PropagationGraph,
    mode: Mode,
) -> Result<ForwardVars> {
    let arch = &params.arch;
    if graph.feature_dim() != arch.input_dim {
        return Err(Error::shape(
            "forward",
            format!("features have {} columns, model expects {}", graph.feature_dim(), arch.input_dim),
        ));
    }
    if graph.num_nodes() == 0 {
        return Err(Error::Structural("graph has no nodes".into()));
    }
    if vars.len() != params.store.len() {
        return Err(Error::shape("forward", "bound vars do not match the parameter store"));
    }
    let layout = &params.layout;
    let heads: Option<Vec<EdgeHeadVars>> = layout.edge.map(|slots| {
        slots
            .iter()
            .map(|s| EdgeHeadVars {
                feature_weight: vars[s.feature_weight],
                feature_bias: vars[s.feature_bias],
                relation_weight: vars[s.relation_weight],
                relation_bias: vars[s.relation_bias],
                mean_weight: vars[s.mean_weight],
                mean_bias: vars[s.mean_bias],
                var_weight: vars[s.var_weight],
                var_bias: vars[s.var_bias],
            })
            .collect()
    });

    let x = tape.leaf(graph.x.clone());
    let mut pooled = Vec::with_capacity(2);
    let mut edges = Vec::new();
    let mut adjacency = Vec::new();
    for direction in Direction::BOTH {
        let original = match direction {
            Direction::TopDown => &graph.a_td,
            Direction::BottomUp => &graph.a_bu,
        };
        let pairs: Pairs = Arc::from(support(original));
        let mut adj = tape.leaf(original.clone());
        let mut h = x;
        for layer in 1..=NUM_LAYERS {
            if let Some(heads) = &heads {
                if !pairs.is_empty() {
                    let (refined, record) =
                        edge_block(tape, h, adj, pairs.clone(), &heads[layer - 1], direction, layer, mode)?;
                    adj = refined;
                    edges.push(record);
                }
            }
            adjacency.push((direction, layer, adj));
            let norm = tape.sym_normalize(adj)?;
            let slots = layout.gcl[direction.ordinal() as usize][layer - 1];
            h = gcl_block(tape, norm, h, vars[slots.weight], vars[slots.bias])?;
        }
        pooled.push(tape.mean_rows(h)?);
    }
    let embedding = tape.concat_cols(pooled[0], pooled[1])?;
    let logits = linear(
        tape,
        embedding,
        vars[layout.classifier_weight],
        vars[layout.classifier_bias],
    )?;
    let probs = tape.row_softmax(logits)?;
    Ok(ForwardVars {
        logits,
        probs,
        embedding,
        edges,
        adjacency,
    })
}

/// Plain values of one edge-inference record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeRecord {
    pub direction: Direction,
    pub layer: usize,
    /// Row and column of the edge in this direction's adjacency.
    pub edge: (usize, usize),
    pub relation_features: Vec<f64>,
    pub relation_logits: Vec<f64>,
    pub gate: f64,
    /// Refined adjacency entry after gating.
    pub weight: f64,
    pub likelihood: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub sample: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedAdjacency {
    pub direction: Direction,
    pub layer: usize,
    pub matrix: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub embedding: Vec<f64>,
    pub edges: Vec<EdgeRecord>,
    pub adjacency: Vec<RefinedAdjacency>,
}

impl ForwardOutput {
    pub fn predicted(&self) -> usize {
        argmax(&self.probs)
    }
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

pub(crate) fn edge_records(tape: &Tape, vars: &[EdgeVars], adjacency: &[(Direction, usize, Var)]) -> Vec<EdgeRecord> {
    let mut records = Vec::new();
    for ev in vars {
        let refined = adjacency
            .iter()
            .find(|(d, l, _)| *d == ev.direction && *l == ev.layer)
            .map(|(_, _, v)| tape.value(*v));
        for (e, &(i, j)) in ev.pairs.iter().enumerate() {
            let row = |v: Var| tape.value(v).row(e).to_vec();
            records.push(EdgeRecord {
                direction: ev.direction,
                layer: ev.layer,
                edge: (i, j),
                relation_features: row(ev.features),
                relation_logits: row(ev.logits),
                gate: tape.value(ev.gates).get(e, 0),
                weight: refined.map_or(f64::NAN, |a| a.get(i, j)),
                likelihood: row(ev.likelihood),
                mean: row(ev.mean),
                variance: row(ev.variance),
                sample: row(ev.sample),
            });
        }
    }
    records
}

/// Evaluates the network on one graph.
pub fn forward(graph: &PropagationGraph, params: &ModelParams, mode: Mode) -> Result<ForwardOutput> {
    let mut tape = Tape::new();
    let vars = params.store.bind(&mut tape);
    let out = forward_on_tape(&mut tape, &vars, params, graph, mode)?;
    Ok(ForwardOutput {
        logits: tape.value(out.logits).data().to_vec(),
        probs: tape.value(out.probs).data().to_vec(),
        embedding: tape.value(out.embedding).data().to_vec(),
        edges: edge_records(&tape, &out.edges, &out.adjacency),
        adjacency: out
            .adjacency
            .iter()
            .map(|&(direction, layer, v)| RefinedAdjacency {
                direction,
                layer,
                matrix: tape.value(v).clone(),
            })
            .collect(),
    })
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `D` the row sums of `A + I`.
pub fn normalize_adjacency(adj: &Tensor) -> Result<Tensor> {
    crate::tape::sym_normalize(adj)
}

/// `relu(Â · H · W + b)`.
pub fn gcl_forward(norm_adj: &Tensor, h: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let (a, h, w, b) = (
        tape.leaf(norm_adj.clone()),
        tape.leaf(h.clone()),
        tape.leaf(w.clone()),
        tape.leaf(b.clone()),
    );
    let out = gcl_block(&mut tape, a, h, w, b)?;
    Ok(tape.value(out).clone())
}

/// One edge-inference step outside the full network. `pairs` must lie on the
/// support of `adj`. Records use the posterior mean as the sample.
pub fn edge_inference(
    h_prev: &Tensor,
    adj: &Tensor,
    pairs: &[(usize, usize)],
    head: &EdgeHead,
) -> Result<(Tensor, Vec<EdgeRecord>)> {
    if let Some(&(i, j)) = pairs
        .iter()
        .find(|&&(i, j)| i >= adj.rows() || j >= adj.cols() || adj.get(i, j) == 0.0)
    {
        return Err(Error::Structural(format!("edge ({i}, {j}) is outside the adjacency support")));
    }
    if pairs.is_empty() {
        return Ok((adj.clone(), Vec::new()));
    }
    let mut tape = Tape::new();
    let h = tape.leaf(h_prev.clone());
    let a = tape.leaf(adj.clone());
    let mut leaf = |t: &Tensor| tape.leaf(t.clone());
    let head_vars = EdgeHeadVars {
        feature_weight: leaf(&head.feature_weight),
        feature_bias: leaf(&head.feature_bias),
        relation_weight: leaf(&head.relation_weight),
        relation_bias: leaf(&head.relation_bias),
        mean_weight: leaf(&head.mean_weight),
        mean_bias: leaf(&head.mean_bias),
        var_weight: leaf(&head.var_weight),
        var_bias: leaf(&head.var_bias),
    };
    let (refined, vars) = edge_block(
        &mut tape,
        h,
        a,
        Arc::from(pairs),
        &head_vars,
        Direction::TopDown,
        1,
        Mode::Eval,
    )?;
    let records = edge_records(&tape, std::slice::from_ref(&vars), &[(Direction::TopDown, 1, refined)]);
    Ok((tape.value(refined).clone(), records))
}

/// Scalar gate of one edge, `Σ_t sigmoid(r_t)`.
pub fn gate_of(relation_logits: &[f64]) -> f64 {
    relation_logits.iter().map(|&r| sigmoid(r)).sum()
}

/// Text dump of edge gates, one `claim direction layer i j gate weight` line
/// per edge.
pub fn edge_weight_dump(claim_id: &str, output: &ForwardOutput) -> String {
    let mut out = String::new();
    for r in &output.edges {
        out.push_str(&format!(
            "{claim_id}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\n",
            r.direction.as_str(),
            r.layer,
            r.edge.0,
            r.edge.1,
            r.gate,
            r.weight
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_graph(n: usize, d: usize) -> PropagationGraph {
        let mut a = Tensor::zeros(n, n);
        for i in 1..n {
            a.set(i - 1, i, 1.0);
        }
        let x = Tensor::from_vec(n, d, (0..n * d).map(|k| ((k * 7 % 11) as f64) / 11.0 - 0.3).collect()).unwrap();
        PropagationGraph::from_adjacency(x, a).unwrap()
    }

    #[test]
    fn param_names_and_shapes() {
        let params = ModelParams::init(Architecture::new(10, 3, 4), 1).unwrap();
        let shape = |n: &str| params.store.by_name(n).unwrap().shape();
        assert_eq!(shape("gcl1.td.weight"), (10, 64));
        assert_eq!(shape("gcl2.bu.weight"), (64, 64));
        assert_eq!(shape("edge1.feature.weight"), (10, 3));
        assert_eq!(shape("edge2.feature.weight"), (64, 3));
        assert_eq!(shape("edge2.var.weight"), (3, 3));
        assert_eq!(shape("classifier.weight"), (128, 4));
        assert_eq!(params.store.len(), 8 + 16 + 2);
        let mut ablation = Architecture::new(10, 3, 4);
        ablation.edge_inference = false;
        assert_eq!(ModelParams::init(ablation, 1).unwrap().store.len(), 10);
    }

    #[test]
    fn init_is_seeded() {
        let arch = Architecture::new(5, 2, 3);
        assert_eq!(ModelParams::init(arch, 4).unwrap(), ModelParams::init(arch, 4).unwrap());
        assert_ne!(ModelParams::init(arch, 4).unwrap(), ModelParams::init(arch, 5).unwrap());
        let p = ModelParams::init(arch, 4).unwrap();
        let bound = (6.0f64 / (5.0 + 64.0)).sqrt();
        assert!(p.gcl(Direction::TopDown, 1).0.data().iter().all(|v| v.abs() <= bound));
        assert!(p.gcl(Direction::TopDown, 1).1.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gcl_trivial_cases() {
        let h = Tensor::from_vec(3, 3, vec![0.5, 1.0, 0.0, 2.0, 0.1, 3.0, 0.0, 0.0, 4.0]).unwrap();
        let zero = gcl_forward(&Tensor::identity(3), &h, &Tensor::zeros(3, 2), &Tensor::zeros(1, 2)).unwrap();
        assert_eq!(zero, Tensor::zeros(3, 2));
        let same = gcl_forward(&Tensor::identity(3), &h, &Tensor::identity(3), &Tensor::zeros(1, 3)).unwrap();
        assert_eq!(same, h);
        assert!(gcl_forward(&Tensor::identity(2), &h, &Tensor::identity(3), &Tensor::zeros(1, 3)).is_err());
    }

    #[test]
    fn zero_head_gates() {
        let h = Tensor::from_vec(3, 2, vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.0]).unwrap();
        let mut a = Tensor::zeros(3, 3);
        a.set(0, 1, 1.0);
        a.set(1, 2, 1.0);
        let pairs = support(&a);
        let (two, recs) = edge_inference(&h, &a, &pairs, &EdgeHead::zeros(2, 2)).unwrap();
        assert_eq!(two, a);
        assert!(recs.iter().all(|r| r.gate == 1.0));
        let (three, _) = edge_inference(&h, &a, &pairs, &EdgeHead::zeros(2, 3)).unwrap();
        assert_eq!(three, a.scale(1.5));
        assert!(edge_inference(&h, &a, &[(2, 0)], &EdgeHead::zeros(2, 2)).is_err());
    }

    #[test]
    fn forward_simplex_and_records() {
        let params = ModelParams::init(Architecture::new(4, 3, 4), 3).unwrap();
        let g = chain_graph(5, 4);
        let out = forward(&g, &params, Mode::Train { noise_seed: 9 }).unwrap();
        assert!((out.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(out.embedding.len(), 128);
        // 4 edges per direction per layer
        assert_eq!(out.edges.len(), 4 * 2 * 2);
        for r in &out.edges {
            assert!(r.gate > 0.0 && r.gate < 3.0);
            assert!((r.likelihood.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(r.variance.iter().all(|v| *v > 0.0));
            assert!((gate_of(&r.relation_logits) - r.gate).abs() < 1e-12);
        }
        let eval = forward(&g, &params, Mode::Eval).unwrap();
        assert_eq!(eval.probs, out.probs);
        assert!(eval.edges.iter().all(|r| r.sample == r.mean));
        assert!(!edge_weight_dump("c1", &eval).is_empty());
    }

    #[test]
    fn single_node_graph() {
        let params = ModelParams::init(Architecture::new(3, 2, 4), 3).unwrap();
        let g = PropagationGraph::from_adjacency(Tensor::row_vector(vec![0.2, 0.4, -0.1]), Tensor::zeros(1, 1)).unwrap();
        let out = forward(&g, &params, Mode::Eval).unwrap();
        assert!(out.edges.is_empty());
        assert!((out.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // both directions see the same single node
        assert_eq!(out.embedding.len(), 128);
    }

    #[test]
    fn wrong_feature_width() {
        let params = ModelParams::init(Architecture::new(3, 2, 4), 3).unwrap();
        assert!(forward(&chain_graph(3, 5), &params, Mode::Eval).is_err());
    }

    #[test]
    fn from_store_checks_layout() {
        let arch = Architecture::new(3, 2, 4);
        let p = ModelParams::init(arch, 3).unwrap();
        assert_eq!(ModelParams::from_store(arch, p.store.clone()).unwrap(), p);
        let other = Architecture::new(3, 3, 4);
        assert!(ModelParams::from_store(other, p.store).is_err());
    }
}
