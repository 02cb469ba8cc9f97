#![allow(dead_code)]

use ebgcn::cascade::{build_graph, Claim, PropagationGraph};
use ebgcn::datagen::{generate, GenConfig};
use ebgcn::features::FeatureSource;
use ebgcn::model::{relation_noise, Direction, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random rooted tree on `n` nodes with `dim` Gaussian-ish features.
pub fn random_graph(rng: &mut impl Rng, n: usize, dim: usize) -> PropagationGraph {
    let mut a = ebgcn::tensor::Tensor::zeros(n, n);
    for child in 1..n {
        a.set(rng.random_range(0..child), child, 1.0);
    }
    let data = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = ebgcn::tensor::Tensor::from_vec(n, dim, data).unwrap();
    PropagationGraph::from_adjacency(x, a).unwrap()
}

/// One 8-node claim from the synthetic generator with its embedding features.
pub fn eight_node_claim(seed: u64) -> (Claim, PropagationGraph) {
    let corpus = generate(&GenConfig {
        claims_per_class: 1,
        min_nodes: 8,
        max_nodes: 8,
        feature_dim: 16,
        seed,
        ..GenConfig::default()
    })
    .unwrap();
    let claim = corpus.dataset.claims[0].clone();
    let source = FeatureSource::Embeddings(corpus.embeddings);
    let graph = build_graph(&claim, &source.features(&claim)).unwrap();
    (claim, graph)
}

fn to_mat(t: &ebgcn::tensor::Tensor) -> Mat {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

fn param(params: &ModelParams, name: &str) -> Mat {
    to_mat(params.store.by_name(name).unwrap_or_else(|| panic!("missing {name}")))
}

fn affine(x: &[f64], w: &Mat, b: &Mat) -> Vec<f64> {
    (0..w[0].len())
        .map(|c| b[0][c] + x.iter().zip(w).map(|(xi, row)| xi * row[c]).sum::<f64>())
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn ln(x: f64) -> f64 {
    x.max(1e-12).ln()
}

/// `(A + I)` scaled by the inverse square roots of its row sums on both sides.
pub fn normalize(a: &Mat) -> Mat {
    let n = a.len();
    let d: Vec<f64> = (0..n).map(|i| a[i].iter().sum::<f64>() + 1.0).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (a[i][j] + if i == j { 1.0 } else { 0.0 }) / (d[i].sqrt() * d[j].sqrt()))
                .collect()
        })
        .collect()
}

pub struct OracleOutput {
    pub probs: Vec<f64>,
    pub kl: Vec<f64>,
    pub gates: Vec<f64>,
}

impl OracleOutput {
    pub fn l_e(&self) -> f64 {
        if self.kl.is_empty() {
            0.0
        } else {
            self.kl.iter().sum::<f64>() / self.kl.len() as f64
        }
    }

    pub fn total(&self, label: usize, gamma: f64) -> f64 {
        gamma * -self.probs[label].max(1e-12).ln() + (1.0 - gamma) * self.l_e()
    }
}

/// The network written out loop by loop, without the tape. `noise_seed`
/// selects the training-mode sample; `None` uses the posterior mean.
pub fn oracle_forward(params: &ModelParams, graph: &PropagationGraph, noise_seed: Option<u64>) -> OracleOutput {
    let arch = &params.arch;
    let x = to_mat(&graph.x);
    let n = x.len();
    let mut pooled = Vec::new();
    let mut kl = Vec::new();
    let mut gates = Vec::new();
    for dir in Direction::BOTH {
        let mut a = match dir {
            Direction::TopDown => to_mat(&graph.a_td),
            Direction::BottomUp => to_mat(&graph.a_bu),
        };
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| a[i][j] != 0.0)
            .collect();
        let mut h = x.clone();
        for layer in 1..=2 {
            if arch.edge_inference {
                let p = |part: &str| param(params, &format!("edge{layer}.{part}"));
                let (wf, bf, wr, br) = (p("feature.weight"), p("feature.bias"), p("relation.weight"), p("relation.bias"));
                let (wm, bm, wv, bv) = (p("mean.weight"), p("mean.bias"), p("var.weight"), p("var.bias"));
                for &(i, j) in &pairs {
                    let d: Vec<f64> = h[i].iter().zip(&h[j]).map(|(a, b)| (a - b).abs()).collect();
                    let g: Vec<f64> = affine(&d, &wf, &bf).into_iter().map(|v| v.max(0.0)).collect();
                    let r = affine(&g, &wr, &br);
                    let gate: f64 = r.iter().map(|&v| sig(v)).sum();
                    gates.push(gate);
                    a[i][j] *= gate;
                    let mu = affine(&g, &wm, &bm);
                    let var: Vec<f64> = affine(&g, &wv, &bv)
                        .into_iter()
                        .map(|v| (1.0 + v.exp()).ln() + 1e-6)
                        .collect();
                    let z: Vec<f64> = match noise_seed {
                        None => mu,
                        Some(s) => {
                            let eps = relation_noise(s, dir, layer, (i, j), arch.relations);
                            (0..mu.len()).map(|t| mu[t] + var[t].sqrt() * eps[t]).collect()
                        }
                    };
                    let pl = softmax(&r);
                    let q = softmax(&z);
                    kl.push((0..pl.len()).map(|t| pl[t] * (ln(pl[t]) - ln(q[t]))).sum());
                }
            }
            let norm = normalize(&a);
            let dirname = dir.as_str();
            let w = param(params, &format!("gcl{layer}.{dirname}.weight"));
            let b = param(params, &format!("gcl{layer}.{dirname}.bias"));
            let agg: Mat = (0..n)
                .map(|i| {
                    (0..h[0].len())
                        .map(|c| (0..n).map(|k| norm[i][k] * h[k][c]).sum())
                        .collect()
                })
                .collect();
            h = agg
                .iter()
                .map(|row| affine(row, &w, &b).into_iter().map(|v| v.max(0.0)).collect())
                .collect();
        }
        let width = h[0].len();
        pooled.extend((0..width).map(|c| h.iter().map(|row| row[c]).sum::<f64>() / n as f64));
    }
    let logits = affine(&pooled, &param(params, "classifier.weight"), &param(params, "classifier.bias"));
    OracleOutput {
        probs: softmax(&logits),
        kl,
        gates,
    }
}
