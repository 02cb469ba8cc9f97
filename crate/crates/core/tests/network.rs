mod common;

use common::{eight_node_claim, normalize, oracle_forward, random_graph, rng, Mat};
use ebgcn::model::{
    edge_inference, forward, gate_of, gcl_forward, normalize_adjacency, Architecture, EdgeHead, Mode, ModelParams,
};
use ebgcn::objective::claim_objective;
use ebgcn::tape::Tape;
use ebgcn::tensor::Tensor;
use rand::Rng;

fn rand_tensor(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn mat(t: &Tensor) -> Mat {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

#[test]
fn forward_matches_straight_line_oracle_on_eight_nodes() {
    let (_, graph) = eight_node_claim(11);
    assert_eq!(graph.num_nodes(), 8);
    for relations in [1, 3] {
        let params = ModelParams::init(Architecture::new(graph.feature_dim(), relations, 4), 5).unwrap();
        for (mode, noise) in [(Mode::Eval, None), (Mode::Train { noise_seed: 99 }, Some(99))] {
            let out = forward(&graph, &params, mode).unwrap();
            let oracle = oracle_forward(&params, &graph, noise);
            for (a, b) in out.probs.iter().zip(&oracle.probs) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
            let gates: Vec<f64> = out.edges.iter().map(|r| r.gate).collect();
            assert_eq!(gates.len(), oracle.gates.len());
            for (a, b) in gates.iter().zip(&oracle.gates) {
                assert!((a - b).abs() <= 1e-12);
            }

            let mut tape = Tape::new();
            let vars = params.store.bind(&mut tape);
            let obj = claim_objective(&mut tape, &vars, &params, &graph, 2, 0.3, mode).unwrap();
            let total = tape.value(obj.total).item().unwrap();
            assert!((total - oracle.total(2, 0.3)).abs() <= 1e-12, "{total} vs {}", oracle.total(2, 0.3));
        }
    }
}

#[test]
fn ablation_forward_matches_oracle() {
    let (_, graph) = eight_node_claim(12);
    let mut arch = Architecture::new(graph.feature_dim(), 3, 4);
    arch.edge_inference = false;
    let params = ModelParams::init(arch, 8).unwrap();
    let out = forward(&graph, &params, Mode::Train { noise_seed: 1 }).unwrap();
    assert!(out.edges.is_empty());
    let oracle = oracle_forward(&params, &graph, None);
    for (a, b) in out.probs.iter().zip(&oracle.probs) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn normalization_matches_literal_formula() {
    let a = Tensor::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let got = normalize_adjacency(&a).unwrap();
    let s = 2f64.sqrt();
    let expected = [[1.0 / 2.0, 1.0 / s], [0.0, 1.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((got.get(i, j) - expected[i][j]).abs() < 1e-15);
        }
    }
    assert_eq!(normalize_adjacency(&Tensor::zeros(1, 1)).unwrap().get(0, 0), 1.0);

    let mut r = rng(3);
    for _ in 0..50 {
        let n = r.random_range(1..9);
        let a = Tensor::from_vec(n, n, (0..n * n).map(|_| if r.random_bool(0.3) { r.random_range(0.0..2.0) } else { 0.0 }).collect()).unwrap();
        let got = normalize_adjacency(&a).unwrap();
        let oracle = normalize(&mat(&a));
        for i in 0..n {
            for j in 0..n {
                assert!((got.get(i, j) - oracle[i][j]).abs() < 1e-14);
            }
        }

        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let mut pa = Tensor::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                pa.set(perm[i], perm[j], a.get(i, j));
            }
        }
        let pn = normalize_adjacency(&pa).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((pn.get(perm[i], perm[j]) - got.get(i, j)).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn gcl_matches_dense_recomputation_on_chain() {
    let mut r = rng(4);
    let mut a = Tensor::zeros(3, 3);
    a.set(0, 1, 1.0);
    a.set(1, 2, 1.0);
    let norm = normalize_adjacency(&a).unwrap();
    let h = rand_tensor(&mut r, 3, 4);
    let w = rand_tensor(&mut r, 4, 5);
    let b = rand_tensor(&mut r, 1, 5);
    let got = gcl_forward(&norm, &h, &w, &b).unwrap();
    let (nm, hm, wm) = (mat(&norm), mat(&h), mat(&w));
    for i in 0..3 {
        for c in 0..5 {
            let mut v = b.get(0, c);
            for k in 0..3 {
                for m in 0..4 {
                    v += nm[i][k] * hm[k][m] * wm[m][c];
                }
            }
            assert!((got.get(i, c) - v.max(0.0)).abs() < 1e-13);
        }
    }
}

#[test]
fn single_edge_gate_matches_scalar_evaluation() {
    let mut r = rng(5);
    for relations in 1..=4 {
        let d = 3;
        let head = EdgeHead {
            feature_weight: rand_tensor(&mut r, d, relations),
            feature_bias: rand_tensor(&mut r, 1, relations).map(|v| v + 1.0),
            relation_weight: rand_tensor(&mut r, relations, relations),
            relation_bias: rand_tensor(&mut r, 1, relations),
            mean_weight: rand_tensor(&mut r, relations, relations),
            mean_bias: rand_tensor(&mut r, 1, relations),
            var_weight: rand_tensor(&mut r, relations, relations),
            var_bias: rand_tensor(&mut r, 1, relations),
        };
        let h = rand_tensor(&mut r, 2, d);
        let mut a = Tensor::zeros(2, 2);
        a.set(0, 1, 1.0);
        let (refined, records) = edge_inference(&h, &a, &[(0, 1)], &head).unwrap();

        let mut g = vec![0.0; relations];
        for (t, gt) in g.iter_mut().enumerate() {
            let mut v = head.feature_bias.get(0, t);
            for k in 0..d {
                v += (h.get(0, k) - h.get(1, k)).abs() * head.feature_weight.get(k, t);
            }
            *gt = v.max(0.0);
        }
        let mut gate = 0.0;
        for t in 0..relations {
            let mut logit = head.relation_bias.get(0, t);
            for (s, gs) in g.iter().enumerate() {
                logit += gs * head.relation_weight.get(s, t);
            }
            gate += 1.0 / (1.0 + (-logit).exp());
        }
        assert!((records[0].gate - gate).abs() < 1e-14);
        assert!((refined.get(0, 1) - gate).abs() < 1e-14);
        assert!(gate > 0.0 && gate < relations as f64);
        assert!((gate_of(&records[0].relation_logits) - gate).abs() < 1e-14);
        assert_eq!(refined.get(1, 0), 0.0);
    }
}

#[test]
fn edge_outside_support_is_rejected() {
    let head = EdgeHead::zeros(2, 2);
    let h = Tensor::zeros(2, 2);
    let a = Tensor::zeros(2, 2);
    assert!(edge_inference(&h, &a, &[(0, 1)], &head).is_err());
}

#[test]
fn refined_support_stays_within_original() {
    let mut r = rng(6);
    for _ in 0..20 {
        let n = r.random_range(1..12);
        let graph = random_graph(&mut r, n, 5);
        let params = ModelParams::init(Architecture::new(5, 3, 4), r.random()).unwrap();
        let out = forward(&graph, &params, Mode::Train { noise_seed: 3 }).unwrap();
        for adj in &out.adjacency {
            let original = match adj.direction {
                ebgcn::model::Direction::TopDown => &graph.a_td,
                ebgcn::model::Direction::BottomUp => &graph.a_bu,
            };
            for (v, o) in adj.matrix.data().iter().zip(original.data()) {
                assert!(*o != 0.0 || *v == 0.0);
            }
        }
    }
}
