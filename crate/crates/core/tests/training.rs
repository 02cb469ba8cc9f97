mod common;

use common::{random_graph, rng};
use ebgcn::cascade::PropagationGraph;
use ebgcn::tensor::Tensor;
use ebgcn::train::{fit, fit_with_checkpoint, Checkpoint, Precision, Sample, SplitKind, TrainConfig};

fn toy_pair() -> Vec<Sample> {
    let mut a = Tensor::zeros(3, 3);
    a.set(0, 1, 1.0);
    a.set(0, 2, 1.0);
    let x0 = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.8, 0.0]]).unwrap();
    let x1 = Tensor::from_rows(&[vec![0.0, 1.0], vec![0.1, 0.9], vec![0.0, 0.8]]).unwrap();
    vec![
        Sample {
            graph: PropagationGraph::from_adjacency(x0, a.clone()).unwrap(),
            label: 0,
        },
        Sample {
            graph: PropagationGraph::from_adjacency(x1, a).unwrap(),
            label: 1,
        },
    ]
}

fn random_samples(seed: u64, count: usize) -> Vec<Sample> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let mut graph = random_graph(&mut r, 2 + i % 7, 6);
            let label = i % 4;
            for v in 0..graph.num_nodes() {
                let x = graph.x.get(v, label) + 1.5;
                graph.x.set(v, label, x);
            }
            Sample { graph, label }
        })
        .collect()
}

#[test]
fn separable_pair_is_memorized_with_gamma_one() {
    let samples = toy_pair();
    let config = TrainConfig {
        gamma: 1.0,
        max_epochs: 200,
        patience: 200,
        seed: 3,
        ..TrainConfig::default()
    };
    let outcome = fit(&samples, &samples, &config).unwrap();
    let last = outcome
        .history
        .records
        .iter()
        .rfind(|r| r.split == SplitKind::Train)
        .unwrap();
    assert_eq!(outcome.epochs_run, 200);
    assert!(last.total < 0.05, "final training loss {}", last.total);
    assert_eq!(last.acc, 1.0);
}

#[test]
fn identical_runs_are_bitwise_identical_across_thread_counts() {
    let train = random_samples(1, 40);
    let val = random_samples(2, 12);
    let config = TrainConfig {
        max_epochs: 6,
        batch_size: 8,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = fit(&train, &val, &config).unwrap();
    let b = fit(&train, &val, &config).unwrap();
    let c = fit(&train, &val, &TrainConfig { threads: 3, ..config.clone() }).unwrap();
    assert_eq!(a.history.to_csv(), b.history.to_csv());
    assert_eq!(a.checkpoint().to_bytes(), b.checkpoint().to_bytes());
    assert_eq!(a.checkpoint().to_bytes(), c.checkpoint().to_bytes());
    assert_eq!(a.history, c.history);
}

#[test]
fn single_precision_keeps_f32_parameters() {
    let train = random_samples(3, 16);
    let config = TrainConfig {
        max_epochs: 3,
        seed: 1,
        precision: Precision::Single,
        ..TrainConfig::default()
    };
    let outcome = fit(&train, &train, &config).unwrap();
    for (_, t) in outcome.best.store.iter() {
        assert!(t.data().iter().all(|&v| v as f32 as f64 == v));
    }
}

#[test]
fn best_checkpoint_is_written_during_training() {
    let train = random_samples(4, 16);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.bin");
    let config = TrainConfig {
        max_epochs: 4,
        seed: 2,
        ..TrainConfig::default()
    };
    let outcome = fit_with_checkpoint(&train, &train, &config, Some(&path)).unwrap();
    let saved = Checkpoint::load(&path).unwrap();
    assert_eq!(saved, outcome.checkpoint());
}

#[test]
fn ablation_trains_without_edge_parameters() {
    let train = random_samples(5, 16);
    let config = TrainConfig {
        max_epochs: 2,
        seed: 2,
        ..TrainConfig::default()
    }
    .ablation();
    let outcome = fit(&train, &train, &config).unwrap();
    assert!(outcome.best.store.iter().all(|(name, _)| !name.starts_with("edge")));
    assert!(outcome.history.records.iter().all(|r| r.l_e == 0.0));
}
