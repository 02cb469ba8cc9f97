//! Trains briefly, then dumps the learned edge gates of a few test cascades
//! and compares the weight given to off-topic replies with the rest.

use ebgcn::cascade::build_graph;
use ebgcn::datagen::{generate, GenConfig};
use ebgcn::eval::{FeatureMode, Fixture};
use ebgcn::model::{edge_weight_dump, forward, Mode};
use ebgcn::train::TrainConfig;

fn main() -> ebgcn::Result<()> {
    let corpus = generate(&GenConfig {
        claims_per_class: 40,
        irrelevant_rate: 0.2,
        seed: 11,
        ..GenConfig::default()
    })?;
    let irrelevant = corpus.irrelevant.clone();
    let fixture = Fixture::holdout(corpus.dataset, &FeatureMode::Embeddings(corpus.embeddings), 5, 0, 0.1, 11)?;
    let outcome = fixture.fit(&TrainConfig {
        max_epochs: 40,
        seed: 1,
        ..TrainConfig::default()
    })?;

    let (mut on, mut off) = (Vec::new(), Vec::new());
    for &idx in &fixture.test {
        let claim = &fixture.dataset.claims[idx];
        let graph = build_graph(claim, &fixture.features.features(claim))?;
        let out = forward(&graph, &outcome.best, Mode::Eval)?;
        if idx == fixture.test[0] {
            edge_weight_dump(&claim.id, &out).lines().take(8).for_each(|l| println!("{l}"));
        }
        for rec in out.edges.iter().filter(|r| r.layer == 1) {
            let child = match rec.direction {
                ebgcn::model::Direction::TopDown => rec.edge.1,
                ebgcn::model::Direction::BottomUp => rec.edge.0,
            };
            if irrelevant[idx][child] { &mut off } else { &mut on }.push(rec.gate);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!("mean layer-1 gate: on-topic {:.4} ({} edges), off-topic {:.4} ({} edges)", mean(&on), on.len(), mean(&off), off.len());
    Ok(())
}
