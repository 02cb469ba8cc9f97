//! Accuracy of a trained model when only the beginning of each cascade is
//! visible, by tweet count, elapsed minutes and share of tweets.

use ebgcn::datagen::{generate, GenConfig};
use ebgcn::eval::{early_detection_curve, parse_budgets, FeatureMode, Fixture};
use ebgcn::train::TrainConfig;

fn main() -> ebgcn::Result<()> {
    let corpus = generate(&GenConfig {
        seed: 7,
        ..GenConfig::default()
    })?;
    let fixture = Fixture::holdout(corpus.dataset, &FeatureMode::Embeddings(corpus.embeddings), 5, 0, 0.1, 7)?;
    let outcome = fixture.fit(&TrainConfig {
        seed: 1,
        ..TrainConfig::default()
    })?;
    let budgets = parse_budgets("1,2,4,8,10m,30m,120m,25%,50%,inf")?;
    let curve = early_detection_curve(
        &outcome.best,
        &fixture.test_claims(),
        &fixture.features,
        &fixture.dataset.label_set,
        &budgets,
        1,
    )?;
    for p in &curve {
        println!("{:>6}  {:>5.1} nodes  acc {:.3}", p.budget.to_string(), p.mean_nodes, p.metrics.accuracy);
    }
    Ok(())
}
