//! Five-fold cross-validation and leave-one-event-out evaluation with TF-IDF
//! features on a small generated corpus.

use ebgcn::datagen::{generate, GenConfig};
use ebgcn::eval::{cross_validate, kfold_splits, loeo_splits, mean_report, FeatureMode};
use ebgcn::train::TrainConfig;

fn main() -> ebgcn::Result<()> {
    let corpus = generate(&GenConfig {
        claims_per_class: 30,
        num_events: 3,
        seed: 2,
        ..GenConfig::default()
    })?;
    let dataset = corpus.dataset;
    let config = TrainConfig {
        max_epochs: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let mode = FeatureMode::Tfidf { max_terms: 500 };

    let folds = kfold_splits(&dataset.labels(), 5, 1)?;
    let reports = cross_validate(&dataset, &mode, &folds, &config, 0.1)?;
    for (k, r) in reports.iter().enumerate() {
        println!("fold {k}: acc {:.3} macro-F1 {:.3}", r.accuracy, r.macro_f1);
    }
    let mean = mean_report(&reports).unwrap();
    println!("5-fold mean: acc {:.3} macro-F1 {:.3}", mean.accuracy, mean.macro_f1);

    let events = loeo_splits(&dataset)?;
    let splits: Vec<_> = events.iter().map(|(_, s)| s.clone()).collect();
    let reports = cross_validate(&dataset, &mode, &splits, &config, 0.1)?;
    for ((event, _), r) in events.iter().zip(&reports) {
        println!("held-out {event}: acc {:.3}", r.accuracy);
    }
    Ok(())
}
