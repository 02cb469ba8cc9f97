//! Trains EBGCN on a generated corpus with a stratified hold-out split and
//! reports per-class test scores.

use ebgcn::datagen::{generate, GenConfig};
use ebgcn::eval::{FeatureMode, Fixture};
use ebgcn::train::{SplitKind, TrainConfig};

fn main() -> ebgcn::Result<()> {
    let corpus = generate(&GenConfig {
        seed: 7,
        ..GenConfig::default()
    })?;
    let fixture = Fixture::holdout(corpus.dataset, &FeatureMode::Embeddings(corpus.embeddings), 5, 0, 0.1, 7)?;
    let config = TrainConfig {
        seed: 1,
        ..TrainConfig::default()
    };
    let outcome = fixture.fit(&config)?;
    for r in outcome.history.validation().step_by(5) {
        println!("epoch {:>3} val L_c {:.4} L_e {:.4} acc {:.3}", r.epoch, r.l_c, r.l_e, r.acc);
    }
    let last_train = outcome.history.records.iter().rfind(|r| r.split == SplitKind::Train).unwrap();
    println!("stopped after {} epochs, best {}; final train acc {:.3}", outcome.epochs_run, outcome.best_epoch, last_train.acc);

    let test = fixture.evaluate(&outcome.best, &fixture.test_claims(), 1)?;
    println!("test accuracy {:.3}, macro-F1 {:.3}", test.accuracy, test.macro_f1);
    for (name, f1) in test.labels.iter().zip(&test.f1) {
        println!("  {name:<3} F1 {f1:.3}");
    }
    Ok(())
}
