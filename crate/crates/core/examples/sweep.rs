//! Test accuracy over the number of relation types and the loss weight,
//! with a short training budget per cell.

use ebgcn::datagen::{generate, GenConfig};
use ebgcn::eval::{default_gamma_grid, sweep, sweep_csv, FeatureMode, Fixture};
use ebgcn::train::TrainConfig;

fn main() -> ebgcn::Result<()> {
    let corpus = generate(&GenConfig {
        claims_per_class: 50,
        seed: 7,
        ..GenConfig::default()
    })?;
    let fixture = Fixture::holdout(corpus.dataset, &FeatureMode::Embeddings(corpus.embeddings), 5, 0, 0.1, 7)?;
    let base = TrainConfig {
        max_epochs: 15,
        seed: 1,
        ..TrainConfig::default()
    };
    let cells = sweep(&fixture, &base, &[1, 2, 3, 4, 5], &default_gamma_grid())?;
    print!("{}", sweep_csv(&cells));
    Ok(())
}
