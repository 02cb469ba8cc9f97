//! Rewires a share of test edges and compares how much accuracy EBGCN and
//! the gate-free ablation lose.
//!
//! ```text
//! cargo run --release --example robustness -- [seeds]
//! ```

use ebgcn::datagen::{generate, GenConfig};
use ebgcn::eval::{robustness_csv, robustness_experiment, FeatureMode, Fixture, RobustnessConfig};

fn main() -> ebgcn::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let corpus = generate(&GenConfig {
        seed: 7,
        ..GenConfig::default()
    })?;
    let fixture = Fixture::holdout(corpus.dataset, &FeatureMode::Embeddings(corpus.embeddings), 5, 0, 0.1, 7)?;
    let config = RobustnessConfig {
        seeds: (1..=seeds).collect(),
        ..RobustnessConfig::default()
    };
    let report = robustness_experiment(&fixture, &config)?;
    print!("{}", robustness_csv(&report));
    for s in &report.summary {
        println!(
            "rho {:.1}: EBGCN {:.3} (drop {:.3}), ablation {:.3} (drop {:.3})",
            s.rho, s.ebgcn_mean, s.ebgcn_drop, s.ablation_mean, s.ablation_drop
        );
    }
    Ok(())
}
