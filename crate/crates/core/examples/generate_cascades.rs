//! Generates a synthetic corpus and prints a few cascades.
//!
//! ```text
//! cargo run --example generate_cascades -- [out_dir]
//! ```

use ebgcn::datagen::{generate, GenConfig};
use ebgcn::io::write_claims;

fn main() -> ebgcn::Result<()> {
    let config = GenConfig {
        claims_per_class: 10,
        seed: 7,
        ..GenConfig::default()
    };
    let corpus = generate(&config)?;
    let dataset = &corpus.dataset;
    for claim in dataset.claims.iter().take(4) {
        let depth = claim.edges.iter().fold(vec![0usize; claim.num_nodes()], |mut d, e| {
            d[e.child] = d[e.parent] + 1;
            d
        });
        println!(
            "{} label={} nodes={} depth={} last post at {:.1} min",
            claim.id,
            dataset.label_set.name(claim.label),
            claim.num_nodes(),
            depth.iter().max().unwrap_or(&0),
            claim.nodes.iter().map(|n| n.time).fold(0.0, f64::max),
        );
        println!("  source: {}", claim.nodes[0].text);
    }
    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir).map_err(|e| ebgcn::Error::Config(e.to_string()))?;
        write_claims(dataset, format!("{dir}/claims.jsonl"))?;
        corpus.embeddings.write_for(&dataset.claims, format!("{dir}/embeddings.tsv"))?;
        println!("wrote {} claims to {dir}", dataset.len());
    }
    Ok(())
}
