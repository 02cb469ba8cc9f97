//! Compares tape gradients of the full training objective with central
//! differences on one 8-node cascade, with sampling noise held fixed.

use ebgcn::cascade::build_graph;
use ebgcn::datagen::{generate, GenConfig};
use ebgcn::gradcheck::finite_difference_check;
use ebgcn::model::{Architecture, Mode, ModelParams};
use ebgcn::objective::claim_objective;

fn main() -> ebgcn::Result<()> {
    let corpus = generate(&GenConfig {
        claims_per_class: 1,
        min_nodes: 8,
        max_nodes: 8,
        seed: 3,
        ..GenConfig::default()
    })?;
    let claim = &corpus.dataset.claims[0];
    let graph = build_graph(claim, &corpus.embeddings.features_for(std::slice::from_ref(claim)).0[0])?;
    let params = ModelParams::init(Architecture::new(graph.feature_dim(), 3, 4), 1)?;

    let report = finite_difference_check(
        &params.store,
        |tape, vars| {
            let obj = claim_objective(tape, vars, &params, &graph, claim.label.index(), 0.3, Mode::Train { noise_seed: 9 })?;
            Ok(obj.total)
        },
        1e-5,
        1e-4,
    )?;
    for t in &report.tensors {
        println!("{:<24} {:>6} entries  max rel err {:.2e}", t.name, t.entries, t.max_rel_error);
    }
    println!("{}", if report.passed { "gradients agree" } else { "gradient mismatch" });
    Ok(())
}
