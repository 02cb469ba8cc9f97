//! Fits a TF-IDF vocabulary on generated training claims and shows the rows
//! it produces for one claim.

use ebgcn::datagen::{generate, GenConfig};
use ebgcn::features::{fit_vocabulary, tfidf_features, tokenize};

fn main() -> ebgcn::Result<()> {
    let corpus = generate(&GenConfig {
        claims_per_class: 20,
        seed: 1,
        ..GenConfig::default()
    })?;
    let claims = &corpus.dataset.claims;
    let (train, test) = claims.split_at(60);
    let vocab = fit_vocabulary(train, 200)?;
    println!("{} terms from {} training documents", vocab.len(), vocab.num_documents());
    for term in vocab.terms().iter().take(5) {
        let col = vocab.column(term).unwrap();
        println!("  {term:<8} df={:<4} idf={:.3}", vocab.document_frequency(term).unwrap(), vocab.idf(col));
    }

    let claim = &test[0];
    let rows = &tfidf_features(&vocab, std::slice::from_ref(claim))[0];
    println!("{}: {} nodes x {} columns", claim.id, rows.rows(), rows.cols());
    for (i, node) in claim.nodes.iter().take(3).enumerate() {
        let nonzero = rows.row(i).iter().filter(|v| **v != 0.0).count();
        let norm = rows.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("  {:?} -> {nonzero} nonzero, norm {norm:.3}", tokenize(&node.text));
    }
    Ok(())
}
