//! Training objective: supervised cross-entropy, the edge-wise consistency
//! term and their trade-off.
//!
//! The consistency term compares, for every edge of every block, the relation
//! likelihood `p = softmax(r)` with `q̃ = softmax(z)` where `z` is a
//! reparameterized draw from the Gaussian posterior over relation logits:
//! `KL(p ‖ q̃) = Σ_t p_t (ln p_t − ln q̃_t)`, logs floored at `1e-12`. A claim's
//! term is the mean over its edge records (zero without edges); a batch takes
//! the mean over claims.

use serde::Serialize;

use crate::cascade::PropagationGraph;
use crate::error::{Error, Result};
use crate::model::{forward_on_tape, EdgeRecord, ForwardVars, ModelParams, Mode};
use crate::tape::{Tape, Var};
use crate::tensor::{floored_ln, softmax, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub l_c: f64,
    pub l_e: f64,
    pub total: f64,
    pub gamma: f64,
}

pub fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Config(format!("gamma must lie in [0, 1], got {gamma}")))
    }
}

/// Mean of `-ln ŷ[y]` over a batch.
pub fn cross_entropy(probs: &[Vec<f64>], golds: &[usize]) -> Result<f64> {
    if probs.len() != golds.len() || probs.is_empty() {
        return Err(Error::shape(
            "cross_entropy",
            format!("{} predictions for {} labels", probs.len(), golds.len()),
        ));
    }
    let mut total = 0.0;
    for (p, &y) in probs.iter().zip(golds) {
        let py = *p
            .get(y)
            .ok_or_else(|| Error::Config(format!("class index {y} outside {} classes", p.len())))?;
        total -= floored_ln(py);
    }
    Ok(total / probs.len() as f64)
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pt, &qt)| pt * (floored_ln(pt) - floored_ln(qt)))
        .sum()
}

/// Mean `KL(p ‖ softmax(sample))` over edge records; 0 for none.
pub fn consistency_loss(records: &[EdgeRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let sum: f64 = records
        .iter()
        .map(|r| kl_divergence(&r.likelihood, &softmax(&r.sample)))
        .sum();
    sum / records.len() as f64
}

pub fn total_loss(l_c: f64, l_e: f64, gamma: f64) -> Result<LossBreakdown> {
    check_gamma(gamma)?;
    Ok(LossBreakdown {
        l_c,
        l_e,
        total: gamma * l_c + (1.0 - gamma) * l_e,
        gamma,
    })
}

/// Tape handles of one claim's objective.
#[derive(Debug, Clone)]
pub struct ClaimObjective {
    pub forward: ForwardVars,
    pub l_c: Var,
    pub l_e: Option<Var>,
    pub total: Var,
}

/// Mean KL over all recorded edges, on the tape.
pub fn consistency_on_tape(tape: &mut Tape, forward: &ForwardVars) -> Result<Option<Var>> {
    let mut acc: Option<Var> = None;
    let mut count = 0usize;
    for ev in &forward.edges {
        let log_p = tape.log(ev.likelihood)?;
        let log_q = tape.log(ev.posterior)?;
        let diff = tape.sub(log_p, log_q)?;
        let weighted = tape.mul(ev.likelihood, diff)?;
        let s = tape.sum(weighted)?;
        acc = Some(match acc {
            None => s,
            Some(a) => tape.add(a, s)?,
        });
        count += ev.pairs.len();
    }
    match acc {
        None => Ok(None),
        Some(a) => Ok(Some(tape.scale(a, 1.0 / count as f64)?)),
    }
}

/// Records forward pass and `γ L_c + (1 − γ) L_e` for one labeled graph.
pub fn claim_objective(
    tape: &mut Tape,
    vars: &[Var],
    params: &ModelParams,
    graph: &PropagationGraph,
    label: usize,
    gamma: f64,
    mode: Mode,
) -> Result<ClaimObjective> {
    check_gamma(gamma)?;
    let classes = params.arch.classes;
    if label >= classes {
        return Err(Error::Config(format!("class index {label} outside {classes} classes")));
    }
    let forward = forward_on_tape(tape, vars, params, graph, mode)?;
    let mut onehot = Tensor::zeros(1, classes);
    onehot.set(0, label, -1.0);
    let onehot = tape.leaf(onehot);
    let log_probs = tape.log(forward.probs)?;
    let picked = tape.mul(log_probs, onehot)?;
    let l_c = tape.sum(picked)?;
    let l_e = consistency_on_tape(tape, &forward)?;
    let total = match l_e {
        Some(le) if gamma < 1.0 => {
            let a = tape.scale(l_c, gamma)?;
            let b = tape.scale(le, 1.0 - gamma)?;
            tape.add(a, b)?
        }
        _ => tape.scale(l_c, gamma)?,
    };
    Ok(ClaimObjective {
        forward,
        l_c,
        l_e,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[vec![0.0, 1.0]], &[1]).unwrap(), 0.0);
        let u = cross_entropy(&[vec![0.25; 4]], &[2]).unwrap();
        assert!((u - 4f64.ln()).abs() < 1e-15);
        let b = cross_entropy(&[vec![0.5, 0.5], vec![0.25, 0.75]], &[0, 0]).unwrap();
        assert!((b - (2f64.ln() + 4f64.ln()) / 2.0).abs() < 1e-15);
        assert!(cross_entropy(&[vec![0.5, 0.5]], &[2]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(2.0, 1.0, 1.0).unwrap().total, 2.0);
        assert_eq!(total_loss(2.0, 1.0, 0.0).unwrap().total, 1.0);
        assert!((total_loss(2.0, 1.0, 0.3).unwrap().total - 1.3).abs() < 1e-15);
        assert!(total_loss(2.0, 1.0, 1.5).is_err());
        assert!(total_loss(2.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn zero_edge_claims_contribute_nothing() {
        assert_eq!(consistency_loss(&[]), 0.0);
    }

    #[test]
    fn tape_objective_matches_values_and_gradients() {
        use crate::gradcheck::finite_difference_check;
        use crate::model::{forward, Architecture};
        let n = 6;
        let mut a = Tensor::zeros(n, n);
        for (p, c) in [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)] {
            a.set(p, c, 1.0);
        }
        let x = Tensor::from_vec(n, 3, (0..n * 3).map(|k| (k as f64 * 1.7).sin()).collect()).unwrap();
        let graph = PropagationGraph::from_adjacency(x, a).unwrap();
        let mut arch = Architecture::new(3, 3, 4);
        arch.hidden = 5;
        let params = ModelParams::init(arch, 11).unwrap();
        let mode = Mode::Train { noise_seed: 5 };

        let out = forward(&graph, &params, mode).unwrap();
        let l_c = cross_entropy(&[out.probs.clone()], &[2]).unwrap();
        let l_e = consistency_loss(&out.edges);
        let expected = total_loss(l_c, l_e, 0.3).unwrap().total;
        let mut tape = Tape::new();
        let vars = params.store.bind(&mut tape);
        let obj = claim_objective(&mut tape, &vars, &params, &graph, 2, 0.3, mode).unwrap();
        assert!((tape.value(obj.total).item().unwrap() - expected).abs() < 1e-12);

        let report = finite_difference_check(
            &params.store,
            |tape, vars| Ok(claim_objective(tape, vars, &params, &graph, 2, 0.3, mode)?.total),
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.passed, "{report:#?}");
    }
}
