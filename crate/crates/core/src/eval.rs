//! Metrics, data splits, early detection curves, the edge-noise robustness
//! experiment and the `T × γ` sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{build_graph, truncate_claim, Claim, Dataset, Label, LabelSet, TruncationPolicy};
use crate::datagen::perturb_claims;
use crate::error::{Error, Result};
use crate::features::{fit_vocabulary, EmbeddingTable, FeatureSource, DEFAULT_VOCAB_SIZE};
use crate::model::{forward, ModelParams, Mode};
use crate::seed;
use crate::train::{fit, with_threads, FitOutcome, Sample, TrainConfig};

const FOLD_STREAM: u64 = 0x464f;
const VALIDATION_STREAM: u64 = 0x5641;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub f1: Vec<f64>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub support: Vec<usize>,
    pub labels: Vec<String>,
}

pub fn compute_metrics(predictions: &[Label], golds: &[Label], label_set: &LabelSet) -> Result<MetricReport> {
    if predictions.len() != golds.len() || golds.is_empty() {
        return Err(Error::shape(
            "compute_metrics",
            format!("{} predictions for {} golds", predictions.len(), golds.len()),
        ));
    }
    let k = label_set.len();
    if let Some(bad) = predictions.iter().chain(golds).find(|l| !label_set.contains(**l)) {
        return Err(Error::Config(format!("label index {} outside the label set", bad.index())));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for (p, g) in predictions.iter().zip(golds) {
        confusion[g.index()][p.index()] += 1;
    }
    let total = golds.len();
    let support: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
    let f1: Vec<f64> = (0..k)
        .map(|c| {
            let tp = confusion[c][c] as f64;
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            if tp == 0.0 {
                return 0.0;
            }
            let precision = tp / predicted as f64;
            let recall = tp / support[c] as f64;
            2.0 * precision * recall / (precision + recall)
        })
        .collect();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    Ok(MetricReport {
        accuracy: correct as f64 / total as f64,
        macro_f1: f1.iter().sum::<f64>() / k as f64,
        weighted_f1: f1
            .iter()
            .zip(&support)
            .map(|(f, &s)| s as f64 / total as f64 * f)
            .sum(),
        f1,
        confusion,
        support,
        labels: label_set.names().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified folds: each class is shuffled, then all claims are dealt to
/// folds round-robin, class after class.
pub fn kfold_splits(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Split>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!("{k} folds requested for {} claims", labels.len())));
    }
    let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(*l).or_default().push(i);
    }
    let mut fold_of = vec![0usize; labels.len()];
    let mut counter = 0usize;
    for (label, members) in by_class.iter_mut() {
        let mut rng = seed::rng(seed, &[FOLD_STREAM, label.index() as u64]);
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = counter % k;
            counter += 1;
        }
    }
    Ok((0..k)
        .map(|f| Split {
            train: (0..labels.len()).filter(|&i| fold_of[i] != f).collect(),
            test: (0..labels.len()).filter(|&i| fold_of[i] == f).collect(),
        })
        .collect())
}

/// One split per event, in order of first appearance.
pub fn loeo_splits(dataset: &Dataset) -> Result<Vec<(String, Split)>> {
    let mut events: Vec<&str> = Vec::new();
    for c in &dataset.claims {
        let e = c
            .event
            .as_deref()
            .ok_or_else(|| Error::invalid(&c.id, "claim has no event tag"))?;
        if !events.contains(&e) {
            events.push(e);
        }
    }
    if events.len() < 2 {
        return Err(Error::Config("leave-one-event-out needs at least two events".into()));
    }
    Ok(events
        .iter()
        .map(|&e| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..dataset.len()).partition(|&i| dataset.claims[i].event.as_deref() == Some(e));
            (e.to_string(), Split { train, test })
        })
        .collect())
}

/// Moves about `fraction` of each class of `train` into a validation set.
/// Classes with a single member stay in training.
pub fn validation_split(train: &[usize], labels: &[Label], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("validation fraction must lie in (0, 1), got {fraction}")));
    }
    let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for &i in train {
        by_class.entry(labels[i]).or_default().push(i);
    }
    let mut keep = Vec::new();
    let mut held = Vec::new();
    for (label, mut members) in by_class {
        let mut rng = seed::rng(seed, &[VALIDATION_STREAM, label.index() as u64]);
        members.shuffle(&mut rng);
        let take = ((members.len() as f64 * fraction).ceil() as usize).min(members.len() - 1);
        held.extend_from_slice(&members[..take]);
        keep.extend_from_slice(&members[take..]);
    }
    keep.sort_unstable();
    held.sort_unstable();
    if held.is_empty() {
        return Err(Error::Config("training split too small to hold out validation claims".into()));
    }
    Ok((keep, held))
}

/// How node features are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMode {
    /// TF-IDF over a vocabulary fitted on the training claims.
    Tfidf { max_terms: usize },
    Embeddings(EmbeddingTable),
}

impl FeatureMode {
    pub fn tfidf() -> Self {
        FeatureMode::Tfidf {
            max_terms: DEFAULT_VOCAB_SIZE,
        }
    }

    /// Freezes the feature source, looking only at `train_claims`.
    pub fn fit(&self, train_claims: &[Claim]) -> Result<FeatureSource> {
        match self {
            FeatureMode::Tfidf { max_terms } => Ok(FeatureSource::Tfidf(fit_vocabulary(train_claims, *max_terms)?)),
            FeatureMode::Embeddings(t) => Ok(FeatureSource::Embeddings(t.clone())),
        }
    }
}

pub fn make_samples(claims: &[Claim], source: &FeatureSource) -> Result<Vec<Sample>> {
    claims
        .iter()
        .map(|c| {
            Ok(Sample {
                graph: build_graph(c, &source.features(c))?,
                label: c.label.index(),
            })
        })
        .collect()
}

/// Eval-mode predicted class of every claim.
pub fn predict_claims(params: &ModelParams, claims: &[Claim], source: &FeatureSource, threads: usize) -> Result<Vec<Label>> {
    let one = |c: &Claim| -> Result<Label> {
        let graph = build_graph(c, &source.features(c))?;
        Ok(Label(forward(&graph, params, Mode::Eval)?.predicted()))
    };
    with_threads(threads, || {
        if threads > 1 {
            claims.par_iter().map(one).collect()
        } else {
            claims.iter().map(one).collect()
        }
    })?
}

pub fn evaluate_claims(
    params: &ModelParams,
    claims: &[Claim],
    source: &FeatureSource,
    label_set: &LabelSet,
    threads: usize,
) -> Result<MetricReport> {
    let predictions = predict_claims(params, claims, source, threads)?;
    let golds: Vec<Label> = claims.iter().map(|c| c.label).collect();
    compute_metrics(&predictions, &golds, label_set)
}

/// A dataset with frozen features and fixed train/validation/test indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub dataset: Dataset,
    pub features: FeatureSource,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fixture {
    /// Carves validation claims out of `split.train` and fits features on
    /// what remains for training.
    pub fn from_split(dataset: Dataset, mode: &FeatureMode, split: &Split, val_fraction: f64, seed: u64) -> Result<Self> {
        let labels = dataset.labels();
        let (train, validation) = validation_split(&split.train, &labels, val_fraction, seed)?;
        let features = mode.fit(&dataset.subset(&train))?;
        Ok(Fixture {
            dataset,
            features,
            train,
            validation,
            test: split.test.clone(),
        })
    }

    /// Uses fold `fold` of a stratified `folds`-way partition as the test set.
    pub fn holdout(dataset: Dataset, mode: &FeatureMode, folds: usize, fold: usize, val_fraction: f64, seed: u64) -> Result<Self> {
        let splits = kfold_splits(&dataset.labels(), folds, seed)?;
        let split = splits
            .get(fold)
            .ok_or_else(|| Error::Config(format!("fold {fold} outside {folds} folds")))?
            .clone();
        Fixture::from_split(dataset, mode, &split, val_fraction, seed)
    }

    pub fn claims(&self, indices: &[usize]) -> Vec<Claim> {
        self.dataset.subset(indices)
    }

    pub fn test_claims(&self) -> Vec<Claim> {
        self.claims(&self.test)
    }

    pub fn samples(&self, indices: &[usize]) -> Result<Vec<Sample>> {
        make_samples(&self.claims(indices), &self.features)
    }

    pub fn fit(&self, config: &TrainConfig) -> Result<FitOutcome> {
        fit(&self.samples(&self.train)?, &self.samples(&self.validation)?, config)
    }

    pub fn evaluate(&self, params: &ModelParams, claims: &[Claim], threads: usize) -> Result<MetricReport> {
        evaluate_claims(params, claims, &self.features, &self.dataset.label_set, threads)
    }
}

/// Cross-validated test metrics, one report per split.
pub fn cross_validate(
    dataset: &Dataset,
    mode: &FeatureMode,
    splits: &[Split],
    config: &TrainConfig,
    val_fraction: f64,
) -> Result<Vec<MetricReport>> {
    splits
        .iter()
        .map(|split| {
            let fixture = Fixture::from_split(dataset.clone(), mode, split, val_fraction, config.seed)?;
            let outcome = fixture.fit(config)?;
            fixture.evaluate(&outcome.best, &fixture.test_claims(), config.threads)
        })
        .collect()
}

/// Element-wise mean of several reports; the confusion matrices are summed.
pub fn mean_report(reports: &[MetricReport]) -> Option<MetricReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let k = first.f1.len();
    let mut out = first.clone();
    out.accuracy = reports.iter().map(|r| r.accuracy).sum::<f64>() / n;
    out.macro_f1 = reports.iter().map(|r| r.macro_f1).sum::<f64>() / n;
    out.weighted_f1 = reports.iter().map(|r| r.weighted_f1).sum::<f64>() / n;
    out.f1 = (0..k).map(|c| reports.iter().map(|r| r.f1[c]).sum::<f64>() / n).collect();
    for r in &reports[1..] {
        for (row, other) in out.confusion.iter_mut().zip(&r.confusion) {
            for (a, b) in row.iter_mut().zip(other) {
                *a += b;
            }
        }
        for (a, b) in out.support.iter_mut().zip(&r.support) {
            *a += b;
        }
    }
    Some(out)
}

/// How much of each cascade is visible to the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Full,
    /// Minutes since the source tweet.
    Deadline(f64),
    MaxTweets(usize),
    /// Share of each claim's tweets, rounded up.
    Fraction(f64),
}

impl Budget {
    pub fn apply(&self, claim: &Claim) -> Claim {
        match *self {
            Budget::Full => claim.clone(),
            Budget::Deadline(m) => truncate_claim(claim, TruncationPolicy::Deadline(m)),
            Budget::MaxTweets(k) => truncate_claim(claim, TruncationPolicy::MaxTweets(k)),
            Budget::Fraction(f) => {
                let k = ((f * claim.num_nodes() as f64).ceil() as usize).max(1);
                truncate_claim(claim, TruncationPolicy::MaxTweets(k))
            }
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Full => write!(f, "inf"),
            Budget::Deadline(m) => write!(f, "{m}m"),
            Budget::MaxTweets(k) => write!(f, "{k}"),
            Budget::Fraction(x) => write!(f, "{}%", x * 100.0),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    /// `inf`, `30m` (minutes), `25%` (share of tweets) or `12` (tweets).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse budget {s:?}"));
        if matches!(s, "inf" | "∞" | "full") {
            return Ok(Budget::Full);
        }
        if let Some(m) = s.strip_suffix("min").or_else(|| s.strip_suffix('m')) {
            let m: f64 = m.trim().parse().map_err(|_| bad())?;
            return if m >= 0.0 && m.is_finite() { Ok(Budget::Deadline(m)) } else { Err(bad()) };
        }
        if let Some(p) = s.strip_suffix('%') {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            return if p > 0.0 && p <= 100.0 { Ok(Budget::Fraction(p / 100.0)) } else { Err(bad()) };
        }
        let k: usize = s.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(Budget::MaxTweets(k))
    }
}

pub fn parse_budgets(list: &str) -> Result<Vec<Budget>> {
    let budgets: Vec<Budget> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if budgets.is_empty() {
        return Err(Error::Config("budget list is empty".into()));
    }
    Ok(budgets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub budget: Budget,
    pub mean_nodes: f64,
    pub metrics: MetricReport,
}

/// Metrics of `params` on `claims` truncated at every budget.
pub fn early_detection_curve(
    params: &ModelParams,
    claims: &[Claim],
    source: &FeatureSource,
    label_set: &LabelSet,
    budgets: &[Budget],
    threads: usize,
) -> Result<Vec<CurvePoint>> {
    if budgets.is_empty() {
        return Err(Error::Config("at least one budget is required".into()));
    }
    budgets
        .iter()
        .map(|b| {
            let truncated: Vec<Claim> = claims.iter().map(|c| b.apply(c)).collect();
            let mean_nodes = truncated.iter().map(|c| c.num_nodes() as f64).sum::<f64>() / truncated.len().max(1) as f64;
            Ok(CurvePoint {
                budget: *b,
                mean_nodes,
                metrics: evaluate_claims(params, &truncated, source, label_set, threads)?,
            })
        })
        .collect()
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("budget,mean_nodes,accuracy,macro_f1,weighted_f1\n");
    for p in points {
        writeln!(
            out,
            "{},{:.4},{:.6},{:.6},{:.6}",
            p.budget, p.mean_nodes, p.metrics.accuracy, p.metrics.macro_f1, p.metrics.weighted_f1
        )
        .expect("string write");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessConfig {
    pub train: TrainConfig,
    pub rhos: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            train: TrainConfig::default(),
            rhos: vec![0.0, 0.1, 0.2, 0.3],
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub seed: u64,
    pub rho: f64,
    pub ebgcn: f64,
    pub ablation: f64,
    /// Share of test edges actually rewired.
    pub rewired: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessSummary {
    pub rho: f64,
    pub ebgcn_mean: f64,
    pub ablation_mean: f64,
    /// Mean accuracy lost relative to the same seed's clean score.
    pub ebgcn_drop: f64,
    pub ablation_drop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub rows: Vec<RobustnessRow>,
    pub summary: Vec<RobustnessSummary>,
    /// Best EBGCN parameters per seed, in seed order.
    pub ebgcn_models: Vec<ModelParams>,
}

/// Trains EBGCN and the gate-free `γ = 1` ablation on clean training data
/// for every seed and scores both on the test claims with edges rewired at
/// every `ρ`. The perturbation for a seed is shared by both models.
pub fn robustness_experiment(fixture: &Fixture, config: &RobustnessConfig) -> Result<RobustnessReport> {
    if config.seeds.is_empty() || config.rhos.is_empty() {
        return Err(Error::Config("robustness needs at least one seed and one rho".into()));
    }
    let test = fixture.test_claims();
    let mut rows = Vec::new();
    let mut models = Vec::new();
    for &s in &config.seeds {
        let ebgcn_config = TrainConfig {
            seed: s,
            ..config.train.clone()
        };
        let ebgcn = fixture.fit(&ebgcn_config)?.best;
        let ablation = fixture.fit(&ebgcn_config.ablation())?.best;
        for &rho in &config.rhos {
            let (noisy, stats) = perturb_claims(&test, rho, s);
            rows.push(RobustnessRow {
                seed: s,
                rho,
                ebgcn: fixture.evaluate(&ebgcn, &noisy, config.train.threads)?.accuracy,
                ablation: fixture.evaluate(&ablation, &noisy, config.train.threads)?.accuracy,
                rewired: stats.rewired as f64 / stats.edges.max(1) as f64,
            });
        }
        models.push(ebgcn);
    }
    let clean = |seed: u64| {
        rows.iter()
            .find(|r| r.seed == seed && r.rho == config.rhos[0])
            .copied()
            .expect("first rho row")
    };
    let summary = config
        .rhos
        .iter()
        .map(|&rho| {
            let at: Vec<&RobustnessRow> = rows.iter().filter(|r| r.rho == rho).collect();
            let n = at.len() as f64;
            RobustnessSummary {
                rho,
                ebgcn_mean: at.iter().map(|r| r.ebgcn).sum::<f64>() / n,
                ablation_mean: at.iter().map(|r| r.ablation).sum::<f64>() / n,
                ebgcn_drop: at.iter().map(|r| clean(r.seed).ebgcn - r.ebgcn).sum::<f64>() / n,
                ablation_drop: at.iter().map(|r| clean(r.seed).ablation - r.ablation).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(RobustnessReport {
        rows,
        summary,
        ebgcn_models: models,
    })
}

pub fn robustness_csv(report: &RobustnessReport) -> String {
    let mut out = String::from("seed,rho,ebgcn_acc,ablation_acc,rewired\n");
    for r in &report.rows {
        writeln!(out, "{},{},{:.6},{:.6},{:.4}", r.seed, r.rho, r.ebgcn, r.ablation, r.rewired).expect("string write");
    }
    for s in &report.summary {
        writeln!(
            out,
            "mean,{},{:.6},{:.6},",
            s.rho, s.ebgcn_mean, s.ablation_mean
        )
        .expect("string write");
    }
    for s in &report.summary {
        writeln!(out, "drop,{},{:.6},{:.6},", s.rho, s.ebgcn_drop, s.ablation_drop).expect("string write");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub relations: usize,
    pub gamma: f64,
    pub accuracy: Option<f64>,
    pub best_epoch: Option<usize>,
    pub error: Option<String>,
}

pub fn default_gamma_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Test accuracy for every `(T, γ)` pair. A failing cell is recorded with
/// its error instead of aborting the grid.
pub fn sweep(fixture: &Fixture, base: &TrainConfig, relations: &[usize], gammas: &[f64]) -> Result<Vec<SweepCell>> {
    let train = fixture.samples(&fixture.train)?;
    let validation = fixture.samples(&fixture.validation)?;
    let test = fixture.test_claims();
    let mut cells = Vec::with_capacity(relations.len() * gammas.len());
    for &t in relations {
        for &gamma in gammas {
            let config = TrainConfig {
                relations: t,
                gamma,
                ..base.clone()
            };
            let result = fit(&train, &validation, &config)
                .and_then(|o| Ok((fixture.evaluate(&o.best, &test, base.threads)?.accuracy, o.best_epoch)));
            cells.push(match result {
                Ok((acc, epoch)) => SweepCell {
                    relations: t,
                    gamma,
                    accuracy: Some(acc),
                    best_epoch: Some(epoch),
                    error: None,
                },
                Err(e) => SweepCell {
                    relations: t,
                    gamma,
                    accuracy: None,
                    best_epoch: None,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    Ok(cells)
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("T,gamma,accuracy,best_epoch,error\n");
    for c in cells {
        writeln!(
            out,
            "{},{:.1},{},{},{}",
            c.relations,
            c.gamma,
            c.accuracy.map_or(String::new(), |a| format!("{a:.6}")),
            c.best_epoch.map_or(String::new(), |e| e.to_string()),
            c.error.as_deref().unwrap_or("").replace(',', ";")
        )
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[usize]) -> Vec<Label> {
        v.iter().map(|&i| Label(i)).collect()
    }

    #[test]
    fn perfect_predictions() {
        let g = labels(&[0, 1, 2, 3, 0]);
        let r = compute_metrics(&g, &g, &LabelSet::four_class()).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(r.f1.iter().all(|&f| f == 1.0));
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn single_class_predictions() {
        let g = labels(&[0, 0, 1, 1, 2, 2, 3, 3]);
        let p = labels(&[0; 8]);
        let r = compute_metrics(&p, &g, &LabelSet::four_class()).unwrap();
        assert_eq!(r.accuracy, 0.25);
        assert!((r.f1[0] - 0.4).abs() < 1e-15);
        assert_eq!(&r.f1[1..], &[0.0, 0.0, 0.0]);
        assert!(compute_metrics(&labels(&[4]), &labels(&[0]), &LabelSet::four_class()).is_err());
    }

    #[test]
    fn kfold_small() {
        let l = labels(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        let splits = kfold_splits(&l, 5, 3).unwrap();
        let mut all: Vec<usize> = splits.iter().flat_map(|s| s.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(splits.iter().all(|s| s.test.len() == 2 && s.train.len() == 8));
        assert_eq!(splits, kfold_splits(&l, 5, 3).unwrap());
        assert!(kfold_splits(&l, 11, 3).is_err());
    }

    #[test]
    fn budgets_parse() {
        assert_eq!(
            parse_budgets("1, 2,4,inf").unwrap(),
            vec![Budget::MaxTweets(1), Budget::MaxTweets(2), Budget::MaxTweets(4), Budget::Full]
        );
        assert_eq!("30m".parse::<Budget>().unwrap(), Budget::Deadline(30.0));
        assert_eq!("25%".parse::<Budget>().unwrap(), Budget::Fraction(0.25));
        assert!("0".parse::<Budget>().is_err());
        assert!("-3m".parse::<Budget>().is_err());
        assert!(parse_budgets("").is_err());
    }

    #[test]
    fn validation_is_stratified() {
        let l = labels(&(0..40).map(|i| i % 4).collect::<Vec<_>>());
        let train: Vec<usize> = (0..40).collect();
        let (keep, held) = validation_split(&train, &l, 0.1, 1).unwrap();
        assert_eq!(held.len(), 4);
        assert_eq!(keep.len(), 36);
        let mut classes: Vec<usize> = held.iter().map(|&i| l[i].index()).collect();
        classes.sort_unstable();
        assert_eq!(classes, vec![0, 1, 2, 3]);
    }
}
