//! The `ebgcn` command line: one TOML key-value config per run, overridable
//! by flags, with every output written under `--out`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cascade::{Dataset, LabelSet};
use crate::datagen::{generate, GenConfig};
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, curve_csv, default_gamma_grid, early_detection_curve, kfold_splits, loeo_splits, mean_report,
    parse_budgets, robustness_csv, robustness_experiment, sweep, sweep_csv, FeatureMode, Fixture, MetricReport,
    RobustnessConfig, Split,
};
use crate::features::{EmbeddingTable, FeatureSource, Vocabulary, DEFAULT_VOCAB_SIZE};
use crate::io::{load_claims, write_claims, Format, LoadOptions};
use crate::train::{fit_with_checkpoint, Checkpoint, Precision, TrainConfig};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const ROBUSTNESS_FILE: &str = "robustness.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const VOCABULARY_FILE: &str = "vocabulary.json";
pub const CLAIMS_FILE: &str = "claims.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Tfidf,
    Embeddings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Holdout,
    Kfold,
    Loeo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Train,
    Validation,
    Test,
    All,
}

/// Every setting of every command. Unset keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: usize,
    pub out: PathBuf,

    pub data: Option<PathBuf>,
    pub format: String,
    pub label_set: String,
    pub strict: bool,
    pub features: FeatureKind,
    pub embeddings: Option<PathBuf>,
    pub max_terms: usize,

    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub gamma: f64,
    #[serde(rename = "T", alias = "relations")]
    pub relations: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub precision: u32,
    pub edge_inference: bool,

    pub protocol: Protocol,
    pub folds: usize,
    pub fold: usize,
    pub val_fraction: f64,

    pub checkpoint: Option<PathBuf>,
    pub eval_split: EvalSplit,
    pub budgets: String,

    pub claims_per_class: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub feature_dim: usize,
    pub snr: f64,
    pub edge_noise: f64,
    pub irrelevant_rate: f64,
    pub num_events: usize,

    pub rhos: Vec<f64>,
    pub robustness_seeds: Vec<u64>,

    pub sweep_t: Vec<usize>,
    pub sweep_gamma: Vec<f64>,
    pub sweep_epochs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let gen = GenConfig::default();
        RunConfig {
            seed: None,
            threads: 1,
            out: PathBuf::from("out"),
            data: None,
            format: "canonical-jsonl".into(),
            label_set: "four".into(),
            strict: true,
            features: FeatureKind::Embeddings,
            embeddings: None,
            max_terms: DEFAULT_VOCAB_SIZE,
            learning_rate: train.learning_rate,
            max_epochs: train.max_epochs,
            patience: train.patience,
            gamma: train.gamma,
            relations: train.relations,
            hidden: train.hidden,
            batch_size: train.batch_size,
            precision: train.precision.bits(),
            edge_inference: true,
            protocol: Protocol::Holdout,
            folds: 5,
            fold: 0,
            val_fraction: 0.1,
            checkpoint: None,
            eval_split: EvalSplit::Test,
            budgets: "1,2,4,8,inf".into(),
            claims_per_class: gen.claims_per_class,
            min_nodes: gen.min_nodes,
            max_nodes: gen.max_nodes,
            feature_dim: gen.feature_dim,
            snr: gen.snr,
            edge_noise: gen.edge_noise,
            irrelevant_rate: gen.irrelevant_rate,
            num_events: gen.num_events,
            rhos: vec![0.0, 0.1, 0.2, 0.3],
            robustness_seeds: vec![1, 2, 3, 4, 5],
            sweep_t: (1..=5).collect(),
            sweep_gamma: default_gamma_grid(),
            sweep_epochs: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(f) = o.features {
            self.features = f;
        }
        if let Some(g) = o.gamma {
            self.gamma = g;
        }
        if let Some(t) = o.relations {
            self.relations = t;
        }
        if let Some(lr) = o.lr {
            self.learning_rate = lr;
        }
        if let Some(b) = &o.budget_list {
            self.budgets = b.clone();
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (config key `seed` or --seed)".into()))
    }

    pub fn label_set(&self) -> Result<LabelSet> {
        match self.label_set.as_str() {
            "four" | "four-class" => Ok(LabelSet::four_class()),
            "three" | "three-class" => Ok(LabelSet::three_class()),
            list => LabelSet::new(list.split(',').map(str::trim).filter(|s| !s.is_empty())),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let config = TrainConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            patience: self.patience,
            gamma: self.gamma,
            relations: self.relations,
            hidden: self.hidden,
            batch_size: self.batch_size,
            seed: self.require_seed()?,
            precision: Precision::from_bits(self.precision)?,
            threads: self.threads,
            edge_inference: self.edge_inference,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn gen_config(&self) -> Result<GenConfig> {
        let config = GenConfig {
            claims_per_class: self.claims_per_class,
            label_set: self.label_set()?,
            min_nodes: self.min_nodes,
            max_nodes: self.max_nodes,
            feature_dim: self.feature_dim,
            snr: self.snr,
            edge_noise: self.edge_noise,
            irrelevant_rate: self.irrelevant_rate,
            num_events: self.num_events,
            profiles: Vec::new(),
            seed: self.require_seed()?,
        };
        config.validate()?;
        Ok(config)
    }

    fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset given (config key `data`)".into()))
    }

    fn embeddings_path(&self) -> Result<PathBuf> {
        if let Some(p) = &self.embeddings {
            return Ok(p.clone());
        }
        let data = self.data_path()?;
        Ok(data.parent().unwrap_or(Path::new(".")).join(EMBEDDINGS_FILE))
    }

    fn feature_mode(&self) -> Result<FeatureMode> {
        match self.features {
            FeatureKind::Tfidf => Ok(FeatureMode::Tfidf {
                max_terms: self.max_terms,
            }),
            FeatureKind::Embeddings => Ok(FeatureMode::Embeddings(EmbeddingTable::load(self.embeddings_path()?)?)),
        }
    }

    fn load_dataset(&self) -> Result<Dataset> {
        let options = LoadOptions {
            format: self.format.parse::<Format>()?,
            label_set: self.label_set()?,
            strict: self.strict,
        };
        let (dataset, report) = load_claims(self.data_path()?, &options)?;
        for (id, reason) in &report.skipped {
            eprintln!("skipped claim {id}: {reason}");
        }
        Ok(dataset)
    }

    fn holdout_split(&self, dataset: &Dataset, seed: u64) -> Result<Split> {
        match self.protocol {
            Protocol::Loeo => {
                let splits = loeo_splits(dataset)?;
                let n = splits.len();
                splits
                    .into_iter()
                    .nth(self.fold)
                    .map(|(_, s)| s)
                    .ok_or_else(|| Error::Config(format!("fold {} outside {n} events", self.fold)))
            }
            Protocol::Holdout | Protocol::Kfold => {
                let splits = kfold_splits(&dataset.labels(), self.folds, seed)?;
                splits
                    .get(self.fold)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("fold {} outside {} folds", self.fold, self.folds)))
            }
        }
    }

    fn fixture(&self) -> Result<Fixture> {
        let seed = self.require_seed()?;
        let dataset = self.load_dataset()?;
        let split = self.holdout_split(&dataset, seed)?;
        Fixture::from_split(dataset, &self.feature_mode()?, &split, self.val_fraction, seed)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML key-value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub features: Option<FeatureKind>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Number of latent relation types.
    #[arg(long = "T", global = true)]
    pub relations: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    /// Comma-separated budgets: tweet counts, `30m` deadlines, `25%` shares or `inf`.
    #[arg(long, global = true)]
    pub budget_list: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvertFrom {
    MaTree,
    Canonical,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cascade corpus.
    Generate,
    /// Train a model and write its checkpoint and history.
    Train,
    /// Score a checkpoint on a split.
    Evaluate,
    /// Score a checkpoint on truncated cascades.
    EarlyDetect,
    /// Compare EBGCN with the gate-free ablation under edge noise.
    Robustness,
    /// Test accuracy over the T × gamma grid.
    Sweep,
    /// Convert a dataset to canonical JSONL.
    Convert {
        /// Ma-tree directory or canonical JSONL file.
        input: PathBuf,
        #[arg(long, value_enum, default_value = "ma-tree")]
        from: ConvertFrom,
        /// Skip invalid claims instead of failing.
        #[arg(long)]
        lenient: bool,
    },
}

#[derive(Debug, Parser)]
#[command(name = "ebgcn", version, about = "Edge-enhanced Bayesian GCN for rumor cascades")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn resolve_config(overrides: &Overrides) -> Result<RunConfig> {
    let mut config = match &overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply(overrides);
    if config.threads == 0 {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = resolve_config(&cli.overrides)?;
    match &cli.command {
        Command::Generate => cmd_generate(&config),
        Command::Train => cmd_train(&config),
        Command::Evaluate => cmd_evaluate(&config),
        Command::EarlyDetect => cmd_early_detect(&config),
        Command::Robustness => cmd_robustness(&config),
        Command::Sweep => cmd_sweep(&config),
        Command::Convert { input, from, lenient } => cmd_convert(&config, input, *from, *lenient),
    }
}

fn prepare_out(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    write_file(&config.out.join(CONFIG_FILE), &config.to_toml()?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(format!("cannot serialize report: {e}")))
}

pub fn cmd_generate(config: &RunConfig) -> Result<()> {
    let gen = config.gen_config()?;
    let corpus = generate(&gen)?;
    prepare_out(config)?;
    write_claims(&corpus.dataset, config.out.join(CLAIMS_FILE))?;
    corpus
        .embeddings
        .write_for(&corpus.dataset.claims, config.out.join(EMBEDDINGS_FILE))?;
    let nodes: usize = corpus.dataset.claims.iter().map(|c| c.num_nodes()).sum();
    let edges: usize = corpus.dataset.claims.iter().map(|c| c.edges.len()).sum();
    println!(
        "generated {} claims ({} per class), {nodes} nodes, {edges} edges -> {}",
        corpus.dataset.len(),
        gen.claims_per_class,
        config.out.display()
    );
    Ok(())
}

fn save_vocabulary(source: &FeatureSource, dir: &Path) -> Result<()> {
    if let FeatureSource::Tfidf(v) = source {
        write_file(&dir.join(VOCABULARY_FILE), &v.to_json()?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainReport<'a> {
    best_epoch: usize,
    epochs_run: usize,
    best_validation_loss: f64,
    test: &'a MetricReport,
}

#[derive(Serialize)]
struct CrossValidationReport {
    folds: Vec<MetricReport>,
    mean: Option<MetricReport>,
}

pub fn cmd_train(config: &RunConfig) -> Result<()> {
    let train_config = config.train_config()?;
    if config.protocol != Protocol::Holdout {
        return cmd_cross_validate(config, &train_config);
    }
    let fixture = config.fixture()?;
    prepare_out(config)?;
    save_vocabulary(&fixture.features, &config.out)?;
    let checkpoint = config.out.join(CHECKPOINT_FILE);
    let outcome = fit_with_checkpoint(
        &fixture.samples(&fixture.train)?,
        &fixture.samples(&fixture.validation)?,
        &train_config,
        Some(&checkpoint),
    )?;
    outcome.checkpoint().save(&checkpoint)?;
    write_file(&config.out.join(HISTORY_FILE), &outcome.history.to_csv())?;
    let test = fixture.evaluate(&outcome.best, &fixture.test_claims(), config.threads)?;
    write_file(
        &config.out.join(METRICS_FILE),
        &to_json(&TrainReport {
            best_epoch: outcome.best_epoch,
            epochs_run: outcome.epochs_run,
            best_validation_loss: outcome.best_validation_loss,
            test: &test,
        })?,
    )?;
    println!(
        "trained {} epochs (best {}), test accuracy {:.4}, macro-F1 {:.4}",
        outcome.epochs_run, outcome.best_epoch, test.accuracy, test.macro_f1
    );
    Ok(())
}

fn cmd_cross_validate(config: &RunConfig, train_config: &TrainConfig) -> Result<()> {
    let dataset = config.load_dataset()?;
    let splits: Vec<Split> = match config.protocol {
        Protocol::Loeo => loeo_splits(&dataset)?.into_iter().map(|(_, s)| s).collect(),
        _ => kfold_splits(&dataset.labels(), config.folds, train_config.seed)?,
    };
    let reports = cross_validate(&dataset, &config.feature_mode()?, &splits, train_config, config.val_fraction)?;
    prepare_out(config)?;
    let mean = mean_report(&reports);
    if let Some(m) = &mean {
        println!(
            "{} folds, mean accuracy {:.4}, macro-F1 {:.4}, weighted-F1 {:.4}",
            reports.len(),
            m.accuracy,
            m.macro_f1,
            m.weighted_f1
        );
    }
    write_file(
        &config.out.join(METRICS_FILE),
        &to_json(&CrossValidationReport { folds: reports, mean })?,
    )
}

fn checkpoint_path(config: &RunConfig) -> PathBuf {
    config
        .checkpoint
        .clone()
        .unwrap_or_else(|| config.out.join(CHECKPOINT_FILE))
}

/// The fixture and checkpoint of a finished training run. A vocabulary saved
/// next to the checkpoint takes precedence over refitting.
fn trained(config: &RunConfig) -> Result<(Fixture, Checkpoint)> {
    let path = checkpoint_path(config);
    let checkpoint = Checkpoint::load(&path)?;
    let mut fixture = config.fixture()?;
    let vocab_path = path.parent().unwrap_or(Path::new(".")).join(VOCABULARY_FILE);
    if config.features == FeatureKind::Tfidf && vocab_path.exists() {
        let text = fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        fixture.features = FeatureSource::Tfidf(Vocabulary::from_json(&text)?);
    }
    if fixture.features.dim() != checkpoint.params.arch.input_dim {
        return Err(Error::Structural(format!(
            "features have {} columns but checkpoint {} expects {}",
            fixture.features.dim(),
            path.display(),
            checkpoint.params.arch.input_dim
        )));
    }
    Ok((fixture, checkpoint))
}

fn split_indices(fixture: &Fixture, split: EvalSplit) -> Vec<usize> {
    match split {
        EvalSplit::Train => fixture.train.clone(),
        EvalSplit::Validation => fixture.validation.clone(),
        EvalSplit::Test => fixture.test.clone(),
        EvalSplit::All => (0..fixture.dataset.len()).collect(),
    }
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let (fixture, checkpoint) = trained(config)?;
    let claims = fixture.claims(&split_indices(&fixture, config.eval_split));
    let report = fixture.evaluate(&checkpoint.params, &claims, config.threads)?;
    prepare_out(config)?;
    write_file(&config.out.join(METRICS_FILE), &to_json(&report)?)?;
    println!(
        "accuracy {:.4}, macro-F1 {:.4}, weighted-F1 {:.4} on {} claims",
        report.accuracy,
        report.macro_f1,
        report.weighted_f1,
        claims.len()
    );
    Ok(())
}

pub fn cmd_early_detect(config: &RunConfig) -> Result<()> {
    let budgets = parse_budgets(&config.budgets)?;
    let (fixture, checkpoint) = trained(config)?;
    let claims = fixture.claims(&split_indices(&fixture, config.eval_split));
    let curve = early_detection_curve(
        &checkpoint.params,
        &claims,
        &fixture.features,
        &fixture.dataset.label_set,
        &budgets,
        config.threads,
    )?;
    prepare_out(config)?;
    write_file(&config.out.join(CURVE_FILE), &curve_csv(&curve))?;
    for p in &curve {
        println!("budget {:>6}: accuracy {:.4}", p.budget.to_string(), p.metrics.accuracy);
    }
    Ok(())
}

/// The configured dataset, or a freshly generated one when none is given.
fn fixture_or_synthetic(config: &RunConfig) -> Result<Fixture> {
    if config.data.is_some() {
        return config.fixture();
    }
    let seed = config.require_seed()?;
    let corpus = generate(&config.gen_config()?)?;
    let mode = match config.features {
        FeatureKind::Tfidf => FeatureMode::Tfidf {
            max_terms: config.max_terms,
        },
        FeatureKind::Embeddings => FeatureMode::Embeddings(corpus.embeddings),
    };
    let split = config.holdout_split(&corpus.dataset, seed)?;
    Fixture::from_split(corpus.dataset, &mode, &split, config.val_fraction, seed)
}

pub fn cmd_robustness(config: &RunConfig) -> Result<()> {
    let fixture = fixture_or_synthetic(config)?;
    let robustness = RobustnessConfig {
        train: config.train_config()?,
        rhos: config.rhos.clone(),
        seeds: config.robustness_seeds.clone(),
    };
    let report = robustness_experiment(&fixture, &robustness)?;
    prepare_out(config)?;
    write_file(&config.out.join(ROBUSTNESS_FILE), &robustness_csv(&report))?;
    for s in &report.summary {
        println!(
            "rho {:.2}: EBGCN {:.4} (drop {:+.4}), ablation {:.4} (drop {:+.4})",
            s.rho, s.ebgcn_mean, s.ebgcn_drop, s.ablation_mean, s.ablation_drop
        );
    }
    Ok(())
}

pub fn cmd_sweep(config: &RunConfig) -> Result<()> {
    let fixture = fixture_or_synthetic(config)?;
    let mut base = config.train_config()?;
    if let Some(epochs) = config.sweep_epochs {
        base.max_epochs = epochs;
        base.validate()?;
    }
    let cells = sweep(&fixture, &base, &config.sweep_t, &config.sweep_gamma)?;
    prepare_out(config)?;
    write_file(&config.out.join(SWEEP_FILE), &sweep_csv(&cells))?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    println!("{} cells, {failed} failed", cells.len());
    Ok(())
}

pub fn cmd_convert(config: &RunConfig, input: &Path, from: ConvertFrom, lenient: bool) -> Result<()> {
    let options = LoadOptions {
        format: match from {
            ConvertFrom::MaTree => Format::MaTree,
            ConvertFrom::Canonical => Format::CanonicalJsonl,
        },
        label_set: config.label_set()?,
        strict: !lenient,
    };
    let (dataset, report) = load_claims(input, &options)?;
    for (id, reason) in &report.skipped {
        eprintln!("skipped claim {id}: {reason}");
    }
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    write_claims(&dataset, config.out.join(CLAIMS_FILE))?;
    println!(
        "converted {} claims ({} skipped, {} missing timestamps, {} dropped edges)",
        dataset.len(),
        report.skipped.len(),
        report.missing_times,
        report.dropped_edges
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_overrides() {
        let mut c = RunConfig::from_toml("seed = 3\nT = 2\ngamma = 0.5\nrhos = [0.0, 0.3]\n").unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.relations, 2);
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        c.apply(&Overrides {
            gamma: Some(0.1),
            relations: Some(4),
            ..Overrides::default()
        });
        assert_eq!((c.gamma, c.relations), (0.1, 4));
    }

    #[test]
    fn unknown_keys_and_bad_gamma_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("sede = 3"), Err(Error::Config(_))));
        let c = RunConfig {
            seed: Some(1),
            gamma: 1.5,
            ..RunConfig::default()
        };
        assert_eq!(c.train_config().unwrap_err().exit_code(), 1);
        assert_eq!(RunConfig::default().gen_config().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["ebgcn", "train", "--T", "4", "--gamma", "0.2", "--threads", "2"]).unwrap();
        assert!(matches!(cli.command, Command::Train));
        assert_eq!(cli.overrides.relations, Some(4));
        assert_eq!(main_with_args(["ebgcn", "frobnicate"]), 1);
    }
}
