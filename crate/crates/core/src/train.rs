//! Adam training loop with early stopping, history logging and checkpoints.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::PropagationGraph;
use crate::error::{Error, Result};
use crate::model::{argmax, Architecture, ModelParams, Mode};
use crate::objective::{check_gamma, claim_objective};
use crate::params::ParamStore;
use crate::seed;
use crate::tape::Tape;
use crate::tensor::Tensor;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;
pub const MIN_IMPROVEMENT: f64 = 1e-6;

const SHUFFLE_STREAM: u64 = 0x5348;
const NOISE_STREAM: u64 = 0x4e4f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    #[serde(rename = "32")]
    Single,
    #[serde(rename = "64")]
    Double,
}

impl Precision {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            32 => Ok(Precision::Single),
            64 => Ok(Precision::Double),
            other => Err(Error::Config(format!("precision must be 32 or 64, got {other}"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::Single => 32,
            Precision::Double => 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub gamma: f64,
    /// Latent relation types `T`, between 1 and 5.
    pub relations: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub precision: Precision,
    pub threads: usize,
    pub edge_inference: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            max_epochs: 200,
            patience: 10,
            gamma: 0.3,
            relations: 3,
            hidden: crate::model::DEFAULT_HIDDEN,
            batch_size: 16,
            seed: 0,
            precision: Precision::Double,
            threads: 1,
            edge_inference: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(1..=5).contains(&self.relations) {
            return Err(Error::Config(format!("T must lie in [1, 5], got {}", self.relations)));
        }
        for (name, value) in [
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("hidden", self.hidden),
            ("batch_size", self.batch_size),
            ("threads", self.threads),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// The gate-free, purely supervised variant of this configuration.
    pub fn ablation(&self) -> TrainConfig {
        TrainConfig {
            edge_inference: false,
            gamma: 1.0,
            ..self.clone()
        }
    }

    pub fn architecture(&self, input_dim: usize, classes: usize) -> Architecture {
        Architecture {
            input_dim,
            hidden: self.hidden,
            relations: self.relations,
            classes,
            edge_inference: self.edge_inference,
        }
    }
}

/// A graph with its gold class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub graph: PropagationGraph,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        AdamState {
            m: store.zeros_like(),
            v: store.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Nothing is modified when a gradient is
/// not finite.
pub fn adam_step(params: &mut ParamStore, grads: &[Tensor], state: &mut AdamState, lr: f64) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::shape("adam_step", "gradient or moment count differs from parameter count"));
    }
    for (idx, g) in grads.iter().enumerate() {
        let p = params.get(idx);
        if g.shape() != p.shape() || state.m[idx].shape() != p.shape() || state.v[idx].shape() != p.shape() {
            return Err(Error::shape("adam_step", format!("parameter {}", params.name(idx))));
        }
        if !g.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient for parameter {}", params.name(idx))));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for (idx, g) in grads.iter().enumerate() {
        let m = state.m[idx].data_mut();
        let v = state.v[idx].data_mut();
        let p = params.get_mut(idx).data_mut();
        for k in 0..g.len() {
            let gk = g.data()[k];
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * gk;
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * gk * gk;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}

fn round_to_single(store: &mut ParamStore) {
    for t in store.values_mut() {
        for x in t.data_mut() {
            *x = *x as f32 as f64;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitKind {
    Train,
    Validation,
}

impl SplitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Validation => "validation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: SplitKind,
    pub l_c: f64,
    pub l_e: f64,
    pub total: f64,
    pub acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,split,L_c,L_e,total,acc\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{:.12e},{:.12e},{:.12e},{:.6}",
                r.epoch,
                r.split.as_str(),
                r.l_c,
                r.l_e,
                r.total,
                r.acc
            )
            .expect("string write");
        }
        out
    }

    pub fn validation(&self) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter(|r| r.split == SplitKind::Validation)
    }
}

/// Patience-based early stopping on validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_loss: f64,
    pub best_epoch: usize,
    pub epochs_without_improvement: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            epochs_without_improvement: 0,
        }
    }

    /// Returns whether `loss` is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best_loss - MIN_IMPROVEMENT {
            self.best_loss = loss;
            self.best_epoch = epoch;
            self.epochs_without_improvement = 0;
            true
        } else {
            self.epochs_without_improvement += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.epochs_without_improvement >= self.patience
    }
}

/// Loss terms and prediction of one claim.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimResult {
    pub l_c: f64,
    pub l_e: f64,
    pub total: f64,
    pub predicted: usize,
    pub probs: Vec<f64>,
}

/// Loss, prediction and parameter gradients of one claim.
pub fn claim_gradients(
    params: &ModelParams,
    sample: &Sample,
    gamma: f64,
    mode: Mode,
) -> Result<(ClaimResult, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let vars = params.store.bind(&mut tape);
    let obj = claim_objective(&mut tape, &vars, params, &sample.graph, sample.label, gamma, mode)?;
    let grads = params.store.align(&tape.backward(obj.total)?)?;
    Ok((claim_result(&tape, &obj), grads))
}

fn claim_result(tape: &Tape, obj: &crate::objective::ClaimObjective) -> ClaimResult {
    let probs = tape.value(obj.forward.probs).data().to_vec();
    ClaimResult {
        l_c: tape.value(obj.l_c).data()[0],
        l_e: obj.l_e.map_or(0.0, |v| tape.value(v).data()[0]),
        total: tape.value(obj.total).data()[0],
        predicted: argmax(&probs),
        probs,
    }
}

/// Eval-mode loss terms and prediction of one claim.
pub fn evaluate_claim(params: &ModelParams, sample: &Sample, gamma: f64) -> Result<ClaimResult> {
    let mut tape = Tape::new();
    let vars = params.store.bind(&mut tape);
    let obj = claim_objective(&mut tape, &vars, params, &sample.graph, sample.label, gamma, Mode::Eval)?;
    Ok(claim_result(&tape, &obj))
}

/// Mean loss terms and accuracy over a split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSummary {
    pub l_c: f64,
    pub l_e: f64,
    pub total: f64,
    pub acc: f64,
    pub predictions: Vec<usize>,
}

fn summarize(results: &[ClaimResult], samples: &[Sample]) -> SplitSummary {
    let n = results.len().max(1) as f64;
    let correct = results
        .iter()
        .zip(samples)
        .filter(|(r, s)| r.predicted == s.label)
        .count();
    SplitSummary {
        l_c: results.iter().map(|r| r.l_c).sum::<f64>() / n,
        l_e: results.iter().map(|r| r.l_e).sum::<f64>() / n,
        total: results.iter().map(|r| r.total).sum::<f64>() / n,
        acc: correct as f64 / n,
        predictions: results.iter().map(|r| r.predicted).collect(),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or inline for one.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn map_ordered<T: Send>(
    parallel: bool,
    len: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if parallel {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

/// Eval-mode summary of `samples`; results do not depend on `threads`.
pub fn evaluate_samples(params: &ModelParams, samples: &[Sample], gamma: f64, threads: usize) -> Result<SplitSummary> {
    let results = with_threads(threads, || {
        map_ordered(threads > 1, samples.len(), |i| evaluate_claim(params, &samples[i], gamma))
    })??;
    Ok(summarize(&results, samples))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    /// Parameters of the epoch with the lowest validation loss.
    pub best: ModelParams,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    /// Optimizer state right after the best epoch.
    pub adam: AdamState,
    pub epochs_run: usize,
    pub history: History,
}

impl FitOutcome {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.best.clone(),
            adam: self.adam.clone(),
            epoch: self.best_epoch,
        }
    }
}

pub fn fit(train: &[Sample], validation: &[Sample], config: &TrainConfig) -> Result<FitOutcome> {
    fit_with_checkpoint(train, validation, config, None)
}

/// Trains from a fresh initialization. When `checkpoint` is given, the best
/// state so far is written there after every improving epoch, so it survives
/// a divergence.
pub fn fit_with_checkpoint(
    train: &[Sample],
    validation: &[Sample],
    config: &TrainConfig,
    checkpoint: Option<&Path>,
) -> Result<FitOutcome> {
    config.validate()?;
    let first = train
        .first()
        .ok_or_else(|| Error::Config("training split is empty".into()))?;
    if validation.is_empty() {
        return Err(Error::Config("validation split is empty".into()));
    }
    let input_dim = first.graph.feature_dim();
    let classes = train
        .iter()
        .chain(validation)
        .map(|s| s.label + 1)
        .max()
        .unwrap_or(2)
        .max(2);
    let arch = config.architecture(input_dim, classes);
    let params = ModelParams::init(arch, config.seed)?;
    fit_from(params, train, validation, config, checkpoint)
}

/// Trains starting from `params`.
pub fn fit_from(
    mut params: ModelParams,
    train: &[Sample],
    validation: &[Sample],
    config: &TrainConfig,
    checkpoint: Option<&Path>,
) -> Result<FitOutcome> {
    config.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Config("training and validation splits must be non-empty".into()));
    }
    if let Some(s) = train.iter().chain(validation).find(|s| s.label >= params.arch.classes) {
        return Err(Error::Config(format!(
            "label {} outside the model's {} classes",
            s.label, params.arch.classes
        )));
    }
    if config.precision == Precision::Single {
        round_to_single(&mut params.store);
    }
    with_threads(config.threads, || run_epochs(params, train, validation, config, checkpoint))?
}

fn run_epochs(
    mut params: ModelParams,
    train: &[Sample],
    validation: &[Sample],
    config: &TrainConfig,
    checkpoint: Option<&Path>,
) -> Result<FitOutcome> {
    let parallel = config.threads > 1;
    let mut adam = AdamState::new(&params.store);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut history = History::default();
    let mut best = (params.clone(), adam.clone());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs_run = 0;

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        let mut rng = seed::rng(config.seed, &[SHUFFLE_STREAM, epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut results = Vec::with_capacity(train.len());
        for batch in order.chunks(config.batch_size) {
            let outputs = map_ordered(parallel, batch.len(), |k| {
                let i = batch[k];
                let noise_seed = seed::derive(config.seed, &[NOISE_STREAM, epoch as u64, i as u64]);
                claim_gradients(&params, &train[i], config.gamma, Mode::Train { noise_seed })
            })?;
            let mut sum = params.store.zeros_like();
            for (result, grads) in outputs {
                if !result.total.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        reason: "non-finite training loss".into(),
                    });
                }
                for (s, g) in sum.iter_mut().zip(&grads) {
                    s.accumulate(g);
                }
                results.push(result);
            }
            let mean: Vec<Tensor> = sum.iter().map(|g| g.scale(1.0 / batch.len() as f64)).collect();
            adam_step(&mut params.store, &mean, &mut adam, config.learning_rate).map_err(|e| Error::Diverged {
                epoch,
                reason: e.to_string(),
            })?;
            if config.precision == Precision::Single {
                round_to_single(&mut params.store);
            }
        }
        let batch_order: Vec<&Sample> = order.iter().map(|&i| &train[i]).collect();
        let n = results.len() as f64;
        let correct = results
            .iter()
            .zip(&batch_order)
            .filter(|(r, s)| r.predicted == s.label)
            .count();
        history.records.push(EpochRecord {
            epoch,
            split: SplitKind::Train,
            l_c: results.iter().map(|r| r.l_c).sum::<f64>() / n,
            l_e: results.iter().map(|r| r.l_e).sum::<f64>() / n,
            total: results.iter().map(|r| r.total).sum::<f64>() / n,
            acc: correct as f64 / n,
        });

        let val_results = map_ordered(parallel, validation.len(), |i| {
            evaluate_claim(&params, &validation[i], config.gamma)
        })?;
        let val = summarize(&val_results, validation);
        if !val.total.is_finite() {
            return Err(Error::Diverged {
                epoch,
                reason: "non-finite validation loss".into(),
            });
        }
        history.records.push(EpochRecord {
            epoch,
            split: SplitKind::Validation,
            l_c: val.l_c,
            l_e: val.l_e,
            total: val.total,
            acc: val.acc,
        });

        if stopper.observe(epoch, val.total) {
            best = (params.clone(), adam.clone());
            if let Some(path) = checkpoint {
                Checkpoint {
                    params: best.0.clone(),
                    adam: best.1.clone(),
                    epoch,
                }
                .save(path)?;
            }
        }
        if stopper.should_stop() {
            break;
        }
    }
    Ok(FitOutcome {
        best: best.0,
        best_epoch: stopper.best_epoch,
        best_validation_loss: stopper.best_loss,
        adam: best.1,
        epochs_run,
        history,
    })
}

const MAGIC: &[u8; 8] = b"EBGCNCK1";

/// Parameters, optimizer state and epoch of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub adam: AdamState,
    pub epoch: usize,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Parse {
            location: format!("checkpoint byte {}", self.pos),
            message: "unexpected end of checkpoint".into(),
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Parse {
            location: "checkpoint".into(),
            message: "size does not fit in memory".into(),
        })
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Parse {
            location: "checkpoint".into(),
            message: "tensor too large".into(),
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

impl Checkpoint {
    /// Little-endian binary layout: magic, architecture, epoch, Adam step,
    /// then every named tensor followed by the first and second moments.
    pub fn to_bytes(&self) -> Vec<u8> {
        let arch = &self.params.arch;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [
            arch.input_dim as u64,
            arch.hidden as u64,
            arch.relations as u64,
            arch.classes as u64,
            arch.edge_inference as u64,
            self.epoch as u64,
            self.adam.step,
            self.params.store.len() as u64,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for (name, t) in self.params.store.iter() {
            out.extend_from_slice(&(name.len() as u64).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        for t in self.adam.m.iter().chain(&self.adam.v) {
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Parse {
                location: "checkpoint".into(),
                message: "not a checkpoint file".into(),
            });
        }
        let arch = Architecture {
            input_dim: r.usize()?,
            hidden: r.usize()?,
            relations: r.usize()?,
            classes: r.usize()?,
            edge_inference: r.u64()? != 0,
        };
        let epoch = r.usize()?;
        let step = r.u64()?;
        let count = r.usize()?;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let len = r.usize()?;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| Error::Parse {
                location: "checkpoint".into(),
                message: "parameter name is not utf-8".into(),
            })?;
            let rows = r.usize()?;
            let cols = r.usize()?;
            let data = r.f64s(rows * cols)?;
            store.push(name, Tensor::from_vec(rows, cols, data)?);
        }
        let mut moments = Vec::with_capacity(2 * count);
        for k in 0..2 * count {
            let (rows, cols) = store.get(k % count).shape();
            moments.push(Tensor::from_vec(rows, cols, r.f64s(rows * cols)?)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Parse {
                location: "checkpoint".into(),
                message: "trailing bytes".into(),
            });
        }
        let v = moments.split_off(count);
        let params = ModelParams::from_store(arch, store)?;
        Ok(Checkpoint {
            params,
            adam: AdamState { m: moments, v, step },
            epoch,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Parameters as `name → {shape, values}` JSON.
    pub fn params_json(&self) -> Result<String> {
        let mut map = serde_json::Map::new();
        for (name, t) in self.params.store.iter() {
            map.insert(
                name.to_string(),
                serde_json::json!({ "shape": [t.rows(), t.cols()], "values": t.data() }),
            );
        }
        let doc = serde_json::json!({
            "architecture": self.params.arch,
            "epoch": self.epoch,
            "parameters": map,
        });
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Numeric(e.to_string()))
    }
}
