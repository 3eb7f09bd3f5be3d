//! Training harness: SGD with momentum, the loss-speed learning-rate rule,
//! evaluation, ablation runs and checkpoints.
//!
//! Every random draw is derived from the run seed: initialization uses one
//! stream and epoch `e` shuffles with its own stream, so a run resumed from a
//! checkpoint continues exactly as the uninterrupted run would have.

mod checkpoint;

use serde::{Deserialize, Serialize};

pub use checkpoint::{
    load_checkpoint, save_checkpoint, write_metrics_csv, Checkpoint, OptimizerState, ScheduleState,
    CHECKPOINT_VERSION, METRICS_HEADER,
};

use crate::error::{Error, ErrorClass, Result};
use crate::graph::LabeledGraph;
use crate::kernels::KernelSpec;
use crate::kpca::{kpca_fit_subsampled, stack_signals, DEFAULT_MAX_ANCHORS};
use crate::model::{
    ablation_mask, AblationMode, KgcnModel, Model, Pool, Prepared, SgcnModel, DEFAULT_FILTERS, DEFAULT_FILTER_SIZE,
    DEFAULT_HOPS,
};
use crate::numcore::Rng;
use crate::par::{self, Exec};
use crate::skeleton::MinMaxNormalizer;

/// Factor applied to the learning rate when the loss speeds up (divided by
/// when it slows down).
pub const LR_DECAY: f64 = 0.99;
const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Kgcn,
    Sgcn,
}

/// Input scaling fitted on the training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    #[default]
    Minmax,
    None,
}

/// Architecture and preprocessing of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub kernel: KernelSpec,
    /// Number of filters `K`.
    pub filters: usize,
    /// Support vectors per filter `N` (KGCN only).
    pub size: usize,
    pub hops: usize,
    pub pool: Pool,
    /// KPCA dimensions `H` (SGCN only).
    pub kpca_dims: usize,
    pub max_anchors: usize,
    /// Histogram intersection always min-max scales its inputs.
    pub normalize: Normalize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Kgcn,
            kernel: KernelSpec::default(),
            filters: DEFAULT_FILTERS,
            size: DEFAULT_FILTER_SIZE,
            hops: DEFAULT_HOPS,
            pool: Pool::Mean,
            kpca_dims: 100,
            max_anchors: DEFAULT_MAX_ANCHORS,
            normalize: Normalize::Minmax,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.filters == 0 || self.size == 0 {
            return Err(Error::InvalidConfig("model.K and model.N must be >= 1".into()));
        }
        if self.hops == 0 {
            return Err(Error::BadHop(0));
        }
        if self.kind == ModelKind::Sgcn && (self.kpca_dims == 0 || self.max_anchors == 0) {
            return Err(Error::InvalidConfig("kpca.H and kpca.max_anchors must be >= 1".into()));
        }
        Ok(())
    }

    fn normalizes(&self) -> bool {
        self.normalize == Normalize::Minmax || self.kernel.requires_unit_range()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr0")]
    pub lr0: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub ablation: AblationMode,
    /// Defaults to `[lr0 / 100, lr0 * 100]`.
    #[serde(default)]
    pub lr_bounds: Option<[f64; 2]>,
}

fn default_lr0() -> f64 {
    0.01
}

fn default_momentum() -> f64 {
    0.9
}

fn default_batch() -> usize {
    50
}

fn default_epochs() -> usize {
    3000
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            lr0: default_lr0(),
            momentum: default_momentum(),
            batch: default_batch(),
            epochs: default_epochs(),
            seed,
            ablation: AblationMode::LsvLa,
            lr_bounds: None,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self.lr_bounds {
            Some([lo, hi]) => (lo, hi),
            None => (self.lr0 / 100.0, self.lr0 * 100.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be >= 1".into()));
        }
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad learning-rate bounds [{lo}, {hi}]")));
        }
        if !(lo..=hi).contains(&self.lr0) {
            return Err(Error::InvalidConfig(format!("lr0 {} outside [{lo}, {hi}]", self.lr0)));
        }
        Ok(())
    }
}

/// Everything needed to rebuild a run: architecture plus optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setup {
    #[serde(default)]
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Setup {
    pub fn new(model: ModelConfig, train: TrainConfig) -> Self {
        Self { model, train }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()
    }
}

/// A network together with the input scaling fitted on its training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub normalizer: Option<MinMaxNormalizer>,
    pub network: Model,
}

impl Pipeline {
    /// Fits preprocessing on `train` and initializes the network.
    pub fn build(cfg: &ModelConfig, train: &[LabeledGraph], classes: usize, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let normalizer = if cfg.normalizes() {
            Some(MinMaxNormalizer::fit(train)?)
        } else {
            None
        };
        let scaled = match &normalizer {
            Some(n) => n.apply_all(train)?,
            None => train.to_vec(),
        };
        let nodes = stack_signals(&scaled)?;
        let network = match cfg.kind {
            ModelKind::Kgcn => Model::Kgcn(KgcnModel::init(
                cfg.kernel, cfg.filters, cfg.size, classes, cfg.hops, cfg.pool, &nodes, rng,
            )?),
            ModelKind::Sgcn => {
                let proj = kpca_fit_subsampled(&cfg.kernel, &nodes, cfg.kpca_dims, cfg.max_anchors, rng)?;
                Model::Sgcn(SgcnModel::init(cfg.filters, classes, cfg.hops, cfg.pool, proj, rng)?)
            }
        };
        Ok(Self { normalizer, network })
    }

    pub fn prepare(&self, g: &LabeledGraph) -> Result<Prepared> {
        match &self.normalizer {
            Some(n) => self.network.prepare(&n.apply(g)?),
            None => self.network.prepare(g),
        }
    }

    pub fn prepare_all(&self, graphs: &[LabeledGraph]) -> Result<Vec<Prepared>> {
        par::map_indexed(Exec::default(), graphs.len(), |i| self.prepare(&graphs[i]))
            .into_iter()
            .collect()
    }

    pub fn predict(&self, g: &LabeledGraph) -> Result<usize> {
        Ok(argmax(&self.network.logits(&self.prepare(g)?)?))
    }
}

/// In place: `v <- mu v - nu g`, `p <- p + v`.
pub fn sgd_momentum_step(params: &mut [f64], grads: &[f64], velocity: &mut [f64], nu: f64, mu: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters, {} gradients, {} velocities",
            params.len(),
            grads.len(),
            velocity.len()
        )));
    }
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        *v = mu * *v - nu * g;
        *p += *v;
    }
    Ok(())
}

/// Next learning rate from the epoch losses so far: shrink by [`LR_DECAY`]
/// when `|L_t - L_{t-1}|` grew relative to the previous epoch, grow
/// otherwise, then clamp to `bounds`. Fewer than three losses leave `nu`
/// unchanged.
pub fn adaptive_lr(nu: f64, losses: &[f64], bounds: (f64, f64)) -> f64 {
    let [.., l0, l1, l2] = losses else {
        return nu;
    };
    let speed = (l2 - l1).abs();
    let prev = (l1 - l0).abs();
    let next = if speed > prev { nu * LR_DECAY } else { nu / LR_DECAY };
    next.clamp(bounds.0, bounds.1)
}

/// Index of the largest entry, the lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Mean per-class recall over the classes present.
    pub accuracy: f64,
    /// Fraction of graphs classified correctly.
    pub micro: f64,
    /// Recall per class; `None` for classes without examples.
    pub per_class: Vec<Option<f64>>,
    /// `confusion[true][predicted]` counts.
    pub confusion: Vec<Vec<usize>>,
}

/// Scores predicted against true labels over `classes` classes.
pub fn score(predicted: &[usize], labels: &[usize], classes: usize) -> Result<Evaluation> {
    if labels.is_empty() {
        return Err(Error::InvalidConfig("nothing to evaluate".into()));
    }
    assert_eq!(predicted.len(), labels.len());
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &l) in predicted.iter().zip(labels) {
        for label in [p, l] {
            if label >= classes {
                return Err(Error::BadLabel { label, classes });
            }
        }
        confusion[l][p] += 1;
    }
    let per_class: Vec<Option<f64>> = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let accuracy = present.iter().sum::<f64>() / present.len() as f64;
    let correct = (0..classes).map(|c| confusion[c][c]).sum::<usize>();
    Ok(Evaluation {
        accuracy,
        micro: correct as f64 / labels.len() as f64,
        per_class,
        confusion,
    })
}

fn evaluate_prepared(model: &Model, graphs: &[Prepared], exec: Exec) -> Result<Evaluation> {
    let preds = par::map_indexed(exec, graphs.len(), |i| model.logits(&graphs[i]).map(|l| argmax(&l)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = graphs.iter().map(|g| g.label).collect();
    score(&preds, &labels, model.classes())
}

/// Macro accuracy, per-class recall and confusion of `pipeline` on `graphs`.
pub fn evaluate(pipeline: &Pipeline, graphs: &[LabeledGraph]) -> Result<Evaluation> {
    evaluate_prepared(&pipeline.network, &pipeline.prepare_all(graphs)?, Exec::default())
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

/// Number of classes implied by the labels of both splits.
pub fn infer_classes(train: &[LabeledGraph], test: &[LabeledGraph]) -> usize {
    train.iter().chain(test).map(|g| g.label() + 1).max().unwrap_or(0).max(2)
}

/// Epoch-by-epoch training state.
pub struct Trainer {
    setup: Setup,
    pipeline: Pipeline,
    train: Vec<Prepared>,
    test: Vec<Prepared>,
    mask: Vec<bool>,
    velocity: Vec<f64>,
    lr: f64,
    history: Vec<EpochRecord>,
    exec: Exec,
}

impl Trainer {
    /// Initializes a fresh run from `setup.train.seed`.
    pub fn new(setup: Setup, train: &[LabeledGraph], test: &[LabeledGraph]) -> Result<Self> {
        setup.validate()?;
        if train.is_empty() {
            return Err(Error::InvalidConfig("empty training split".into()));
        }
        let classes = infer_classes(train, test);
        let mut rng = Rng::stream(setup.train.seed, INIT_STREAM);
        let pipeline = Pipeline::build(&setup.model, train, classes, &mut rng)?;
        let velocity = vec![0.0; pipeline.network.param_count()];
        let lr = setup.train.lr0;
        Self::assemble(setup, pipeline, train, test, velocity, lr, Vec::new())
    }

    /// Continues the run saved in `ck` on the same data.
    pub fn resume(ck: Checkpoint, train: &[LabeledGraph], test: &[LabeledGraph]) -> Result<Self> {
        ck.config.validate()?;
        if ck.optimizer.velocity.len() != ck.model.network.param_count() {
            return Err(Error::CorruptCheckpoint("velocity does not match the model".into()));
        }
        if ck.history.len() != ck.epoch {
            return Err(Error::CorruptCheckpoint("history does not match the epoch".into()));
        }
        Self::assemble(ck.config, ck.model, train, test, ck.optimizer.velocity, ck.schedule.lr, ck.history)
    }

    fn assemble(
        setup: Setup,
        pipeline: Pipeline,
        train: &[LabeledGraph],
        test: &[LabeledGraph],
        velocity: Vec<f64>,
        lr: f64,
        history: Vec<EpochRecord>,
    ) -> Result<Self> {
        let mask = ablation_mask(&pipeline.network, setup.train.ablation);
        Ok(Self {
            train: pipeline.prepare_all(train)?,
            test: pipeline.prepare_all(test)?,
            setup,
            pipeline,
            mask,
            velocity,
            lr,
            history,
            exec: Exec::default(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.history.len()
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    pub fn into_parts(self) -> (Pipeline, Vec<EpochRecord>) {
        (self.pipeline, self.history)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.setup.clone(),
            model: self.pipeline.clone(),
            optimizer: OptimizerState {
                velocity: self.velocity.clone(),
            },
            schedule: ScheduleState { lr: self.lr },
            epoch: self.epoch(),
            history: self.history.clone(),
        }
    }

    /// Summed, then batch-averaged, gradient of one batch with the summed loss.
    fn batch_gradient(&self, batch: &[usize]) -> Result<(f64, Vec<f64>)> {
        let model = &self.pipeline.network;
        let results = par::map_indexed(self.exec, batch.len(), |j| model.loss_grad(&self.train[batch[j]]));
        let mut grad = vec![0.0; self.velocity.len()];
        let mut loss = 0.0;
        for r in results {
            let (l, g, _) = r?;
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok((loss, grad))
    }

    /// Runs one epoch and returns its history row.
    pub fn step_epoch(&mut self) -> Result<EpochRecord> {
        let epoch = self.epoch() + 1;
        let diverged = |e: Error| match e.class() {
            ErrorClass::Numerical => Error::Diverged { epoch },
            _ => e,
        };
        let cfg = &self.setup.train;
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        Rng::stream(cfg.seed, epoch as u64).shuffle(&mut order);
        let (mu, batch_size) = (cfg.momentum, cfg.batch);
        let mut total = 0.0;
        for batch in order.chunks(batch_size) {
            let (loss, mut grad) = self.batch_gradient(batch).map_err(diverged)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += loss;
            for (g, &trainable) in grad.iter_mut().zip(&self.mask) {
                if !trainable {
                    *g = 0.0;
                }
            }
            let mut params = self.pipeline.network.params();
            sgd_momentum_step(&mut params, &grad, &mut self.velocity, self.lr, mu)?;
            self.pipeline.network.set_params(&params).map_err(diverged)?;
            self.pipeline.network.project();
        }
        let loss = total / self.train.len() as f64;
        let model = &self.pipeline.network;
        let train_acc = evaluate_prepared(model, &self.train, self.exec).map_err(diverged)?.accuracy;
        let test_acc = if self.test.is_empty() {
            None
        } else {
            Some(evaluate_prepared(model, &self.test, self.exec).map_err(diverged)?.accuracy)
        };
        let record = EpochRecord {
            epoch,
            loss,
            lr: self.lr,
            train_acc,
            test_acc,
        };
        self.history.push(record.clone());
        let losses: Vec<f64> = self.history.iter().rev().take(3).rev().map(|r| r.loss).collect();
        self.lr = adaptive_lr(self.lr, &losses, self.setup.train.bounds());
        Ok(record)
    }

    /// Trains until `setup.train.epochs` epochs are complete.
    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.setup.train.epochs)
    }

    pub fn run_until(&mut self, epochs: usize) -> Result<()> {
        while self.epoch() < epochs {
            self.step_epoch()?;
        }
        Ok(())
    }
}

/// Trains a fresh network for `setup.train.epochs` epochs.
pub fn train(train: &[LabeledGraph], test: &[LabeledGraph], setup: &Setup) -> Result<(Pipeline, Vec<EpochRecord>)> {
    let mut t = Trainer::new(setup.clone(), train, test)?;
    t.run()?;
    Ok(t.into_parts())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: AblationMode,
    /// Macro accuracy on the test split (the training split when there is none).
    pub accuracy: f64,
    pub train_accuracy: f64,
}

/// Trains once per ablation mode from the same seed, hence the same
/// initialization.
pub fn ablate(train: &[LabeledGraph], test: &[LabeledGraph], setup: &Setup) -> Result<Vec<AblationRow>> {
    AblationMode::ALL
        .into_iter()
        .map(|mode| {
            let mut s = setup.clone();
            s.train.ablation = mode;
            let (pipeline, history) = self::train(train, test, &s)?;
            let train_accuracy = match history.last() {
                Some(r) => r.train_acc,
                None => evaluate(&pipeline, train)?.accuracy,
            };
            let accuracy = if test.is_empty() {
                train_accuracy
            } else {
                evaluate(&pipeline, test)?.accuracy
            };
            Ok(AblationRow {
                mode,
                accuracy,
                train_accuracy,
            })
        })
        .collect()
}
