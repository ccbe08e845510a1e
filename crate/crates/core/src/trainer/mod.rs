//! Sampling, mini-batching and Adam optimization of the total loss.

mod adam;
mod checkpoint;
mod objective;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{
    load_checkpoint, read_history, save_checkpoint, write_history, Checkpoint, HISTORY_HEADER,
};
pub use objective::{Batch, Objective, Workspace};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::CollocationSet;
use crate::error::{Error, Result};
use crate::network::{init_params, MlpSpec, NormalizationMaps, ParameterSet};
use crate::oracle::{source_q, SourceSpec};
use crate::residual::{LossBreakdown, NondimParams};

/// RNG stream for the training-set draw.
const SAMPLE_STREAM: u64 = 1;
/// RNG stream for the per-epoch shuffles.
const SHUFFLE_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingConfig {
    pub sample_size: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub spec: MlpSpec,
    pub params: NondimParams,
    pub source: SourceSpec,
    /// The trainer reduces in a fixed order either way; kept so configs and
    /// checkpoints record the requested mode.
    pub deterministic: bool,
}

impl Default for TrainingConfig {
    /// N = 20000, batch 5000, lr 0.001, 5000 epochs, 5×40 tanh network.
    fn default() -> Self {
        TrainingConfig {
            sample_size: 20_000,
            batch_size: 5_000,
            learning_rate: 1e-3,
            epochs: 5_000,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            spec: MlpSpec::default(),
            params: NondimParams::default(),
            source: SourceSpec::default(),
            deterministic: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 || self.batch_size == 0 || self.batch_size > self.sample_size {
            return Err(Error::invalid(format!(
                "need 1 ≤ batch_size ≤ N, got batch {} and N {}",
                self.batch_size, self.sample_size
            )));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be ≥ 1"));
        }
        self.adam().validate()?;
        self.spec.validate()?;
        self.params.validate()?;
        let (s, p) = (&self.source, &self.params);
        if s.x0 != p.x0 || s.z0 != p.z0 || s.omega != p.omega {
            return Err(Error::invalid(
                "source location and frequency must match the problem constants",
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.sample_size.div_ceil(self.batch_size)
    }
}

/// `n` distinct indices below `len`, uniform without replacement.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > len {
        return Err(Error::invalid(format!(
            "cannot draw {n} samples from {len} rows"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLE_STREAM);
    Ok(rand::seq::index::sample(&mut rng, len, n).into_vec())
}

pub fn sample_training_set(
    dataset: &CollocationSet,
    n: usize,
    seed: u64,
) -> Result<CollocationSet> {
    Ok(dataset.select(&sample_indices(dataset.len(), n, seed)?))
}

/// Epoch-mean loss records, one per completed epoch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingHistory {
    pub records: Vec<LossBreakdown>,
}

impl TrainingHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&LossBreakdown> {
        self.records.last()
    }
}

/// Everything a finished (or interrupted) run leaves behind.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub params: ParameterSet,
    pub maps: NormalizationMaps,
    pub adam: AdamState,
    pub history: TrainingHistory,
}

pub struct Trainer {
    config: TrainingConfig,
    objective: Objective,
    data: Batch,
    batch: Batch,
    workspace: Workspace,
    params: ParameterSet,
    adam: AdamState,
    grad: Vec<f64>,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    history: TrainingHistory,
}

impl Trainer {
    /// Draws the training sample from `dataset` and initializes the network.
    /// Normalization maps come from the whole dataset.
    pub fn new(config: TrainingConfig, dataset: &CollocationSet) -> Result<Self> {
        config.validate()?;
        Self::build(config, dataset)
    }

    fn build(config: TrainingConfig, dataset: &CollocationSet) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::invalid("training dataset is empty"));
        }
        let maps = dataset.normalization()?;
        let sample = sample_training_set(dataset, config.sample_size, config.seed)?;
        let spacing = dataset.spacing();
        let q = sample
            .points()
            .iter()
            .map(|p| source_q(p[0], p[1], p[2], &config.source, spacing))
            .collect::<Result<Vec<_>>>()?;
        let data = Batch::from_raw(sample.points(), sample.values(), q, &maps)?;
        let params = init_params(config.spec, config.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(SHUFFLE_STREAM);
        Ok(Trainer {
            objective: Objective::new(maps, config.params),
            data,
            batch: Batch::default(),
            workspace: Workspace::new(),
            adam: AdamState::new(params.len()),
            grad: vec![0.0; params.len()],
            params,
            order: (0..config.sample_size).collect(),
            rng,
            history: TrainingHistory::default(),
            config,
        })
    }

    /// Replaces the starting parameters (same architecture required).
    pub fn set_parameters(&mut self, params: ParameterSet) -> Result<()> {
        if params.spec() != self.params.spec() {
            return Err(Error::invalid("parameter set has a different architecture"));
        }
        self.params = params;
        Ok(())
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn parameters(&self) -> &ParameterSet {
        &self.params
    }

    pub fn maps(&self) -> &NormalizationMaps {
        self.objective.maps()
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    pub fn history(&self) -> &TrainingHistory {
        &self.history
    }

    pub fn epochs_done(&self) -> usize {
        self.history.len()
    }

    /// One shuffled pass over the training sample. On divergence the
    /// parameters and optimizer state of the last good step are kept.
    pub fn run_epoch(&mut self) -> Result<LossBreakdown> {
        let epoch = self.history.len() + 1;
        self.order.shuffle(&mut self.rng);
        let adam = self.config.adam();
        let mut losses = Vec::with_capacity(self.config.steps_per_epoch());
        for (b, chunk) in self.order.chunks(self.config.batch_size).enumerate() {
            self.batch.gather_from(&self.data, chunk);
            let lb = self.objective.evaluate(
                &self.params,
                &self.batch,
                &mut self.workspace,
                Some(&mut self.grad),
            )?;
            let diverged = Error::Diverged {
                epoch,
                batch: b + 1,
            };
            if !lb.is_finite() {
                return Err(diverged);
            }
            match self
                .adam
                .step(self.params.as_mut_slice(), &self.grad, &adam)
            {
                Err(Error::NonFinite { .. }) => return Err(diverged),
                other => other?,
            }
            losses.push(lb);
        }
        let mean = LossBreakdown::mean(&losses);
        self.history.records.push(mean);
        Ok(mean)
    }

    /// Runs the remaining epochs, calling `progress` after each.
    pub fn run(&mut self, mut progress: impl FnMut(usize, &LossBreakdown)) -> Result<()> {
        while self.history.len() < self.config.epochs {
            let lb = self.run_epoch()?;
            progress(self.history.len(), &lb);
        }
        Ok(())
    }

    /// Loss breakdown of the current parameters on the whole training
    /// sample.
    pub fn evaluate_sample(&mut self) -> Result<LossBreakdown> {
        self.objective
            .evaluate(&self.params, &self.data, &mut self.workspace, None)
    }

    pub fn snapshot(&self) -> TrainedModel {
        TrainedModel {
            params: self.params.clone(),
            maps: *self.maps(),
            adam: self.adam.clone(),
            history: self.history.clone(),
        }
    }

    pub fn into_model(self) -> TrainedModel {
        TrainedModel {
            maps: *self.objective.maps(),
            params: self.params,
            adam: self.adam,
            history: self.history,
        }
    }
}

/// Trains from scratch and returns the final model.
pub fn train(config: TrainingConfig, dataset: &CollocationSet) -> Result<TrainedModel> {
    let mut trainer = Trainer::new(config, dataset)?;
    trainer.run(|_, _| {})?;
    Ok(trainer.into_model())
}
