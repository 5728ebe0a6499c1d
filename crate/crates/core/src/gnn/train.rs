use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{gradient, Dropout};
use super::params::{ModelDims, ModelParams};
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    pub dense_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 32,
            dropout_rate: 0.5,
            seed: 0,
            dense_width: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epochs >= 1
            && self.batch_size >= 1
            && self.dense_width >= 1
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.dropout_rate);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("invalid training config: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each epoch (dropout active).
    pub epoch_losses: Vec<f64>,
    pub params: ModelParams,
    pub seed: u64,
    pub config: TrainConfig,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(ADAM_BETA1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(ADAM_BETA2, f64::from(self.t));
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / (math::sqrt(*v / c2) + ADAM_EPSILON);
        }
    }
}

/// Epoch-at-a-time trainer, so callers can inspect the model between epochs.
#[derive(Debug, Clone)]
pub struct Trainer<'a> {
    data: &'a [GraphSample],
    config: TrainConfig,
    params: ModelParams,
    adam: Adam,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    losses: Vec<f64>,
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a [GraphSample], config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let first = data.first().ok_or(Error::Empty("training set"))?;
        let width = first.nodes.width();
        if let Some(bad) = data.iter().find(|s| s.nodes.width() != width) {
            return Err(Error::WidthMismatch {
                expected: width,
                found: bad.nodes.width(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = ModelParams::init(ModelDims::new(width, config.dense_width), rng.next_u64())?;
        Ok(Trainer {
            data,
            config,
            adam: Adam::new(params.dims().len()),
            params,
            rng,
            order: (0..data.len()).collect(),
            losses: Vec::with_capacity(config.epochs),
        })
    }

    /// Run one epoch and return its mean training loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        let epoch = self.losses.len() + 1;
        self.order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let order = core::mem::take(&mut self.order);
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&GraphSample> = chunk.iter().map(|&i| &self.data[i]).collect();
            let dropout = Dropout::On {
                rate: self.config.dropout_rate,
                seed: self.rng.next_u64(),
            };
            let (l, grad) = gradient(&self.params, &batch, dropout)?;
            if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            total += l * chunk.len() as f64;
            self.adam
                .step(self.params.as_mut_slice(), &grad, self.config.learning_rate);
        }
        self.order = order;
        if self.params.as_slice().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        let mean = total / self.data.len() as f64;
        self.losses.push(mean);
        Ok(mean)
    }

    pub fn epochs_done(&self) -> usize {
        self.losses.len()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn into_report(self) -> TrainReport {
        TrainReport {
            epoch_losses: self.losses,
            params: self.params,
            seed: self.config.seed,
            config: self.config,
        }
    }
}

/// Train for `config.epochs` epochs with Adam on shuffled mini-batches.
pub fn train(data: &[GraphSample], config: &TrainConfig) -> Result<TrainReport> {
    let mut trainer = Trainer::new(data, *config)?;
    for _ in 0..config.epochs {
        trainer.run_epoch()?;
    }
    Ok(trainer.into_report())
}
