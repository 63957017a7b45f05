use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::LabeledData;
use crate::numkit::{loss_and_grad, one_hot, sgd_step, ParameterSet, Velocity};
use crate::seeds;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
}

fn default_shuffle() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            lr: 0.05,
            momentum: 0.9,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} outside [0,1)", self.momentum)));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Where a trained model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub data_fingerprint: String,
    pub config: TrainConfig,
}

/// SHA-256 over features, labels and ids.
pub fn data_fingerprint(data: &LabeledData) -> String {
    let mut bytes = Vec::with_capacity(data.features.data().len() * 8 + data.len() * 16);
    for v in data.features.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for (&y, &id) in data.labels.iter().zip(&data.ids) {
        bytes.extend_from_slice(&(y as u64).to_le_bytes());
        bytes.extend_from_slice(&id.to_le_bytes());
    }
    seeds::fingerprint(&bytes)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParameterSet,
    /// Example-weighted mean loss of each epoch.
    pub loss_trace: Vec<f64>,
}

/// Mini-batch momentum SGD on softmax cross-entropy, starting from `params`.
pub fn fit(mut params: ParameterSet, data: &LabeledData, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("cannot train on an empty set".into()));
    }
    if data.feature_dim() != params.input_dim() || data.num_classes != params.output_dim() {
        return Err(Error::Input(format!(
            "data ({} features, {} classes) does not fit network {}→{}",
            data.feature_dim(),
            data.num_classes,
            params.input_dim(),
            params.output_dim()
        )));
    }
    let targets_all = one_hot(&data.labels, data.num_classes)?;
    let mut velocity = Velocity::zeros_like(&params);
    let mut rng = seeds::rng(cfg.seed, "batch-order");
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.features.select_rows(chunk);
            let targets = targets_all.select_rows(chunk);
            let grads = loss_and_grad(&params, &batch, &targets)?;
            if !grads.loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += grads.loss * chunk.len() as f64;
            sgd_step(&mut params, &grads, cfg.lr, cfg.momentum, &mut velocity)?;
        }
        if params.layers.iter().any(|l| !l.weights.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        loss_trace.push(total / data.len() as f64);
    }
    Ok(TrainOutcome { params, loss_trace })
}
