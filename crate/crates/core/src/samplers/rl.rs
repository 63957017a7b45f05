//! Actor-critic keep/discard policy.
//!
//! Each episode the actor emits a keep probability per candidate, binary
//! decisions are sampled, a fresh child network is trained on the real
//! subset plus the kept candidates, and its validation accuracy is compared
//! with the mean of the previous (up to five) scores: above it earns +1,
//! otherwise −1. The actor follows `(r − V) · ∇ Σ log π(a_i | x_i)`; the
//! critic regresses toward `r`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Candidate, SelectionResult};
use crate::datagen::LabeledData;
use crate::models::{evaluate, train_child, TrainConfig};
use crate::numkit::{init_params, sgd_step, GradientBundle, LayerSpec, Matrix, ParameterSet, Velocity};
use crate::seeds;
use crate::{Error, Result};

pub const WINDOW_LEN: usize = 5;

/// Mean of the window; `0.0` while it is empty.
pub fn compute_threshold(window: &[f64]) -> f64 {
    if window.is_empty() {
        0.0
    } else {
        window.iter().sum::<f64>() / window.len() as f64
    }
}

/// Most recent validation scores, oldest first, at most [`WINDOW_LEN`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreWindow {
    scores: Vec<f64>,
}

impl ScoreWindow {
    pub fn push(&mut self, score: f64) {
        self.scores.push(score);
        if self.scores.len() > WINDOW_LEN {
            self.scores.remove(0);
        }
    }

    pub fn threshold(&self) -> f64 {
        compute_threshold(&self.scores)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub episodes: usize,
    /// Shared trunk widths; the output layer has two heads (actor logit, critic value).
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub momentum: f64,
    /// Weight of the critic's squared error relative to the actor loss.
    pub critic_coef: f64,
    /// Training recipe for each episode's child network (seed is replaced per episode).
    pub child: TrainConfig,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            episodes: 200,
            hidden: vec![32, 16],
            lr: 0.03,
            momentum: 0.5,
            critic_coef: 1.0,
            child: TrainConfig {
                epochs: 20,
                batch_size: 8,
                lr: 0.05,
                momentum: 0.9,
                seed: 0,
                shuffle: true,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub t: usize,
    pub kept_count: usize,
    pub val_score: f64,
    pub threshold: f64,
    pub reward: f64,
    pub mean_keep_prob: f64,
    pub critic_value: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrainState {
    pub params: ParameterSet,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Episodes completed.
    pub episode: usize,
    pub window: ScoreWindow,
    pub seed: u64,
    pub log: Vec<EpisodeLog>,
}

impl PolicyTrainState {
    /// Untrained policy with a zero output layer (keep probability 0.5 everywhere).
    pub fn new(feature_dim: usize, num_classes: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut dims = vec![feature_dim + num_classes];
        dims.extend_from_slice(hidden);
        dims.push(2);
        let mut params = init_params(&LayerSpec::stack(&dims), seed)?;
        params.zero_output_layer();
        Ok(Self {
            params,
            num_classes,
            feature_dim,
            episode: 0,
            window: ScoreWindow::default(),
            seed,
            log: Vec::new(),
        })
    }
}

/// Policy input rows: features followed by the one-hot target label.
pub fn policy_input(candidates: &[Candidate], feature_dim: usize, num_classes: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(candidates.len(), feature_dim + num_classes);
    for (i, c) in candidates.iter().enumerate() {
        if c.features.len() != feature_dim {
            return Err(Error::Input(format!(
                "candidate {} has {} features, policy expects {feature_dim}",
                c.example_id,
                c.features.len()
            )));
        }
        if c.target_label >= num_classes {
            return Err(Error::Input(format!("candidate {} label out of range", c.example_id)));
        }
        let row = m.row_mut(i);
        row[..feature_dim].copy_from_slice(&c.features);
        row[feature_dim + c.target_label] = 1.0;
    }
    Ok(m)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Actor keep probability per candidate.
pub fn keep_probabilities(state: &PolicyTrainState, candidates: &[Candidate]) -> Result<Vec<f64>> {
    let x = policy_input(candidates, state.feature_dim, state.num_classes)?;
    let out = state.params.logits(&x)?;
    Ok((0..out.rows()).map(|r| sigmoid(out.get(r, 0))).collect())
}

fn union(real: &LabeledData, candidates: &[Candidate], keep: &[bool]) -> Result<LabeledData> {
    let mut data = real.clone();
    for (c, _) in candidates.iter().zip(keep).filter(|(_, &k)| k) {
        data.push(&c.features, c.target_label, c.example_id)?;
    }
    Ok(data)
}

/// Runs `cfg.episodes` episodes and returns the trained policy.
pub fn rl_train(
    candidates: &[Candidate],
    real_subset: &LabeledData,
    val: &LabeledData,
    cfg: &PolicyConfig,
) -> Result<PolicyTrainState> {
    if cfg.episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    if candidates.is_empty() {
        return Err(Error::Input("policy training needs a non-empty pool".into()));
    }
    if val.is_empty() {
        return Err(Error::Input("policy training needs a validation set".into()));
    }
    cfg.child.validate()?;
    let mut state = PolicyTrainState::new(
        real_subset.feature_dim(),
        real_subset.num_classes,
        &cfg.hidden,
        cfg.seed,
    )?;
    let x = policy_input(candidates, state.feature_dim, state.num_classes)?;
    let m = candidates.len() as f64;
    let mut velocity = Velocity::zeros_like(&state.params);

    for t in 1..=cfg.episodes {
        let trace = state.params.forward_trace(&x)?;
        let out = &trace.output;
        let probs: Vec<f64> = (0..out.rows()).map(|r| sigmoid(out.get(r, 0))).collect();
        let value = (0..out.rows()).map(|r| out.get(r, 1)).sum::<f64>() / m;

        let mut rng = seeds::item_rng(cfg.seed, "rl-actions", t as u64);
        let keep: Vec<bool> = probs.iter().map(|&p| rng.random_bool(p)).collect();
        let kept_count = keep.iter().filter(|&&k| k).count();

        let child_cfg = cfg
            .child
            .with_seed(seeds::derive(cfg.seed, &[b"child", &(t as u64).to_le_bytes()]));
        let data = union(real_subset, candidates, &keep)?;
        let (score, failed) = match train_child(&data, &child_cfg) {
            Ok(child) => (evaluate(&child, val)?.micro_mean, false),
            Err(Error::Diverged { .. }) => (0.0, true),
            Err(e) => return Err(e),
        };

        let threshold = state.window.threshold();
        let reward = if !failed && score > threshold { 1.0 } else { -1.0 };
        let advantage = reward - value;

        let mut d_out = Matrix::zeros(out.rows(), 2);
        for (i, (&p, &k)) in probs.iter().zip(&keep).enumerate() {
            let a = if k { 1.0 } else { 0.0 };
            d_out.set(i, 0, -advantage * (a - p) / m);
            d_out.set(i, 1, cfg.critic_coef * (value - reward) / m);
        }
        let grads = GradientBundle {
            layers: state.params.backward(&trace, &d_out)?,
            loss: 0.5 * (value - reward).powi(2),
        };
        sgd_step(&mut state.params, &grads, cfg.lr, cfg.momentum, &mut velocity)?;

        state.window.push(score);
        state.episode = t;
        state.log.push(EpisodeLog {
            t,
            kept_count,
            val_score: score,
            threshold,
            reward,
            mean_keep_prob: probs.iter().sum::<f64>() / m,
            critic_value: value,
            failed,
        });
    }
    Ok(state)
}

/// Keeps every candidate whose keep probability is at least 0.5.
pub fn rl_apply(
    state: &PolicyTrainState,
    candidates: &[Candidate],
    real_train_size: usize,
) -> Result<SelectionResult> {
    let probs = keep_probabilities(state, candidates)?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (c, &p) in candidates.iter().zip(&probs) {
        if p >= 0.5 {
            ids.push(c.example_id);
            labels.push(c.target_label);
        }
    }
    Ok(SelectionResult::new(ids, &labels, state.num_classes, real_train_size))
}
