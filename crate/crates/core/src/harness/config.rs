use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{CategoryBalance, RealDatasetSpec, SplitFractions, TranslatorConfig};
use crate::models::TrainConfig;
use crate::samplers::{PolicyConfig, SamplerKind};
use crate::{Error, Result};

pub const CONFIG_SCHEMA: u32 = 1;

/// Overrides the seed list with a single seed.
pub const SEED_ENV: &str = "SYNTHSIEVE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerGrid {
    pub kind: SamplerKind,
    /// Ignored for `rl`, which picks its own selection size.
    #[serde(default)]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfigs {
    pub baseline: TrainConfig,
    pub augmented: TrainConfig,
    pub discriminator: TrainConfig,
    pub child: TrainConfig,
}

/// Reinforcement-learning sampler setup used by `rl` grid cells and `rl-train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySetup {
    pub episodes: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub momentum: f64,
    pub critic_coef: f64,
    /// Fraction of the real train split (per category) the policy trains with.
    pub real_fraction: f64,
    /// Training pool size as a multiple of that real subset.
    pub pool_multiplier: f64,
}

impl PolicySetup {
    pub fn policy_config(&self, child: TrainConfig, seed: u64) -> PolicyConfig {
        PolicyConfig {
            episodes: self.episodes,
            hidden: self.hidden.clone(),
            lr: self.lr,
            momentum: self.momentum,
            critic_coef: self.critic_coef,
            child,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub dataset: RealDatasetSpec,
    pub translator: TranslatorConfig,
    pub fold_multiplier: f64,
    #[serde(default)]
    pub category_balance: CategoryBalance,
    pub samplers: Vec<SamplerGrid>,
    pub classifier_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub train: TrainConfigs,
    pub policy: PolicySetup,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_bins() -> usize {
    20
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig {
            epochs: 10,
            batch_size: 32,
            lr: 0.01,
            momentum: 0.9,
            seed: 0,
            shuffle: true,
        };
        // one short epoch leaves the baseline short of convergence
        let classifier = TrainConfig {
            epochs: 1,
            lr: 0.00015,
            ..train
        };
        Self {
            schema: CONFIG_SCHEMA,
            dataset: RealDatasetSpec {
                num_classes: 8,
                feature_dim: 64,
                per_class_counts: vec![1200, 1200, 1200, 1200, 100, 100, 100, 100],
                noise_sigma: 1.0,
                split: SplitFractions::default(),
                seed: 0,
            },
            translator: TranslatorConfig {
                alpha: 0.9,
                p_flip: 0.3,
                artifact_sigma_max: 2.0,
                seed: 0,
            },
            fold_multiplier: 7.0,
            category_balance: CategoryBalance::Proportional,
            samplers: vec![
                SamplerGrid {
                    kind: SamplerKind::Random,
                    ratios: vec![1.0, 2.0, 5.0],
                },
                SamplerGrid {
                    kind: SamplerKind::Cl,
                    ratios: vec![1.0, 2.0, 5.0],
                },
                SamplerGrid {
                    kind: SamplerKind::Cr,
                    ratios: vec![1.0, 2.0, 5.0],
                },
            ],
            classifier_hidden: vec![128],
            discriminator_hidden: vec![32],
            train: TrainConfigs {
                baseline: classifier,
                augmented: classifier,
                discriminator: TrainConfig {
                    epochs: 10,
                    ..train
                },
                child: TrainConfig {
                    epochs: 20,
                    batch_size: 8,
                    lr: 0.05,
                    ..train
                },
            },
            policy: PolicySetup {
                episodes: 200,
                hidden: vec![32, 16],
                lr: 0.03,
                momentum: 0.5,
                critic_coef: 1.0,
                real_fraction: 0.1,
                pool_multiplier: 8.0,
            },
            seeds: vec![1, 2, 3, 4, 5],
            output_dir: PathBuf::from("out"),
            histogram_bins: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::ConfigNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `SYNTHSIEVE_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} is not an integer: {v}")))?;
            self.seeds = vec![seed];
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported config schema {} (expected {CONFIG_SCHEMA})",
                self.schema
            )));
        }
        self.dataset.validate()?;
        self.translator.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(self.fold_multiplier >= 0.0 && self.fold_multiplier.is_finite()) {
            return Err(Error::Config("fold_multiplier must be finite and >= 0".into()));
        }
        for g in &self.samplers {
            for &r in &g.ratios {
                if !(r >= 0.0 && r <= self.fold_multiplier) {
                    return Err(Error::Config(format!(
                        "{} ratio {r} outside [0, fold_multiplier={}]",
                        g.kind, self.fold_multiplier
                    )));
                }
            }
        }
        for t in [
            &self.train.baseline,
            &self.train.augmented,
            &self.train.discriminator,
            &self.train.child,
        ] {
            t.validate()?;
        }
        if self.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be at least 1".into()));
        }
        let p = &self.policy;
        if p.episodes == 0 || !(p.real_fraction > 0.0 && p.real_fraction <= 1.0) || !(p.pool_multiplier > 0.0) {
            return Err(Error::Config("invalid policy setup".into()));
        }
        Ok(())
    }
}
