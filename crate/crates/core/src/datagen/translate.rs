use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{LabeledExample, Prototypes};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslatorConfig {
    /// Pull strength toward the destination prototype, in `[0, 1]`.
    pub alpha: f64,
    /// Probability that the translation lands on a wrong category.
    pub p_flip: f64,
    /// Upper bound of the per-example artifact-noise standard deviation.
    pub artifact_sigma_max: f64,
    pub seed: u64,
}

impl TranslatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0,1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.p_flip) {
            return Err(Error::Config(format!("p_flip {} outside [0,1]", self.p_flip)));
        }
        if !(self.artifact_sigma_max >= 0.0 && self.artifact_sigma_max.is_finite()) {
            return Err(Error::Config("artifact_sigma_max must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Corruption actually applied to a synthetic example. Evaluation only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    effective_label: usize,
    artifact_magnitude: f64,
}

impl GroundTruth {
    pub fn new(effective_label: usize, artifact_magnitude: f64) -> Self {
        Self {
            effective_label,
            artifact_magnitude,
        }
    }

    /// Category the features actually belong to.
    pub fn effective_label(&self) -> usize {
        self.effective_label
    }

    /// Standard deviation of the artifact noise that was injected.
    pub fn artifact_magnitude(&self) -> f64 {
        self.artifact_magnitude
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticExample {
    pub features: Vec<f64>,
    pub source_label: usize,
    pub target_label: usize,
    pub example_id: u64,
    pub truth: GroundTruth,
}

impl SyntheticExample {
    pub fn label_preserved(&self) -> bool {
        self.truth.effective_label == self.target_label
    }
}

/// Prototype-interpolating stand-in for an image-to-image translation GAN.
#[derive(Debug, Clone)]
pub struct Translator {
    prototypes: Prototypes,
    cfg: TranslatorConfig,
}

impl Translator {
    pub fn new(prototypes: Prototypes, cfg: TranslatorConfig) -> Result<Self> {
        cfg.validate()?;
        if prototypes.num_classes() < 2 {
            return Err(Error::Config("translator needs at least two prototypes".into()));
        }
        Ok(Self { prototypes, cfg })
    }

    pub fn config(&self) -> &TranslatorConfig {
        &self.cfg
    }

    pub fn num_classes(&self) -> usize {
        self.prototypes.num_classes()
    }

    /// `(1−α)·x + α·μ_dest + a·ε`, where `μ_dest` is the target prototype with
    /// probability `1 − p_flip` and otherwise a uniformly chosen other
    /// prototype; `a ~ U[0, artifact_sigma_max]`, `ε ~ N(0, I)`.
    pub fn translate<R: Rng + ?Sized>(
        &self,
        example: &LabeledExample,
        target: usize,
        example_id: u64,
        rng: &mut R,
    ) -> Result<SyntheticExample> {
        let c = self.num_classes();
        if target >= c {
            return Err(Error::Input(format!(
                "target {target} out of range for {c} classes"
            )));
        }
        if example.features.len() != self.prototypes.dim() {
            return Err(Error::Input(format!(
                "example has {} features, prototypes have {}",
                example.features.len(),
                self.prototypes.dim()
            )));
        }
        let flipped = rng.random_bool(self.cfg.p_flip);
        let effective = if flipped {
            let k = rng.random_range(0..c - 1);
            if k >= target {
                k + 1
            } else {
                k
            }
        } else {
            target
        };
        let magnitude = if self.cfg.artifact_sigma_max > 0.0 {
            rng.random_range(0.0..=self.cfg.artifact_sigma_max)
        } else {
            0.0
        };
        let alpha = self.cfg.alpha;
        let dest = &self.prototypes.vectors[effective];
        let features = example
            .features
            .iter()
            .zip(dest)
            .map(|(&x, &m)| {
                let noise: f64 = rng.sample(StandardNormal);
                (1.0 - alpha) * x + alpha * m + magnitude * noise
            })
            .collect();
        Ok(SyntheticExample {
            features,
            source_label: example.label,
            target_label: target,
            example_id,
            truth: GroundTruth::new(effective, magnitude),
        })
    }
}
