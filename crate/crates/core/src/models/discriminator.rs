use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::train::{Provenance, TrainConfig};
use crate::numkit::{
    init_params, loss_and_grad, sgd_step, LayerSpec, Matrix, ParameterSet, Velocity,
};
use crate::seeds;
use crate::{Error, Result};

/// Which output index stands for "real".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelConvention {
    /// real = 1, fake = 0
    #[default]
    RealIsOne,
    /// real = 0, fake = 1
    RealIsZero,
}

impl LabelConvention {
    pub fn real_index(self) -> usize {
        match self {
            LabelConvention::RealIsOne => 1,
            LabelConvention::RealIsZero => 0,
        }
    }
}

/// Real-vs-synthetic classifier with two outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorModel {
    pub params: ParameterSet,
    pub convention: LabelConvention,
    pub provenance: Provenance,
    pub loss_trace: Vec<f64>,
}

impl DiscriminatorModel {
    pub fn from_params(params: ParameterSet, convention: LabelConvention) -> Result<Self> {
        if params.output_dim() != 2 {
            return Err(Error::Config("discriminator must have two outputs".into()));
        }
        Ok(Self {
            params,
            convention,
            provenance: Provenance {
                data_fingerprint: String::new(),
                config: TrainConfig::default(),
            },
            loss_trace: Vec::new(),
        })
    }

    /// Two-class probabilities `[p0, p1]` per row.
    pub fn probabilities(&self, features: &Matrix) -> Result<Matrix> {
        self.params.forward(features)
    }
}

/// Trains `d → hidden… → 2` on real vs. synthetic rows with a zero-initialised
/// output layer. Each mini-batch holds half real and half synthetic rows; an
/// epoch walks the larger side once and cycles the smaller.
pub fn train_discriminator(
    real: &Matrix,
    fake: &Matrix,
    cfg: &TrainConfig,
    hidden: &[usize],
    convention: LabelConvention,
) -> Result<DiscriminatorModel> {
    cfg.validate()?;
    if real.rows() == 0 || fake.rows() == 0 {
        return Err(Error::Input("discriminator needs real and synthetic examples".into()));
    }
    if real.cols() != fake.cols() {
        return Err(Error::Input("real and synthetic feature widths differ".into()));
    }
    let mut dims = vec![real.cols()];
    dims.extend_from_slice(hidden);
    dims.push(2);
    let mut params = init_params(&LayerSpec::stack(&dims), cfg.seed)?;
    params.zero_output_layer();

    let real_label = convention.real_index();
    let fake_label = 1 - real_label;
    let half = (cfg.batch_size / 2).max(1);
    let mut rng = seeds::rng(cfg.seed, "disc-batches");
    let mut real_order: Vec<usize> = (0..real.rows()).collect();
    let mut fake_order: Vec<usize> = (0..fake.rows()).collect();
    let n_batches = real.rows().max(fake.rows()).div_ceil(half);
    let mut velocity = Velocity::zeros_like(&params);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            real_order.shuffle(&mut rng);
            fake_order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for b in 0..n_batches {
            let r_idx: Vec<usize> = (0..half)
                .map(|k| real_order[(b * half + k) % real_order.len()])
                .collect();
            let f_idx: Vec<usize> = (0..half)
                .map(|k| fake_order[(b * half + k) % fake_order.len()])
                .collect();
            let mut batch = real.select_rows(&r_idx);
            batch.append_rows(&fake.select_rows(&f_idx))?;
            let mut targets = Matrix::zeros(2 * half, 2);
            for i in 0..half {
                targets.set(i, real_label, 1.0);
                targets.set(half + i, fake_label, 1.0);
            }
            let grads = loss_and_grad(&params, &batch, &targets)?;
            if !grads.loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += grads.loss;
            sgd_step(&mut params, &grads, cfg.lr, cfg.momentum, &mut velocity)?;
        }
        loss_trace.push(total / n_batches as f64);
    }

    let mut fp = Vec::new();
    for m in [real, fake] {
        for v in m.data() {
            fp.extend_from_slice(&v.to_le_bytes());
        }
        fp.push(0xff);
    }
    Ok(DiscriminatorModel {
        params,
        convention,
        provenance: Provenance {
            data_fingerprint: seeds::fingerprint(&fp),
            config: *cfg,
        },
        loss_trace,
    })
}

/// Probability of the "real" class.
pub fn realism_score(model: &DiscriminatorModel, features: &[f64]) -> Result<f64> {
    let x = Matrix::from_vec(1, features.len(), features.to_vec())?;
    Ok(model.probabilities(&x)?.get(0, model.convention.real_index()))
}

pub fn realism_scores(model: &DiscriminatorModel, features: &Matrix) -> Result<Vec<f64>> {
    let p = model.probabilities(features)?;
    let k = model.convention.real_index();
    Ok((0..p.rows()).map(|r| p.get(r, k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::ParameterSet;

    #[test]
    fn zero_model_scores_half() {
        let m = DiscriminatorModel::from_params(
            ParameterSet::zeros(&LayerSpec::stack(&[3, 4, 2])).unwrap(),
            LabelConvention::RealIsOne,
        )
        .unwrap();
        let s = realism_score(&m, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn score_and_fake_probability_sum_to_one() {
        let real = Matrix::from_vec(4, 2, vec![1., 1., 1.2, 0.9, 0.8, 1.1, 1.0, 1.3]).unwrap();
        let fake = Matrix::from_vec(3, 2, vec![-1., -1., -1.2, -0.7, -0.9, -1.1]).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 4,
            lr: 0.1,
            ..TrainConfig::default()
        };
        let m = train_discriminator(&real, &fake, &cfg, &[4], LabelConvention::RealIsOne).unwrap();
        let probe = [0.3, -0.2];
        let s = realism_score(&m, &probe).unwrap();
        let p = m
            .probabilities(&Matrix::from_vec(1, 2, probe.to_vec()).unwrap())
            .unwrap();
        assert!((s + p.get(0, 0) - 1.0).abs() < 1e-9);
        assert!(realism_score(&m, &[1.0, 1.0]).unwrap() > realism_score(&m, &[-1.0, -1.0]).unwrap());
    }

    #[test]
    fn untrained_discriminator_is_indifferent() {
        let real = Matrix::from_vec(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let fake = Matrix::from_vec(1, 2, vec![0., 1.]).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let m = train_discriminator(&real, &fake, &cfg, &[8], LabelConvention::RealIsOne).unwrap();
        assert!(realism_scores(&m, &real).unwrap().iter().all(|&s| s == 0.5));
    }
}
