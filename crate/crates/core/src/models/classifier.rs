use serde::{Deserialize, Serialize};

use super::train::{data_fingerprint, fit, Provenance, TrainConfig};
use crate::datagen::LabeledData;
use crate::numkit::{init_params, LayerSpec, Matrix, ParameterSet};
use crate::{Error, Result};

/// Hidden widths of the child network used for policy rewards.
pub const CHILD_HIDDEN: [usize; 2] = [32, 16];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub params: ParameterSet,
    pub num_classes: usize,
    pub provenance: Provenance,
    pub loss_trace: Vec<f64>,
}

impl ClassifierModel {
    /// Wraps existing parameters (no training provenance).
    pub fn from_params(params: ParameterSet) -> Self {
        let num_classes = params.output_dim();
        Self {
            params,
            num_classes,
            provenance: Provenance {
                data_fingerprint: String::new(),
                config: TrainConfig::default(),
            },
            loss_trace: Vec::new(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.params.input_dim()
    }
}

/// Trains a fresh network of shape `arch` (initialised from `cfg.seed`).
pub fn train_classifier(
    train: &LabeledData,
    cfg: &TrainConfig,
    arch: &[LayerSpec],
) -> Result<ClassifierModel> {
    let init = init_params(arch, cfg.seed)?;
    if init.output_dim() != train.num_classes {
        return Err(Error::Config(format!(
            "architecture outputs {} classes, data has {}",
            init.output_dim(),
            train.num_classes
        )));
    }
    let outcome = fit(init, train, cfg)?;
    Ok(ClassifierModel {
        params: outcome.params,
        num_classes: train.num_classes,
        provenance: Provenance {
            data_fingerprint: data_fingerprint(train),
            config: *cfg,
        },
        loss_trace: outcome.loss_trace,
    })
}

/// Small classifier `d → 32 → 16 → C`.
pub fn train_child(data: &LabeledData, cfg: &TrainConfig) -> Result<ClassifierModel> {
    let mut dims = vec![data.feature_dim()];
    dims.extend(CHILD_HIDDEN);
    dims.push(data.num_classes);
    train_classifier(data, cfg, &LayerSpec::stack(&dims))
}

/// `P(target | features)` under the classifier.
pub fn class_confidence(model: &ClassifierModel, features: &[f64], target: usize) -> Result<f64> {
    if target >= model.num_classes {
        return Err(Error::Input(format!(
            "target {target} out of range for {} classes",
            model.num_classes
        )));
    }
    let x = Matrix::from_vec(1, features.len(), features.to_vec())?;
    Ok(model.params.forward(&x)?.get(0, target))
}

/// Row-wise [`class_confidence`] for a batch.
pub fn class_confidences(
    model: &ClassifierModel,
    features: &Matrix,
    targets: &[usize],
) -> Result<Vec<f64>> {
    if targets.len() != features.rows() {
        return Err(Error::Input("one target per row required".into()));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= model.num_classes) {
        return Err(Error::Input(format!("target {t} out of range")));
    }
    let probs = model.params.forward(features)?;
    Ok(targets.iter().enumerate().map(|(i, &t)| probs.get(i, t)).collect())
}

/// Arg-max class per row, ties toward the lowest class id.
pub fn predict(model: &ClassifierModel, features: &Matrix) -> Result<Vec<usize>> {
    let logits = model.params.logits(features)?;
    Ok((0..logits.rows())
        .map(|r| {
            let row = logits.row(r);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect())
}
