use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classifier::{predict, ClassifierModel};
use crate::datagen::LabeledData;
use crate::{Error, Result};

/// Per-category, macro and micro accuracy on a labelled set.
///
/// Categories with no test examples are left out of `per_category` and the
/// macro mean, and listed in `empty_categories`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_category: BTreeMap<usize, f64>,
    pub per_category_n: BTreeMap<usize, usize>,
    pub macro_mean: f64,
    pub micro_mean: f64,
    pub n_examples: usize,
    pub empty_categories: Vec<usize>,
}

impl EvalReport {
    pub fn from_predictions(
        predictions: &[usize],
        labels: &[usize],
        num_classes: usize,
    ) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::Input("predictions and labels differ in length".into()));
        }
        if labels.is_empty() {
            return Err(Error::Input("cannot evaluate on an empty set".into()));
        }
        let mut correct = vec![0usize; num_classes];
        let mut total = vec![0usize; num_classes];
        for (&p, &y) in predictions.iter().zip(labels) {
            if y >= num_classes {
                return Err(Error::Input(format!("label {y} out of range")));
            }
            total[y] += 1;
            if p == y {
                correct[y] += 1;
            }
        }
        let mut per_category = BTreeMap::new();
        let mut per_category_n = BTreeMap::new();
        let mut empty_categories = Vec::new();
        for k in 0..num_classes {
            if total[k] == 0 {
                empty_categories.push(k);
            } else {
                per_category.insert(k, correct[k] as f64 / total[k] as f64);
                per_category_n.insert(k, total[k]);
            }
        }
        let macro_mean = per_category.values().sum::<f64>() / per_category.len() as f64;
        let micro_mean = correct.iter().sum::<usize>() as f64 / labels.len() as f64;
        Ok(Self {
            per_category,
            per_category_n,
            macro_mean,
            micro_mean,
            n_examples: labels.len(),
            empty_categories,
        })
    }
}

pub fn evaluate(model: &ClassifierModel, test: &LabeledData) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty set".into()));
    }
    let preds = predict(model, &test.features)?;
    EvalReport::from_predictions(&preds, &test.labels, model.num_classes)
}
