//! Desk-scale data: labelled "real" examples drawn around well-separated class
//! prototypes, and a translator that moves them toward a target category with
//! controllable label-flip and artifact-noise corruption.
//!
//! Ground-truth corruption metadata ([`GroundTruth`]) travels with each
//! synthetic example for evaluation. Samplers only ever see
//! [`crate::samplers::Candidate`] views, which do not carry it.

mod file;
mod pool;
mod real;
mod translate;

pub use file::{
    export_csv, read_sds, write_sds, SdsFile, SdsHeader, SdsRecord, Split, SDS_MAGIC,
};
pub use pool::{build_pool, CategoryBalance, SyntheticPool};
pub use real::{generate_real, Prototypes, RealData, RealDatasetSpec, SplitFractions};
pub use translate::{GroundTruth, SyntheticExample, Translator, TranslatorConfig};

use serde::{Deserialize, Serialize};

use crate::numkit::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: usize,
    pub origin: Origin,
    pub example_id: u64,
}

/// An ordered collection of labelled examples sharing one feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub examples: Vec<LabeledExample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.examples.iter().map(|e| e.example_id)
    }

    pub fn to_labeled_data(&self) -> LabeledData {
        let mut data = LabeledData::empty(self.num_classes, self.feature_dim);
        for e in &self.examples {
            data.push(&e.features, e.label, e.example_id)
                .expect("dataset examples share its feature dimension");
        }
        data
    }
}

/// Feature matrix plus integer labels, the training/evaluation currency of
/// [`crate::models`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub ids: Vec<u64>,
    pub num_classes: usize,
}

impl LabeledData {
    pub fn empty(num_classes: usize, feature_dim: usize) -> Self {
        Self {
            features: Matrix::zeros(0, feature_dim),
            labels: Vec::new(),
            ids: Vec::new(),
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn push(&mut self, features: &[f64], label: usize, id: u64) -> Result<()> {
        if label >= self.num_classes {
            return Err(Error::Input(format!(
                "label {label} out of range for {} classes",
                self.num_classes
            )));
        }
        let row = Matrix::from_vec(1, features.len(), features.to_vec())?;
        self.features.append_rows(&row)?;
        self.labels.push(label);
        self.ids.push(id);
        Ok(())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}
