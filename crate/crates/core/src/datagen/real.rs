use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, LabeledExample, Origin};
use crate::seeds;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDatasetSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Examples per class before splitting; may be imbalanced.
    pub per_class_counts: Vec<usize>,
    pub noise_sigma: f64,
    pub split: SplitFractions,
    /// Seeds both the prototypes and the per-example noise.
    pub seed: u64,
}

impl RealDatasetSpec {
    /// Balanced spec with `per_class` examples in each of `num_classes` classes.
    pub fn balanced(num_classes: usize, feature_dim: usize, per_class: usize, seed: u64) -> Self {
        Self {
            num_classes,
            feature_dim,
            per_class_counts: vec![per_class; num_classes],
            noise_sigma: 1.0,
            split: SplitFractions::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config("need at least two classes".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be at least 1".into()));
        }
        if self.per_class_counts.len() != self.num_classes {
            return Err(Error::Config(format!(
                "{} per-class counts given for {} classes",
                self.per_class_counts.len(),
                self.num_classes
            )));
        }
        if self.per_class_counts.iter().any(|&c| c == 0) {
            return Err(Error::Config("every class needs at least one example".into()));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be positive and finite".into()));
        }
        let s = self.split;
        if [s.train, s.val, s.test].iter().any(|f| !(0.0..=1.0).contains(f))
            || (s.train + s.val + s.test - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(
                "split fractions must lie in [0,1] and sum to 1".into(),
            ));
        }
        if self.num_classes > 2 * self.feature_dim {
            return Err(Error::Config(format!(
                "cannot place {} separated prototypes in {} dimensions (at most {})",
                self.num_classes,
                self.feature_dim,
                2 * self.feature_dim
            )));
        }
        Ok(())
    }

    /// Minimum pairwise prototype distance the construction guarantees.
    pub fn min_separation(&self) -> f64 {
        4.0 * self.noise_sigma * (self.feature_dim as f64).sqrt()
    }
}

/// Class centres, one vector per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototypes {
    pub vectors: Vec<Vec<f64>>,
}

impl Prototypes {
    pub fn num_classes(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.vectors.len() {
            for j in i + 1..self.vectors.len() {
                let d: f64 = self.vectors[i]
                    .iter()
                    .zip(&self.vectors[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                best = best.min(d);
            }
        }
        best
    }
}

/// Orthonormal frame from Gram–Schmidt on Gaussian draws; classes beyond `d`
/// reuse the negated frame vectors (cross-polytope vertices). Any two vertices
/// are at least `sqrt(2)·radius` apart.
fn build_prototypes(spec: &RealDatasetSpec) -> Prototypes {
    let d = spec.feature_dim;
    let c = spec.num_classes;
    let mut rng = seeds::rng(spec.seed, "prototypes");
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(c.min(d));
    while frame.len() < c.min(d) {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for u in &frame {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        frame.push(v);
    }
    // sqrt(2)·radius = 4σ√d, with a hair of slack against rounding
    let radius = spec.min_separation() / std::f64::consts::SQRT_2 * (1.0 + 1e-9);
    let vectors = (0..c)
        .map(|k| {
            let (u, sign) = if k < d { (&frame[k], 1.0) } else { (&frame[k - d], -1.0) };
            u.iter().map(|x| sign * radius * x).collect()
        })
        .collect();
    Prototypes { vectors }
}

/// The three disjoint splits of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealData {
    pub spec: RealDatasetSpec,
    pub prototypes: Prototypes,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl RealData {
    /// First id not used by any real example.
    pub fn next_id(&self) -> u64 {
        self.train
            .ids()
            .chain(self.val.ids())
            .chain(self.test.ids())
            .max()
            .map_or(0, |m| m + 1)
    }
}

/// Per-class split sizes: `round` for train and val, the remainder for test.
fn split_sizes(n: usize, s: &SplitFractions) -> (usize, usize, usize) {
    let train = ((n as f64 * s.train).round() as usize).min(n);
    let val = ((n as f64 * s.val).round() as usize).min(n - train);
    (train, val, n - train - val)
}

pub fn generate_real(spec: &RealDatasetSpec) -> Result<RealData> {
    spec.validate()?;
    let prototypes = build_prototypes(spec);
    let mut rng = seeds::rng(spec.seed, "real-examples");
    let empty = || Dataset {
        num_classes: spec.num_classes,
        feature_dim: spec.feature_dim,
        examples: Vec::new(),
    };
    let (mut train, mut val, mut test) = (empty(), empty(), empty());
    let mut next_id = 0u64;
    for (class, &n) in spec.per_class_counts.iter().enumerate() {
        let (n_train, n_val, _) = split_sizes(n, &spec.split);
        for i in 0..n {
            let features = prototypes.vectors[class]
                .iter()
                .map(|&m| m + spec.noise_sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let ex = LabeledExample {
                features,
                label: class,
                origin: Origin::Real,
                example_id: next_id,
            };
            next_id += 1;
            if i < n_train {
                train.examples.push(ex);
            } else if i < n_train + n_val {
                val.examples.push(ex);
            } else {
                test.examples.push(ex);
            }
        }
    }
    Ok(RealData {
        spec: spec.clone(),
        prototypes,
        train,
        val,
        test,
    })
}
