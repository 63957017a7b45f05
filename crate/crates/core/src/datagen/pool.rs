use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, SyntheticExample, Translator};
use crate::seeds;
use crate::{Error, Result};

/// How target categories are assigned across a pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryBalance {
    /// Round-robin over categories.
    #[default]
    Balanced,
    /// Proportional to the real training distribution (largest remainder).
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPool {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub examples: Vec<SyntheticExample>,
    /// Pool size over real train size, as requested.
    pub fold_multiplier: f64,
}

impl SyntheticPool {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn target_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for e in &self.examples {
            counts[e.target_label] += 1;
        }
        counts
    }

    /// Fraction of examples whose translation kept the target label.
    pub fn preserved_fraction(&self) -> f64 {
        if self.examples.is_empty() {
            return 0.0;
        }
        self.examples.iter().filter(|e| e.label_preserved()).count() as f64
            / self.examples.len() as f64
    }

    pub fn mean_artifact(&self) -> f64 {
        if self.examples.is_empty() {
            return 0.0;
        }
        self.examples
            .iter()
            .map(|e| e.truth.artifact_magnitude())
            .sum::<f64>()
            / self.examples.len() as f64
    }

    pub fn get(&self, id: u64) -> Option<&SyntheticExample> {
        // ids are assigned consecutively by build_pool
        let first = self.examples.first()?.example_id;
        let idx = id.checked_sub(first)? as usize;
        self.examples.get(idx).filter(|e| e.example_id == id)
    }
}

/// Largest-remainder apportionment of `total` over `weights`.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let quotas: Vec<f64> = weights
        .iter()
        .map(|&w| total as f64 * w as f64 / sum as f64)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = total - counts.iter().sum::<usize>();
    for &k in order.iter().take(short) {
        counts[k] += 1;
    }
    counts
}

/// Translates `round(fold_multiplier × |train|)` uniformly drawn (with
/// replacement) training examples. Ids are `first_id, first_id + 1, …`.
pub fn build_pool(
    train: &Dataset,
    translator: &Translator,
    fold_multiplier: f64,
    balance: CategoryBalance,
    first_id: u64,
) -> Result<SyntheticPool> {
    if train.is_empty() {
        return Err(Error::Input("cannot build a pool from an empty train set".into()));
    }
    if !(fold_multiplier >= 0.0 && fold_multiplier.is_finite()) {
        return Err(Error::Config(format!(
            "fold_multiplier must be finite and >= 0, got {fold_multiplier}"
        )));
    }
    if translator.num_classes() != train.num_classes {
        return Err(Error::Input("translator and train set disagree on class count".into()));
    }
    let c = train.num_classes;
    let size = (fold_multiplier * train.len() as f64).round() as usize;
    let targets: Vec<usize> = match balance {
        CategoryBalance::Balanced => (0..size).map(|i| i % c).collect(),
        CategoryBalance::Proportional => apportion(size, &train.class_counts())
            .into_iter()
            .enumerate()
            .flat_map(|(k, n)| std::iter::repeat_n(k, n))
            .collect(),
    };
    let seed = translator.config().seed;
    let mut source_rng = seeds::rng(seed, "pool-sources");
    let sources: Vec<usize> = (0..size)
        .map(|_| source_rng.random_range(0..train.len()))
        .collect();
    let examples = targets
        .iter()
        .zip(&sources)
        .enumerate()
        .map(|(i, (&target, &src))| {
            let id = first_id + i as u64;
            let mut rng = seeds::item_rng(seed, "translate", id);
            translator.translate(&train.examples[src], target, id, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticPool {
        num_classes: c,
        feature_dim: train.feature_dim,
        examples,
        fold_multiplier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_real, RealDatasetSpec, TranslatorConfig};

    fn fixture() -> (crate::datagen::RealData, Translator) {
        let data = generate_real(&RealDatasetSpec::balanced(8, 64, 125, 4)).unwrap();
        let t = Translator::new(
            data.prototypes.clone(),
            TranslatorConfig {
                alpha: 0.8,
                p_flip: 0.3,
                artifact_sigma_max: 1.0,
                seed: 5,
            },
        )
        .unwrap();
        (data, t)
    }

    #[test]
    fn sizes_and_balance() {
        let (data, t) = fixture();
        assert_eq!(data.train.len(), 800);
        let empty = build_pool(&data.train, &t, 0.0, CategoryBalance::Balanced, 10_000).unwrap();
        assert!(empty.is_empty());
        let pool = build_pool(&data.train, &t, 7.0, CategoryBalance::Balanced, 10_000).unwrap();
        assert_eq!(pool.len(), 5600);
        assert_eq!(pool.target_counts(), vec![700; 8]);
        let ids: std::collections::HashSet<u64> = pool.examples.iter().map(|e| e.example_id).collect();
        assert_eq!(ids.len(), 5600);
        assert_eq!(pool.get(10_017).unwrap().example_id, 10_017);
    }

    #[test]
    fn proportional_follows_real_distribution() {
        let (data, t) = fixture();
        let mut train = data.train.clone();
        train.examples.retain(|e| e.label != 1 || e.example_id % 2 == 0);
        let pool = build_pool(&train, &t, 2.0, CategoryBalance::Proportional, 0).unwrap();
        let counts = pool.target_counts();
        assert_eq!(counts.iter().sum::<usize>(), pool.len());
        assert_eq!(counts, apportion(pool.len(), &train.class_counts()));
        assert!(counts[1] < counts[0]);
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1, 1, 1]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[30, 1]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn deterministic_and_errors() {
        let (data, t) = fixture();
        let a = build_pool(&data.train, &t, 1.0, CategoryBalance::Balanced, 0).unwrap();
        let b = build_pool(&data.train, &t, 1.0, CategoryBalance::Balanced, 0).unwrap();
        assert_eq!(a, b);
        let empty = Dataset {
            examples: vec![],
            ..data.train.clone()
        };
        assert!(matches!(
            build_pool(&empty, &t, 1.0, CategoryBalance::Balanced, 0),
            Err(Error::Input(_))
        ));
        assert!(build_pool(&data.train, &t, -1.0, CategoryBalance::Balanced, 0).is_err());
    }
}
