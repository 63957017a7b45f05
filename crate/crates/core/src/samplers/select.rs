use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::datagen::{SyntheticExample, SyntheticPool};
use crate::models::{class_confidences, realism_scores, ClassifierModel, DiscriminatorModel};
use crate::numkit::Matrix;
use crate::seeds;
use crate::{Error, Result};

/// What a sampler may know about a synthetic example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub example_id: u64,
    pub target_label: usize,
    pub features: Vec<f64>,
}

impl From<&SyntheticExample> for Candidate {
    fn from(e: &SyntheticExample) -> Self {
        Self {
            example_id: e.example_id,
            target_label: e.target_label,
            features: e.features.clone(),
        }
    }
}

impl SyntheticPool {
    pub fn candidates(&self) -> Vec<Candidate> {
        self.examples.iter().map(Candidate::from).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub example_id: u64,
    pub target_label: usize,
    pub class_conf: f64,
    pub realism: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPool {
    pub num_classes: usize,
    pub entries: Vec<ScoredEntry>,
}

impl ScoredPool {
    pub fn category_sizes(&self) -> Vec<usize> {
        let mut n = vec![0; self.num_classes];
        for e in &self.entries {
            n[e.target_label] += 1;
        }
        n
    }
}

/// Class confidence for the target label and realism for every candidate.
pub fn score_pool(
    candidates: &[Candidate],
    classifier: &ClassifierModel,
    discriminator: &DiscriminatorModel,
) -> Result<ScoredPool> {
    let d = classifier.feature_dim();
    if discriminator.params.input_dim() != d {
        return Err(Error::Input(format!(
            "classifier expects {d} features, discriminator {}",
            discriminator.params.input_dim()
        )));
    }
    let features = Matrix::from_rows(d, candidates.iter().map(|c| c.features.as_slice()))?;
    let targets: Vec<usize> = candidates.iter().map(|c| c.target_label).collect();
    let conf = class_confidences(classifier, &features, &targets)?;
    let real = realism_scores(discriminator, &features)?;
    let entries = candidates
        .iter()
        .zip(conf.iter().zip(&real))
        .map(|(c, (&class_conf, &realism))| ScoredEntry {
            example_id: c.example_id,
            target_label: c.target_label,
            class_conf,
            realism,
        })
        .collect();
    Ok(ScoredPool {
        num_classes: classifier.num_classes,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Random,
    Cl,
    Cr,
    Rl,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::Cl => "cl",
            SamplerKind::Cr => "cr",
            SamplerKind::Rl => "rl",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SamplerKind::Random),
            "cl" | "cl-sam" => Ok(SamplerKind::Cl),
            "cr" | "cr-sam" => Ok(SamplerKind::Cr),
            "rl" => Ok(SamplerKind::Rl),
            other => Err(Error::Input(format!("unknown sampler '{other}'"))),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Selection size as a multiple of the real training set.
    pub ratio: f64,
    #[serde(default = "default_true")]
    pub per_category: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, ratio: f64, seed: u64) -> Self {
        Self {
            kind,
            ratio,
            per_category: true,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub ids: Vec<u64>,
    pub per_category: BTreeMap<usize, usize>,
    /// `|ids| / real train size`.
    pub realized_ratio: f64,
}

impl SelectionResult {
    pub(crate) fn new(ids: Vec<u64>, labels: &[usize], num_classes: usize, real_train_size: usize) -> Self {
        let mut per_category: BTreeMap<usize, usize> = (0..num_classes).map(|k| (k, 0)).collect();
        for &y in labels {
            *per_category.entry(y).or_insert(0) += 1;
        }
        let realized_ratio = if real_train_size == 0 {
            0.0
        } else {
            ids.len() as f64 / real_train_size as f64
        };
        Self {
            ids,
            per_category,
            realized_ratio,
        }
    }
}

/// Requested selection size per category (`round(ratio × real count)`), or a
/// single pool-wide budget `round(ratio × real total)` when `per_category` is off.
pub fn budgets(ratio: f64, per_category: bool, real_counts: &[usize]) -> Result<Vec<usize>> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::Config(format!("ratio must be finite and >= 0, got {ratio}")));
    }
    if per_category {
        Ok(real_counts
            .iter()
            .map(|&n| (ratio * n as f64).round() as usize)
            .collect())
    } else {
        Ok(vec![(ratio * real_counts.iter().sum::<usize>() as f64).round() as usize])
    }
}

/// Pool positions grouped per category (or one group when `per_category` is off).
fn groups(labels: &[usize], num_classes: usize, per_category: bool) -> Vec<Vec<usize>> {
    if !per_category {
        return vec![(0..labels.len()).collect()];
    }
    let mut g = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        g[y].push(i);
    }
    g
}

fn check_counts(real_counts: &[usize], num_classes: usize) -> Result<()> {
    if real_counts.len() != num_classes {
        return Err(Error::Input(format!(
            "{} real category counts for {num_classes} categories",
            real_counts.len()
        )));
    }
    Ok(())
}

fn check_available(group: usize, requested: usize, available: usize, per_category: bool) -> Result<()> {
    if requested > available {
        return Err(Error::InsufficientPool {
            // whole-pool budgets report category usize::MAX
            category: if per_category { group } else { usize::MAX },
            requested,
            available,
        });
    }
    Ok(())
}

/// Uniform sampling without replacement, per category when configured.
pub fn sample_random(
    scored: &ScoredPool,
    cfg: &SamplerConfig,
    real_counts: &[usize],
) -> Result<SelectionResult> {
    check_counts(real_counts, scored.num_classes)?;
    let labels: Vec<usize> = scored.entries.iter().map(|e| e.target_label).collect();
    let want = budgets(cfg.ratio, cfg.per_category, real_counts)?;
    let groups = groups(&labels, scored.num_classes, cfg.per_category);
    let mut ids = Vec::new();
    let mut sel_labels = Vec::new();
    for (g, members) in groups.iter().enumerate() {
        check_available(g, want[g], members.len(), cfg.per_category)?;
        let mut rng = seeds::item_rng(cfg.seed, "random-sampler", g as u64);
        for k in index::sample(&mut rng, members.len(), want[g]) {
            let e = &scored.entries[members[k]];
            ids.push(e.example_id);
            sel_labels.push(e.target_label);
        }
    }
    Ok(SelectionResult::new(
        ids,
        &sel_labels,
        scored.num_classes,
        real_counts.iter().sum(),
    ))
}

/// Top-K by `key` (descending, ties by ascending id) within each group.
pub fn sample_top_k<F>(
    scored: &ScoredPool,
    cfg: &SamplerConfig,
    real_counts: &[usize],
    key: F,
) -> Result<SelectionResult>
where
    F: Fn(&ScoredEntry) -> f64,
{
    check_counts(real_counts, scored.num_classes)?;
    if let Some(e) = scored.entries.iter().find(|e| !key(e).is_finite()) {
        return Err(Error::Input(format!("non-finite score for example {}", e.example_id)));
    }
    let labels: Vec<usize> = scored.entries.iter().map(|e| e.target_label).collect();
    let want = budgets(cfg.ratio, cfg.per_category, real_counts)?;
    let mut ids = Vec::new();
    let mut sel_labels = Vec::new();
    for (g, mut members) in groups(&labels, scored.num_classes, cfg.per_category)
        .into_iter()
        .enumerate()
    {
        check_available(g, want[g], members.len(), cfg.per_category)?;
        members.sort_by(|&a, &b| {
            let (ea, eb) = (&scored.entries[a], &scored.entries[b]);
            key(eb)
                .total_cmp(&key(ea))
                .then(ea.example_id.cmp(&eb.example_id))
        });
        for &i in &members[..want[g]] {
            ids.push(scored.entries[i].example_id);
            sel_labels.push(scored.entries[i].target_label);
        }
    }
    Ok(SelectionResult::new(
        ids,
        &sel_labels,
        scored.num_classes,
        real_counts.iter().sum(),
    ))
}

/// Class-confidence top-K.
pub fn sample_cl(
    scored: &ScoredPool,
    cfg: &SamplerConfig,
    real_counts: &[usize],
) -> Result<SelectionResult> {
    sample_top_k(scored, cfg, real_counts, |e| e.class_conf)
}

/// Realism top-K.
pub fn sample_cr(
    scored: &ScoredPool,
    cfg: &SamplerConfig,
    real_counts: &[usize],
) -> Result<SelectionResult> {
    sample_top_k(scored, cfg, real_counts, |e| e.realism)
}
