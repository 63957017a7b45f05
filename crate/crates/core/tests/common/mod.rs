#![allow(dead_code)]

use std::path::PathBuf;

use synthsieve::datagen::{
    generate_real, LabeledData, RealDatasetSpec, SplitFractions, Translator, TranslatorConfig,
};
use synthsieve::harness::ExperimentConfig;
use synthsieve::samplers::{Candidate, PolicyConfig, ScoredEntry, ScoredPool};
use synthsieve::seeds;

pub fn shipped_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

pub fn shipped_config() -> ExperimentConfig {
    ExperimentConfig::load(&shipped_config_path()).expect("shipped config loads")
}

/// Stable sort of one category by descending score after ordering by id,
/// then the first `k` ids.
pub fn brute_top_k(entries: &[ScoredEntry], category: usize, k: usize, score: fn(&ScoredEntry) -> f64) -> Vec<u64> {
    let mut members: Vec<&ScoredEntry> = entries.iter().filter(|e| e.target_label == category).collect();
    members.sort_by_key(|e| e.example_id);
    // insertion sort: stable by construction
    for i in 1..members.len() {
        let mut j = i;
        while j > 0 && score(members[j - 1]) < score(members[j]) {
            members.swap(j - 1, j);
            j -= 1;
        }
    }
    members.iter().take(k).map(|e| e.example_id).collect()
}

pub fn brute_histogram(pool: &ScoredPool, bins: usize, score: fn(&ScoredEntry) -> f64) -> Vec<Vec<usize>> {
    let mut counts = vec![vec![0usize; bins]; pool.num_classes];
    for e in &pool.entries {
        let s = score(e);
        let mut placed = false;
        for b in 0..bins {
            let lo = b as f64 / bins as f64;
            let hi = (b + 1) as f64 / bins as f64;
            let last = b == bins - 1;
            if s >= lo && (s < hi || (last && s <= 1.0)) {
                counts[e.target_label][b] += 1;
                placed = true;
                break;
            }
        }
        assert!(placed, "score {s} fell outside every bin");
    }
    counts
}

/// A small pool where every candidate targets category 0: even positions are
/// faithful translations, odd positions always land on a wrong prototype.
pub struct RiggedPool {
    pub candidates: Vec<Candidate>,
    pub flipped: Vec<bool>,
    pub real_subset: LabeledData,
    pub val: LabeledData,
    pub real_train_size: usize,
}

pub fn rigged_pool(seed: u64) -> RiggedPool {
    let spec = RealDatasetSpec {
        num_classes: 4,
        feature_dim: 8,
        per_class_counts: vec![100; 4],
        noise_sigma: 1.0,
        split: SplitFractions::default(),
        seed,
    };
    let data = generate_real(&spec).unwrap();
    let translator = |p_flip| {
        Translator::new(
            data.prototypes.clone(),
            TranslatorConfig {
                alpha: 0.9,
                p_flip,
                artifact_sigma_max: 0.0,
                seed,
            },
        )
        .unwrap()
    };
    let (clean, corrupt) = (translator(0.0), translator(1.0));

    let mut real_subset = LabeledData::empty(4, 8);
    let mut taken = [false; 4];
    for e in &data.train.examples {
        if !taken[e.label] {
            taken[e.label] = true;
            real_subset.push(&e.features, e.label, e.example_id).unwrap();
        }
    }

    let mut rng = seeds::rng(seed, "rigged-pool");
    let mut candidates = Vec::new();
    let mut flipped = Vec::new();
    for j in 0..8 * real_subset.len() {
        let src = &data.train.examples[j];
        let t = if j % 2 == 0 { &clean } else { &corrupt };
        let s = t.translate(src, 0, 10_000 + j as u64, &mut rng).unwrap();
        flipped.push(!s.label_preserved());
        candidates.push(Candidate {
            example_id: s.example_id,
            target_label: s.target_label,
            features: s.features,
        });
    }
    RiggedPool {
        candidates,
        flipped,
        real_subset,
        val: data.val.to_labeled_data(),
        real_train_size: data.train.len(),
    }
}

pub fn rigged_policy(seed: u64, episodes: usize) -> PolicyConfig {
    PolicyConfig {
        episodes,
        seed,
        ..PolicyConfig::default()
    }
}

/// Mean of the at most five scores before episode `t` (1-based), 0 when none.
pub fn window_mean(scores: &[f64], t: usize) -> f64 {
    let before = &scores[..t - 1];
    let tail = &before[before.len().saturating_sub(5)..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}
