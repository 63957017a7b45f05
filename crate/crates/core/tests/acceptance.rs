//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own pass/fail line; exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthsieve::datagen::{
    generate_real, read_sds, RealDatasetSpec, Split, Translator, TranslatorConfig,
};
use synthsieve::harness::{run_experiment, ExperimentConfig, ExperimentReport, SamplerGrid};
use synthsieve::numkit::{cross_entropy, grad_check, init_params, one_hot, LayerSpec, Matrix};
use synthsieve::samplers::{
    keep_probabilities, rl_apply, rl_train, sample_cl, sample_cr, SamplerConfig, SamplerKind,
    ScoredEntry, ScoredPool,
};

use common::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for net in 0..20 {
        let depth = rng.random_range(1..=3);
        let dims: Vec<usize> = (0..=depth)
            .map(|i| if i == depth { rng.random_range(2..=16) } else { rng.random_range(1..=16) })
            .collect();
        let mut params = init_params(&LayerSpec::stack(&dims), net).unwrap();
        // init leaves biases at zero; behind a dead layer that sits exactly on the ReLU kink
        for layer in &mut params.layers {
            for b in &mut layer.bias {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let n = rng.random_range(1..=8);
        let x: Vec<f64> = (0..n * dims[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..dims[depth])).collect();
        let x = Matrix::from_vec(n, dims[0], x).unwrap();
        let y = one_hot(&labels, dims[depth]).unwrap();
        worst = worst.max(grad_check(&params, &x, &y, 1e-5).unwrap());
    }
    verdict(worst < 1e-4, format!("max relative error {worst:.2e} over 20 nets (limit 1e-4)"))
}

fn loss_identities() -> Verdict {
    let mut worst_uniform = 0.0f64;
    let mut worst_perfect = 0.0f64;
    for &c in &[2usize, 3, 7, 8, 10, 100] {
        let labels: Vec<usize> = (0..5).map(|i| (i * 3) % c).collect();
        let y = one_hot(&labels, c).unwrap();
        let flat = Matrix::from_vec(5, c, vec![1.75; 5 * c]).unwrap();
        let loss = cross_entropy(&flat, &y).unwrap();
        worst_uniform = worst_uniform.max((loss - (c as f64).ln()).abs());
        let mut sharp = Matrix::zeros(5, c);
        for (r, &l) in labels.iter().enumerate() {
            sharp.set(r, l, 1000.0);
        }
        worst_perfect = worst_perfect.max(cross_entropy(&sharp, &y).unwrap());
    }
    verdict(
        worst_uniform <= 1e-12 && worst_perfect < 1e-10,
        format!("|uniform − ln C| ≤ {worst_uniform:.1e}, perfect-prediction loss ≤ {worst_perfect:.1e}"),
    )
}

fn top_k_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    let mut checked = 0;
    for trial in 0..100u64 {
        let num_classes = rng.random_range(1..=8);
        let n = rng.random_range(0..=500);
        let mut ids: Vec<u64> = (0..n as u64).map(|i| i * 3 + 17).collect();
        // shuffled ids so pool order and id order disagree
        for i in (1..ids.len()).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        let levels = rng.random_range(2..=12) as f64;
        let entries: Vec<ScoredEntry> = ids
            .iter()
            .map(|&id| ScoredEntry {
                example_id: id,
                target_label: rng.random_range(0..num_classes),
                class_conf: (rng.random_range(0.0..1.0f64) * levels).floor() / levels,
                realism: (rng.random_range(0.0..1.0f64) * levels).floor() / levels,
            })
            .collect();
        let pool = ScoredPool { num_classes, entries };
        let sizes = pool.category_sizes();
        let real: Vec<usize> = sizes.iter().map(|&s| rng.random_range(0..=s)).collect();
        let cfg = SamplerConfig::new(SamplerKind::Cl, 1.0, trial);
        type Sampler = fn(&ScoredPool, &SamplerConfig, &[usize]) -> synthsieve::Result<synthsieve::samplers::SelectionResult>;
        let runs: [(Sampler, fn(&ScoredEntry) -> f64); 2] =
            [(sample_cl, |e| e.class_conf), (sample_cr, |e| e.realism)];
        for (sampler, score) in runs {
            let got = sampler(&pool, &cfg, &real).unwrap();
            let want: Vec<u64> = (0..num_classes)
                .flat_map(|c| brute_top_k(&pool.entries, c, real[c], score))
                .collect();
            checked += 1;
            if got.ids != want {
                mismatches += 1;
            }
        }
    }
    verdict(mismatches == 0, format!("{checked} selections compared, {mismatches} mismatches"))
}

fn corruption_statistics() -> Verdict {
    let data = generate_real(&RealDatasetSpec::balanced(8, 64, 50, 5)).unwrap();
    let a_max = 1.0;
    let translator = Translator::new(
        data.prototypes.clone(),
        TranslatorConfig { alpha: 0.8, p_flip: 0.3, artifact_sigma_max: a_max, seed: 5 },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 10_000;
    let mut preserved = 0usize;
    let mut artifact = 0.0;
    for i in 0..n {
        let src = &data.train.examples[i % data.train.len()];
        let target = rng.random_range(0..8);
        let s = translator.translate(src, target, 100_000 + i as u64, &mut rng).unwrap();
        preserved += usize::from(s.label_preserved());
        artifact += s.truth.artifact_magnitude();
    }
    let frac = preserved as f64 / n as f64;
    let mean = artifact / n as f64;
    let band = 3.0 * a_max / 12f64.sqrt() / (n as f64).sqrt();
    verdict(
        (frac - 0.7).abs() <= 0.015 && (mean - a_max / 2.0).abs() <= band,
        format!("preserved {frac:.4} (0.700 ± 0.015), mean artifact {mean:.4} ({:.3} ± {band:.4})", a_max / 2.0),
    )
}

fn read_ids(path: &Path) -> Vec<u64> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["ids"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect()
}

fn ratios_of(cfg: &ExperimentConfig, kind: SamplerKind) -> Vec<f64> {
    cfg.samplers.iter().filter(|g| g.kind == kind).flat_map(|g| g.ratios.clone()).collect()
}

fn selection_purity(cfg: &ExperimentConfig) -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    let pairs = [(SamplerKind::Cl, "cl"), (SamplerKind::Cr, "cr")];
    for (kind, name) in pairs {
        for ratio in ratios_of(cfg, kind) {
            let mut wins = 0;
            for &seed in &cfg.seeds {
                let dir = cfg.output_dir.join(format!("seed-{seed}"));
                let sds = read_sds(std::fs::File::open(dir.join("dataset.sds")).unwrap()).unwrap();
                let truth: HashMap<u64, (bool, f64)> = sds
                    .records
                    .iter()
                    .filter(|r| r.split == Split::Pool)
                    .map(|r| (r.id, (r.effective == r.target, r.artifact)))
                    .collect();
                let pool_preserved = truth.values().filter(|t| t.0).count() as f64 / truth.len() as f64;
                let pool_artifact = truth.values().map(|t| t.1).sum::<f64>() / truth.len() as f64;
                let ids = read_ids(&dir.join("selections").join(format!("{name}-{ratio}x.json")));
                let sel: Vec<(bool, f64)> = ids.iter().map(|id| truth[id]).collect();
                let ok = match kind {
                    SamplerKind::Cl => {
                        let f = sel.iter().filter(|t| t.0).count() as f64 / sel.len() as f64;
                        f >= pool_preserved + 0.05
                    }
                    _ => sel.iter().map(|t| t.1).sum::<f64>() / (sel.len() as f64) < pool_artifact,
                };
                wins += usize::from(ok);
            }
            pass &= wins >= 4;
            lines.push(format!("{name} {ratio}x {wins}/{}", cfg.seeds.len()));
        }
    }
    verdict(pass, lines.join(", "))
}

fn macro_of(report: &ExperimentReport, sampler: &str, ratio: f64, seed: u64) -> f64 {
    report
        .row(sampler, Some(ratio), seed)
        .and_then(|r| r.eval.as_ref())
        .map_or(f64::NAN, |e| e.macro_mean)
}

fn mean_over(report: &ExperimentReport, seeds: &[u64], sampler: &str, ratio: f64) -> f64 {
    seeds.iter().map(|&s| macro_of(report, sampler, ratio, s)).sum::<f64>() / seeds.len() as f64
}

fn directional_1x(cfg: &ExperimentConfig, report: &ExperimentReport, secs: f64) -> Verdict {
    let seeds = &cfg.seeds;
    let wins = seeds
        .iter()
        .filter(|&&s| macro_of(report, "cl", 1.0, s) > macro_of(report, "random", 1.0, s))
        .count();
    let base = mean_over(report, seeds, "baseline", 0.0);
    let random = mean_over(report, seeds, "random", 1.0);
    let cl = mean_over(report, seeds, "cl", 1.0);
    verdict(
        wins >= 4 && random > base && secs < 600.0,
        format!(
            "cl 1x > random 1x in {wins}/{} seeds; mean macro baseline {base:.4}, random 1x {random:.4}, cl 1x {cl:.4}; grid {secs:.1} s",
            seeds.len()
        ),
    )
}

fn saturation(cfg: &ExperimentConfig) -> Verdict {
    let mut heavy = cfg.clone();
    heavy.translator.p_flip = 0.5;
    heavy.samplers = vec![SamplerGrid { kind: SamplerKind::Random, ratios: vec![2.0, 5.0] }];
    heavy.output_dir = cfg.output_dir.with_extension("heavy");
    let report = run_experiment(&heavy).unwrap();
    let seeds = &heavy.seeds;
    let wins = seeds
        .iter()
        .filter(|&&s| macro_of(&report, "random", 5.0, s) < macro_of(&report, "random", 2.0, s))
        .count();
    verdict(
        wins >= 4,
        format!(
            "random 5x < random 2x in {wins}/{} seeds; mean macro 2x {:.4}, 5x {:.4}",
            seeds.len(),
            mean_over(&report, seeds, "random", 2.0),
            mean_over(&report, seeds, "random", 5.0)
        ),
    )
}

fn rl_mechanics() -> Verdict {
    let probe = rigged_pool(1);
    let state = rl_train(&probe.candidates, &probe.real_subset, &probe.val, &rigged_policy(1, 100)).unwrap();
    let scores: Vec<f64> = state.log.iter().map(|e| e.val_score).collect();
    let rewards_ok = state.log.iter().all(|e| e.reward == 1.0 || e.reward == -1.0);
    let thresholds_ok = state.log.iter().all(|e| e.threshold == window_mean(&scores, e.t));

    let mut wins = 0;
    let mut worst_ratio = 0.0f64;
    let mut gaps = Vec::new();
    for seed in 1..=5u64 {
        let rig = rigged_pool(seed);
        let state = rl_train(&rig.candidates, &rig.real_subset, &rig.val, &rigged_policy(seed, 200)).unwrap();
        let p = keep_probabilities(&state, &rig.candidates).unwrap();
        let mean = |want: bool| {
            let v: Vec<f64> = p.iter().zip(&rig.flipped).filter(|(_, &f)| f == want).map(|(&q, _)| q).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (clean, flipped) = (mean(false), mean(true));
        wins += usize::from(clean > flipped);
        gaps.push(format!("{:+.3}", clean - flipped));
        let sel = rl_apply(&state, &rig.candidates, rig.real_train_size).unwrap();
        worst_ratio = worst_ratio.max(sel.realized_ratio);
    }
    verdict(
        rewards_ok && thresholds_ok && wins >= 4 && worst_ratio < 1.0,
        format!(
            "rewards ±1: {rewards_ok}; thresholds match window: {thresholds_ok}; clean > flipped keep-prob in {wins}/5 (gaps {}); max realized ratio {worst_ratio:.3}",
            gaps.join(" ")
        ),
    )
}

fn determinism(a: &Path, b: &Path) -> Verdict {
    let x = std::fs::read(a.join("report.csv")).unwrap();
    let y = std::fs::read(b.join("report.csv")).unwrap();
    verdict(x == y, format!("report.csv {} bytes, identical: {}", x.len(), x == y))
}

fn read_scores(path: &Path) -> ScoredPool {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let entries: Vec<ScoredEntry> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            ScoredEntry {
                example_id: r[0].parse().unwrap(),
                target_label: r[1].parse().unwrap(),
                class_conf: r[2].parse().unwrap(),
                realism: r[3].parse().unwrap(),
            }
        })
        .collect();
    let num_classes = entries.iter().map(|e| e.target_label + 1).max().unwrap_or(0);
    ScoredPool { num_classes, entries }
}

fn histogram_conservation(cfg: &ExperimentConfig) -> Verdict {
    let mut files = 0;
    let mut bad = 0;
    for &seed in &cfg.seeds {
        let dir = cfg.output_dir.join(format!("seed-{seed}"));
        let pool = read_scores(&dir.join("scores.csv"));
        let sizes = pool.category_sizes();
        let kinds: [(&str, fn(&ScoredEntry) -> f64); 2] =
            [("class_conf", |e| e.class_conf), ("realism", |e| e.realism)];
        for (kind, score) in kinds {
            let mut counts: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
            let mut rdr = csv::Reader::from_path(dir.join(format!("hist_{kind}.csv"))).unwrap();
            for r in rdr.records() {
                let r = r.unwrap();
                counts
                    .entry(r[0].parse().unwrap())
                    .or_default()
                    .insert(r[1].parse().unwrap(), r[4].parse().unwrap());
            }
            let oracle = brute_histogram(&pool, cfg.histogram_bins, score);
            files += 1;
            let conserved = sizes
                .iter()
                .enumerate()
                .all(|(c, &n)| counts.get(&c).map_or(0, |m| m.values().sum::<usize>()) == n);
            let matches = oracle.iter().enumerate().all(|(c, row)| {
                row.iter().enumerate().all(|(b, &n)| counts[&c][&b] == n)
            });
            bad += usize::from(!(conserved && matches));
        }
    }
    verdict(bad == 0, format!("{files} histogram files, {bad} with mass or binning mismatches"))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut results: Vec<(usize, &str, Verdict, f64)> = Vec::new();
    let mut run = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "[{}] criterion {n} {name}: {} ({secs:.1} s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((n, name, v, secs));
    };

    run(1, "gradient correctness", &mut gradient_correctness);
    run(2, "loss identities", &mut loss_identities);
    run(3, "top-K oracle equivalence", &mut top_k_oracle);
    run(4, "corruption statistics", &mut corruption_statistics);

    let mut cfg_a = shipped_config();
    cfg_a.output_dir = tmp.path().join("a");
    let mut cfg_b = cfg_a.clone();
    cfg_b.output_dir = tmp.path().join("b");
    let t = Instant::now();
    let report_a = run_experiment(&cfg_a).unwrap();
    let grid_secs = t.elapsed().as_secs_f64();

    run(5, "selection purity", &mut || selection_purity(&cfg_a));
    run(6, "augmentation at 1x", &mut || directional_1x(&cfg_a, &report_a, grid_secs));
    run(7, "saturation under heavy corruption", &mut || saturation(&cfg_a));
    run(8, "policy mechanics", &mut rl_mechanics);
    run(9, "end-to-end determinism", &mut || {
        run_experiment(&cfg_b).unwrap();
        determinism(&cfg_a.output_dir, &cfg_b.output_dir)
    });
    run(10, "histogram conservation", &mut || histogram_conservation(&cfg_a));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
