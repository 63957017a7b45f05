use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::histogram::{score_histogram, write_histogram_csv, HistogramSpec, ScoreKind};
use super::report::{aggregate, write_aggregates, write_report_csv, ExperimentReport, ReportRow};
use crate::datagen::{
    build_pool, generate_real, write_sds, Dataset, LabeledData, RealData, SdsFile, SyntheticPool,
    Translator,
};
use crate::models::{
    evaluate, save_model, train_classifier, train_discriminator, ClassifierModel,
    DiscriminatorModel, EvalReport, LabelConvention, ModelSidecar,
};
use crate::numkit::{LayerSpec, Matrix};
use crate::samplers::{
    rl_apply, rl_train, sample_cl, sample_cr, sample_random, score_pool, Candidate,
    PolicyTrainState, SamplerConfig, SamplerKind, ScoredPool, SelectionResult,
};
use crate::seeds::derive;
use crate::{Error, Result};

/// One grid cell. `ratio` is `None` for the policy sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub sampler: SamplerKind,
    pub ratio: Option<f64>,
}

pub fn cell_name(key: &CellKey) -> String {
    match key.ratio {
        Some(r) => format!("{}-{r}x", key.sampler),
        None => key.sampler.to_string(),
    }
}

fn cell_seed(seed: u64, key: &CellKey, purpose: &str) -> u64 {
    let ratio_bits = key.ratio.map_or(u64::MAX, f64::to_bits);
    derive(
        seed,
        &[purpose.as_bytes(), key.sampler.name().as_bytes(), &ratio_bits.to_le_bytes()],
    )
}

/// Everything a seed's grid cells share.
pub struct PreparedSeed {
    pub seed: u64,
    pub data: RealData,
    pub train: LabeledData,
    pub val: LabeledData,
    pub test: LabeledData,
    pub pool: SyntheticPool,
    pub candidates: Vec<Candidate>,
    pub baseline: ClassifierModel,
    pub baseline_eval: EvalReport,
    pub discriminator: DiscriminatorModel,
    pub scored: ScoredPool,
}

pub(crate) fn classifier_arch(cfg: &ExperimentConfig) -> Vec<LayerSpec> {
    let mut dims = vec![cfg.dataset.feature_dim];
    dims.extend(&cfg.classifier_hidden);
    dims.push(cfg.dataset.num_classes);
    LayerSpec::stack(&dims)
}

pub(crate) fn seeded_data(cfg: &ExperimentConfig, seed: u64) -> Result<RealData> {
    let mut spec = cfg.dataset.clone();
    spec.seed = derive(seed, &[b"data", &cfg.dataset.seed.to_le_bytes()]);
    generate_real(&spec)
}

pub(crate) fn train_baseline(cfg: &ExperimentConfig, seed: u64, train: &LabeledData) -> Result<ClassifierModel> {
    let tc = cfg.train.baseline.with_seed(derive(
        seed,
        &[b"baseline", &cfg.train.baseline.seed.to_le_bytes()],
    ));
    train_classifier(train, &tc, &classifier_arch(cfg))
}

pub(crate) fn seeded_pool(cfg: &ExperimentConfig, seed: u64, data: &RealData) -> Result<SyntheticPool> {
    let mut tcfg = cfg.translator;
    tcfg.seed = derive(seed, &[b"translator", &cfg.translator.seed.to_le_bytes()]);
    let translator = Translator::new(data.prototypes.clone(), tcfg)?;
    build_pool(
        &data.train,
        &translator,
        cfg.fold_multiplier,
        cfg.category_balance,
        data.next_id(),
    )
}

/// Generates data, trains the baseline and the discriminator, builds and
/// scores the pool.
pub fn prepare_seed(cfg: &ExperimentConfig, seed: u64) -> Result<PreparedSeed> {
    let data = seeded_data(cfg, seed)?;
    let train = data.train.to_labeled_data();
    let val = data.val.to_labeled_data();
    let test = data.test.to_labeled_data();
    let baseline = train_baseline(cfg, seed, &train)?;
    let baseline_eval = evaluate(&baseline, &test)?;
    let pool = seeded_pool(cfg, seed, &data)?;
    let candidates = pool.candidates();
    let fake = Matrix::from_rows(
        cfg.dataset.feature_dim,
        candidates.iter().map(|c| c.features.as_slice()),
    )?;
    let dc = cfg.train.discriminator.with_seed(derive(
        seed,
        &[b"discriminator", &cfg.train.discriminator.seed.to_le_bytes()],
    ));
    let discriminator = train_discriminator(
        &train.features,
        &fake,
        &dc,
        &cfg.discriminator_hidden,
        LabelConvention::RealIsOne,
    )?;
    let scored = score_pool(&candidates, &baseline, &discriminator)?;
    Ok(PreparedSeed {
        seed,
        data,
        train,
        val,
        test,
        pool,
        candidates,
        baseline,
        baseline_eval,
        discriminator,
        scored,
    })
}

/// Stratified random subset with `round(fraction × n_c)` (at least one) per category.
fn stratified_subset(train: &Dataset, fraction: f64, seed: u64) -> LabeledData {
    let mut rng = crate::seeds::rng(seed, "rl-real-subset");
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); train.num_classes];
    for (i, e) in train.examples.iter().enumerate() {
        by_class[e.label].push(i);
    }
    let mut out = LabeledData::empty(train.num_classes, train.feature_dim);
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let k = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len().max(1));
        for &i in members.iter().take(k) {
            let e = &train.examples[i];
            out.push(&e.features, e.label, e.example_id)
                .expect("same feature space");
        }
    }
    out
}

/// Trains the policy on a small real subset and a pool slice, then applies it
/// to the whole pool.
pub fn run_rl(cfg: &ExperimentConfig, prep: &PreparedSeed) -> Result<(PolicyTrainState, SelectionResult)> {
    let seed = derive(prep.seed, &[b"rl"]);
    let subset = stratified_subset(&prep.data.train, cfg.policy.real_fraction, seed);
    let n_pool = ((cfg.policy.pool_multiplier * subset.len() as f64).round() as usize)
        .clamp(1, prep.candidates.len().max(1));
    let mut idx: Vec<usize> = (0..prep.candidates.len()).collect();
    idx.shuffle(&mut crate::seeds::rng(seed, "rl-pool-slice"));
    idx.truncate(n_pool);
    idx.sort_unstable();
    let slice: Vec<Candidate> = idx.iter().map(|&i| prep.candidates[i].clone()).collect();
    let pcfg = cfg.policy.policy_config(cfg.train.child, seed);
    let state = rl_train(&slice, &subset, &prep.val, &pcfg)?;
    let selection = rl_apply(&state, &prep.candidates, prep.train.len())?;
    Ok((state, selection))
}

pub struct CellOutcome {
    pub selection: SelectionResult,
    pub model: ClassifierModel,
    pub eval: EvalReport,
    pub n_train: usize,
    pub policy: Option<PolicyTrainState>,
}

/// Real train ∪ selected pool examples, with hygiene and conservation checks.
fn augmented_set(prep: &PreparedSeed, selection: &SelectionResult) -> Result<LabeledData> {
    let mut union = prep.train.clone();
    for &id in &selection.ids {
        let e = prep
            .pool
            .get(id)
            .ok_or_else(|| Error::Input(format!("selected id {id} is not in the pool")))?;
        union.push(&e.features, e.target_label, id)?;
    }
    let held_out: HashSet<u64> = prep.val.ids.iter().chain(&prep.test.ids).copied().collect();
    if let Some(id) = union.ids.iter().find(|id| held_out.contains(id)) {
        return Err(Error::Input(format!("held-out example {id} leaked into training")));
    }
    let unique: HashSet<u64> = union.ids.iter().copied().collect();
    if unique.len() != union.len() || union.len() != prep.train.len() + selection.ids.len() {
        return Err(Error::Input("augmented set has duplicate or missing examples".into()));
    }
    Ok(union)
}

/// Selects, retrains from scratch and evaluates one grid cell.
pub fn run_cell(cfg: &ExperimentConfig, prep: &PreparedSeed, key: &CellKey) -> Result<CellOutcome> {
    let real_counts = prep.train.class_counts();
    let (selection, policy) = match (key.sampler, key.ratio) {
        (SamplerKind::Rl, _) => {
            let (state, sel) = run_rl(cfg, prep)?;
            (sel, Some(state))
        }
        (kind, Some(ratio)) => {
            let sc = SamplerConfig {
                kind,
                ratio,
                per_category: true,
                seed: cell_seed(prep.seed, key, "select"),
            };
            let sel = match kind {
                SamplerKind::Random => sample_random(&prep.scored, &sc, &real_counts)?,
                SamplerKind::Cl => sample_cl(&prep.scored, &sc, &real_counts)?,
                SamplerKind::Cr => sample_cr(&prep.scored, &sc, &real_counts)?,
                SamplerKind::Rl => unreachable!(),
            };
            (sel, None)
        }
        (kind, None) => return Err(Error::Config(format!("{kind} cell needs a ratio"))),
    };
    let union = augmented_set(prep, &selection)?;
    let (model, eval) = if selection.ids.is_empty() {
        // nothing to add: the augmented run is the baseline run
        (prep.baseline.clone(), prep.baseline_eval.clone())
    } else {
        let tc = cfg.train.augmented.with_seed(cell_seed(prep.seed, key, "classifier"));
        let model = train_classifier(&union, &tc, &classifier_arch(cfg))?;
        let eval = evaluate(&model, &prep.test)?;
        (model, eval)
    };
    Ok(CellOutcome {
        selection,
        model,
        eval,
        n_train: union.len(),
        policy,
    })
}

pub(crate) fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

fn sidecar(kind: &str, model: &ClassifierModel) -> ModelSidecar {
    ModelSidecar {
        kind: kind.into(),
        arch: model.params.specs(),
        num_classes: model.num_classes,
        provenance: model.provenance.clone(),
    }
}

#[derive(Serialize)]
struct SelectionExport<'a> {
    sampler: String,
    ratio: Option<f64>,
    seed: u64,
    ids: &'a [u64],
    per_category: &'a std::collections::BTreeMap<usize, usize>,
    realized_ratio: f64,
}

pub(crate) fn write_selection(
    path: &Path,
    key: &CellKey,
    seed: u64,
    sel: &SelectionResult,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let export = SelectionExport {
        sampler: key.sampler.to_string(),
        ratio: key.ratio,
        seed,
        ids: &sel.ids,
        per_category: &sel.per_category,
        realized_ratio: sel.realized_ratio,
    };
    fs::write(path, serde_json::to_string_pretty(&export)?)?;
    Ok(())
}

pub(crate) fn write_scores_csv(path: &Path, scored: &ScoredPool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["example_id", "target_label", "class_conf", "realism"])?;
    for e in &scored.entries {
        w.write_record([
            e.example_id.to_string(),
            e.target_label.to_string(),
            e.class_conf.to_string(),
            e.realism.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_rl_log(path: &Path, state: &PolicyTrainState) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "kept_count", "val_score", "threshold", "reward"])?;
    for e in &state.log {
        w.write_record([
            e.t.to_string(),
            e.kept_count.to_string(),
            e.val_score.to_string(),
            e.threshold.to_string(),
            e.reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn persist_prepared(cfg: &ExperimentConfig, prep: &PreparedSeed, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("models"))?;
    let spec = serde_json::json!({ "dataset": cfg.dataset, "translator": cfg.translator, "run_seed": prep.seed });
    let sds = SdsFile::from_parts(&prep.data, Some(&prep.pool), spec);
    write_sds(&sds, std::io::BufWriter::new(fs::File::create(dir.join("dataset.sds"))?))?;
    save_model(&dir.join("models"), "baseline", &prep.baseline.params, &sidecar("classifier", &prep.baseline))?;
    save_model(
        &dir.join("models"),
        "discriminator",
        &prep.discriminator.params,
        &ModelSidecar {
            kind: "discriminator".into(),
            arch: prep.discriminator.params.specs(),
            num_classes: 2,
            provenance: prep.discriminator.provenance.clone(),
        },
    )?;
    write_scores_csv(&dir.join("scores.csv"), &prep.scored)?;
    for kind in [ScoreKind::ClassConf, ScoreKind::Realism] {
        let h = score_histogram(
            &prep.scored,
            &HistogramSpec {
                kind,
                bins: cfg.histogram_bins,
                per_category: true,
            },
        )?;
        write_histogram_csv(&dir.join(format!("hist_{}.csv", kind.name())), &h)?;
    }
    Ok(())
}

fn grid(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for g in &cfg.samplers {
        if g.kind == SamplerKind::Rl {
            keys.push(CellKey {
                sampler: g.kind,
                ratio: None,
            });
        } else {
            keys.extend(g.ratios.iter().map(|&r| CellKey {
                sampler: g.kind,
                ratio: Some(r),
            }));
        }
    }
    keys
}

fn error_row(sampler: &str, ratio: Option<f64>, seed: u64, err: &Error) -> ReportRow {
    ReportRow {
        sampler: sampler.into(),
        ratio,
        seed,
        status: format!("error: {err}"),
        eval: None,
        realized_ratio: 0.0,
        n_selected: 0,
        n_train: 0,
        wall_ms: 0.0,
    }
}

/// Runs the whole grid and writes `report.csv`, `aggregates.json` and
/// `report.json` under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    let keys = grid(cfg);
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let started = Instant::now();
        let prep = match prepare_seed(cfg, seed) {
            Ok(p) => p,
            Err(e) => {
                rows.push(error_row("baseline", Some(0.0), seed, &e));
                for k in &keys {
                    rows.push(error_row(k.sampler.name(), k.ratio, seed, &e));
                }
                continue;
            }
        };
        let dir = seed_dir(out, seed);
        persist_prepared(cfg, &prep, &dir)?;
        rows.push(ReportRow {
            sampler: "baseline".into(),
            ratio: Some(0.0),
            seed,
            status: "ok".into(),
            eval: Some(prep.baseline_eval.clone()),
            realized_ratio: 0.0,
            n_selected: 0,
            n_train: prep.train.len(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        let cells: Vec<(CellKey, Result<CellOutcome>, f64)> = keys
            .par_iter()
            .map(|k| {
                let t = Instant::now();
                let r = run_cell(cfg, &prep, k);
                (*k, r, t.elapsed().as_secs_f64() * 1e3)
            })
            .collect();
        for (key, outcome, wall_ms) in cells {
            let name = cell_name(&key);
            match outcome {
                Ok(o) => {
                    write_selection(&dir.join("selections").join(format!("{name}.json")), &key, seed, &o.selection)?;
                    save_model(&dir.join("models"), &name, &o.model.params, &sidecar("classifier", &o.model))?;
                    if let Some(state) = &o.policy {
                        write_rl_log(&dir.join("rl_log.csv"), state)?;
                    }
                    rows.push(ReportRow {
                        sampler: key.sampler.to_string(),
                        ratio: key.ratio,
                        seed,
                        status: "ok".into(),
                        eval: Some(o.eval),
                        realized_ratio: o.selection.realized_ratio,
                        n_selected: o.selection.ids.len(),
                        n_train: o.n_train,
                        wall_ms,
                    });
                }
                Err(e) => rows.push(error_row(key.sampler.name(), key.ratio, seed, &e)),
            }
        }
    }
    let aggregates = aggregate(&rows, cfg.dataset.num_classes);
    let report = ExperimentReport {
        num_classes: cfg.dataset.num_classes,
        rows,
        aggregates,
    };
    write_report_csv(&out.join("report.csv"), &report)?;
    write_aggregates(&out.join("aggregates.json"), &report.aggregates)?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}
