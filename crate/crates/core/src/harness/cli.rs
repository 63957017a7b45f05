use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::ExperimentConfig;
use super::experiment::{
    cell_name, persist_prepared, prepare_seed, run_cell, run_experiment, run_rl, seed_dir,
    seeded_data, seeded_pool, train_baseline, write_rl_log, write_scores_csv, write_selection,
    CellKey,
};
use super::histogram::{score_histogram, write_histogram_csv, HistogramSpec, ScoreKind};
use super::report::{compare_report, ExperimentReport};
use crate::datagen::{export_csv, write_sds, SdsFile};
use crate::models::{evaluate, save_model, EvalReport, ModelSidecar};
use crate::samplers::SamplerKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    InputError = 1,
    RuntimeError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Parser, Debug)]
#[command(name = "synthsieve", version, about = "Filter synthetic training data by confidence and realism")]
struct Cli {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the real dataset and the synthetic pool.
    Gen {
        /// Also write the dataset as CSV.
        #[arg(long)]
        export_csv: Option<PathBuf>,
    },
    /// Train and evaluate the real-data-only classifier.
    TrainBaseline,
    /// Train the discriminator and score the pool.
    Score,
    /// Select from the scored pool and retrain.
    Sample {
        #[arg(long)]
        sampler: SamplerKind,
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
    },
    /// Run the full grid over all seeds.
    Run,
    /// Train the selection policy and apply it to the pool.
    RlTrain {
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Write per-category score histograms.
    Hist {
        #[arg(long, default_value = "class_conf")]
        kind: ScoreKind,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Summarize an existing report.json.
    Report {
        /// Defaults to `<out>/report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command and maps errors to
/// `E:` lines on stderr.
pub fn run_cli<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitStatus::Success,
                _ => ExitStatus::InputError,
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitStatus::Success,
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("E: {line}");
            }
            if e.is_input() {
                ExitStatus::InputError
            } else {
                ExitStatus::RuntimeError
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_eval(label: &str, e: &EvalReport) {
    println!(
        "{label}: macro {:.4} micro {:.4} on {} test examples",
        e.macro_mean, e.micro_mean, e.n_examples
    );
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let out = cfg.output_dir.clone();
    let seed = cfg.seeds[0];
    let dir = seed_dir(&out, seed);
    match cli.command {
        Command::Gen { export_csv: csv_path } => {
            let data = seeded_data(&cfg, seed)?;
            let pool = seeded_pool(&cfg, seed, &data)?;
            let spec = serde_json::json!({ "dataset": cfg.dataset, "translator": cfg.translator, "run_seed": seed });
            let sds = SdsFile::from_parts(&data, Some(&pool), spec);
            fs::create_dir_all(&dir)?;
            let path = dir.join("dataset.sds");
            write_sds(&sds, std::io::BufWriter::new(fs::File::create(&path)?))?;
            if let Some(p) = csv_path {
                export_csv(&sds, &p)?;
            }
            println!(
                "wrote {} ({} train / {} val / {} test, pool {})",
                path.display(),
                data.train.len(),
                data.val.len(),
                data.test.len(),
                pool.examples.len()
            );
        }
        Command::TrainBaseline => {
            let data = seeded_data(&cfg, seed)?;
            let train = data.train.to_labeled_data();
            let model = train_baseline(&cfg, seed, &train)?;
            let eval = evaluate(&model, &data.test.to_labeled_data())?;
            save_model(
                &dir.join("models"),
                "baseline",
                &model.params,
                &ModelSidecar {
                    kind: "classifier".into(),
                    arch: model.params.specs(),
                    num_classes: model.num_classes,
                    provenance: model.provenance.clone(),
                },
            )?;
            print_eval("baseline", &eval);
        }
        Command::Score => {
            let prep = prepare_seed(&cfg, seed)?;
            persist_prepared(&cfg, &prep, &dir)?;
            write_scores_csv(&dir.join("scores.csv"), &prep.scored)?;
            println!("scored {} pool examples into {}", prep.scored.entries.len(), dir.display());
        }
        Command::Sample { sampler, ratio } => {
            let key = CellKey {
                sampler,
                ratio: (sampler != SamplerKind::Rl).then_some(ratio),
            };
            let prep = prepare_seed(&cfg, seed)?;
            let outcome = run_cell(&cfg, &prep, &key)?;
            let name = cell_name(&key);
            write_selection(&dir.join("selections").join(format!("{name}.json")), &key, seed, &outcome.selection)?;
            println!(
                "{name}: selected {} (realized ratio {:.3})",
                outcome.selection.ids.len(),
                outcome.selection.realized_ratio
            );
            print_eval("baseline", &prep.baseline_eval);
            print_eval(&name, &outcome.eval);
        }
        Command::Run => {
            let report = run_experiment(&cfg)?;
            let summary = compare_report(&report)?;
            summary.write_csv(&out.join("summary.csv"))?;
            for r in &summary.rows {
                println!(
                    "{:<9} {:>4} macro {:.4}±{:.4} micro {:.4}±{:.4} vs random: {}",
                    r.sampler,
                    r.ratio.map_or("-".into(), |q| format!("{q}x")),
                    r.macro_mean,
                    r.macro_std,
                    r.micro_mean,
                    r.micro_std,
                    r.vs_random.name()
                );
            }
            let failed = report.rows.iter().filter(|r| r.eval.is_none()).count();
            if failed > 0 {
                return Err(Error::Runtime(format!("{failed} grid cells failed; see report.csv")));
            }
        }
        Command::RlTrain { episodes } => {
            let mut cfg = cfg;
            if let Some(n) = episodes {
                cfg.policy.episodes = n;
            }
            let prep = prepare_seed(&cfg, seed)?;
            let (state, selection) = run_rl(&cfg, &prep)?;
            fs::create_dir_all(&dir)?;
            write_rl_log(&dir.join("rl_log.csv"), &state)?;
            let key = CellKey {
                sampler: SamplerKind::Rl,
                ratio: None,
            };
            write_selection(&dir.join("selections").join("rl.json"), &key, seed, &selection)?;
            println!(
                "{} episodes; kept {} of {} (realized ratio {:.3})",
                state.episode,
                selection.ids.len(),
                prep.candidates.len(),
                selection.realized_ratio
            );
        }
        Command::Hist { kind, bins } => {
            let prep = prepare_seed(&cfg, seed)?;
            let h = score_histogram(
                &prep.scored,
                &HistogramSpec {
                    kind,
                    bins: bins.unwrap_or(cfg.histogram_bins),
                    per_category: true,
                },
            )?;
            fs::create_dir_all(&dir)?;
            let path = dir.join(format!("hist_{}.csv", kind.name()));
            write_histogram_csv(&path, &h)?;
            println!("wrote {}", path.display());
        }
        Command::Report { report } => {
            let path = report.unwrap_or_else(|| out.join("report.json"));
            let report = read_report(&path)?;
            let summary = compare_report(&report)?;
            summary.write_csv(&out.join("summary.csv"))?;
            println!("wrote {}", out.join("summary.csv").display());
        }
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path)
        .map_err(|_| Error::Input(format!("report not found: {}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}
