use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::models::EvalReport;
use crate::{Error, Result};

/// One (sampler, ratio, seed) cell. `eval` is `None` when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sampler: String,
    pub ratio: Option<f64>,
    pub seed: u64,
    pub status: String,
    pub eval: Option<EvalReport>,
    pub realized_ratio: f64,
    pub n_selected: usize,
    pub n_train: usize,
    pub wall_ms: f64,
}

/// Across-seed statistics for one (sampler, ratio).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sampler: String,
    pub ratio: Option<f64>,
    pub n_seeds: usize,
    pub n_failed: usize,
    pub macro_mean: f64,
    pub macro_std: f64,
    pub micro_mean: f64,
    pub micro_std: f64,
    /// Mean per-category accuracy; `None` where no seed had test examples.
    pub per_category_mean: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub num_classes: usize,
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentReport {
    pub fn from_rows(num_classes: usize, rows: Vec<ReportRow>) -> Self {
        let aggregates = aggregate(&rows, num_classes);
        Self {
            num_classes,
            rows,
            aggregates,
        }
    }

    pub fn row(&self, sampler: &str, ratio: Option<f64>, seed: u64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.sampler == sampler && r.ratio == ratio && r.seed == seed)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; 0 for fewer than two values.
fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Groups rows by (sampler, ratio) in order of first appearance.
pub fn aggregate(rows: &[ReportRow], num_classes: usize) -> Vec<Aggregate> {
    let mut keys: Vec<(String, Option<f64>)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(s, q)| *s == r.sampler && *q == r.ratio) {
            keys.push((r.sampler.clone(), r.ratio));
        }
    }
    keys.into_iter()
        .map(|(sampler, ratio)| {
            let group: Vec<&ReportRow> = rows
                .iter()
                .filter(|r| r.sampler == sampler && r.ratio == ratio)
                .collect();
            let evals: Vec<&EvalReport> = group.iter().filter_map(|r| r.eval.as_ref()).collect();
            let macros: Vec<f64> = evals.iter().map(|e| e.macro_mean).collect();
            let micros: Vec<f64> = evals.iter().map(|e| e.micro_mean).collect();
            let per_category_mean = (0..num_classes)
                .map(|k| {
                    let v: Vec<f64> = evals.iter().filter_map(|e| e.per_category.get(&k).copied()).collect();
                    (!v.is_empty()).then(|| mean(&v))
                })
                .collect();
            Aggregate {
                sampler,
                ratio,
                n_seeds: evals.len(),
                n_failed: group.len() - evals.len(),
                macro_mean: mean(&macros),
                macro_std: sample_std(&macros),
                micro_mean: mean(&micros),
                micro_std: sample_std(&micros),
                per_category_mean,
            }
        })
        .collect()
}

fn ratio_field(r: Option<f64>) -> String {
    r.map_or_else(|| "-".into(), |r| r.to_string())
}

/// Fixed header: `sampler,ratio,seed,status,macro,micro,realized_ratio,
/// n_selected,n_train,acc_0..acc_{C-1}`. Wall time is kept out so reruns
/// compare byte for byte.
pub fn write_report_csv(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "sampler",
        "ratio",
        "seed",
        "status",
        "macro",
        "micro",
        "realized_ratio",
        "n_selected",
        "n_train",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..report.num_classes).map(|k| format!("acc_{k}")));
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![
            r.sampler.clone(),
            ratio_field(r.ratio),
            r.seed.to_string(),
            r.status.clone(),
        ];
        match &r.eval {
            Some(e) => {
                rec.push(e.macro_mean.to_string());
                rec.push(e.micro_mean.to_string());
            }
            None => rec.extend([String::new(), String::new()]),
        }
        rec.push(r.realized_ratio.to_string());
        rec.push(r.n_selected.to_string());
        rec.push(r.n_train.to_string());
        for k in 0..report.num_classes {
            rec.push(
                r.eval
                    .as_ref()
                    .and_then(|e| e.per_category.get(&k))
                    .map_or_else(String::new, |a| a.to_string()),
            );
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregates(path: &Path, aggregates: &[Aggregate]) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(aggregates)?)?;
    Ok(())
}

/// Mean macro accuracy against random at the same ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Win,
    Loss,
    Tie,
    Absent,
}

impl Comparison {
    pub fn name(self) -> &'static str {
        match self {
            Comparison::Win => "win",
            Comparison::Loss => "loss",
            Comparison::Tie => "tie",
            Comparison::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sampler: String,
    pub ratio: Option<f64>,
    pub macro_mean: f64,
    pub macro_std: f64,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub per_category_mean: Vec<Option<f64>>,
    pub vs_random: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub num_classes: usize,
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = [
            "sampler", "ratio", "macro_mean", "macro_std", "micro_mean", "micro_std", "vs_random",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((0..self.num_classes).map(|k| format!("acc_{k}")));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.sampler.clone(),
                ratio_field(r.ratio),
                r.macro_mean.to_string(),
                r.macro_std.to_string(),
                r.micro_mean.to_string(),
                r.micro_std.to_string(),
                r.vs_random.name().to_string(),
            ];
            rec.extend(
                r.per_category_mean
                    .iter()
                    .map(|a| a.map_or_else(String::new, |a| a.to_string())),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn compare_report(report: &ExperimentReport) -> Result<Summary> {
    if report.aggregates.is_empty() {
        return Err(Error::Input("report has no aggregates".into()));
    }
    let rows = report
        .aggregates
        .iter()
        .map(|a| {
            let random = report
                .aggregates
                .iter()
                .find(|b| b.sampler == "random" && b.ratio == a.ratio && b.n_seeds > 0);
            let vs_random = match random {
                None => Comparison::Absent,
                Some(_) if a.n_seeds == 0 => Comparison::Absent,
                Some(b) if a.macro_mean > b.macro_mean => Comparison::Win,
                Some(b) if a.macro_mean < b.macro_mean => Comparison::Loss,
                Some(_) => Comparison::Tie,
            };
            SummaryRow {
                sampler: a.sampler.clone(),
                ratio: a.ratio,
                macro_mean: a.macro_mean,
                macro_std: a.macro_std,
                micro_mean: a.micro_mean,
                micro_std: a.micro_std,
                per_category_mean: a.per_category_mean.clone(),
                vs_random,
            }
        })
        .collect();
    Ok(Summary {
        num_classes: report.num_classes,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sampler: &str, ratio: f64, seed: u64, accs: &[f64]) -> ReportRow {
        let m = accs.iter().sum::<f64>() / accs.len() as f64;
        let eval = EvalReport {
            per_category: accs.iter().copied().enumerate().collect(),
            per_category_n: (0..accs.len()).map(|k| (k, 10)).collect(),
            macro_mean: m,
            micro_mean: m,
            n_examples: 10 * accs.len(),
            empty_categories: Vec::new(),
        };
        ReportRow {
            sampler: sampler.into(),
            ratio: Some(ratio),
            seed,
            status: "ok".into(),
            eval: Some(eval),
            realized_ratio: ratio,
            n_selected: 0,
            n_train: 0,
            wall_ms: 1.0,
        }
    }

    #[test]
    fn single_seed_std_is_zero() {
        let rep = ExperimentReport::from_rows(2, vec![row("random", 1.0, 1, &[0.5, 0.7])]);
        let s = compare_report(&rep).unwrap();
        assert_eq!(s.rows[0].macro_std, 0.0);
        assert_eq!(s.rows[0].micro_std, 0.0);
    }

    #[test]
    fn two_row_means_match_hand_arithmetic() {
        let rep = ExperimentReport::from_rows(
            2,
            vec![row("cl", 1.0, 1, &[0.4, 0.6]), row("cl", 1.0, 2, &[0.8, 1.0])],
        );
        let a = &rep.aggregates[0];
        assert!((a.macro_mean - 0.7).abs() < 1e-12);
        // macros 0.5 and 0.9: sample std = 0.4 / sqrt(2)
        assert!((a.macro_std - 0.4 / 2f64.sqrt()).abs() < 1e-12);
        assert!((a.per_category_mean[0].unwrap() - 0.6).abs() < 1e-12);
        assert!((a.per_category_mean[1].unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(compare_report(&rep).unwrap().rows[0].vs_random, Comparison::Absent);
    }

    #[test]
    fn identical_rows_tie_with_random() {
        let rep = ExperimentReport::from_rows(
            1,
            vec![row("random", 2.0, 1, &[0.6]), row("cl", 2.0, 1, &[0.6]), row("cr", 2.0, 1, &[0.7])],
        );
        let s = compare_report(&rep).unwrap();
        let cmp: Vec<Comparison> = s.rows.iter().map(|r| r.vs_random).collect();
        assert_eq!(cmp, vec![Comparison::Tie, Comparison::Tie, Comparison::Win]);
    }

    #[test]
    fn empty_report_is_rejected() {
        assert!(compare_report(&ExperimentReport::from_rows(1, vec![])).is_err());
    }

    #[test]
    fn failed_rows_count_separately() {
        let mut bad = row("cl", 1.0, 2, &[0.0]);
        bad.eval = None;
        let rep = ExperimentReport::from_rows(1, vec![row("cl", 1.0, 1, &[0.5]), bad]);
        assert_eq!(rep.aggregates[0].n_seeds, 1);
        assert_eq!(rep.aggregates[0].n_failed, 1);
        assert_eq!(rep.aggregates[0].macro_mean, 0.5);
    }
}
