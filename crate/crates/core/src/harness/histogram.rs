use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::samplers::{ScoredEntry, ScoredPool};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    ClassConf,
    Realism,
}

impl ScoreKind {
    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::ClassConf => "class_conf",
            ScoreKind::Realism => "realism",
        }
    }

    pub fn value(self, e: &ScoredEntry) -> f64 {
        match self {
            ScoreKind::ClassConf => e.class_conf,
            ScoreKind::Realism => e.realism,
        }
    }
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class_conf" | "class-conf" | "cl" => Ok(ScoreKind::ClassConf),
            "realism" | "cr" => Ok(ScoreKind::Realism),
            other => Err(Error::Input(format!("unknown score kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub kind: ScoreKind,
    pub bins: usize,
    pub per_category: bool,
}

/// Equal-width bin counts over `[0, 1]`. One row per category, or a single
/// row when pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub kind: ScoreKind,
    pub bins: usize,
    pub per_category: bool,
    pub counts: Vec<Vec<usize>>,
}

impl Histogram {
    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        (edge(b, self.bins), edge(b + 1, self.bins))
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

fn edge(b: usize, bins: usize) -> f64 {
    b as f64 / bins as f64
}

/// Bin `b` holds `edge(b) <= s < edge(b + 1)`; `s = 1` goes in the last bin.
/// The product `s × bins` can round across an edge, so the guess is
/// corrected against the edges the CSV reports.
fn bin_of(s: f64, bins: usize) -> usize {
    let mut b = ((s * bins as f64).floor() as usize).min(bins - 1);
    if b > 0 && s < edge(b, bins) {
        b -= 1;
    } else if b + 1 < bins && s >= edge(b + 1, bins) {
        b += 1;
    }
    b
}

pub fn score_histogram(scored: &ScoredPool, spec: &HistogramSpec) -> Result<Histogram> {
    if spec.bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let rows = if spec.per_category { scored.num_classes } else { 1 };
    let mut counts = vec![vec![0usize; spec.bins]; rows];
    for e in &scored.entries {
        let s = spec.kind.value(e);
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Input(format!(
                "score {s} of example {} is outside [0, 1]",
                e.example_id
            )));
        }
        let row = if spec.per_category { e.target_label } else { 0 };
        counts[row][bin_of(s, spec.bins)] += 1;
    }
    Ok(Histogram {
        kind: spec.kind,
        bins: spec.bins,
        per_category: spec.per_category,
        counts,
    })
}

/// Columns `category,bin,lo,hi,count`; category is `all` when pooled.
pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["category", "bin", "lo", "hi", "count"])?;
    for (row, counts) in h.counts.iter().enumerate() {
        let cat = if h.per_category { row.to_string() } else { "all".into() };
        for (b, c) in counts.iter().enumerate() {
            let (lo, hi) = h.bin_edges(b);
            w.write_record([cat.clone(), b.to_string(), lo.to_string(), hi.to_string(), c.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
