//! `SDS1` dataset files and CSV export.
//!
//! Layout (little-endian):
//!
//! ```text
//! "SDS1" | header_len: u32 | header: JSON (SdsHeader)
//! features: n × d f64, row-major
//! artifact: n f64
//! metadata: n × 6 u32 = (id, origin, split, label, target, effective)
//! ```
//!
//! `origin` is 0 for real and 1 for synthetic; `split` is 0 train, 1 val,
//! 2 test, 3 pool. For real examples `target` and `effective` equal `label`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Origin, RealData, SyntheticPool};
use crate::{Error, Result};

pub const SDS_MAGIC: &[u8; 4] = b"SDS1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Pool,
}

impl Split {
    fn code(self) -> u32 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
            Split::Pool => 3,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        Some(match c {
            0 => Split::Train,
            1 => Split::Val,
            2 => Split::Test,
            3 => Split::Pool,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdsHeader {
    pub schema: u32,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub n: usize,
    pub seed: u64,
    /// Record counts per split name.
    pub counts: std::collections::BTreeMap<String, usize>,
    /// Echo of the generating spec(s).
    pub spec: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdsRecord {
    pub id: u64,
    pub origin: Origin,
    pub split: Split,
    pub label: usize,
    pub target: usize,
    pub effective: usize,
    pub artifact: f64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdsFile {
    pub header: SdsHeader,
    pub records: Vec<SdsRecord>,
}

fn real_records(ds: &Dataset, split: Split) -> impl Iterator<Item = SdsRecord> + '_ {
    ds.examples.iter().map(move |e| SdsRecord {
        id: e.example_id,
        origin: e.origin,
        split,
        label: e.label,
        target: e.label,
        effective: e.label,
        artifact: 0.0,
        features: e.features.clone(),
    })
}

impl SdsFile {
    /// Real splits, optionally followed by a synthetic pool.
    pub fn from_parts(data: &RealData, pool: Option<&SyntheticPool>, spec: serde_json::Value) -> Self {
        let mut records: Vec<SdsRecord> = real_records(&data.train, Split::Train)
            .chain(real_records(&data.val, Split::Val))
            .chain(real_records(&data.test, Split::Test))
            .collect();
        if let Some(pool) = pool {
            records.extend(pool.examples.iter().map(|e| SdsRecord {
                id: e.example_id,
                origin: Origin::Synthetic,
                split: Split::Pool,
                label: e.target_label,
                target: e.target_label,
                effective: e.truth.effective_label(),
                artifact: e.truth.artifact_magnitude(),
                features: e.features.clone(),
            }));
        }
        let mut counts = std::collections::BTreeMap::new();
        for r in &records {
            *counts
                .entry(format!("{:?}", r.split).to_lowercase())
                .or_insert(0) += 1;
        }
        SdsFile {
            header: SdsHeader {
                schema: 1,
                num_classes: data.spec.num_classes,
                feature_dim: data.spec.feature_dim,
                n: records.len(),
                seed: data.spec.seed,
                counts,
                spec,
            },
            records,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let d = self.header.feature_dim;
        let mut buf = Vec::with_capacity(8 + header.len() + self.records.len() * (d * 8 + 32));
        buf.extend_from_slice(SDS_MAGIC);
        buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
        buf.extend_from_slice(&header);
        for r in &self.records {
            if r.features.len() != d {
                return Err(Error::Input(format!("record {} has wrong feature width", r.id)));
            }
            for v in &r.features {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        for r in &self.records {
            buf.extend_from_slice(&r.artifact.to_le_bytes());
        }
        for r in &self.records {
            let id = u32::try_from(r.id)
                .map_err(|_| Error::Input(format!("id {} does not fit in u32", r.id)))?;
            let origin = match r.origin {
                Origin::Real => 0u32,
                Origin::Synthetic => 1,
            };
            for v in [
                id,
                origin,
                r.split.code(),
                r.label as u32,
                r.target as u32,
                r.effective as u32,
            ] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(buf)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let fail = |m: &str| Error::Format(format!("SDS1: {m}"));
        if bytes.len() < 8 || &bytes[..4] != SDS_MAGIC {
            return Err(fail("bad magic"));
        }
        let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let hend = 8usize
            .checked_add(hlen)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| fail("truncated header"))?;
        let header: SdsHeader = serde_json::from_slice(&bytes[8..hend])?;
        let (n, d) = (header.n, header.feature_dim);
        let need = n
            .checked_mul(d * 8 + 8 + 24)
            .ok_or_else(|| fail("size overflow"))?;
        if bytes.len() - hend != need {
            return Err(fail("body length does not match header"));
        }
        let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let feat0 = hend;
        let art0 = feat0 + n * d * 8;
        let meta0 = art0 + n * 8;
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let m = |k: usize| u32_at(meta0 + (i * 6 + k) * 4);
            let origin = match m(1) {
                0 => Origin::Real,
                1 => Origin::Synthetic,
                _ => return Err(fail("unknown origin code")),
            };
            records.push(SdsRecord {
                id: m(0) as u64,
                origin,
                split: Split::from_code(m(2)).ok_or_else(|| fail("unknown split code"))?,
                label: m(3) as usize,
                target: m(4) as usize,
                effective: m(5) as usize,
                artifact: f64_at(art0 + i * 8),
                features: (0..d).map(|j| f64_at(feat0 + (i * d + j) * 8)).collect(),
            });
        }
        Ok(SdsFile { header, records })
    }
}

pub fn write_sds<W: Write>(file: &SdsFile, mut w: W) -> Result<()> {
    w.write_all(&file.encode()?)?;
    Ok(())
}

pub fn read_sds<R: Read>(mut r: R) -> Result<SdsFile> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    SdsFile::decode(&bytes)
}

/// One row per record: `id,origin,label,target,effective,artifact,f0,…`.
pub fn export_csv(file: &SdsFile, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = file.header.feature_dim;
    let mut header: Vec<String> = ["id", "origin", "label", "target", "effective", "artifact"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..d).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for r in &file.records {
        let origin = match r.origin {
            Origin::Real => "real",
            Origin::Synthetic => "synthetic",
        };
        let mut row = vec![
            r.id.to_string(),
            origin.to_string(),
            r.label.to_string(),
            r.target.to_string(),
            r.effective.to_string(),
            r.artifact.to_string(),
        ];
        row.extend(r.features.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
