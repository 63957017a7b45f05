use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::Provenance;
use crate::numkit::{read_params, write_params, LayerSpec, ParameterSet};
use crate::Result;

/// JSON written next to every `.nkpm` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub kind: String,
    pub arch: Vec<LayerSpec>,
    pub num_classes: usize,
    pub provenance: Provenance,
}

/// Writes `<stem>.nkpm` and `<stem>.json`.
pub fn save_model(dir: &Path, stem: &str, params: &ParameterSet, sidecar: &ModelSidecar) -> Result<()> {
    fs::create_dir_all(dir)?;
    let f = fs::File::create(dir.join(format!("{stem}.nkpm")))?;
    write_params(params, std::io::BufWriter::new(f))?;
    fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(sidecar)?,
    )?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ParameterSet> {
    read_params(std::io::BufReader::new(fs::File::open(path)?))
}
