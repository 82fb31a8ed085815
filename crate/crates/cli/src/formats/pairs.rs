//! Training pairs: JSON-lines `{"t": 1, "inp": [...], "tar": [...]}` with
//! masks recomputed on load, plus the transform manifest that pins the
//! sequence length and label space the pair files were produced under.

use std::path::Path;

use gridcascade_core::dual::TrainingPair;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_file, CliError};

#[derive(Serialize, Deserialize)]
struct PairRecord {
    t: usize,
    inp: Vec<usize>,
    tar: Vec<usize>,
}

pub fn save_pairs(pairs: &[TrainingPair], path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for pair in pairs {
        let record = PairRecord {
            t: pair.t,
            inp: pair.inp.labels.clone(),
            tar: pair.tar.labels.clone(),
        };
        out.push_str(&serde_json::to_string(&record).expect("pair serializes"));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn load_pairs(path: &Path, n_lines: usize) -> Result<Vec<TrainingPair>, CliError> {
    let text = read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(line).map_err(|e| {
            CliError::parse(format!("{} line {}", path.display(), lineno + 1), e)
        })?;
        if record.inp.len() != n_lines {
            return Err(CliError::Validation(format!(
                "{} line {}: pair length {} does not match manifest n_lines {}",
                path.display(),
                lineno + 1,
                record.inp.len(),
                n_lines
            )));
        }
        let pair = TrainingPair::from_labels(record.t, record.inp, record.tar).map_err(|e| {
            CliError::Validation(format!("{} line {}: {e}", path.display(), lineno + 1))
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Written next to the split pair files by `transform`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TransformManifest {
    pub n_lines: usize,
    pub g_max: usize,
    pub seed: u64,
    pub split: [f64; 3],
    pub network_name: String,
    /// Traces per split.
    pub traces: SplitCounts,
    /// Pairs per split.
    pub pairs: SplitCounts,
    /// Traces dropped for exceeding `g_max`.
    pub rejected_deep_traces: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

pub fn save_manifest(manifest: &TransformManifest, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn load_manifest(path: &Path) -> Result<TransformManifest, CliError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("{} is not a transform manifest", path.display()), e))
}
