//! Trace dataset: JSON-lines, one cascade per line.
//!
//! `{"seed": 7, "generations": [[0, 4], [2]]}`

use std::path::Path;

use gridcascade_core::cascade::CascadeTrace;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_file, CliError};

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    seed: u64,
    generations: Vec<Vec<usize>>,
}

pub fn save_traces(traces: &[CascadeTrace], path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for trace in traces {
        let record = TraceRecord {
            seed: trace.seed,
            generations: trace
                .generations
                .iter()
                .map(|g| g.iter().copied().collect())
                .collect(),
        };
        out.push_str(&serde_json::to_string(&record).expect("trace serializes"));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Load traces, validating each against `n_lines`. The network name is not
/// stored in the file; the caller supplies it.
pub fn load_traces(
    path: &Path,
    network_name: &str,
    n_lines: usize,
) -> Result<Vec<CascadeTrace>, CliError> {
    let text = read_to_string(path)?;
    let mut traces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(line).map_err(|e| {
            CliError::parse(format!("{} line {}", path.display(), lineno + 1), e)
        })?;
        let trace = CascadeTrace {
            generations: record.generations.iter().map(|g| g.iter().copied().collect()).collect(),
            network_name: network_name.to_string(),
            seed: record.seed,
        };
        trace.validate(n_lines).map_err(|e| {
            CliError::Validation(format!("{} line {}: {e}", path.display(), lineno + 1))
        })?;
        traces.push(trace);
    }
    Ok(traces)
}
