//! Canonical on-disk network representation.
//!
//! ```json
//! {"name": "...", "buses": [{"id": 0, "generation": 1.0, "load": 0.0}],
//!  "lines": [{"id": 0, "from": 0, "to": 1, "susceptance": 1.0, "capacity": 1.0}]}
//! ```

use std::path::Path;

use gridcascade_core::grid::{Bus, GridNetwork, Line};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_file, CliError};

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    name: String,
    buses: Vec<BusRecord>,
    lines: Vec<LineRecord>,
}

#[derive(Serialize, Deserialize)]
struct BusRecord {
    id: usize,
    generation: f64,
    load: f64,
}

#[derive(Serialize, Deserialize)]
struct LineRecord {
    id: usize,
    from: usize,
    to: usize,
    susceptance: f64,
    capacity: f64,
}

/// Load and fully validate a network file; validation failures name every
/// offending record.
pub fn load_network(path: &Path) -> Result<GridNetwork, CliError> {
    let text = read_to_string(path)?;
    let file: NetworkFile = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("{} is not a network file", path.display()), e))?;
    let buses = file
        .buses
        .into_iter()
        .map(|b| Bus { id: b.id, generation: b.generation, load: b.load })
        .collect();
    let lines = file
        .lines
        .into_iter()
        .map(|l| Line {
            id: l.id,
            from: l.from,
            to: l.to,
            susceptance: l.susceptance,
            capacity: l.capacity,
        })
        .collect();
    GridNetwork::new(file.name, buses, lines)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn save_network(net: &GridNetwork, path: &Path) -> Result<(), CliError> {
    let file = NetworkFile {
        name: net.name.clone(),
        buses: net
            .buses
            .iter()
            .map(|b| BusRecord { id: b.id, generation: b.generation, load: b.load })
            .collect(),
        lines: net
            .lines
            .iter()
            .map(|l| LineRecord {
                id: l.id,
                from: l.from,
                to: l.to,
                susceptance: l.susceptance,
                capacity: l.capacity,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("network serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}
