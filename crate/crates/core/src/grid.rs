//! Power-network substrate: buses, transmission lines, validation, and
//! synthetic network generation.
//!
//! Bus and line ids are dense 0-based integers so they can index embedding
//! rows and matrix rows/columns directly. Susceptance is per-unit, power is
//! MW on one global base. Networks are immutable after construction and
//! safe to share read-only across parallel workers.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::flow;
use crate::seed::seeded_rng;

/// A bus (node) with fixed generation and load in MW.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub generation: f64,
    pub load: f64,
}

/// A transmission line between two buses.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    /// Per-unit susceptance, > 0.
    pub susceptance: f64,
    /// Thermal rating in MW, > 0.
    pub capacity: f64,
}

/// A validated power network. `lines.len()` is the `N` every sequence and
/// matrix in the toolkit is indexed by.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNetwork {
    pub name: String,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

/// One invariant violation found by [`validate`]. Every variant names the
/// offending record.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoBuses,
    NoLines,
    DuplicateBusId { id: usize },
    NonDenseBusId { position: usize, id: usize },
    NonFiniteInjection { bus: usize, field: &'static str },
    NegativeInjection { bus: usize, field: &'static str },
    DuplicateLineId { id: usize },
    NonDenseLineId { position: usize, id: usize },
    SelfLoop { line: usize },
    DanglingEndpoint { line: usize, bus: usize },
    NonPositiveSusceptance { line: usize },
    NonPositiveCapacity { line: usize },
    Disconnected { components: Vec<Vec<usize>> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoBuses => write!(f, "no buses"),
            Violation::NoLines => write!(f, "no lines"),
            Violation::DuplicateBusId { id } => write!(f, "duplicate bus id {id}"),
            Violation::NonDenseBusId { position, id } => {
                write!(f, "bus at position {position} has id {id}, expected {position}")
            }
            Violation::NonFiniteInjection { bus, field } => {
                write!(f, "bus {bus}: {field} is not finite")
            }
            Violation::NegativeInjection { bus, field } => {
                write!(f, "bus {bus}: {field} is negative")
            }
            Violation::DuplicateLineId { id } => write!(f, "duplicate line id {id}"),
            Violation::NonDenseLineId { position, id } => {
                write!(f, "line at position {position} has id {id}, expected {position}")
            }
            Violation::SelfLoop { line } => write!(f, "line {line} connects a bus to itself"),
            Violation::DanglingEndpoint { line, bus } => {
                write!(f, "line {line} references missing bus {bus}")
            }
            Violation::NonPositiveSusceptance { line } => {
                write!(f, "line {line} has non-positive susceptance")
            }
            Violation::NonPositiveCapacity { line } => {
                write!(f, "line {line} has non-positive capacity")
            }
            Violation::Disconnected { components } => {
                write!(f, "network is disconnected into {} components: ", components.len())?;
                for (i, comp) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "{comp:?}")?;
                }
                Ok(())
            }
        }
    }
}

/// Construction error carrying every violation found, not just the first.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidNetwork {
    pub violations: Vec<Violation>,
}

impl fmt::Display for InvalidNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid network:")?;
        for v in &self.violations {
            write!(f, " [{v}]")?;
        }
        Ok(())
    }
}

impl core::error::Error for InvalidNetwork {}

impl GridNetwork {
    /// Build a network, checking every invariant. On failure the error
    /// lists all violations.
    pub fn new(
        name: impl Into<String>,
        buses: Vec<Bus>,
        lines: Vec<Line>,
    ) -> Result<Self, InvalidNetwork> {
        let net = GridNetwork { name: name.into(), buses, lines };
        let violations = net.validate();
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(InvalidNetwork { violations })
        }
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Number of lines; the `N` of every dual sequence and matrix.
    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Check every invariant and return all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.buses.is_empty() {
            out.push(Violation::NoBuses);
        }
        if self.lines.is_empty() {
            out.push(Violation::NoLines);
        }

        // Dense unique ids mean buses[pos].id == pos; anything else is
        // either a repeat of an id seen before or an out-of-place id.
        let b = self.buses.len();
        let mut seen = vec![false; b];
        for (pos, bus) in self.buses.iter().enumerate() {
            if bus.id < b && seen[bus.id] {
                out.push(Violation::DuplicateBusId { id: bus.id });
            } else if bus.id != pos {
                out.push(Violation::NonDenseBusId { position: pos, id: bus.id });
            }
            if bus.id < b {
                seen[bus.id] = true;
            }
            for (field, value) in [("generation", bus.generation), ("load", bus.load)] {
                if !value.is_finite() {
                    out.push(Violation::NonFiniteInjection { bus: bus.id, field });
                } else if value < 0.0 {
                    out.push(Violation::NegativeInjection { bus: bus.id, field });
                }
            }
        }

        let n = self.lines.len();
        let mut seen_line = vec![false; n];
        for (pos, line) in self.lines.iter().enumerate() {
            if line.id < n && seen_line[line.id] {
                out.push(Violation::DuplicateLineId { id: line.id });
            } else if line.id != pos {
                out.push(Violation::NonDenseLineId { position: pos, id: line.id });
            }
            if line.id < n {
                seen_line[line.id] = true;
            }
            if line.from == line.to {
                out.push(Violation::SelfLoop { line: line.id });
            }
            for bus in [line.from, line.to] {
                if bus >= b {
                    out.push(Violation::DanglingEndpoint { line: line.id, bus });
                }
            }
            if !(line.susceptance > 0.0) || !line.susceptance.is_finite() {
                out.push(Violation::NonPositiveSusceptance { line: line.id });
            }
            if !(line.capacity > 0.0) || !line.capacity.is_finite() {
                out.push(Violation::NonPositiveCapacity { line: line.id });
            }
        }

        // Connectivity is only meaningful once the structure is sound.
        if out.is_empty() {
            let components = connected_components(b, self.lines.iter().map(|l| (l.from, l.to)));
            if components.len() > 1 {
                out.push(Violation::Disconnected { components });
            }
        }
        out
    }
}

/// Connected components over `n` nodes, each sorted ascending; components
/// ordered by smallest member.
pub(crate) fn connected_components(
    n: usize,
    edges: impl Iterator<Item = (usize, usize)>,
) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in edges {
        if a < n && b < n {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut components = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let idx = components.len();
        let mut members = vec![start];
        comp[start] = idx;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = idx;
                    members.push(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Topology of a synthetic network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Single cycle over all buses.
    Ring,
    /// Near-square 2D mesh; a trailing partial row stays attached vertically.
    Grid,
    /// Random regular graph of the given degree (configuration model).
    RandomRegular { degree: usize },
}

/// Parameters for [`synthesize_network`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub buses: usize,
    pub topology: Topology,
    /// Multiplies every bus load.
    pub load_scale: f64,
    /// Line capacity = margin x |base-case flow|, margin > 1.
    pub capacity_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    TooFewBuses { buses: usize },
    BadMargin { margin: f64 },
    BadLoadScale { load_scale: f64 },
    InfeasibleTopology { reason: String },
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::TooFewBuses { buses } => {
                write!(f, "need at least 3 buses, got {buses}")
            }
            SynthError::BadMargin { margin } => {
                write!(f, "capacity margin must be > 1, got {margin}")
            }
            SynthError::BadLoadScale { load_scale } => {
                write!(f, "load scale must be positive and finite, got {load_scale}")
            }
            SynthError::InfeasibleTopology { reason } => write!(f, "infeasible topology: {reason}"),
        }
    }
}

impl core::error::Error for SynthError {}

/// Generate a connected network, deterministic for a fixed `(spec, seed)`.
///
/// Loads are drawn per bus, roughly 30% of buses generate, and total
/// generation is scaled to match total load. Capacities come from one
/// base-case DC solve: `capacity_margin x |flow|`, floored at 10% of the
/// mean flow magnitude so zero-flow lines stay usable.
pub fn synthesize_network(spec: &SynthSpec, seed: u64) -> Result<GridNetwork, SynthError> {
    if spec.buses < 3 {
        return Err(SynthError::TooFewBuses { buses: spec.buses });
    }
    if !(spec.capacity_margin > 1.0) || !spec.capacity_margin.is_finite() {
        return Err(SynthError::BadMargin { margin: spec.capacity_margin });
    }
    if !(spec.load_scale > 0.0) || !spec.load_scale.is_finite() {
        return Err(SynthError::BadLoadScale { load_scale: spec.load_scale });
    }

    let b = spec.buses;
    let mut rng = seeded_rng(seed, 0x10_0001);
    let edges = match spec.topology {
        Topology::Ring => (0..b).map(|i| (i, (i + 1) % b)).collect(),
        Topology::Grid => grid_edges(b),
        Topology::RandomRegular { degree } => random_regular_edges(b, degree, &mut rng)?,
    };

    // Loads first, then pick generators and balance total generation
    // against total load; the per-island rebalance in the flow solver
    // handles any residual mismatch.
    let mut loads: Vec<f64> = (0..b).map(|_| spec.load_scale * rng.random_range(0.5..1.5)).collect();
    let picks: Vec<f64> = (0..b).map(|_| rng.random::<f64>()).collect();
    let mut gen_buses: Vec<usize> = (0..b).filter(|&i| picks[i] < 0.3).collect();
    if gen_buses.is_empty() {
        let argmin = (0..b)
            .min_by(|&a, &c| picks[a].partial_cmp(&picks[c]).expect("finite"))
            .expect("non-empty");
        gen_buses.push(argmin);
    }
    let mut gens = vec![0.0; b];
    for &i in &gen_buses {
        gens[i] = rng.random_range(1.0..2.0);
        // Generator buses do not also draw load; keeps flows directional.
        loads[i] = 0.0;
    }
    let total_load: f64 = loads.iter().sum();
    let total_gen_raw: f64 = gens.iter().sum();
    let scale = total_load / total_gen_raw;
    for g in &mut gens {
        *g *= scale;
    }

    let buses: Vec<Bus> = (0..b)
        .map(|id| Bus { id, generation: gens[id], load: loads[id] })
        .collect();
    let provisional: Vec<Line> = edges
        .iter()
        .enumerate()
        .map(|(id, &(from, to))| Line { id, from, to, susceptance: 1.0, capacity: 1.0 })
        .collect();
    let mut net = GridNetwork::new(format!("synth-{seed}"), buses, provisional)
        .expect("synthesized structure is valid by construction");

    // One base-case solve fixes the capacities.
    let base = flow::dc_power_flow(&net, &Default::default())
        .expect("connected synthetic network is solvable");
    let mean_abs: f64 =
        base.flows.iter().map(|f| f.abs()).sum::<f64>() / net.n_lines() as f64;
    let floor = if mean_abs > 0.0 { 0.1 * mean_abs } else { 0.1 * spec.load_scale };
    for (line, flow) in net.lines.iter_mut().zip(&base.flows) {
        line.capacity = (spec.capacity_margin * flow.abs()).max(floor);
    }
    debug_assert!(net.validate().is_empty());
    Ok(net)
}

fn grid_edges(b: usize) -> Vec<(usize, usize)> {
    let mut rows = 1;
    for r in 1..=b {
        if r * r <= b {
            rows = r;
        }
    }
    let cols = b.div_ceil(rows);
    let mut edges = Vec::new();
    for i in 0..b {
        let (r, c) = (i / cols, i % cols);
        if c + 1 < cols && i + 1 < b {
            edges.push((i, i + 1));
        }
        let below = (r + 1) * cols + c;
        if below < b {
            edges.push((i, below));
        }
    }
    edges
}

fn random_regular_edges(
    b: usize,
    degree: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    if degree < 2 || degree >= b {
        return Err(SynthError::InfeasibleTopology {
            reason: format!("degree {degree} needs 2 <= degree < buses ({b})"),
        });
    }
    if (b * degree) % 2 != 0 {
        return Err(SynthError::InfeasibleTopology {
            reason: format!("buses x degree = {b} x {degree} is odd"),
        });
    }
    // Configuration model: pair shuffled stubs, reject self-loops,
    // duplicate edges, and disconnected outcomes.
    'attempt: for _ in 0..500 {
        let mut stubs: Vec<usize> = (0..b).flat_map(|i| core::iter::repeat_n(i, degree)).collect();
        for i in (1..stubs.len()).rev() {
            let j = rng.random_range(0..=i);
            stubs.swap(i, j);
        }
        let mut edges = Vec::with_capacity(b * degree / 2);
        let mut used = alloc::collections::BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !used.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        if connected_components(b, edges.iter().copied()).len() == 1 {
            edges.sort_unstable();
            return Ok(edges);
        }
    }
    Err(SynthError::InfeasibleTopology {
        reason: format!("no connected {degree}-regular graph on {b} buses found in 500 attempts"),
    })
}
