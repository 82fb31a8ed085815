//! Cascading-failure simulation and bulk dataset generation.
//!
//! A cascade starts from an initial failure set, then repeats: re-solve
//! the DC power flow over everything failed so far and trip every
//! surviving line whose flow magnitude strictly exceeds its capacity, all
//! at once. Each round of simultaneous trips is one generation; the trace
//! ends at the last generation that produced a new failure.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::flow::{dc_power_flow, FlowError};
use crate::grid::GridNetwork;
use crate::seed::seeded_rng;

/// An ordered sequence of failure generations `L_1..L_G`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeTrace {
    pub generations: Vec<BTreeSet<usize>>,
    pub network_name: String,
    pub seed: u64,
}

impl CascadeTrace {
    /// Union of all generations.
    pub fn all_failed(&self) -> BTreeSet<usize> {
        self.generations.iter().flatten().copied().collect()
    }

    /// Check the trace invariants against a network of `n_lines` lines.
    pub fn validate(&self, n_lines: usize) -> Result<(), TraceViolation> {
        if self.generations.is_empty() || self.generations[0].is_empty() {
            return Err(TraceViolation::EmptyInitialGeneration);
        }
        let mut seen = BTreeSet::new();
        for (t, gen) in self.generations.iter().enumerate() {
            if gen.is_empty() {
                return Err(TraceViolation::EmptyGeneration { t: t + 1 });
            }
            for &id in gen {
                if id >= n_lines {
                    return Err(TraceViolation::LineOutOfRange { id, n_lines });
                }
                if !seen.insert(id) {
                    return Err(TraceViolation::RepeatedFailure { id, t: t + 1 });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceViolation {
    EmptyInitialGeneration,
    EmptyGeneration { t: usize },
    LineOutOfRange { id: usize, n_lines: usize },
    RepeatedFailure { id: usize, t: usize },
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceViolation::EmptyInitialGeneration => write!(f, "empty initial generation"),
            TraceViolation::EmptyGeneration { t } => write!(f, "empty generation {t}"),
            TraceViolation::LineOutOfRange { id, n_lines } => {
                write!(f, "line id {id} out of range for {n_lines} lines")
            }
            TraceViolation::RepeatedFailure { id, t } => {
                write!(f, "line {id} fails again in generation {t}")
            }
        }
    }
}

impl core::error::Error for TraceViolation {}

#[derive(Debug, Clone, PartialEq)]
pub enum CascadeError {
    EmptyInitialFailures,
    Flow(FlowError),
    BadSampleRange { k_min: usize, k_max: usize, n_lines: usize },
}

impl fmt::Display for CascadeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CascadeError::EmptyInitialFailures => write!(f, "initial failure set is empty"),
            CascadeError::Flow(e) => write!(f, "power flow failed: {e}"),
            CascadeError::BadSampleRange { k_min, k_max, n_lines } => write!(
                f,
                "initial failure count range {k_min}..={k_max} invalid for {n_lines} lines"
            ),
        }
    }
}

impl From<FlowError> for CascadeError {
    fn from(e: FlowError) -> Self {
        CascadeError::Flow(e)
    }
}

impl core::error::Error for CascadeError {}

/// Run one deterministic cascade from the given initial failures.
pub fn simulate_cascade(
    net: &GridNetwork,
    initial_failures: &BTreeSet<usize>,
) -> Result<CascadeTrace, CascadeError> {
    if initial_failures.is_empty() {
        return Err(CascadeError::EmptyInitialFailures);
    }
    let n = net.n_lines();
    let mut failed = initial_failures.clone();
    let mut generations = alloc::vec![initial_failures.clone()];
    while failed.len() < n {
        let solution = dc_power_flow(net, &failed)?;
        let tripped: BTreeSet<usize> = net
            .lines
            .iter()
            .filter(|l| !failed.contains(&l.id) && solution.flows[l.id].abs() > l.capacity)
            .map(|l| l.id)
            .collect();
        if tripped.is_empty() {
            break;
        }
        failed.extend(tripped.iter().copied());
        generations.push(tripped);
    }
    Ok(CascadeTrace { generations, network_name: net.name.clone(), seed: 0 })
}

/// One dataset sample: k distinct initial lines drawn from `(seed, index)`
/// alone, so any subset of samples can be regenerated independently and in
/// parallel.
pub fn generate_sample(
    net: &GridNetwork,
    index: u64,
    seed: u64,
    k_min: usize,
    k_max: usize,
) -> Result<CascadeTrace, CascadeError> {
    let n = net.n_lines();
    if k_min < 1 || k_min > k_max || k_max > n {
        return Err(CascadeError::BadSampleRange { k_min, k_max, n_lines: n });
    }
    let mut rng = seeded_rng(seed, index);
    let k = rng.random_range(k_min..=k_max);
    let initial: BTreeSet<usize> =
        rand::seq::index::sample(&mut rng, n, k).into_iter().collect();
    let mut trace = simulate_cascade(net, &initial)?;
    trace.seed = seed.wrapping_add(index);
    Ok(trace)
}

/// Generate `n_samples` cascades under the random initial-failure protocol.
pub fn generate_dataset(
    net: &GridNetwork,
    n_samples: usize,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<Vec<CascadeTrace>, CascadeError> {
    (0..n_samples as u64)
        .map(|i| generate_sample(net, i, seed, k_min, k_max))
        .collect()
}

/// Fraction of lines failed over the whole trace.
pub fn cascade_scale(trace: &CascadeTrace, n_lines: usize) -> f64 {
    let failed: usize = trace.generations.iter().map(|g| g.len()).sum();
    failed as f64 / n_lines as f64
}
