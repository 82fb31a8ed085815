//! Desk-scale reproductions of the comparison experiments: passive
//! failure frequencies, the exclusive-attribution initiative scale
//! experiment, and capacity/flow structure statistics.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cascade::{cascade_scale, CascadeTrace};

#[allow(unused_imports)]
use num_traits::Float;
use crate::flow::{dc_power_flow, FlowError};
use crate::grid::GridNetwork;

/// Which generations count as "failed as a consequence".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyWindow {
    /// Failures in generation 2 only.
    SecondGeneration,
    /// Failures in any generation after the first.
    AllAfterFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    EmptyTraceSet,
    BadTopX { top_x: f64 },
    NotAPermutation { name: String },
    Flow(FlowError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyTraceSet => write!(f, "no traces to evaluate"),
            EvalError::BadTopX { top_x } => {
                write!(f, "top-x percentage {top_x} must be in (0, 100]")
            }
            EvalError::NotAPermutation { name } => {
                write!(f, "rank {name} is not a permutation of the line ids")
            }
            EvalError::Flow(e) => write!(f, "{e}"),
        }
    }
}

impl From<FlowError> for EvalError {
    fn from(e: FlowError) -> Self {
        EvalError::Flow(e)
    }
}

impl core::error::Error for EvalError {}

/// Number of lines in the top `top_x` percent of a length-`n` ranking.
pub fn top_count(top_x: f64, n: usize) -> usize {
    let raw = (top_x * n as f64 / 100.0).ceil() as usize;
    raw.clamp(1, n)
}

fn check_permutation(rank: &[usize], name: &str) -> Result<(), EvalError> {
    let mut seen = alloc::vec![false; rank.len()];
    for &id in rank {
        if id >= rank.len() || seen[id] {
            return Err(EvalError::NotAPermutation { name: String::from(name) });
        }
        seen[id] = true;
    }
    Ok(())
}

fn check_top_x(top_x: f64) -> Result<(), EvalError> {
    if !(top_x > 0.0 && top_x <= 100.0) {
        return Err(EvalError::BadTopX { top_x });
    }
    Ok(())
}

/// Per-line-per-trace failure frequency of the top `top_x`% of `rank`
/// within the window: event count divided by `|S| x number of traces`.
pub fn passive_frequency(
    traces: &[CascadeTrace],
    rank: &[usize],
    top_x: f64,
    window: FrequencyWindow,
) -> Result<f64, EvalError> {
    if traces.is_empty() {
        return Err(EvalError::EmptyTraceSet);
    }
    check_top_x(top_x)?;
    check_permutation(rank, "passives")?;
    let take = top_count(top_x, rank.len());
    let selected: BTreeSet<usize> = rank[..take].iter().copied().collect();
    let mut events = 0usize;
    for trace in traces {
        match window {
            FrequencyWindow::SecondGeneration => {
                if let Some(second) = trace.generations.get(1) {
                    events += second.iter().filter(|id| selected.contains(id)).count();
                }
            }
            FrequencyWindow::AllAfterFirst => {
                for generation in trace.generations.iter().skip(1) {
                    events += generation.iter().filter(|id| selected.contains(id)).count();
                }
            }
        }
    }
    Ok(events as f64 / (take * traces.len()) as f64)
}

/// Mean cascade scale of the traces exclusively attributed to one ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleCell {
    pub name: String,
    pub mean_scale: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleExperiment {
    pub cells: Vec<ScaleCell>,
    /// Traces whose initial failures touched two or more top sets.
    pub discarded_overlap: usize,
    /// Traces whose initial failures touched no top set.
    pub discarded_untouched: usize,
}

/// Attribute each trace to the single ranking whose top `top_x`% set its
/// initial failures intersect; traces touching zero or several sets are
/// discarded. Reports the mean cascade scale and sample count per ranking.
pub fn initiative_scale_experiment(
    traces: &[CascadeTrace],
    n_lines: usize,
    ranks: &[(&str, &[usize])],
    top_x: f64,
) -> Result<ScaleExperiment, EvalError> {
    check_top_x(top_x)?;
    let mut top_sets = Vec::with_capacity(ranks.len());
    for (name, rank) in ranks {
        check_permutation(rank, name)?;
        let take = top_count(top_x, rank.len());
        let set: BTreeSet<usize> = rank[..take].iter().copied().collect();
        top_sets.push(set);
    }
    let mut sums = alloc::vec![0.0f64; ranks.len()];
    let mut counts = alloc::vec![0usize; ranks.len()];
    let (mut overlap, mut untouched) = (0usize, 0usize);
    for trace in traces {
        let initial = &trace.generations[0];
        let touched: Vec<usize> = top_sets
            .iter()
            .enumerate()
            .filter(|(_, set)| initial.iter().any(|id| set.contains(id)))
            .map(|(idx, _)| idx)
            .collect();
        match touched.as_slice() {
            [only] => {
                sums[*only] += cascade_scale(trace, n_lines);
                counts[*only] += 1;
            }
            [] => untouched += 1,
            _ => overlap += 1,
        }
    }
    let cells = ranks
        .iter()
        .zip(sums.iter().zip(&counts))
        .map(|((name, _), (&sum, &count))| ScaleCell {
            name: String::from(*name),
            mean_scale: if count > 0 { sum / count as f64 } else { 0.0 },
            count,
        })
        .collect();
    Ok(ScaleExperiment { cells, discarded_overlap: overlap, discarded_untouched: untouched })
}

/// One named pair of orderings entering the structure statistics.
#[derive(Debug, Clone, Copy)]
pub struct RankPair<'a> {
    pub name: &'a str,
    pub initiatives: &'a [usize],
    pub passives: &'a [usize],
}

/// Capacity and base-flow concentration of a ranking's top slice.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureRow {
    pub algorithm: String,
    pub top_x: f64,
    /// Mean capacity of the top passives over the population mean.
    pub passive_capacity_ratio: f64,
    /// Mean base-case |flow| of the top initiatives over the population mean.
    pub initiative_flow_ratio: f64,
    /// Lines in each top slice.
    pub count: usize,
}

/// Tabular replacement for the map projections: how strongly each
/// ranking's head concentrates low capacity (passives) and high base-case
/// flow (initiatives).
pub fn structure_correlation(
    net: &GridNetwork,
    ranks: &[RankPair<'_>],
    top_x_grid: &[f64],
) -> Result<Vec<StructureRow>, EvalError> {
    let base = dc_power_flow(net, &BTreeSet::new())?;
    let n = net.n_lines();
    let capacity_mean: f64 = net.lines.iter().map(|l| l.capacity).sum::<f64>() / n as f64;
    let flow_mean: f64 = base.flows.iter().map(|f| f.abs()).sum::<f64>() / n as f64;

    let mut rows = Vec::new();
    for pair in ranks {
        check_permutation(pair.initiatives, pair.name)?;
        check_permutation(pair.passives, pair.name)?;
        for &top_x in top_x_grid {
            check_top_x(top_x)?;
            let take = top_count(top_x, n);
            let cap_sel: f64 = pair.passives[..take]
                .iter()
                .map(|&id| net.lines[id].capacity)
                .sum::<f64>()
                / take as f64;
            let flow_sel: f64 = pair.initiatives[..take]
                .iter()
                .map(|&id| base.flows[id].abs())
                .sum::<f64>()
                / take as f64;
            rows.push(StructureRow {
                algorithm: String::from(pair.name),
                top_x,
                passive_capacity_ratio: cap_sel / capacity_mean,
                // 0/0 when the base case carries no flow at all.
                initiative_flow_ratio: if flow_mean > 0.0 { flow_sel / flow_mean } else { 1.0 },
                count: take,
            });
        }
    }
    Ok(rows)
}
