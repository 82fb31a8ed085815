//! Attention extraction and ranking.
//!
//! Extraction folds the last encoder layer's attention weights over a
//! sample set into two correlation matrices: the passive matrix collects
//! rows of lines failing in the pair's final generation, each column
//! weighted by how recently its line failed; the initiative matrix
//! collects columns of initial failures, keeping only rows of final-
//! generation failures. Ranking sorts passives by row-sum expectation and
//! builds the initiative order greedily, always adding the column that
//! most increases the running elementwise-max coverage buffer.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dual::TrainingPair;
use crate::model::{forward, ModelConfig, ModelError, ModelParams};
use crate::nn::{Real, Tensor};

#[allow(unused_imports)]
use num_traits::Float;

/// Initiative and passive correlation matrices over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrices {
    /// `(N, N)`; column `j` accumulates attention paid to initiative `j`.
    pub icm: Tensor<f64>,
    /// `(N, N)`; row `i` accumulates attention drawn by passive `i`.
    pub pcm: Tensor<f64>,
    pub samples_used: usize,
}

impl CorrelationMatrices {
    pub fn zeros(n: usize) -> Self {
        CorrelationMatrices {
            icm: Tensor::zeros(&[n, n]),
            pcm: Tensor::zeros(&[n, n]),
            samples_used: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.icm.rows()
    }
}

/// Collapse the head axis of an `(h, N, N)` weight stack by the L2 norm.
pub fn reduce_heads<T: Real>(weights: &Tensor<T>) -> Tensor<f64> {
    let shape = weights.shape();
    assert_eq!(shape.len(), 3, "expected (heads, N, N), got {shape:?}");
    let (h, n) = (shape[0], shape[1]);
    assert_eq!(shape[1], shape[2], "weight matrices must be square");
    let mut out = vec![0.0f64; n * n];
    for head in 0..h {
        for (cell, o) in weights.data()[head * n * n..(head + 1) * n * n].iter().zip(&mut out) {
            let v = cell.to_f64().expect("finite weight");
            *o += v * v;
        }
    }
    for o in &mut out {
        *o = o.sqrt();
    }
    Tensor::from_vec(&[n, n], out)
}

/// Fold one pair's reduced attention matrix into the accumulators,
/// following the extraction algorithm exactly: the pair's last generation
/// is `t + 1`, the input scale is `inp / max(inp)`, and only rows failing
/// at the last generation contribute.
pub fn accumulate_pair(
    matrices: &mut CorrelationMatrices,
    attention: &Tensor<f64>,
    pair: &TrainingPair,
) {
    let n = matrices.n();
    assert_eq!(attention.shape(), [n, n], "attention shape mismatch");
    assert_eq!(pair.n_lines(), n, "pair length mismatch");
    let last = pair.t + 1;
    debug_assert_eq!(
        pair.tar.labels.iter().copied().max().unwrap_or(0),
        last,
        "pair target must contain generation t + 1"
    );
    let max_inp = pair.t as f64;
    let scale: Vec<f64> = pair.inp.labels.iter().map(|&g| g as f64 / max_inp).collect();

    for i in 0..n {
        if pair.tar.labels[i] != last {
            continue;
        }
        // Passive row update, scaled by the input generation vector.
        for j in 0..n {
            matrices.pcm.data_mut()[i * n + j] += attention.data()[i * n + j] * scale[j];
        }
        // Initiative column update, restricted to initial failures.
        for j in 0..n {
            if pair.inp.labels[j] == 1 {
                matrices.icm.data_mut()[i * n + j] += attention.data()[i * n + j];
            }
        }
    }
    matrices.samples_used += 1;
}

/// Run the model over every pair and accumulate both correlation matrices.
///
/// Pairs are folded in a canonical order (sorted by their label vectors),
/// so the result is bitwise identical however the input list is permuted
/// or partitioned across workers.
pub fn extract_attention<T: Real>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    pairs: &[TrainingPair],
) -> Result<CorrelationMatrices, ModelError> {
    let mut order: Vec<&TrainingPair> = pairs.iter().collect();
    order.sort_by(|a, b| {
        (a.t, &a.inp.labels, &a.tar.labels).cmp(&(b.t, &b.inp.labels, &b.tar.labels))
    });
    let mut matrices = CorrelationMatrices::zeros(config.n_lines);
    for pair in order {
        let result = forward(params, config, &pair.inp.labels, &pair.inp_mask)?;
        let reduced = reduce_heads(&result.last_layer_attention);
        accumulate_pair(&mut matrices, &reduced, pair);
    }
    Ok(matrices)
}

/// Row-sum expectation of passive `i`.
pub fn expectation_p(pcm: &Tensor<f64>, i: usize) -> f64 {
    let n = pcm.cols();
    pcm.data()[i * n..(i + 1) * n].iter().sum()
}

/// Column-sum expectation of initiative `j`.
pub fn expectation_i(icm: &Tensor<f64>, j: usize) -> f64 {
    let n = icm.cols();
    (0..icm.rows()).map(|i| icm.data()[i * n + j]).sum()
}

/// Complete orderings of the most critical and most vulnerable lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankResult {
    /// Most critical first.
    pub initiatives: Vec<usize>,
    /// Most vulnerable first.
    pub passives: Vec<usize>,
    /// Number of initiatives chosen by the greedy loop before the
    /// column-sum fallback filled the rest.
    pub greedy_cutoff: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RankError {
    NotSquare { shape: Vec<usize> },
    SizeMismatch { icm: usize, pcm: usize },
    NegativeEntry { row: usize, col: usize, value: f64 },
}

impl fmt::Display for RankError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankError::NotSquare { shape } => write!(f, "matrix shape {shape:?} is not square"),
            RankError::SizeMismatch { icm, pcm } => {
                write!(f, "ICM is {icm}x{icm} but PCM is {pcm}x{pcm}")
            }
            RankError::NegativeEntry { row, col, value } => {
                write!(f, "negative correlation {value} at ({row}, {col})")
            }
        }
    }
}

impl core::error::Error for RankError {}

/// Stable descending order of `scores`, smaller id first on ties.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    ids
}

/// Per-step record of the greedy initiative selection.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    /// Initiatives in selection order (seed first).
    pub picks: Vec<usize>,
    /// Coverage buffer after each pick.
    pub buffers: Vec<Vec<f64>>,
}

/// Greedy coverage selection over ICM columns. Seeds with the highest
/// column sum, then repeatedly adds the column maximizing the summed
/// elementwise max against the buffer, stopping when no candidate strictly
/// increases total coverage.
pub fn greedy_initiatives(icm: &Tensor<f64>) -> GreedyTrace {
    let n = icm.rows();
    if n == 0 {
        return GreedyTrace { picks: Vec::new(), buffers: Vec::new() };
    }
    let col_sums: Vec<f64> = (0..n).map(|j| expectation_i(icm, j)).collect();
    let rank = descending_order(&col_sums);
    let seed = rank[0];
    let mut buffer: Vec<f64> = (0..n).map(|k| icm.data()[k * n + seed]).collect();
    let mut picks = vec![seed];
    let mut buffers = vec![buffer.clone()];
    let mut selected = vec![false; n];
    selected[seed] = true;

    loop {
        let current: f64 = buffer.iter().sum();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let coverage: f64 =
                (0..n).map(|k| buffer[k].max(icm.data()[k * n + j])).sum();
            if best.map_or(true, |(_, b)| coverage > b) {
                best = Some((j, coverage));
            }
        }
        match best {
            Some((j, coverage)) if coverage > current => {
                for k in 0..n {
                    buffer[k] = buffer[k].max(icm.data()[k * n + j]);
                }
                selected[j] = true;
                picks.push(j);
                buffers.push(buffer.clone());
            }
            _ => break,
        }
    }
    GreedyTrace { picks, buffers }
}

/// Rank initiatives (greedy coverage, column-sum fallback) and passives
/// (row-sum order) from the correlation matrices.
pub fn rank_attention(icm: &Tensor<f64>, pcm: &Tensor<f64>) -> Result<RankResult, RankError> {
    for m in [icm, pcm] {
        let shape = m.shape();
        if shape.len() != 2 || shape[0] != shape[1] {
            return Err(RankError::NotSquare { shape: shape.to_vec() });
        }
    }
    if icm.rows() != pcm.rows() {
        return Err(RankError::SizeMismatch { icm: icm.rows(), pcm: pcm.rows() });
    }
    let n = icm.rows();
    for (m, _name) in [(icm, "ICM"), (pcm, "PCM")] {
        for (idx, &v) in m.data().iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(RankError::NegativeEntry { row: idx / n, col: idx % n, value: v });
            }
        }
    }

    let row_sums: Vec<f64> = (0..n).map(|i| expectation_p(pcm, i)).collect();
    let passives = descending_order(&row_sums);

    let trace = greedy_initiatives(icm);
    let mut initiatives = trace.picks.clone();
    let greedy_cutoff = initiatives.len();
    let col_sums: Vec<f64> = (0..n).map(|j| expectation_i(icm, j)).collect();
    let mut chosen = vec![false; n];
    for &j in &initiatives {
        chosen[j] = true;
    }
    for j in descending_order(&col_sums) {
        if !chosen[j] {
            initiatives.push(j);
        }
    }
    Ok(RankResult { initiatives, passives, greedy_cutoff })
}
