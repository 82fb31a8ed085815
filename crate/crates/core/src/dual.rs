//! Dual representation of cascade traces and training-pair assembly.
//!
//! A trace becomes one length-N label vector per generation: element `i`
//! holds the generation at which line `i` failed, or 0 while it is alive.
//! Consecutive vectors form training pairs; the input mask marks lines
//! already failed, the target mask marks lines failing next.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cascade::CascadeTrace;

#[allow(unused_imports)]
use num_traits::Float;
use crate::seed::seeded_rng;

/// Default label-space bound; traces deeper than this are rejected at
/// transform time rather than truncated.
pub const DEFAULT_G_MAX: usize = 20;

/// Length-N generation-label vector for one generation `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualSequence {
    /// `labels[i]` is the failed generation of line `i`, or 0 if alive.
    pub labels: Vec<usize>,
    /// The generation this vector represents; `max(labels) == t`.
    pub t: usize,
}

impl DualSequence {
    /// Reconstruct the generation sets `L_1..L_t` encoded by the labels.
    pub fn generation_sets(&self) -> Vec<BTreeSet<usize>> {
        let mut sets = vec![BTreeSet::new(); self.t];
        for (line, &g) in self.labels.iter().enumerate() {
            if g > 0 {
                sets[g - 1].insert(line);
            }
        }
        sets
    }
}

/// One consecutive-generation training pair with its masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    /// Input generation index; the target is generation `t + 1`.
    pub t: usize,
    pub inp: DualSequence,
    pub tar: DualSequence,
    /// True where the input line already failed.
    pub inp_mask: Vec<bool>,
    /// True where the line fails at generation `t + 1`.
    pub tar_mask: Vec<bool>,
}

impl TrainingPair {
    /// Rebuild a pair from raw label vectors, recomputing the masks and
    /// checking the pair invariants (used when loading serialized pairs).
    pub fn from_labels(t: usize, inp: Vec<usize>, tar: Vec<usize>) -> Result<Self, PairError> {
        if inp.len() != tar.len() {
            return Err(PairError::LengthMismatch { inp: inp.len(), tar: tar.len() });
        }
        if t == 0 {
            return Err(PairError::BadGenerationIndex { t });
        }
        for (i, (&g, &g2)) in inp.iter().zip(&tar).enumerate() {
            if g > t {
                return Err(PairError::InputLabelTooLarge { line: i, label: g, t });
            }
            if g > 0 && g2 != g {
                return Err(PairError::RewrittenHistory { line: i });
            }
            if g == 0 && g2 != 0 && g2 != t + 1 {
                return Err(PairError::BadTargetLabel { line: i, label: g2, t });
            }
        }
        let inp_mask: Vec<bool> = inp.iter().map(|&g| g > 0).collect();
        let tar_mask: Vec<bool> = tar.iter().map(|&g| g == t + 1).collect();
        if !inp_mask.iter().any(|&m| m) {
            return Err(PairError::NoInputFailures);
        }
        if !tar_mask.iter().any(|&m| m) {
            return Err(PairError::NoNewFailures);
        }
        Ok(TrainingPair {
            t,
            inp: DualSequence { labels: inp, t },
            tar: DualSequence { labels: tar, t: t + 1 },
            inp_mask,
            tar_mask,
        })
    }

    pub fn n_lines(&self) -> usize {
        self.inp.labels.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairError {
    LengthMismatch { inp: usize, tar: usize },
    BadGenerationIndex { t: usize },
    InputLabelTooLarge { line: usize, label: usize, t: usize },
    RewrittenHistory { line: usize },
    BadTargetLabel { line: usize, label: usize, t: usize },
    NoInputFailures,
    NoNewFailures,
}

impl fmt::Display for PairError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairError::LengthMismatch { inp, tar } => {
                write!(f, "input length {inp} != target length {tar}")
            }
            PairError::BadGenerationIndex { t } => write!(f, "generation index {t} must be >= 1"),
            PairError::InputLabelTooLarge { line, label, t } => {
                write!(f, "line {line}: input label {label} exceeds generation {t}")
            }
            PairError::RewrittenHistory { line } => {
                write!(f, "line {line}: target changes an already-failed label")
            }
            PairError::BadTargetLabel { line, label, t } => {
                write!(f, "line {line}: target label {label} is neither 0 nor {}", t + 1)
            }
            PairError::NoInputFailures => write!(f, "pair has no failed input lines"),
            PairError::NoNewFailures => write!(f, "pair has no new failures in the target"),
        }
    }
}

impl core::error::Error for PairError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DualError {
    TooManyGenerations { generations: usize, g_max: usize },
    Trace(crate::cascade::TraceViolation),
}

impl fmt::Display for DualError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualError::TooManyGenerations { generations, g_max } => {
                write!(f, "trace has {generations} generations, exceeding g_max {g_max}")
            }
            DualError::Trace(v) => write!(f, "invalid trace: {v}"),
        }
    }
}

impl core::error::Error for DualError {}

/// Transform a trace into its dual sequences `gen_1..gen_G`.
pub fn to_dual(
    trace: &CascadeTrace,
    n_lines: usize,
    g_max: usize,
) -> Result<Vec<DualSequence>, DualError> {
    trace.validate(n_lines).map_err(DualError::Trace)?;
    let g = trace.generations.len();
    if g > g_max {
        return Err(DualError::TooManyGenerations { generations: g, g_max });
    }
    let mut labels = vec![0usize; n_lines];
    let mut out = Vec::with_capacity(g);
    for (t, generation) in trace.generations.iter().enumerate() {
        for &line in generation {
            labels[line] = t + 1;
        }
        out.push(DualSequence { labels: labels.clone(), t: t + 1 });
    }
    Ok(out)
}

/// Pair consecutive dual sequences of one trace. A G-generation trace
/// yields G - 1 pairs; pairs without new failures are skipped.
pub fn make_pairs(duals: &[DualSequence]) -> Vec<TrainingPair> {
    duals
        .windows(2)
        .filter_map(|w| {
            TrainingPair::from_labels(w[0].t, w[0].labels.clone(), w[1].labels.clone()).ok()
        })
        .collect()
}

/// Trace-level train/validation/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<CascadeTrace>,
    pub val: Vec<CascadeTrace>,
    pub test: Vec<CascadeTrace>,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BadRatios {
    pub ratios: (f64, f64, f64),
}

impl fmt::Display for BadRatios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "split ratios {:?} must be non-negative and sum to 1",
            self.ratios
        )
    }
}

impl core::error::Error for BadRatios {}

/// Shuffle traces by seed and split at the trace level, so every pair of
/// one trace lands in one split.
pub fn split_dataset(
    traces: Vec<CascadeTrace>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit, BadRatios> {
    let (r_train, r_val, r_test) = ratios;
    let sum = r_train + r_val + r_test;
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(BadRatios { ratios });
    }
    let n = traces.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded_rng(seed, 0x5B117);
    for i in (1..n).rev() {
        let j = rand::Rng::random_range(&mut rng, 0..=i);
        order.swap(i, j);
    }
    let n_train = ((n as f64 * r_train).round() as usize).min(n);
    let n_val = ((n as f64 * r_val).round() as usize).min(n - n_train);

    let mut slots: Vec<Option<CascadeTrace>> = traces.into_iter().map(Some).collect();
    let take = |slots: &mut Vec<Option<CascadeTrace>>, idxs: &[usize]| -> Vec<CascadeTrace> {
        idxs.iter().map(|&i| slots[i].take().expect("each index used once")).collect()
    };
    let train = take(&mut slots, &order[..n_train]);
    let val = take(&mut slots, &order[n_train..n_train + n_val]);
    let test = take(&mut slots, &order[n_train + n_val..]);
    Ok(DatasetSplit { train, val, test, split_seed: seed })
}
