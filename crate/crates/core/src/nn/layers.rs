//! Layer set for the dual sequence model: masked multi-head attention,
//! the pre-LN encoder layer, the masked cross-entropy head, and parameter
//! initializers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

#[allow(unused_imports)]
use num_traits::Float;

use super::tape::{Tape, Var};
use super::tensor::{real, Real, Tensor};

/// How the input mask enters the attention weights.
///
/// The default multiplies the softmax output elementwise by the mask
/// broadcast along the key axis, zeroing attention toward alive lines
/// while leaving them in the softmax denominator. The additive variant is
/// the conventional pre-softmax `-inf` masking, kept for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    #[default]
    MultiplicativePostSoftmax,
    AdditivePreSoftmax,
}

/// Context rows plus the per-head masked attention weights.
pub struct AttentionOutput {
    /// `(N, d)` attended values.
    pub context: Var,
    /// One `(N, N)` weight matrix per head, already masked.
    pub head_weights: Vec<Var>,
}

impl AttentionOutput {
    /// Materialize the per-head weights as one `(h, N, N)` tensor.
    pub fn weights_tensor<T: Real>(&self, tape: &Tape<T>) -> Tensor<T> {
        let h = self.head_weights.len();
        let n = tape.value(self.head_weights[0]).rows();
        let mut data = Vec::with_capacity(h * n * n);
        for &w in &self.head_weights {
            data.extend_from_slice(tape.value(w).data());
        }
        Tensor::from_vec(&[h, n, n], data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NnError {
    ShapeMismatch { op: &'static str, detail: String },
    HeadSplit { d: usize, heads: usize },
    UnnormalizedRow { row: usize, sum: f64 },
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::ShapeMismatch { op, detail } => write!(f, "{op}: {detail}"),
            NnError::HeadSplit { d, heads } => {
                write!(f, "model width {d} is not divisible by {heads} heads")
            }
            NnError::UnnormalizedRow { row, sum } => {
                write!(f, "probability row {row} sums to {sum}, expected 1")
            }
        }
    }
}

impl core::error::Error for NnError {}

/// Scaled dot-product attention over `heads` column slices of Q, K, V,
/// masked by `inp_mask` along the key axis. Returns the concatenated
/// context (no output projection) and every head's masked weights.
pub fn masked_attention<T: Real>(
    tape: &mut Tape<T>,
    q: Var,
    k: Var,
    v: Var,
    inp_mask: &[bool],
    heads: usize,
    mode: MaskMode,
) -> Result<AttentionOutput, NnError> {
    let (n, d) = (tape.value(q).rows(), tape.value(q).cols());
    for (name, var) in [("K", k), ("V", v)] {
        let t = tape.value(var);
        if t.shape() != [n, d] {
            return Err(NnError::ShapeMismatch {
                op: "masked_attention",
                detail: format!("{name} has shape {:?}, expected [{n}, {d}]", t.shape()),
            });
        }
    }
    if inp_mask.len() != n {
        return Err(NnError::ShapeMismatch {
            op: "masked_attention",
            detail: format!("mask length {} vs {n} rows", inp_mask.len()),
        });
    }
    if heads == 0 || d % heads != 0 {
        return Err(NnError::HeadSplit { d, heads });
    }
    let dk = d / heads;
    let inv_sqrt_dk = real::<T>(1.0 / (dk as f64).sqrt());
    let mul_mask: Vec<T> = inp_mask.iter().map(|&m| if m { T::one() } else { T::zero() }).collect();
    // Large negative instead of -inf: exp underflows to an exact 0 weight
    // without risking NaN rows.
    let add_mask: Vec<T> =
        inp_mask.iter().map(|&m| if m { T::zero() } else { real::<T>(-1e30) }).collect();

    let mut head_weights = Vec::with_capacity(heads);
    let mut context: Option<Var> = None;
    for h in 0..heads {
        let qh = tape.slice_cols(q, h * dk, dk);
        let kh = tape.slice_cols(k, h * dk, dk);
        let vh = tape.slice_cols(v, h * dk, dk);
        let scores_raw = tape.matmul_nt(qh, kh);
        let scores = tape.scale(scores_raw, inv_sqrt_dk);
        let weights = match mode {
            MaskMode::MultiplicativePostSoftmax => {
                let soft = tape.softmax_rows(scores);
                tape.mul_cols(soft, mul_mask.clone())
            }
            MaskMode::AdditivePreSoftmax => {
                let shifted = tape.add_row_const(scores, add_mask.clone());
                tape.softmax_rows(shifted)
            }
        };
        let ctx = tape.matmul(weights, vh);
        head_weights.push(weights);
        context = Some(match context {
            Some(acc) => tape.concat_cols(acc, ctx),
            None => ctx,
        });
    }
    Ok(AttentionOutput { context: context.expect("heads >= 1"), head_weights })
}

/// Parameters of one encoder layer, staged on a tape.
#[derive(Clone, Copy)]
pub struct EncoderLayerVars {
    pub ln1_gamma: Var,
    pub ln1_beta: Var,
    pub wq: Var,
    pub bq: Var,
    pub wk: Var,
    pub bk: Var,
    pub wv: Var,
    pub bv: Var,
    pub wo: Var,
    pub bo: Var,
    pub ln2_gamma: Var,
    pub ln2_beta: Var,
    pub ff_w1: Var,
    pub ff_b1: Var,
    pub ff_w2: Var,
    pub ff_b2: Var,
}

/// One pre-LN encoder layer: `x + MHA(LN(x))`, then `(.) + FF(LN(.))`.
/// The attention weights are surfaced for analysis.
pub fn pre_ln_encoder_layer<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    inp_mask: &[bool],
    vars: &EncoderLayerVars,
    heads: usize,
    mode: MaskMode,
) -> Result<(Var, AttentionOutput), NnError> {
    let normed = tape.layer_norm_rows(x, vars.ln1_gamma, vars.ln1_beta);
    let q0 = tape.matmul(normed, vars.wq);
    let q = tape.add_bias(q0, vars.bq);
    let k0 = tape.matmul(normed, vars.wk);
    let k = tape.add_bias(k0, vars.bk);
    let v0 = tape.matmul(normed, vars.wv);
    let v = tape.add_bias(v0, vars.bv);
    let attention = masked_attention(tape, q, k, v, inp_mask, heads, mode)?;
    let proj0 = tape.matmul(attention.context, vars.wo);
    let proj = tape.add_bias(proj0, vars.bo);
    let x1 = tape.add(x, proj);

    let normed2 = tape.layer_norm_rows(x1, vars.ln2_gamma, vars.ln2_beta);
    let h0 = tape.matmul(normed2, vars.ff_w1);
    let h1 = tape.add_bias(h0, vars.ff_b1);
    let h2 = tape.relu(h1);
    let h3 = tape.matmul(h2, vars.ff_w2);
    let ff = tape.add_bias(h3, vars.ff_b2);
    let out = tape.add(x1, ff);
    Ok((out, attention))
}

/// Masked cross-entropy over probability rows: checks each row sums to 1
/// within 1e-6 before recording the masked NLL.
pub fn masked_cross_entropy<T: Real>(
    tape: &mut Tape<T>,
    p: Var,
    targets: &[usize],
    tar_mask: &[bool],
) -> Result<Var, NnError> {
    let tp = tape.value(p);
    let (m, n) = (tp.rows(), tp.cols());
    if targets.len() != m || tar_mask.len() != m {
        return Err(NnError::ShapeMismatch {
            op: "masked_cross_entropy",
            detail: format!("{m} rows vs {} targets, {} mask entries", targets.len(), tar_mask.len()),
        });
    }
    for r in 0..m {
        let sum = tp.data()[r * n..(r + 1) * n]
            .iter()
            .fold(T::zero(), |acc, &v| acc + v)
            .to_f64()
            .expect("real to f64");
        if (sum - 1.0).abs() > 1e-6 {
            return Err(NnError::UnnormalizedRow { row: r, sum });
        }
    }
    Ok(tape.masked_nll(p, targets.to_vec(), tar_mask.to_vec()))
}

/// Uniform initialization in `+-sqrt(6 / (fan_in + fan_out))`.
pub fn uniform_init<T: Real>(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| real::<T>(rng.random_range(-bound..bound)))
        .collect();
    Tensor::from_vec(&[rows, cols], data)
}

/// Normal(0, std) initialization via the Box-Muller transform.
pub fn normal_init<T: Real>(rng: &mut impl Rng, rows: usize, cols: usize, std: f64) -> Tensor<T> {
    let data = (0..rows * cols)
        .map(|_| {
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random();
            let z = (-2.0f64 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos();
            real::<T>(z * std)
        })
        .collect();
    Tensor::from_vec(&[rows, cols], data)
}
