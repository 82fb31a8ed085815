//! Central finite-difference gradient checking.
//!
//! The checker rebuilds the graph from perturbed copies of the inputs, so
//! it is independent of the reverse-mode path it verifies. All checks run
//! in `f64`; the default step of `1e-5` targets a relative error well
//! under `1e-4` for smooth ops.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::tape::{Tape, Var};

#[allow(unused_imports)]
use num_traits::Float;
use super::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckFailure {
    pub input: usize,
    pub element: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
    pub context: String,
}

impl fmt::Display for GradCheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: input {} element {}: analytic {} vs numeric {} (rel err {})",
            self.context, self.input, self.element, self.analytic, self.numeric, self.relative_error
        )
    }
}

impl core::error::Error for GradCheckFailure {}

fn eval<F>(build: &F, inputs: &[Tensor<f64>]) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = build(&mut tape, &vars);
    tape.value(loss).item()
}

/// Central-difference gradient of `build` with respect to every element of
/// every input.
pub fn numerical_gradient<F>(inputs: &[Tensor<f64>], build: &F, step: f64) -> Vec<Tensor<f64>>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let mut out = Vec::with_capacity(inputs.len());
    for i in 0..inputs.len() {
        let mut grad = Tensor::zeros(inputs[i].shape());
        for e in 0..inputs[i].len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[e] += step;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[e] -= step;
            grad.data_mut()[e] = (eval(build, &plus) - eval(build, &minus)) / (2.0 * step);
        }
        out.push(grad);
    }
    out
}

/// Compare reverse-mode gradients against central differences.
///
/// `build` must construct a scalar loss from the leaves it is handed and
/// be a pure function of their values. Relative error is measured against
/// `max(|analytic|, |numeric|, 1)` so near-zero gradients are compared
/// absolutely.
pub fn check_gradients<F>(
    context: &str,
    inputs: &[Tensor<f64>],
    build: F,
    step: f64,
    tolerance: f64,
) -> Result<(), GradCheckFailure>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = build(&mut tape, &vars);
    let grads = tape.backward(loss);

    let numeric = numerical_gradient(inputs, &build, step);
    for (i, (var, num)) in vars.iter().zip(&numeric).enumerate() {
        let analytic = grads.wrt(*var, inputs[i].shape());
        for e in 0..num.len() {
            let a = analytic.data()[e];
            let n = num.data()[e];
            let denom = a.abs().max(n.abs()).max(1.0);
            let rel = (a - n).abs() / denom;
            if rel > tolerance {
                return Err(GradCheckFailure {
                    input: i,
                    element: e,
                    analytic: a,
                    numeric: n,
                    relative_error: rel,
                    context: context.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Reduce any 2-D node to a smooth scalar through fixed weights, a
/// two-class softmax, and an NLL pick, so gradient checks exercise the op
/// under test through a well-conditioned head.
pub fn squash_to_loss(tape: &mut Tape<f64>, x: Var) -> Var {
    let (m, n) = (tape.value(x).rows(), tape.value(x).cols());
    let right: Vec<f64> = (0..n).map(|i| 0.3 + ((i * 37 + 11) % 17) as f64 * 0.11).collect();
    let left: Vec<f64> = (0..m).map(|i| 0.25 + ((i * 29 + 5) % 13) as f64 * 0.07).collect();
    let right = tape.leaf(Tensor::from_vec(&[n, 1], right));
    let col = tape.matmul(x, right);
    let left = tape.leaf(Tensor::from_vec(&[1, m], left));
    let s = tape.matmul(left, col);
    let zero = tape.leaf(Tensor::zeros(&[1, 1]));
    let both = tape.concat_cols(s, zero);
    let p = tape.softmax_rows(both);
    tape.masked_nll(p, alloc::vec![0], alloc::vec![true])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::{
        masked_attention, masked_cross_entropy, pre_ln_encoder_layer, uniform_init,
        EncoderLayerVars, MaskMode,
    };
    use crate::nn::tensor::real;
    use alloc::vec;
    use rand::Rng;

    fn random_tensor(shape: &[usize], stream: u64) -> Tensor<f64> {
        let mut r = crate::seeded_rng(0xC0FFEE, stream);
        let data = (0..shape.iter().product::<usize>())
            .map(|_| r.random_range(-1.2..1.2))
            .collect();
        Tensor::from_vec(shape, data)
    }

    #[test]
    fn add_and_matmul_ops() {
        let a = random_tensor(&[2, 3], 1);
        let b = random_tensor(&[2, 3], 2);
        check_gradients(
            "add",
            &[a, b],
            |tape, vars| {
                let s = tape.add(vars[0], vars[1]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();

        let a = random_tensor(&[2, 4], 3);
        let b = random_tensor(&[4, 3], 4);
        check_gradients(
            "matmul",
            &[a, b],
            |tape, vars| {
                let s = tape.matmul(vars[0], vars[1]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();

        let a = random_tensor(&[2, 4], 5);
        let b = random_tensor(&[3, 4], 6);
        check_gradients(
            "matmul_nt",
            &[a, b],
            |tape, vars| {
                let s = tape.matmul_nt(vars[0], vars[1]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
    }

    #[test]
    fn scale_relu_softmax_bias() {
        let x = random_tensor(&[2, 5], 7);
        for (name, build) in [
            (
                "scale",
                (|tape: &mut Tape<f64>, vars: &[Var]| {
                    let s = tape.scale(vars[0], real(0.37));
                    squash_to_loss(tape, s)
                }) as fn(&mut Tape<f64>, &[Var]) -> Var,
            ),
            ("relu", |tape, vars| {
                let s = tape.relu(vars[0]);
                squash_to_loss(tape, s)
            }),
            ("softmax_rows", |tape, vars| {
                let s = tape.softmax_rows(vars[0]);
                squash_to_loss(tape, s)
            }),
        ] {
            check_gradients(name, &[x.clone()], build, DEFAULT_STEP, DEFAULT_TOLERANCE).unwrap();
        }

        let bias = random_tensor(&[5], 8);
        check_gradients(
            "add_bias",
            &[x, bias],
            |tape, vars| {
                let s = tape.add_bias(vars[0], vars[1]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
    }

    #[test]
    fn structural_ops() {
        let x = random_tensor(&[2, 6], 9);
        check_gradients(
            "mul_cols",
            &[x.clone()],
            |tape, vars| {
                let s = tape.mul_cols(vars[0], vec![1.0, 0.0, 0.5, 1.0, 0.0, 2.0]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        check_gradients(
            "add_row_const",
            &[x.clone()],
            |tape, vars| {
                let s = tape.add_row_const(vars[0], vec![0.4, -0.2, 0.0, 1.0, -0.6, 0.3]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        check_gradients(
            "slice_cols",
            &[x.clone()],
            |tape, vars| {
                let s = tape.slice_cols(vars[0], 2, 3);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        let b = random_tensor(&[2, 2], 10);
        check_gradients(
            "concat_cols",
            &[x, b],
            |tape, vars| {
                let s = tape.concat_cols(vars[0], vars[1]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        let table = random_tensor(&[4, 3], 11);
        check_gradients(
            "gather_rows",
            &[table],
            |tape, vars| {
                let s = tape.gather_rows(vars[0], vec![2, 0, 2]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
    }

    #[test]
    fn layer_norm_and_loss() {
        let x = random_tensor(&[2, 4], 12);
        let gamma = random_tensor(&[4], 13);
        let beta = random_tensor(&[4], 14);
        check_gradients(
            "layer_norm_rows",
            &[x, gamma, beta],
            |tape, vars| {
                let s = tape.layer_norm_rows(vars[0], vars[1], vars[2]);
                squash_to_loss(tape, s)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();

        let logits = random_tensor(&[3, 4], 15);
        check_gradients(
            "softmax+masked_cross_entropy",
            &[logits],
            |tape, vars| {
                let p = tape.softmax_rows(vars[0]);
                masked_cross_entropy(tape, p, &[1, 3, 0], &[true, false, true]).unwrap()
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
    }

    #[test]
    fn mean_of_scalars() {
        let a = random_tensor(&[1, 2], 16);
        let b = random_tensor(&[1, 2], 17);
        check_gradients(
            "mean_of",
            &[a, b],
            |tape, vars| {
                let la = squash_to_loss(tape, vars[0]);
                let lb = squash_to_loss(tape, vars[1]);
                tape.mean_of(vec![la, lb])
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
    }

    #[test]
    fn masked_attention_both_modes_and_tiny_shapes() {
        for (n, d, heads, stream) in [(3usize, 4usize, 2usize, 20u64), (1, 2, 1, 23), (4, 4, 1, 26)]
        {
            let q = random_tensor(&[n, d], stream);
            let k = random_tensor(&[n, d], stream + 100);
            let v = random_tensor(&[n, d], stream + 200);
            let mut mask = vec![true; n];
            if n > 1 {
                mask[n - 1] = false;
            }
            for mode in [MaskMode::MultiplicativePostSoftmax, MaskMode::AdditivePreSoftmax] {
                let mask2 = mask.clone();
                check_gradients(
                    "masked_attention",
                    &[q.clone(), k.clone(), v.clone()],
                    move |tape, vars| {
                        let out =
                            masked_attention(tape, vars[0], vars[1], vars[2], &mask2, heads, mode)
                                .unwrap();
                        squash_to_loss(tape, out.context)
                    },
                    DEFAULT_STEP,
                    DEFAULT_TOLERANCE,
                )
                .unwrap();
            }
        }
    }

    #[test]
    fn full_encoder_layer_gradients() {
        let (n, d, dff, heads) = (3usize, 4usize, 6usize, 2usize);
        let mut r = crate::seeded_rng(0xC0FFEE, 30);
        let inputs = vec![
            random_tensor(&[n, d], 31),
            Tensor::from_vec(&[d], (0..d).map(|_| r.random_range(0.5..1.5)).collect()),
            random_tensor(&[d], 32),
            uniform_init(&mut r, d, d),
            random_tensor(&[d], 33),
            uniform_init(&mut r, d, d),
            random_tensor(&[d], 34),
            uniform_init(&mut r, d, d),
            random_tensor(&[d], 35),
            uniform_init(&mut r, d, d),
            random_tensor(&[d], 36),
            Tensor::from_vec(&[d], (0..d).map(|_| r.random_range(0.5..1.5)).collect()),
            random_tensor(&[d], 37),
            uniform_init(&mut r, d, dff),
            random_tensor(&[dff], 38),
            uniform_init(&mut r, dff, d),
            random_tensor(&[d], 39),
        ];
        let mask = [true, true, false];
        check_gradients(
            "pre_ln_encoder_layer",
            &inputs,
            move |tape, vars| {
                let layer = EncoderLayerVars {
                    ln1_gamma: vars[1],
                    ln1_beta: vars[2],
                    wq: vars[3],
                    bq: vars[4],
                    wk: vars[5],
                    bk: vars[6],
                    wv: vars[7],
                    bv: vars[8],
                    wo: vars[9],
                    bo: vars[10],
                    ln2_gamma: vars[11],
                    ln2_beta: vars[12],
                    ff_w1: vars[13],
                    ff_b1: vars[14],
                    ff_w2: vars[15],
                    ff_b2: vars[16],
                };
                let (out, _) =
                    pre_ln_encoder_layer(tape, vars[0], &mask, &layer, heads, MaskMode::default())
                        .unwrap();
                squash_to_loss(tape, out)
            },
            DEFAULT_STEP,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
    }
}
