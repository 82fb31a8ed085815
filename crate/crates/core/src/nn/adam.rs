//! Adaptive-moment optimizer with bias correction.

use alloc::vec::Vec;

use super::tensor::{real, Real, Tensor};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamHyper {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { step_size: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamHyper {
    pub fn with_step_size(step_size: f64) -> Self {
        AdamHyper { step_size, ..Default::default() }
    }
}

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<T: Real> {
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        let shapes: Vec<Tensor<T>> =
            params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        AdamState { m: shapes.clone(), v: shapes, step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected update over aligned parameter and gradient slices.
/// Deterministic: identical inputs and state give identical parameters.
pub fn optimizer_step<T: Real>(
    params: &mut [&mut Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
    hyper: &AdamHyper,
) {
    assert_eq!(params.len(), grads.len(), "parameter/gradient count mismatch");
    assert_eq!(params.len(), state.m.len(), "optimizer state tracks a different model");
    state.step += 1;
    let t = state.step as i32;
    let beta1 = real::<T>(hyper.beta1);
    let beta2 = real::<T>(hyper.beta2);
    let one = T::one();
    let corr1 = one - beta1.powi(t);
    let corr2 = one - beta2.powi(t);
    let lr = real::<T>(hyper.step_size);
    let eps = real::<T>(hyper.epsilon);

    for ((param, grad), (m, v)) in
        params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        assert_eq!(param.shape(), grad.shape(), "gradient shape mismatch");
        for ((p, &g), (mi, vi)) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
        {
            *mi = beta1 * *mi + (one - beta1) * g;
            *vi = beta2 * *vi + (one - beta2) * g * g;
            let m_hat = *mi / corr1;
            let v_hat = *vi / corr2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = Tensor::from_vec(&[2], vec![1.0f64, -2.0]);
        let mut state = AdamState::new([&p]);
        let g = Tensor::zeros(&[2]);
        for _ in 0..10 {
            optimizer_step(&mut [&mut p], &[g.clone()], &mut state, &AdamHyper::default());
        }
        assert_eq!(p.data(), &[1.0, -2.0]);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut p = Tensor::from_vec(&[1], vec![5.0f64]);
            let mut state = AdamState::new([&p]);
            let hyper = AdamHyper::with_step_size(0.05);
            for i in 0..50 {
                let g = Tensor::from_vec(&[1], vec![(p.data()[0] - 1.0) * (1.0 + i as f64 * 0.01)]);
                optimizer_step(&mut [&mut p], &[g], &mut state, &hyper);
            }
            p.data()[0]
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }

    #[test]
    fn quadratic_converges_and_matches_scalar_reference() {
        // Oracle: scalar re-implementation of the same update rule,
        // tracked independently of the tensor path.
        let hyper = AdamHyper::with_step_size(0.1);
        let target = 3.0f64;
        let mut p = Tensor::from_vec(&[1], vec![0.0f64]);
        let mut state = AdamState::new([&p]);

        let (mut x, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        let mut steps_to_converge = None;
        for step in 1..=500 {
            let g = 2.0 * (p.data()[0] - target);
            optimizer_step(
                &mut [&mut p],
                &[Tensor::from_vec(&[1], vec![g])],
                &mut state,
                &hyper,
            );

            let gs = 2.0 * (x - target);
            m = hyper.beta1 * m + (1.0 - hyper.beta1) * gs;
            v = hyper.beta2 * v + (1.0 - hyper.beta2) * gs * gs;
            let m_hat = m / (1.0 - hyper.beta1.powi(step));
            let v_hat = v / (1.0 - hyper.beta2.powi(step));
            x -= hyper.step_size * m_hat / (v_hat.sqrt() + hyper.epsilon);

            assert!((p.data()[0] - x).abs() < 1e-12, "step {step}");
            if steps_to_converge.is_none() && (p.data()[0] - target).abs() < 1e-3 {
                steps_to_converge = Some(step);
            }
        }
        assert!(
            steps_to_converge.is_some(),
            "did not reach within 1e-3 of the minimum in 500 steps"
        );
    }
}
