//! Adam optimizer and gradient-norm clipping.

use crate::real::Real;
use crate::tensor::ParamSet;

#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-5,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one descent step of `grads` to `params`. Moments are kept in `f64`.
    pub fn step<T: Real>(&mut self, params: &mut ParamSet<T>, grads: &ParamSet<T>) {
        assert_eq!(params.len(), grads.len(), "gradient layout mismatch");
        if self.m.is_empty() {
            self.m = params.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .tensors
            .iter_mut()
            .zip(&grads.tensors)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((p, g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                let g = g.as_f64();
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let update = self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
                *p = T::of_f64(p.as_f64() - update);
            }
        }
    }
}

/// Rescales `grads` so that its global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<T: Real>(grads: &mut ParamSet<T>, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(T::of_f64(max_norm / (norm + 1e-6)));
    }
    norm
}
