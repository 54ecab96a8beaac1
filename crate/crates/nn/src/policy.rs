//! Turning raw network outputs into movement actions.
//!
//! The actor emits two unbounded values. Exploration adds independent
//! Gaussian noise to them and the noisy values are squashed into a heading
//! in `(-pi, pi]` and a step fraction in `[0, 1]`. Log-probabilities are
//! taken of the unsquashed Gaussian sample.

use std::f64::consts::PI;

use gather_core::control::{Action, Controller, ControllerError};
use gather_core::sensing::{Observation, ObservationImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::net::{PolicyNet, ACTION_DIM};
use crate::real::Real;
use crate::NnError;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActMode {
    /// Use the actor mean.
    Deterministic,
    /// Sample around the actor mean.
    Stochastic,
}

/// One chosen action and the quantities the learner needs about it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionSample {
    pub action: Action,
    /// Unsquashed sample (equal to the mean in deterministic mode).
    pub raw: [f64; ACTION_DIM],
    /// Gaussian log-density of `raw`.
    pub log_prob: f64,
    pub value: f64,
}

/// Maps raw outputs to an action: heading `pi * tanh(raw0)`, step fraction
/// `(tanh(raw1) + 1) / 2`. A heading at or below `-pi` becomes `pi`.
pub fn squash(raw: [f64; 2]) -> Action {
    let mut alpha = PI * raw[0].tanh();
    if alpha <= -PI {
        alpha = PI;
    }
    let sigma = (raw[1].tanh() + 1.0) / 2.0;
    Action { alpha, sigma }
}

/// Log-density of `x` under a diagonal Gaussian.
pub fn gaussian_log_prob(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((x, m), ls)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

/// Entropy of a diagonal Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| 0.5 + 0.5 * LN_2PI + ls).sum()
}

/// Converts an observation image into network input values.
pub fn image_input<T: Real>(image: &ObservationImage, out: &mut [T]) {
    for (o, &b) in out.iter_mut().zip(image.as_bytes()) {
        *o = if b != 0 { T::one() } else { T::zero() };
    }
}

/// Chooses actions for a batch of inputs.
pub fn act_batch<T: Real, R: Rng + ?Sized>(
    net: &PolicyNet<T>,
    input: &[T],
    batch: usize,
    mode: ActMode,
    rng: &mut R,
) -> Result<Vec<ActionSample>, NnError> {
    let out = net.infer(input, batch)?;
    let log_std: Vec<f64> = net.log_std().iter().map(|v| v.as_f64()).collect();
    Ok((0..batch)
        .map(|s| {
            let mean = [out.actor[2 * s].as_f64(), out.actor[2 * s + 1].as_f64()];
            let raw = match mode {
                ActMode::Deterministic => mean,
                ActMode::Stochastic => {
                    let mut r = mean;
                    for (v, ls) in r.iter_mut().zip(&log_std) {
                        *v += ls.exp() * rng.sample::<f64, _>(StandardNormal);
                    }
                    r
                }
            };
            ActionSample {
                action: squash(raw),
                raw,
                log_prob: gaussian_log_prob(&raw, &mean, &log_std),
                value: out.value[s].as_f64(),
            }
        })
        .collect())
}

/// Chooses an action for one observation image.
pub fn act<T: Real, R: Rng + ?Sized>(
    net: &PolicyNet<T>,
    image: &ObservationImage,
    mode: ActMode,
    rng: &mut R,
) -> Result<ActionSample, NnError> {
    let mut input = vec![T::zero(); net.spec().input_len()];
    image_input(image, &mut input);
    Ok(act_batch(net, &input, 1, mode, rng)?.remove(0))
}

/// Deterministic controller that runs every agent's image through `net` in
/// one batch and moves along the actor mean.
pub struct PolicyController<'a, T: Real> {
    net: &'a PolicyNet<T>,
    input: Vec<T>,
    // Never drawn from in deterministic mode; `act_batch` only needs a source.
    rng: ChaCha8Rng,
}

impl<'a, T: Real> PolicyController<'a, T> {
    pub fn new(net: &'a PolicyNet<T>) -> Self {
        Self {
            net,
            input: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl<T: Real> Controller for PolicyController<'_, T> {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError> {
        let len = self.net.spec().input_len();
        self.input.clear();
        self.input.resize(len * observations.len(), T::zero());
        for (o, chunk) in observations.iter().zip(self.input.chunks_mut(len)) {
            image_input(&o.rasterize(), chunk);
        }
        let samples = act_batch(
            self.net,
            &self.input,
            observations.len(),
            ActMode::Deterministic,
            &mut self.rng,
        )?;
        Ok(samples.into_iter().map(|s| s.action).collect())
    }
}
