//! Rollout storage and generalized advantage estimation.

use gather_core::sensing::IMAGE_SIZE;

/// Pixels in one unpacked observation image.
pub const IMAGE_LEN: usize = IMAGE_SIZE * IMAGE_SIZE;

/// Transitions of one update, stored in collection order.
///
/// Images are kept as one byte per pixel (0 or 1); everything else is `f64`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBuffer {
    pub images: Vec<u8>,
    /// Pre-squash Gaussian samples.
    pub raw_actions: Vec<[f64; 2]>,
    pub log_probs: Vec<f64>,
    /// Per-agent total reward, including the truncation bootstrap.
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// The agent's episode ended with this transition.
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.images[i * IMAGE_LEN..(i + 1) * IMAGE_LEN]
    }

    /// Drops everything past the first `n` transitions.
    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n * IMAGE_LEN);
        self.raw_actions.truncate(n);
        self.log_probs.truncate(n);
        self.rewards.truncate(n);
        self.values.truncate(n);
        self.dones.truncate(n);
        self.advantages.truncate(n);
        self.returns.truncate(n);
    }

    /// Shifts advantages to zero mean and scales them to unit variance.
    pub fn normalize_advantages(&mut self) {
        normalize(&mut self.advantages);
    }
}

/// Zero mean, unit (population) variance; a constant vector becomes zeros.
pub fn normalize(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let scale = 1.0 / (var.sqrt() + 1e-8);
    for x in v {
        *x = (*x - mean) * scale;
    }
}

/// Generalized advantage estimation over interleaved streams.
///
/// Transitions are laid out step-major: entry `t * streams + s` is step `t`
/// of stream `s` (one stream per environment agent). `dones[i]` marks the
/// last transition of an episode, after which the stream continues with a
/// fresh episode. `last_values[s]` is the value of the state following the
/// final stored step of stream `s`.
///
/// Returns `(advantages, returns)` where `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_values: &[f64],
    streams: usize,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let len = rewards.len();
    assert!(streams > 0 && len.is_multiple_of(streams), "ragged rollout");
    assert_eq!(values.len(), len);
    assert_eq!(dones.len(), len);
    assert_eq!(last_values.len(), streams);
    let steps = len / streams;
    let mut adv = vec![0.0; len];
    for s in 0..streams {
        let mut gae = 0.0;
        for t in (0..steps).rev() {
            let i = t * streams + s;
            let next_value = if t + 1 == steps {
                last_values[s]
            } else {
                values[i + streams]
            };
            let live = if dones[i] { 0.0 } else { 1.0 };
            let delta = rewards[i] + gamma * next_value * live - values[i];
            gae = delta + gamma * lambda * live * gae;
            adv[i] = gae;
        }
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}
