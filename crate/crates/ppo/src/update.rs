//! Clipped-surrogate policy and value updates.

use gather_nn::optim::clip_grad_norm;
use gather_nn::policy::gaussian_entropy;
use gather_nn::{Adam, PolicyNet};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::buffer::{RolloutBuffer, IMAGE_LEN};
use crate::config::TrainerConfig;
use crate::rollout::to_input;
use crate::PpoError;

/// Averages over all minibatches of an update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Per-transition clipped surrogate `min(r A, clip(r, 1 - eps, 1 + eps) A)`
/// and its derivative with respect to the ratio `r`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// Output-space gradients and statistics of one minibatch.
#[derive(Clone, Debug, PartialEq)]
pub struct MinibatchLoss {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// d loss / d actor mean, `[m, 2]`.
    pub d_mean: Vec<f64>,
    /// d loss / d value, `[m]`.
    pub d_value: Vec<f64>,
    /// d loss / d log_std, `[2]`.
    pub d_log_std: [f64; 2],
}

/// PPO loss `-mean(surrogate) + c_v mean((V - R)^2) - c_e entropy` for one
/// minibatch, given the current network outputs.
#[allow(clippy::too_many_arguments)]
pub fn minibatch_loss(
    mean: &[[f64; 2]],
    log_std: [f64; 2],
    values: &[f64],
    raw_actions: &[[f64; 2]],
    old_log_probs: &[f64],
    advantages: &[f64],
    returns: &[f64],
    cfg: &TrainerConfig,
) -> MinibatchLoss {
    let m = mean.len() as f64;
    let std = [log_std[0].exp(), log_std[1].exp()];
    let mut out = MinibatchLoss {
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: gaussian_entropy(&log_std),
        approx_kl: 0.0,
        clip_fraction: 0.0,
        d_mean: vec![0.0; 2 * mean.len()],
        d_value: vec![0.0; mean.len()],
        d_log_std: [-cfg.entropy_coef; 2],
    };
    for s in 0..mean.len() {
        let mut log_prob = 0.0;
        let mut z = [0.0; 2];
        for d in 0..2 {
            z[d] = (raw_actions[s][d] - mean[s][d]) / std[d];
            log_prob += -0.5 * z[d] * z[d] - log_std[d] - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        let log_ratio = log_prob - old_log_probs[s];
        let ratio = log_ratio.exp();
        let (surrogate, d_surr_d_ratio) = clipped_surrogate(ratio, advantages[s], cfg.clip_eps);
        out.policy_loss -= surrogate / m;
        out.approx_kl += ((ratio - 1.0) - log_ratio) / m;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            out.clip_fraction += 1.0 / m;
        }
        // d loss / d log_prob = -d_surr/d_ratio * ratio / m
        let g = -d_surr_d_ratio * ratio / m;
        for d in 0..2 {
            out.d_mean[2 * s + d] = g * z[d] / std[d];
            out.d_log_std[d] += g * (z[d] * z[d] - 1.0);
        }
        let err = values[s] - returns[s];
        out.value_loss += err * err / m;
        out.d_value[s] = cfg.value_coef * 2.0 * err / m;
    }
    out
}

/// Runs `cfg.epochs_per_update` passes of shuffled minibatches over `buf`.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut PolicyNet<f32>,
    adam: &mut Adam,
    buf: &RolloutBuffer,
    cfg: &TrainerConfig,
    rng: &mut R,
) -> Result<LossStats, PpoError> {
    let n = buf.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = LossStats::default();
    let mut batches = 0usize;
    for epoch in 0..cfg.epochs_per_update {
        order.shuffle(rng);
        for (mb, idx) in order.chunks(cfg.minibatch_size).enumerate() {
            let mut images = Vec::with_capacity(idx.len() * IMAGE_LEN);
            for &i in idx {
                images.extend_from_slice(buf.image(i));
            }
            let (out, cache) = net.forward(&to_input(&images), idx.len())?;
            let mean: Vec<[f64; 2]> = out
                .actor
                .chunks_exact(2)
                .map(|c| [c[0] as f64, c[1] as f64])
                .collect();
            let values: Vec<f64> = out.value.iter().map(|&v| v as f64).collect();
            let ls = net.log_std();
            let log_std = [ls[0] as f64, ls[1] as f64];
            let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
            let raw: Vec<[f64; 2]> = idx.iter().map(|&i| buf.raw_actions[i]).collect();
            let loss = minibatch_loss(
                &mean,
                log_std,
                &values,
                &raw,
                &pick(&buf.log_probs),
                &pick(&buf.advantages),
                &pick(&buf.returns),
                cfg,
            );
            let total = loss.policy_loss + cfg.value_coef * loss.value_loss
                - cfg.entropy_coef * loss.entropy;
            if !total.is_finite() {
                return Err(PpoError::NonFinite {
                    epoch,
                    minibatch: mb,
                    dump: format!(
                        "policy_loss={} value_loss={} log_std={log_std:?} max|mean|={} max|value|={}",
                        loss.policy_loss,
                        loss.value_loss,
                        mean.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())),
                        values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                    ),
                });
            }
            let to32 = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
            let mut grads = net.backward(
                &cache,
                &to32(&loss.d_mean),
                &to32(&loss.d_value),
                &to32(&loss.d_log_std),
            )?;
            if !grads.is_finite() {
                return Err(PpoError::NonFinite {
                    epoch,
                    minibatch: mb,
                    dump: format!("non-finite gradient; loss={total}"),
                });
            }
            clip_grad_norm(&mut grads, cfg.max_grad_norm);
            adam.step(net.params_mut(), &grads);
            stats.policy_loss += loss.policy_loss;
            stats.value_loss += loss.value_loss;
            stats.entropy += loss.entropy;
            stats.approx_kl += loss.approx_kl;
            stats.clip_fraction += loss.clip_fraction;
            batches += 1;
        }
    }
    if batches > 0 {
        let b = batches as f64;
        stats.policy_loss /= b;
        stats.value_loss /= b;
        stats.entropy /= b;
        stats.approx_kl /= b;
        stats.clip_fraction /= b;
    }
    Ok(stats)
}
