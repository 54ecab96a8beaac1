//! Experience collection over a set of environments driven by one shared
//! policy.

use gather_core::constellation::ScenarioSource;
use gather_core::control::Action;
use gather_core::env::{Env, EnvConfig, Outcome, StepOutput};
use gather_core::sensing::Observation;
use gather_nn::policy::{act_batch, ActMode};
use gather_nn::PolicyNet;
use rand::Rng;
use rayon::prelude::*;

use crate::buffer::{compute_gae, RolloutBuffer, IMAGE_LEN};
use crate::config::{Phase, TrainerConfig};
use crate::PpoError;

/// Statistics of one finished training episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    /// Sum over steps of the mean per-agent total reward.
    pub mean_return: f64,
    pub length: u64,
    pub connectivity_preserved: bool,
    pub converged: bool,
}

struct Slot {
    env: Env,
    obs: Vec<Observation>,
    ret: f64,
}

/// Environments of one curriculum phase plus their current observations.
///
/// Environments are never reset between updates; an episode that is still
/// running when a rollout ends continues in the next one.
pub struct Collector {
    env_cfg: EnvConfig,
    source: ScenarioSource,
    slots: Vec<Slot>,
    next_scenario: u64,
    /// Replace every sampled action by this one when stepping the
    /// environments (log-probabilities still refer to the sample).
    pub forced_action: Option<Action>,
}

impl Collector {
    /// Starts `cfg.n_envs` environments on scenarios `first_scenario..`.
    pub fn new(cfg: &TrainerConfig, phase: &Phase, first_scenario: u64) -> Result<Self, PpoError> {
        let mut c = Self {
            env_cfg: cfg.env_for(phase),
            source: cfg.source_for(phase, cfg.scenario_seed),
            slots: Vec::with_capacity(cfg.n_envs),
            next_scenario: first_scenario,
            forced_action: None,
        };
        for e in 0..cfg.n_envs {
            let (env, obs) = c.fresh_env(e)?;
            c.slots.push(Slot { env, obs, ret: 0.0 });
        }
        Ok(c)
    }

    /// Index of the next scenario to be drawn.
    pub fn next_scenario(&self) -> u64 {
        self.next_scenario
    }

    /// Number of agent streams (total agents over all environments).
    pub fn streams(&self) -> usize {
        self.slots.iter().map(|s| s.env.n_agents()).sum()
    }

    fn fresh_env(&mut self, e: usize) -> Result<(Env, Vec<Observation>), PpoError> {
        let k = self.next_scenario;
        self.next_scenario += 1;
        let sc = self.source.scenario(k).map_err(|source| PpoError::Env { env: e, t: 0, source })?;
        Env::reset(sc.state, self.env_cfg).map_err(|source| PpoError::Env { env: e, t: 0, source })
    }

    /// Collects exactly `batch_size` transitions and fills in advantages and
    /// returns. Vector steps continue until every stream has at least
    /// `ceil(batch_size / streams)` steps; advantages use all of them and
    /// the surplus of the last step is then dropped.
    pub fn collect<R: Rng + ?Sized>(
        &mut self,
        net: &PolicyNet<f32>,
        rng: &mut R,
        batch_size: usize,
        gamma: f64,
        lambda: f64,
    ) -> Result<(RolloutBuffer, Vec<EpisodeSummary>), PpoError> {
        let streams = self.streams();
        let steps = batch_size.div_ceil(streams);
        let total = steps * streams;
        let mut buf = RolloutBuffer {
            images: Vec::with_capacity(total * IMAGE_LEN),
            raw_actions: Vec::with_capacity(total),
            log_probs: Vec::with_capacity(total),
            rewards: Vec::with_capacity(total),
            values: Vec::with_capacity(total),
            dones: Vec::with_capacity(total),
            ..RolloutBuffer::default()
        };
        let mut episodes = Vec::new();
        for _ in 0..steps {
            self.vector_step(net, rng, gamma, &mut buf, &mut episodes)?;
        }
        let last_images = self.current_images();
        let last_values = values_of(net, &last_images, streams)?;
        let (adv, ret) = compute_gae(
            &buf.rewards,
            &buf.values,
            &buf.dones,
            &last_values,
            streams,
            gamma,
            lambda,
        );
        buf.advantages = adv;
        buf.returns = ret;
        buf.truncate(batch_size);
        Ok((buf, episodes))
    }

    fn current_images(&self) -> Vec<u8> {
        let mut images = Vec::with_capacity(self.streams() * IMAGE_LEN);
        for s in &self.slots {
            for o in &s.obs {
                images.extend_from_slice(o.rasterize().as_bytes());
            }
        }
        images
    }

    fn vector_step<R: Rng + ?Sized>(
        &mut self,
        net: &PolicyNet<f32>,
        rng: &mut R,
        gamma: f64,
        buf: &mut RolloutBuffer,
        episodes: &mut Vec<EpisodeSummary>,
    ) -> Result<(), PpoError> {
        let streams = self.streams();
        let images = self.current_images();
        let input = to_input(&images);
        let samples = act_batch(net, &input, streams, ActMode::Stochastic, rng)?;
        let mut actions: Vec<Vec<Action>> = Vec::with_capacity(self.slots.len());
        let mut offset = 0;
        for s in &self.slots {
            let n = s.env.n_agents();
            actions.push(
                samples[offset..offset + n]
                    .iter()
                    .map(|x| self.forced_action.unwrap_or(x.action))
                    .collect(),
            );
            offset += n;
        }
        let outputs: Vec<Result<StepOutput, (usize, u64, gather_core::Error)>> = self
            .slots
            .par_iter_mut()
            .zip(actions.par_iter())
            .enumerate()
            .map(|(e, (slot, a))| slot.env.step(a).map_err(|err| (e, slot.env.t(), err)))
            .collect();

        let base = buf.len();
        buf.images.extend_from_slice(&images);
        for x in &samples {
            buf.raw_actions.push(x.raw);
            buf.log_probs.push(x.log_prob);
            buf.values.push(x.value);
        }
        let mut truncated: Vec<(usize, Vec<Observation>)> = Vec::new();
        let mut offset = 0;
        for (e, out) in outputs.into_iter().enumerate() {
            let out = out.map_err(|(env, t, source)| PpoError::Env { env, t, source })?;
            let n = self.slots[e].env.n_agents();
            let done = out.done.is_some();
            let totals: Vec<f64> = out.rewards.totals().collect();
            self.slots[e].ret += totals.iter().sum::<f64>() / n as f64;
            buf.rewards.extend_from_slice(&totals);
            buf.dones.extend(std::iter::repeat_n(done, n));
            match out.done {
                None => self.slots[e].obs = out.observations,
                Some(outcome) => {
                    let slot = &self.slots[e];
                    episodes.push(EpisodeSummary {
                        mean_return: slot.ret,
                        length: slot.env.t(),
                        connectivity_preserved: slot.env.connected_throughout(),
                        converged: outcome == Outcome::Converged,
                    });
                    if outcome == Outcome::Truncated {
                        truncated.push((base + offset, out.observations));
                    }
                    let (env, obs) = self.fresh_env(e)?;
                    self.slots[e] = Slot { env, obs, ret: 0.0 };
                }
            }
            offset += n;
        }
        // A cut-off is not a real terminal state: fold the discounted value
        // of the state the agent was left in into its last reward.
        if !truncated.is_empty() {
            let mut images = Vec::new();
            let mut count = 0;
            for (_, obs) in &truncated {
                for o in obs {
                    images.extend_from_slice(o.rasterize().as_bytes());
                    count += 1;
                }
            }
            let values = values_of(net, &images, count)?;
            let mut v = values.iter();
            for (start, obs) in &truncated {
                for i in 0..obs.len() {
                    buf.rewards[start + i] += gamma * v.next().expect("one value per agent");
                }
            }
        }
        Ok(())
    }
}

/// Converts 0/1 pixel bytes into network input.
pub fn to_input(images: &[u8]) -> Vec<f32> {
    images.iter().map(|&b| if b != 0 { 1.0 } else { 0.0 }).collect()
}

fn values_of(net: &PolicyNet<f32>, images: &[u8], batch: usize) -> Result<Vec<f64>, PpoError> {
    let out = net.infer(&to_input(images), batch)?;
    Ok(out.value.iter().map(|&v| v as f64).collect())
}
