//! Trainer configuration and the scenario curriculum.

use gather_core::constellation::{ConstellationSpec, ScenarioSource};
use gather_core::env::{EnvConfig, CUTOFF_STEPS_PER_AGENT};
use serde::{Deserialize, Serialize};

use crate::PpoError;

/// One stage of the curriculum: from `start_step` on, training episodes use
/// swarms of `n_agents` generated with this visibility ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start_step: u64,
    pub n_agents: usize,
    pub visibility_ratio: f64,
}

/// Missing fields of a deserialized configuration take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub lr: f64,
    /// Transitions per update (one transition per agent per env step).
    pub batch_size: usize,
    pub n_envs: usize,
    pub clip_eps: f64,
    pub gae_lambda: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Training stops at the first update boundary at or past this count.
    pub total_steps: u64,
    /// A checkpoint is written whenever the step count crosses a multiple.
    pub checkpoint_interval: u64,
    pub seed: u64,
    /// Training scenario `k` uses constellation seed `scenario_seed + k`.
    pub scenario_seed: u64,
    /// Visibility, step length, convergence radius and reward weights. The
    /// cutoff is replaced per phase by `CUTOFF_STEPS_PER_AGENT * n_agents`.
    pub env: EnvConfig,
    pub curriculum: Vec<Phase>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            lr: 2e-5,
            batch_size: 2048,
            n_envs: 8,
            clip_eps: 0.2,
            gae_lambda: 0.95,
            epochs_per_update: 4,
            minibatch_size: 64,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            total_steps: 200_000,
            checkpoint_interval: 50_000,
            seed: 0,
            scenario_seed: 0,
            env: EnvConfig::for_swarm(4),
            curriculum: vec![Phase {
                start_step: 0,
                n_agents: 4,
                visibility_ratio: 0.5,
            }],
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::Config(m.to_owned()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip_eps must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 || self.n_envs == 0 || self.minibatch_size == 0 {
            return bad("batch_size, n_envs and minibatch_size must be positive");
        }
        if self.epochs_per_update == 0 {
            return bad("epochs_per_update must be positive");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        if self.checkpoint_interval == 0 {
            return bad("checkpoint_interval must be positive");
        }
        match self.curriculum.first() {
            None => return bad("curriculum needs at least one phase"),
            Some(p) if p.start_step != 0 => return bad("first curriculum phase must start at step 0"),
            _ => {}
        }
        if self.curriculum.windows(2).any(|w| w[1].start_step <= w[0].start_step) {
            return bad("curriculum phases must have increasing start steps");
        }
        for p in &self.curriculum {
            self.source_for(p, 0)
                .scenario(0)
                .map_err(|e| PpoError::Config(format!("curriculum phase {p:?}: {e}")))?;
            self.env_for(p)
                .validate()
                .map_err(|e| PpoError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Phase in force at `steps` completed transitions.
    pub fn phase_at(&self, steps: u64) -> &Phase {
        self.curriculum
            .iter()
            .rev()
            .find(|p| p.start_step <= steps)
            .unwrap_or(&self.curriculum[0])
    }

    pub fn env_for(&self, phase: &Phase) -> EnvConfig {
        EnvConfig {
            cutoff_steps: CUTOFF_STEPS_PER_AGENT * phase.n_agents as u64,
            ..self.env
        }
    }

    /// Scenario source for a phase; scenario `k` of it has seed `first_seed + k`.
    pub fn source_for(&self, phase: &Phase, first_seed: u64) -> ScenarioSource {
        ScenarioSource::Generated(ConstellationSpec::new(
            phase.n_agents,
            self.env.visibility,
            phase.visibility_ratio,
            first_seed,
        ))
    }
}
