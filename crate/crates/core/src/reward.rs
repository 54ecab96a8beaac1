//! Per-agent rewards.
//!
//! Each agent receives a local term (a penalty per lost neighbor plus a
//! constant per-step penalty) and a global term shared by the whole swarm:
//! the decrease of the swarm bounding radius scaled by `c_g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{enclosing_radius, SwarmState};
use crate::visibility::graph_of;

/// How lost neighbors are counted between two consecutive steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborLoss {
    /// Decrease of the neighbor count, `max(0, |N(t)| - |N(t+1)|)`.
    #[default]
    Count,
    /// Neighbors present at `t` and missing at `t + 1`, so swapping one
    /// neighbor for another is still penalized.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub p_ln: f64,
    pub p_acc: f64,
    pub c_g: f64,
    #[serde(default)]
    pub neighbor_loss: NeighborLoss,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            p_ln: -0.5,
            p_acc: -0.01,
            c_g: 0.1,
            neighbor_loss: NeighborLoss::Count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentReward {
    pub local: f64,
    pub global: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReward {
    pub agents: Vec<AgentReward>,
}

impl StepReward {
    pub fn totals(&self) -> impl Iterator<Item = f64> + '_ {
        self.agents.iter().map(|a| a.total)
    }

    /// The shared global term (zero for an empty swarm).
    pub fn global(&self) -> f64 {
        self.agents.first().map_or(0.0, |a| a.global)
    }
}

pub fn local_reward(n_before: usize, n_after: usize, cfg: &RewardConfig) -> f64 {
    lost_penalty(n_before.saturating_sub(n_after), cfg) + cfg.p_acc
}

fn lost_penalty(lost: usize, cfg: &RewardConfig) -> f64 {
    if lost > 0 {
        lost as f64 * cfg.p_ln
    } else {
        0.0
    }
}

pub fn global_reward(d_before: f64, d_after: f64, cfg: &RewardConfig) -> f64 {
    (d_before - d_after) * cfg.c_g
}

pub fn step_rewards(
    before: &SwarmState,
    after: &SwarmState,
    visibility: f64,
    cfg: &RewardConfig,
) -> Result<StepReward> {
    if before.len() != after.len() {
        return Err(Error::Contract(format!(
            "reward needs matching swarms, got {} and {} agents",
            before.len(),
            after.len()
        )));
    }
    let g_before = graph_of(&before.positions, visibility);
    let g_after = graph_of(&after.positions, visibility);
    let global = global_reward(
        enclosing_radius(&before.positions),
        enclosing_radius(&after.positions),
        cfg,
    );
    let agents = (0..before.len())
        .map(|i| {
            let local = match cfg.neighbor_loss {
                NeighborLoss::Count => local_reward(g_before.degree(i), g_after.degree(i), cfg),
                NeighborLoss::Identity => {
                    let lost = g_before
                        .neighbors(i)
                        .iter()
                        .filter(|j| !g_after.has_edge(i, **j))
                        .count();
                    lost_penalty(lost, cfg) + cfg.p_acc
                }
            };
            AgentReward {
                local,
                global,
                total: local + global,
            }
        })
        .collect();
    Ok(StepReward { agents })
}
