//! Synchronous episode engine.
//!
//! Every step all agents observe the same state, then all move at once:
//! `p_i += sigma_i * s_max * (cos alpha_i, sin alpha_i)`. Rewards compare the
//! states before and after the move. An episode converges once the largest
//! connected component of the visibility graph fits within `conv_radius` of
//! its own centroid, and is truncated after `cutoff_steps` steps.
//!
//! Agents that end up on top of each other are allowed (there is no
//! collision model), but they cannot see each other: a zero-length bearing
//! is dropped from the observation and counted in
//! [`EpisodeResult::coincident_drops`].

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::control::{Action, Controller};
use crate::error::{Error, Result};
use crate::geometry::{enclosing_radius, Position, SwarmState};
use crate::reward::{step_rewards, RewardConfig, StepReward};
use crate::sensing::{observe_positions, Observation};
use crate::visibility::graph_of;

/// Steps allowed per agent before an episode is cut off.
pub const CUTOFF_STEPS_PER_AGENT: u64 = 150;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub visibility: f64,
    pub s_max: f64,
    pub conv_radius: f64,
    pub cutoff_steps: u64,
    pub reward: RewardConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::for_swarm(10)
    }
}

impl EnvConfig {
    /// Defaults with the cut-off scaled to the swarm size (1500 steps for 10 agents).
    pub fn for_swarm(n_agents: usize) -> Self {
        Self {
            visibility: 50.0,
            s_max: 0.5,
            conv_radius: 5.0,
            cutoff_steps: CUTOFF_STEPS_PER_AGENT * n_agents.max(1) as u64,
            reward: RewardConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.visibility) || !positive(self.s_max) || !positive(self.conv_radius) {
            return Err(Error::Contract(
                "visibility, s_max and conv_radius must be positive".into(),
            ));
        }
        if self.conv_radius >= self.visibility {
            return Err(Error::Contract(format!(
                "conv_radius {} must be below the visibility range {}",
                self.conv_radius, self.visibility
            )));
        }
        if self.cutoff_steps == 0 {
            return Err(Error::Contract("cutoff_steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    Truncated,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Truncated => "truncated",
        }
    }
}

/// Everything that happened in one step, measured on the post-move state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based index of the executed step.
    pub t: u64,
    pub actions: Vec<Action>,
    pub rewards: StepReward,
    pub connected: bool,
    pub largest_component_fraction: f64,
    pub d_global: f64,
    pub positions: Vec<Position>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub observations: Vec<Observation>,
    pub rewards: StepReward,
    pub done: Option<Outcome>,
    pub record: StepRecord,
}

/// One running episode. Not shareable between threads while stepping; many
/// independent environments can run in parallel.
#[derive(Clone, Debug)]
pub struct Env {
    cfg: EnvConfig,
    state: SwarmState,
    done: Option<Outcome>,
    connected_throughout: bool,
    coincident_drops: u64,
}

impl Env {
    pub fn reset(initial: SwarmState, cfg: EnvConfig) -> Result<(Self, Vec<Observation>)> {
        cfg.validate()?;
        let state = SwarmState::new(initial.positions)?;
        let connected = graph_of(&state.positions, cfg.visibility).is_connected();
        let mut env = Self {
            cfg,
            state,
            done: None,
            connected_throughout: connected,
            coincident_drops: 0,
        };
        let obs = env.sense();
        Ok((env, obs))
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    pub fn t(&self) -> u64 {
        self.state.t
    }

    pub fn n_agents(&self) -> usize {
        self.state.len()
    }

    pub fn done(&self) -> Option<Outcome> {
        self.done
    }

    pub fn connected_throughout(&self) -> bool {
        self.connected_throughout
    }

    pub fn coincident_drops(&self) -> u64 {
        self.coincident_drops
    }

    fn sense(&mut self) -> Vec<Observation> {
        (0..self.state.len())
            .map(|i| {
                let (obs, dropped) = observe_positions(&self.state.positions, i, self.cfg.visibility);
                self.coincident_drops += dropped.len() as u64;
                obs
            })
            .collect()
    }

    /// Current observations without advancing time.
    pub fn observe(&self) -> Vec<Observation> {
        (0..self.state.len())
            .map(|i| observe_positions(&self.state.positions, i, self.cfg.visibility).0)
            .collect()
    }

    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutput> {
        if self.done.is_some() {
            return Err(Error::Contract("step called on a finished episode".into()));
        }
        if actions.len() != self.state.len() {
            return Err(Error::Contract(format!(
                "expected {} actions, got {}",
                self.state.len(),
                actions.len()
            )));
        }
        let actions: Vec<Action> = actions
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Action::normalized(a.alpha, a.sigma).ok_or_else(|| {
                    Error::Contract(format!("agent {i} action is not finite: {a:?}"))
                })
            })
            .collect::<Result<_>>()?;

        let before = self.state.clone();
        for (p, a) in self.state.positions.iter_mut().zip(&actions) {
            let len = a.sigma * self.cfg.s_max;
            let (s, c) = a.alpha.sin_cos();
            p.x += len * c;
            p.y += len * s;
        }
        self.state.t += 1;

        let rewards = step_rewards(&before, &self.state, self.cfg.visibility, &self.cfg.reward)?;
        let graph = graph_of(&self.state.positions, self.cfg.visibility);
        let parts = graph.components();
        let connected = parts.count() == 1;
        self.connected_throughout &= connected;
        let largest = parts.largest().expect("swarm is never empty");
        let members: Vec<Position> = parts
            .members(largest)
            .into_iter()
            .map(|i| self.state.positions[i])
            .collect();
        let n = self.state.len();

        self.done = if enclosing_radius(&members) <= self.cfg.conv_radius {
            Some(Outcome::Converged)
        } else if self.state.t >= self.cfg.cutoff_steps {
            Some(Outcome::Truncated)
        } else {
            None
        };

        let record = StepRecord {
            t: self.state.t,
            actions,
            rewards: rewards.clone(),
            connected,
            largest_component_fraction: members.len() as f64 / n as f64,
            d_global: enclosing_radius(&self.state.positions),
            positions: self.state.positions.clone(),
        };
        let observations = self.sense();
        Ok(StepOutput {
            observations,
            rewards,
            done: self.done,
            record,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub steps: u64,
    /// The visibility graph was connected initially and after every step.
    pub connectivity_preserved: bool,
    /// Size of the largest final component over the swarm size.
    pub final_gather_fraction: f64,
    pub coincident_drops: u64,
    pub initial_d_global: f64,
    pub final_d_global: f64,
    /// Sum over steps of the mean per-agent total reward.
    pub mean_return: f64,
    #[serde(skip)]
    pub trace: Option<EpisodeTrace>,
}

/// Runs `controller` from `initial` until the episode converges or is cut off.
pub fn run_episode<C: Controller + ?Sized>(
    initial: &SwarmState,
    cfg: &EnvConfig,
    controller: &mut C,
    record_trace: bool,
) -> Result<EpisodeResult> {
    let (mut env, mut obs) = Env::reset(initial.clone(), *cfg)?;
    let initial_d_global = enclosing_radius(&initial.positions);
    let mut trace = record_trace.then(|| EpisodeTrace::new(initial, cfg));
    let mut mean_return = 0.0;
    let n = initial.len() as f64;
    loop {
        let step = env.t() + 1;
        let actions = controller
            .act(&obs)
            .map_err(|source| Error::Controller { step, source })?;
        let out = env.step(&actions)?;
        mean_return += out.rewards.totals().sum::<f64>() / n;
        let gather = out.record.largest_component_fraction;
        let d_global = out.record.d_global;
        if let Some(t) = trace.as_mut() {
            t.records.push(out.record);
        }
        if let Some(outcome) = out.done {
            return Ok(EpisodeResult {
                outcome,
                steps: env.t(),
                connectivity_preserved: env.connected_throughout(),
                final_gather_fraction: gather,
                coincident_drops: env.coincident_drops(),
                initial_d_global,
                final_d_global: d_global,
                mean_return,
                trace,
            });
        }
        obs = out.observations;
    }
}

/// Initial layout plus one record per executed step.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub records: Vec<StepRecord>,
}

/// First line of a trace file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub initial_positions: Vec<Position>,
    pub visibility: f64,
    pub s_max: f64,
    pub conv_radius: f64,
}

impl EpisodeTrace {
    pub fn new(initial: &SwarmState, cfg: &EnvConfig) -> Self {
        Self {
            header: TraceHeader {
                initial_positions: initial.positions.clone(),
                visibility: cfg.visibility,
                s_max: cfg.s_max,
                conv_radius: cfg.conv_radius,
            },
            records: Vec::new(),
        }
    }

    /// Writes JSON lines: the header, then one [`StepRecord`] per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Err(Error::Contract("empty trace file".into())),
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break parse_line::<TraceHeader>(&line, 1)?;
                    }
                }
            }
        };
        let mut records = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(parse_line::<StepRecord>(&line, idx + 1)?);
        }
        Ok(Self { header, records })
    }
}

fn parse_line<T: serde::de::DeserializeOwned>(line: &str, line_no: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::ScenarioParse {
        line: line_no,
        column: e.column(),
        message: e.to_string(),
    })
}
