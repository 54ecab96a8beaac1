//! Server side: one client drives one environment.
//!
//! A session starts with a `hello` exchange. After that the client may send
//! `config` (between episodes), `reset` (any time), `act` (during an
//! episode) and `bye`. Each request gets exactly one reply:
//!
//! | request  | reply                                              |
//! |----------|----------------------------------------------------|
//! | `hello`  | `hello`                                            |
//! | `config` | `config` with the full effective settings          |
//! | `reset`  | `obs` at `t = 0`                                   |
//! | `act`    | `reward` while running, `done` on the final step   |
//! | `bye`    | `bye`, then the session ends                       |
//!
//! A line that cannot be parsed, or a well-formed request with invalid
//! content, is answered with a non-fatal `error` and the session goes on.
//! A request that is not allowed in the current state (anything before
//! `hello`, `act` without a running episode, `config` during an episode)
//! is answered with a fatal `error` and the session ends.

use std::io::{BufRead, Write};

use gather_core::constellation::{generate, ConstellationSpec};
use gather_core::env::{Env, EnvConfig, CUTOFF_STEPS_PER_AGENT};
use gather_core::geometry::{Position, SwarmState};
use gather_core::reward::RewardConfig;
use gather_core::sensing::Observation;
use gather_core::Action;

use crate::message::{
    AgentObs, Bye, ConfigMsg, DoneMsg, Hello, Message, ObsMsg, Reset, StepMsg, PROTOCOL_VERSION,
};
use crate::ProtocolError;

/// Environment and scenario settings of a session.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionSettings {
    pub n_agents: usize,
    pub visibility: f64,
    pub visibility_ratio: f64,
    pub s_max: f64,
    pub conv_radius: f64,
    /// `None` means `CUTOFF_STEPS_PER_AGENT * n_agents`.
    pub cutoff_steps: Option<u64>,
    pub reward: RewardConfig,
    /// Seed of the first generated scenario; later resets without a seed
    /// count up from it.
    pub first_seed: u64,
}

impl Default for SessionSettings {
    fn default() -> Self {
        let env = EnvConfig::default();
        Self {
            n_agents: 10,
            visibility: env.visibility,
            visibility_ratio: 0.75,
            s_max: env.s_max,
            conv_radius: env.conv_radius,
            cutoff_steps: None,
            reward: env.reward,
            first_seed: 0,
        }
    }
}

impl SessionSettings {
    /// Engine configuration for a swarm of `n` agents.
    pub fn env_config(&self, n: usize) -> EnvConfig {
        EnvConfig {
            visibility: self.visibility,
            s_max: self.s_max,
            conv_radius: self.conv_radius,
            cutoff_steps: self
                .cutoff_steps
                .unwrap_or(CUTOFF_STEPS_PER_AGENT * n.max(1) as u64),
            reward: self.reward,
        }
    }

    fn as_message(&self) -> ConfigMsg {
        ConfigMsg {
            n_agents: Some(self.n_agents),
            visibility: Some(self.visibility),
            visibility_ratio: Some(self.visibility_ratio),
            s_max: Some(self.s_max),
            conv_radius: Some(self.conv_radius),
            cutoff_steps: Some(self.env_config(self.n_agents).cutoff_steps),
            p_ln: Some(self.reward.p_ln),
            p_acc: Some(self.reward.p_acc),
            c_g: Some(self.reward.c_g),
        }
    }

    /// Applies the given fields and validates the result.
    fn apply(&self, m: &ConfigMsg) -> Result<Self, String> {
        let mut s = self.clone();
        if let Some(v) = m.n_agents {
            s.n_agents = v;
        }
        if let Some(v) = m.visibility {
            s.visibility = v;
        }
        if let Some(v) = m.visibility_ratio {
            s.visibility_ratio = v;
        }
        if let Some(v) = m.s_max {
            s.s_max = v;
        }
        if let Some(v) = m.conv_radius {
            s.conv_radius = v;
        }
        if m.cutoff_steps.is_some() {
            s.cutoff_steps = m.cutoff_steps;
        }
        if let Some(v) = m.p_ln {
            s.reward.p_ln = v;
        }
        if let Some(v) = m.p_acc {
            s.reward.p_acc = v;
        }
        if let Some(v) = m.c_g {
            s.reward.c_g = v;
        }
        s.env_config(s.n_agents).validate().map_err(|e| e.to_string())?;
        s.spec(s.first_seed).validate().map_err(|e| e.to_string())?;
        Ok(s)
    }

    fn spec(&self, seed: u64) -> ConstellationSpec {
        ConstellationSpec::new(self.n_agents, self.visibility, self.visibility_ratio, seed)
    }
}

/// How a session ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionEnd {
    /// The client said `bye`.
    Bye,
    /// The input closed without `bye`.
    Eof,
    /// A fatal error was sent; the reason is its message.
    Aborted(String),
}

enum Stage {
    AwaitHello,
    Idle,
    Running(Box<Env>),
}

/// Per-connection server state.
pub struct Session {
    settings: SessionSettings,
    stage: Stage,
    generated: u64,
}

impl Session {
    pub fn new(settings: SessionSettings) -> Self {
        Self {
            settings,
            stage: Stage::AwaitHello,
            generated: 0,
        }
    }

    /// Answers one incoming line. Returns the reply and whether the session
    /// is over after sending it.
    pub fn handle_line(&mut self, line: &str) -> (Message, Option<SessionEnd>) {
        let msg = match Message::decode(line) {
            Ok(m) => m,
            Err(e) => return (Message::error(e.to_string(), false), None),
        };
        match self.handle(msg) {
            Ok(Reply::Continue(m)) => (m, None),
            Ok(Reply::End(m)) => (m, Some(SessionEnd::Bye)),
            Err(Failure::Recoverable(text)) => (Message::error(text, false), None),
            Err(Failure::Fatal(text)) => (Message::error(text.clone(), true), Some(SessionEnd::Aborted(text))),
        }
    }

    fn handle(&mut self, msg: Message) -> Result<Reply, Failure> {
        let kind = msg.kind();
        match (&mut self.stage, msg) {
            (Stage::AwaitHello, Message::Hello(h)) => {
                if h.version != PROTOCOL_VERSION {
                    return Err(Failure::Fatal(format!(
                        "unsupported protocol version {} (server speaks {PROTOCOL_VERSION})",
                        h.version
                    )));
                }
                self.stage = Stage::Idle;
                Ok(Reply::Continue(Message::Hello(Hello {
                    version: PROTOCOL_VERSION,
                    name: Some("gather".into()),
                })))
            }
            (Stage::AwaitHello, _) => Err(Failure::Fatal(format!("expected hello, got {kind}"))),
            (_, Message::Hello(_)) => Err(Failure::Fatal("hello sent twice".into())),
            (_, Message::Bye(_)) => Ok(Reply::End(Message::Bye(Bye {}))),
            (Stage::Idle, Message::Config(c)) => {
                self.settings = self.settings.apply(&c).map_err(Failure::Recoverable)?;
                Ok(Reply::Continue(Message::Config(self.settings.as_message())))
            }
            (Stage::Running(_), Message::Config(_)) => {
                Err(Failure::Fatal("config is not allowed during an episode".into()))
            }
            (_, Message::Reset(r)) => self.reset(r),
            (Stage::Running(env), Message::Act(a)) => {
                let n = env.n_agents();
                if a.actions.len() != n {
                    return Err(Failure::Recoverable(format!(
                        "expected {n} actions, got {}",
                        a.actions.len()
                    )));
                }
                let actions = a
                    .actions
                    .iter()
                    .enumerate()
                    .map(|(i, &[alpha, sigma])| {
                        Action::normalized(alpha, sigma).ok_or_else(|| {
                            Failure::Recoverable(format!("action {i} is not finite"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let out = env
                    .step(&actions)
                    .map_err(|e| Failure::Recoverable(e.to_string()))?;
                let t = env.t();
                let agents = agent_obs(&out.observations);
                match out.done {
                    None => Ok(Reply::Continue(Message::Reward(StepMsg {
                        t,
                        rewards: out.rewards.agents,
                        agents,
                    }))),
                    Some(outcome) => {
                        let msg = Message::Done(DoneMsg {
                            t,
                            outcome: outcome.as_str().into(),
                            connectivity_preserved: env.connected_throughout(),
                            gather_fraction: out.record.largest_component_fraction,
                            rewards: out.rewards.agents,
                            agents,
                        });
                        self.stage = Stage::Idle;
                        Ok(Reply::Continue(msg))
                    }
                }
            }
            (Stage::Idle, Message::Act(_)) => {
                Err(Failure::Fatal("act without a running episode (send reset first)".into()))
            }
            (_, other) => Err(Failure::Fatal(format!(
                "{} is not a request a client may send",
                other.kind()
            ))),
        }
    }

    fn reset(&mut self, r: Reset) -> Result<Reply, Failure> {
        let state = match (r.positions, r.seed) {
            (Some(_), Some(_)) => {
                return Err(Failure::Recoverable("reset takes seed or positions, not both".into()))
            }
            (Some(pos), None) => SwarmState::new(pos.iter().map(|&[x, y]| Position::new(x, y)).collect())
                .map_err(|e| Failure::Recoverable(e.to_string()))?,
            (None, seed) => {
                let seed = seed.unwrap_or_else(|| {
                    let s = self.settings.first_seed.wrapping_add(self.generated);
                    self.generated += 1;
                    s
                });
                generate(&self.settings.spec(seed)).map_err(|e| Failure::Recoverable(e.to_string()))?
            }
        };
        let cfg = self.settings.env_config(state.len());
        let (env, obs) = Env::reset(state, cfg).map_err(|e| Failure::Recoverable(e.to_string()))?;
        self.stage = Stage::Running(Box::new(env));
        Ok(Reply::Continue(Message::Obs(ObsMsg {
            t: 0,
            agents: agent_obs(&obs),
        })))
    }
}

enum Reply {
    Continue(Message),
    End(Message),
}

enum Failure {
    Recoverable(String),
    Fatal(String),
}

pub fn agent_obs(observations: &[Observation]) -> Vec<AgentObs> {
    observations.iter().map(AgentObs::from_observation).collect()
}

/// Runs one session over a line reader and writer until `bye`, end of
/// input, or a fatal error.
pub fn serve<R: BufRead, W: Write>(
    mut reader: R,
    mut writer: W,
    settings: SessionSettings,
) -> Result<SessionEnd, ProtocolError> {
    let mut session = Session::new(settings);
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(SessionEnd::Eof);
        }
        if line.trim().is_empty() {
            continue;
        }
        let (reply, end) = session.handle_line(&line);
        writeln!(writer, "{}", reply.encode())?;
        writer.flush()?;
        if let Some(end) = end {
            if let SessionEnd::Aborted(reason) = &end {
                log::warn!("session aborted: {reason}");
            }
            return Ok(end);
        }
    }
}
