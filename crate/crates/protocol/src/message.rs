//! Message types and their line encoding.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use gather_core::control::Action;
use gather_core::reward::AgentReward;
use gather_core::sensing::{Observation, ObservationImage, PACKED_LEN};
use gather_core::UnitBearing;
use serde::{Deserialize, Serialize};

use crate::ProtocolError;

pub const PROTOCOL_VERSION: u32 = 1;

/// Every message is one JSON object on one line, tagged by `"type"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello(Hello),
    Config(ConfigMsg),
    Reset(Reset),
    Obs(ObsMsg),
    Act(Act),
    Reward(StepMsg),
    Done(DoneMsg),
    Error(ErrorMsg),
    Bye(Bye),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello(_) => "hello",
            Message::Config(_) => "config",
            Message::Reset(_) => "reset",
            Message::Obs(_) => "obs",
            Message::Act(_) => "act",
            Message::Reward(_) => "reward",
            Message::Done(_) => "done",
            Message::Error(_) => "error",
            Message::Bye(_) => "bye",
        }
    }

    /// One line of JSON without the trailing newline.
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }

    pub fn decode(line: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n']))
            .map_err(|e| ProtocolError::Malformed(e.to_string()))
    }

    pub fn error(message: impl Into<String>, fatal: bool) -> Self {
        Message::Error(ErrorMsg {
            message: message.into(),
            fatal,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub version: u32,
    /// Free-form peer name, for logs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// Environment settings. In a request every field is optional and only the
/// given ones change; the reply always lists the full effective settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigMsg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_agents: Option<usize>,
    #[serde(default, rename = "V", skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    #[serde(default, rename = "VR", skip_serializing_if = "Option::is_none")]
    pub visibility_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_ln: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_acc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_g: Option<f64>,
}

/// Starts a new episode. `positions` gives the layout explicitly; otherwise
/// one is generated with `seed` (or the session's next seed).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
}

/// What one agent senses: its neighbor bearings and the packed image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentObs {
    /// Unit vectors `[ux, uy]` toward each visible neighbor.
    pub bearings: Vec<[f64; 2]>,
    /// Base64 (standard alphabet) of the 750-byte packed 75x75 image.
    pub image: String,
}

impl AgentObs {
    pub fn from_observation(o: &Observation) -> Self {
        Self {
            bearings: o.bearings.iter().map(|b| [b.ux, b.uy]).collect(),
            image: STANDARD.encode(o.rasterize().pack()),
        }
    }

    pub fn observation(&self) -> Observation {
        Observation::new(
            self.bearings
                .iter()
                .map(|&[ux, uy]| UnitBearing { ux, uy })
                .collect(),
        )
    }

    pub fn decode_image(&self) -> Result<ObservationImage, ProtocolError> {
        let bytes = STANDARD
            .decode(&self.image)
            .map_err(|e| ProtocolError::Malformed(format!("image is not base64: {e}")))?;
        if bytes.len() != PACKED_LEN {
            return Err(ProtocolError::Malformed(format!(
                "packed image has {} bytes, expected {PACKED_LEN}",
                bytes.len()
            )));
        }
        ObservationImage::unpack(&bytes).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }
}

/// Observations at time `t` (0 right after a reset).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsMsg {
    pub t: u64,
    pub agents: Vec<AgentObs>,
}

/// One `[alpha, sigma]` pair per agent, in agent order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Act {
    pub actions: Vec<[f64; 2]>,
}

impl Act {
    pub fn from_actions(actions: &[Action]) -> Self {
        Self {
            actions: actions.iter().map(|a| [a.alpha, a.sigma]).collect(),
        }
    }
}

/// Reply to `act` while the episode goes on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepMsg {
    pub t: u64,
    pub rewards: Vec<AgentReward>,
    pub agents: Vec<AgentObs>,
}

/// Reply to the `act` that ended the episode. In controller mode it is sent
/// without a preceding `act` and carries no rewards or observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoneMsg {
    pub t: u64,
    /// `"converged"` or `"truncated"`.
    pub outcome: String,
    pub connectivity_preserved: bool,
    pub gather_fraction: f64,
    #[serde(default)]
    pub rewards: Vec<AgentReward>,
    #[serde(default)]
    pub agents: Vec<AgentObs>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorMsg {
    pub message: String,
    /// The sender closes the session after a fatal error.
    pub fatal: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bye {}
