//! Seeded generation of connected initial constellations and the scenario
//! file format.
//!
//! Agents are placed one at a time. The first sits at the origin; every
//! following agent is drawn uniformly from the bounding box of the agents
//! already placed, grown by `V_eff = V * VR` on every side, and redrawn until
//! it is within `V_eff` of some placed agent and at least `min_separation`
//! from all of them. The result is therefore connected under `V_eff`, and a
//! larger `VR` yields more stretched, harder layouts.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{distance, Position, SwarmState};
use crate::visibility::graph_of;

pub const SCENARIO_VERSION: u64 = 1;
pub const DEFAULT_MIN_SEPARATION: f64 = 1.0;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Visibility ratio of "challenging" constellations.
pub const CHALLENGING_VR: f64 = 0.75;
/// Visibility ratio of "marginal" constellations.
pub const MARGINAL_VR: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstellationSpec {
    pub n_agents: usize,
    pub visibility: f64,
    pub visibility_ratio: f64,
    pub seed: u64,
    pub min_separation: f64,
}

impl ConstellationSpec {
    pub fn new(n_agents: usize, visibility: f64, visibility_ratio: f64, seed: u64) -> Self {
        Self {
            n_agents,
            visibility,
            visibility_ratio,
            seed,
            min_separation: DEFAULT_MIN_SEPARATION,
        }
    }

    pub fn effective_visibility(&self) -> f64 {
        self.visibility * self.visibility_ratio
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::InvalidSpec("n_agents must be positive".into()));
        }
        if !(self.visibility.is_finite() && self.visibility > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "visibility must be positive, got {}",
                self.visibility
            )));
        }
        if !(self.visibility_ratio > 0.0 && self.visibility_ratio <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "visibility ratio must be in (0, 1], got {}",
                self.visibility_ratio
            )));
        }
        if !(self.min_separation >= 0.0 && self.min_separation < self.effective_visibility()) {
            return Err(Error::InvalidSpec(format!(
                "min_separation {} must be in [0, V_eff = {})",
                self.min_separation,
                self.effective_visibility()
            )));
        }
        Ok(())
    }
}

/// A generated or loaded initial layout together with the spec describing it.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub spec: ConstellationSpec,
    pub state: SwarmState,
}

impl Scenario {
    pub fn generate(spec: ConstellationSpec) -> Result<Self> {
        Ok(Self {
            spec,
            state: generate(&spec)?,
        })
    }

    /// Whether the layout is connected under the effective visibility.
    pub fn is_connected_under_effective_visibility(&self) -> bool {
        graph_of(&self.state.positions, self.spec.effective_visibility()).is_connected()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save(&self.state, &self.spec, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (state, spec) = load(path)?;
        Ok(Self { spec, state })
    }
}

pub fn generate(spec: &ConstellationSpec) -> Result<SwarmState> {
    spec.validate()?;
    let v_eff = spec.effective_visibility();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut placed = vec![Position::new(0.0, 0.0)];
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);

    for agent in 1..spec.n_agents {
        let mut accepted = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let candidate = Position::new(
                rng.random_range((min_x - v_eff)..(max_x + v_eff)),
                rng.random_range((min_y - v_eff)..(max_y + v_eff)),
            );
            let mut linked = false;
            let mut clear = true;
            for q in &placed {
                let d = distance(candidate, *q);
                linked |= d <= v_eff;
                if d < spec.min_separation {
                    clear = false;
                    break;
                }
            }
            if linked && clear {
                accepted = Some(candidate);
                break;
            }
        }
        let p = accepted.ok_or(Error::Placement {
            agent,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
        placed.push(p);
    }
    SwarmState::new(placed)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u64,
    n: usize,
    #[serde(rename = "V")]
    visibility: f64,
    #[serde(rename = "VR")]
    visibility_ratio: f64,
    seed: u64,
    min_separation: f64,
    positions: Vec<[f64; 2]>,
}

/// Serializes a scenario as a single JSON document.
pub fn to_json(s: &SwarmState, spec: &ConstellationSpec) -> String {
    let file = ScenarioFile {
        version: SCENARIO_VERSION,
        n: s.len(),
        visibility: spec.visibility,
        visibility_ratio: spec.visibility_ratio,
        seed: spec.seed,
        min_separation: spec.min_separation,
        positions: s.positions.iter().map(|p| [p.x, p.y]).collect(),
    };
    serde_json::to_string(&file).expect("scenario serialization cannot fail")
}

pub fn from_json(text: &str) -> Result<(SwarmState, ConstellationSpec)> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::ScenarioParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value.get("version") {
        None => {
            return Err(Error::ScenarioField {
                field: "version",
                message: "missing".into(),
            })
        }
        Some(v) => match v.as_u64() {
            Some(SCENARIO_VERSION) => {}
            Some(found) => {
                return Err(Error::ScenarioVersion {
                    found,
                    expected: SCENARIO_VERSION,
                })
            }
            None => {
                return Err(Error::ScenarioField {
                    field: "version",
                    message: format!("expected an unsigned integer, got {v}"),
                })
            }
        },
    }
    let file: ScenarioFile = serde_json::from_value(value).map_err(|e| Error::ScenarioParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.positions.len() != file.n {
        return Err(Error::ScenarioField {
            field: "positions",
            message: format!("{} positions listed but n = {}", file.positions.len(), file.n),
        });
    }
    let spec = ConstellationSpec {
        n_agents: file.n,
        visibility: file.visibility,
        visibility_ratio: file.visibility_ratio,
        seed: file.seed,
        min_separation: file.min_separation,
    };
    spec.validate().map_err(|e| Error::ScenarioField {
        field: "spec",
        message: e.to_string(),
    })?;
    let state = SwarmState::new(
        file.positions
            .iter()
            .map(|&[x, y]| Position::new(x, y))
            .collect(),
    )
    .map_err(|e| Error::ScenarioField {
        field: "positions",
        message: e.to_string(),
    })?;
    Ok((state, spec))
}

pub fn save(s: &SwarmState, spec: &ConstellationSpec, path: impl AsRef<Path>) -> Result<()> {
    let mut text = to_json(s, spec);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(SwarmState, ConstellationSpec)> {
    from_json(&fs::read_to_string(path)?)
}

/// Where episodes get their initial constellations from.
#[derive(Clone, Debug)]
pub enum ScenarioSource {
    /// Scenario `k` is generated from `template` with seed `template.seed + k`.
    Generated(ConstellationSpec),
    /// A fixed list, cycled in order.
    Fixed(Vec<Scenario>),
}

impl ScenarioSource {
    pub fn scenario(&self, k: u64) -> Result<Scenario> {
        match self {
            Self::Generated(template) => {
                Scenario::generate(template.with_seed(template.seed.wrapping_add(k)))
            }
            Self::Fixed(list) => {
                if list.is_empty() {
                    return Err(Error::Contract("empty scenario list".into()));
                }
                Ok(list[(k % list.len() as u64) as usize].clone())
            }
        }
    }

    /// Generates `count` consecutive scenarios.
    pub fn take(&self, count: usize) -> Result<Vec<Scenario>> {
        (0..count as u64).map(|k| self.scenario(k)).collect()
    }
}
