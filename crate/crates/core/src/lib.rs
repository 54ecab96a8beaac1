//! Bearing-only multi-agent gathering environment.
//!
//! Agents with limited visibility range sense only the direction to their
//! neighbors. This crate holds everything needed to simulate them:
//!
//! - [`geometry`]: positions, distances, unit bearings, swarm statistics.
//! - [`visibility`]: neighbor sets, visibility graph and connectivity.
//! - [`constellation`]: seeded generation of connected initial layouts and
//!   the scenario file format.
//! - [`sensing`]: bearing observations and their 75x75 binary rasterization.
//! - [`control`]: the smallest-sector gathering rule and reference controllers.
//! - [`reward`]: local neighbor-loss reward and the global bounding-radius reward.
//! - [`env`]: the synchronous episode engine.

pub mod constellation;
pub mod control;
pub mod env;
pub mod error;
pub mod geometry;
pub mod reward;
pub mod sensing;
pub mod visibility;

pub use constellation::{ConstellationSpec, Scenario, ScenarioSource};
pub use control::{Action, Controller, SectorResult};
pub use env::{Env, EnvConfig, EpisodeResult, Outcome, StepRecord};
pub use error::{Error, Result};
pub use geometry::{Position, SwarmState, UnitBearing};
pub use reward::{RewardConfig, StepReward};
pub use sensing::{Observation, ObservationImage};
pub use visibility::{ComponentPartition, VisibilityGraph};
