//! Actions and controllers.
//!
//! The analytical controller implements the smallest-sector gathering rule:
//! an agent finds the smallest circular sector containing all of its
//! neighbor bearings. If the sector spans less than a half turn it moves along
//! the sum of the two unit bearings bounding the sector; otherwise it is
//! surrounded and stays put.
//!
//! The continuous law `v = u_a + u_b` has `|v| <= 2`. It is mapped onto the
//! discrete action space by heading `alpha = atan2(v)` and step fraction
//! `sigma = |v| / 2`, so the engine moves the agent by `sigma * s_max`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::UnitBearing;
use crate::sensing::Observation;

/// Heading `alpha` in `(-pi, pi]` (world frame) and step fraction `sigma` in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub alpha: f64,
    pub sigma: f64,
}

impl Action {
    pub const STAY: Action = Action {
        alpha: 0.0,
        sigma: 0.0,
    };

    /// Brings an arbitrary finite pair into the action space: the heading is
    /// wrapped into `(-pi, pi]` and the step fraction clamped to `[0, 1]`.
    /// Returns `None` when either component is not finite.
    pub fn normalized(alpha: f64, sigma: f64) -> Option<Self> {
        if !alpha.is_finite() || !sigma.is_finite() {
            return None;
        }
        Some(Self {
            alpha: wrap_angle(alpha),
            sigma: sigma.clamp(0.0, 1.0),
        })
    }

    pub fn is_valid(&self) -> bool {
        self.alpha > -PI && self.alpha <= PI && (0.0..=1.0).contains(&self.sigma)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    if w <= -PI {
        w += TAU;
    }
    w
}

/// Smallest sector containing every neighbor bearing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorResult {
    /// Angular span in `[0, 2pi)`.
    pub span: f64,
    /// Angle where the sector starts, sweeping counter-clockwise.
    pub extreme_a: f64,
    /// Angle where the sector ends.
    pub extreme_b: f64,
    /// Indices into the observation of the bearings at `extreme_a` and `extreme_b`.
    pub index_a: usize,
    pub index_b: usize,
}

/// `None` when the observation is empty.
pub fn smallest_sector(o: &Observation) -> Option<SectorResult> {
    if o.is_empty() {
        return None;
    }
    let mut angles: Vec<(f64, usize)> = o
        .bearings
        .iter()
        .enumerate()
        .map(|(i, b)| (b.angle(), i))
        .collect();
    angles.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // Gap k runs from angles[k] counter-clockwise to angles[k + 1] (cyclic).
    let n = angles.len();
    let mut best_gap = f64::NEG_INFINITY;
    let mut best_k = 0;
    for k in 0..n {
        let gap = if k + 1 < n {
            angles[k + 1].0 - angles[k].0
        } else {
            angles[0].0 + TAU - angles[k].0
        };
        if gap > best_gap {
            best_gap = gap;
            best_k = k;
        }
    }
    let (start, start_idx) = angles[(best_k + 1) % n];
    let (end, end_idx) = angles[best_k];
    let span = (TAU - best_gap).max(0.0);
    Some(SectorResult {
        span: if span >= TAU { 0.0 } else { span },
        extreme_a: start,
        extreme_b: end,
        index_a: start_idx,
        index_b: end_idx,
    })
}

pub fn analytical_action(o: &Observation) -> Action {
    let Some(sector) = smallest_sector(o) else {
        return Action::STAY;
    };
    if sector.span >= PI {
        return Action::STAY;
    }
    let a = o.bearings[sector.index_a];
    let b = o.bearings[sector.index_b];
    let (vx, vy) = (a.ux + b.ux, a.uy + b.uy);
    let norm = vx.hypot(vy);
    if norm == 0.0 {
        return Action::STAY;
    }
    Action::normalized(vy.atan2(vx), norm / 2.0).unwrap_or(Action::STAY)
}

pub fn stationary_action() -> Action {
    Action::STAY
}

/// Uniform heading in `(-pi, pi]` and uniform step fraction in `[0, 1)`.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    let u: f64 = rng.random();
    let sigma: f64 = rng.random();
    Action {
        alpha: PI - TAU * u,
        sigma,
    }
}

pub type ControllerError = Box<dyn std::error::Error + Send + Sync>;

/// A swarm controller maps the per-agent observations of one step to one
/// action per agent. Decentralized controllers must compute action `i` from
/// `observations[i]` only.
pub trait Controller {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError>;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError> {
        (**self).act(observations)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Analytical;

impl Controller for Analytical {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError> {
        Ok(observations.iter().map(analytical_action).collect())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stationary;

impl Controller for Stationary {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError> {
        Ok(vec![Action::STAY; observations.len()])
    }
}

/// Uniformly random actions from a seeded generator; agents draw in id order.
#[derive(Clone, Debug)]
pub struct RandomController<R> {
    rng: R,
}

impl<R: Rng> RandomController<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> Controller for RandomController<R> {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError> {
        Ok(observations
            .iter()
            .map(|_| random_action(&mut self.rng))
            .collect())
    }
}

/// Applies the same per-agent function to every observation.
pub struct PerAgent<F>(pub F);

impl<F: FnMut(&Observation) -> Action> Controller for PerAgent<F> {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError> {
        Ok(observations.iter().map(&mut self.0).collect())
    }
}

/// Bearing at `degrees`, for tests and examples.
pub fn bearing_deg(degrees: f64) -> UnitBearing {
    UnitBearing::from_angle(degrees.to_radians())
}
