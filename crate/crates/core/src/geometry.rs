//! Planar positions, bearings and swarm-level statistics.
//!
//! World units are abstract; everything is `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// Positions of all agents at step `t`. The index of a position is the agent id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub positions: Vec<Position>,
    pub t: u64,
}

impl SwarmState {
    pub fn new(positions: Vec<Position>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Contract("a swarm needs at least one agent".into()));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::Contract(format!("agent {i} has a non-finite position")));
        }
        Ok(Self { positions, t: 0 })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Unit vector pointing from one agent toward another.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitBearing {
    pub ux: f64,
    pub uy: f64,
}

impl UnitBearing {
    /// Bearing at `angle` radians, counter-clockwise from the +x axis.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { ux: c, uy: s }
    }

    /// Angle in `[0, 2pi)`.
    pub fn angle(&self) -> f64 {
        let a = self.uy.atan2(self.ux);
        if a < 0.0 {
            let wrapped = a + std::f64::consts::TAU;
            // -tiny + 2pi can round up to exactly 2pi
            if wrapped >= std::f64::consts::TAU {
                0.0
            } else {
                wrapped
            }
        } else {
            a
        }
    }

    /// Rotates counter-clockwise by a quarter turn. Exact in floating point.
    pub fn rotate_quarter(&self) -> Self {
        Self {
            ux: -self.uy,
            uy: self.ux,
        }
    }
}

pub fn distance(a: Position, b: Position) -> f64 {
    (b.x - a.x).hypot(b.y - a.y)
}

/// Unit bearing from `from` to `to`. Coincident points have no bearing.
pub fn bearing(from: Position, to: Position) -> Option<UnitBearing> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let d = dx.hypot(dy);
    if d > 0.0 {
        Some(UnitBearing {
            ux: dx / d,
            uy: dy / d,
        })
    } else {
        None
    }
}

/// Arithmetic mean of the given positions. Panics on an empty slice.
pub fn centroid(points: &[Position]) -> Position {
    assert!(!points.is_empty(), "centroid of an empty point set");
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Position::new(sx / n, sy / n)
}

/// Maximum distance from the centroid of `points`.
pub fn enclosing_radius(points: &[Position]) -> f64 {
    let c = centroid(points);
    points
        .iter()
        .map(|p| distance(*p, c))
        .fold(0.0, f64::max)
}

pub fn swarm_center(s: &SwarmState) -> Position {
    centroid(&s.positions)
}

/// Largest distance of any agent from the swarm center.
pub fn bounding_radius(s: &SwarmState) -> f64 {
    enclosing_radius(&s.positions)
}
