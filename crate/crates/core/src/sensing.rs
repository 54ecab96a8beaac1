//! Bearing-only observations and their binary image encoding.
//!
//! Every visible neighbor is drawn as a 3x3 block on a ring of radius
//! [`RING_RADIUS`] pixels around the observer, who sits at the center pixel
//! of a [`IMAGE_SIZE`]-square grid. Distance is not sensed, so all blocks lie
//! on the same ring. Row 0 is the top of the image and world `+y` points up.
//! Agents share a compass: the image frame is aligned with the world frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bearing, distance, Position, SwarmState, UnitBearing};

pub const IMAGE_SIZE: usize = 75;
pub const CENTER: usize = IMAGE_SIZE / 2;
/// Largest radius that keeps every 3x3 block inside the grid.
pub const RING_RADIUS: f64 = 35.0;
pub const PACKED_ROW_BYTES: usize = IMAGE_SIZE.div_ceil(8);
pub const PACKED_LEN: usize = PACKED_ROW_BYTES * IMAGE_SIZE;

/// Multiset of unit bearings toward the visible neighbors of one agent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub bearings: Vec<UnitBearing>,
}

impl Observation {
    pub fn new(bearings: Vec<UnitBearing>) -> Self {
        Self { bearings }
    }

    pub fn len(&self) -> usize {
        self.bearings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bearings.is_empty()
    }

    pub fn rasterize(&self) -> ObservationImage {
        rasterize(self)
    }
}

/// Observation of agent `i`. A neighbor coincident with `i` has no bearing
/// and is reported as an error.
pub fn observe(s: &SwarmState, i: usize, visibility: f64) -> Result<Observation> {
    let (obs, dropped) = observe_positions(&s.positions, i, visibility);
    match dropped.first() {
        Some(&j) => Err(Error::DegenerateBearing { from: i, to: j }),
        None => Ok(obs),
    }
}

/// Like [`observe`], but coincident neighbors are skipped and returned
/// separately instead of failing.
pub fn observe_positions(
    positions: &[Position],
    i: usize,
    visibility: f64,
) -> (Observation, Vec<usize>) {
    let pi = positions[i];
    let mut bearings = Vec::new();
    let mut dropped = Vec::new();
    for (j, pj) in positions.iter().enumerate() {
        if j == i || distance(pi, *pj) > visibility {
            continue;
        }
        match bearing(pi, *pj) {
            Some(b) => bearings.push(b),
            None => dropped.push(j),
        }
    }
    (Observation { bearings }, dropped)
}

/// Pixel `(row, col)` at the center of the block drawn for bearing `b`.
pub fn project(b: UnitBearing) -> (usize, usize) {
    // f64::round rounds half away from zero on every platform.
    let dr = (RING_RADIUS * b.uy).round() as i64;
    let dc = (RING_RADIUS * b.ux).round() as i64;
    let row = (CENTER as i64 - dr).clamp(1, IMAGE_SIZE as i64 - 2);
    let col = (CENTER as i64 + dc).clamp(1, IMAGE_SIZE as i64 - 2);
    (row as usize, col as usize)
}

pub fn rasterize(o: &Observation) -> ObservationImage {
    let mut img = ObservationImage::blank();
    for b in &o.bearings {
        let (r, c) = project(*b);
        for row in r - 1..=r + 1 {
            for col in c - 1..=c + 1 {
                img.set(row, col, true);
            }
        }
    }
    img
}

/// 75x75 binary image, row-major, one byte (0 or 1) per pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ObservationImage {
    pixels: Box<[u8]>,
}

impl ObservationImage {
    pub fn blank() -> Self {
        Self {
            pixels: vec![0u8; IMAGE_SIZE * IMAGE_SIZE].into_boxed_slice(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * IMAGE_SIZE + col] != 0
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.pixels[row * IMAGE_SIZE + col] = on as u8;
    }

    pub fn popcount(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    /// Pixels as 0/1 bytes, row-major.
    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    /// Writes the pixels as `0.0` / `1.0` into `out` (length 75*75).
    pub fn write_reals<T: From<u8>>(&self, out: &mut [T]) {
        assert_eq!(out.len(), self.pixels.len());
        for (o, &p) in out.iter_mut().zip(self.pixels.iter()) {
            *o = T::from(p);
        }
    }

    /// Packs into 10 bytes per row, most significant bit first, trailing bits zero.
    pub fn pack(&self) -> Vec<u8> {
        let mut out = vec![0u8; PACKED_LEN];
        for row in 0..IMAGE_SIZE {
            for col in 0..IMAGE_SIZE {
                if self.get(row, col) {
                    out[row * PACKED_ROW_BYTES + col / 8] |= 0x80 >> (col % 8);
                }
            }
        }
        out
    }

    pub fn unpack(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != PACKED_LEN {
            return Err(Error::Contract(format!(
                "packed image must be {PACKED_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let mut img = Self::blank();
        for row in 0..IMAGE_SIZE {
            for col in 0..IMAGE_SIZE {
                let on = bytes[row * PACKED_ROW_BYTES + col / 8] & (0x80 >> (col % 8)) != 0;
                img.set(row, col, on);
            }
        }
        Ok(img)
    }

    /// Image rotated a quarter turn counter-clockwise.
    pub fn rotate_quarter(&self) -> Self {
        let mut out = Self::blank();
        for row in 0..IMAGE_SIZE {
            for col in 0..IMAGE_SIZE {
                if self.get(row, col) {
                    out.set(IMAGE_SIZE - 1 - col, row, true);
                }
            }
        }
        out
    }
}

impl std::fmt::Debug for ObservationImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ObservationImage ({} set)", self.popcount())?;
        for row in 0..IMAGE_SIZE {
            let line: String = (0..IMAGE_SIZE)
                .map(|c| if self.get(row, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
