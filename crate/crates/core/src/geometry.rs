//! Planar (SE(2)) pose math between the map frame and the ego frame.
//!
//! Map frame: `x` east, `y` north, meters. Headings are degrees counter-clockwise
//! from east. Ego frame: `lon` forward along the heading, `lat` to the left.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate or heading")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoPose {
    pub x: f64,
    pub y: f64,
    /// Degrees counter-clockwise from map east, in `[0, 360)`.
    pub heading_deg: f64,
}

impl EgoPose {
    /// Builds a pose, normalizing the heading into `[0, 360)`.
    pub fn new(x: f64, y: f64, heading_deg: f64) -> Result<Self, GeometryError> {
        if !(x.is_finite() && y.is_finite() && heading_deg.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(EgoPose { x, y, heading_deg: normalize_heading(heading_deg) })
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.heading_deg.is_finite()
            && (0.0..360.0).contains(&self.heading_deg)
    }
}

/// A point in the ego frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EgoPoint {
    /// Leftward offset, meters.
    pub lat: f64,
    /// Forward offset, meters.
    pub lon: f64,
}

impl EgoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        EgoPoint { lat, lon }
    }
}

/// Wraps an angle into `[0, 360)`.
pub fn normalize_heading(deg: f64) -> f64 {
    let r = libm::fmod(deg, 360.0);
    let r = if r < 0.0 { r + 360.0 } else { r };
    // fmod of a tiny negative value can round up to exactly 360
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into `(-180, 180]`.
pub fn normalize_diff(deg: f64) -> f64 {
    let r = normalize_heading(deg);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = normalize_heading(deg);
    let quadrant = libm::floor(r / 90.0);
    let rest = (r - quadrant * 90.0).to_radians();
    let (s, c) = if rest == 0.0 { (0.0, 1.0) } else { libm::sincos(rest) };
    match quadrant as u8 {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Rotates a vector counter-clockwise by `deg`.
pub fn rotate(x: f64, y: f64, deg: f64) -> (f64, f64) {
    let (s, c) = sin_cos_deg(deg);
    (x * c - y * s, x * s + y * c)
}

/// Maps a map-frame point into the ego frame of `ego`: translate by the negated
/// ego position, then rotate by the negated heading.
pub fn to_ego_frame(point: (f64, f64), ego: &EgoPose) -> EgoPoint {
    let (dx, dy) = (point.0 - ego.x, point.1 - ego.y);
    let (lon, lat) = rotate(dx, dy, -ego.heading_deg);
    EgoPoint { lat, lon }
}

/// Inverse of [`to_ego_frame`].
pub fn to_map_frame(p: EgoPoint, ego: &EgoPose) -> (f64, f64) {
    let (dx, dy) = rotate(p.lon, p.lat, ego.heading_deg);
    (ego.x + dx, ego.y + dy)
}
