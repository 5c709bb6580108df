//! Straight-road synthetic scene sequences.
//!
//! Each sequence is a road segment laid along a random azimuth. Coordinates are
//! built in a road frame (`u` along the road, `v` to its left) and then mapped
//! into the map frame. Static layers are sampled on a lattice whose pitch
//! equals the cell size, so every grid cell a layer overlaps receives one
//! point. Dynamic agents move at constant velocity and wrap around the road
//! ends, which keeps their density uniform.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotate, EgoPose};
use crate::masking::derive_seed;
use crate::scene::{Scene, SceneObject};
use crate::taxonomy::{Kind, Taxonomy, DEFAULT_OCCURRENCES, EGO_LABEL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    ConfigError(String),
}

const STOP_LABELS: [&str; 4] = [
    "turn stop area",
    "traffic light stop area",
    "pedestrian crossing stop area",
    "stop sign area",
];

/// Rear/front margin around the ego vehicle that must stay on the road.
const VIEW_MARGIN_M: f64 = 40.0;
/// Longitudinal half-extent of a pedestrian crossing.
const CROSSING_HALF_M: f64 = 2.0;
const STOP_AREA_LEN_M: f64 = 6.0;
const CAR_PARK_LEN_M: f64 = 20.0;
const CAR_PARK_DEPTH_M: f64 = 6.0;
const BASE_TIMESTAMP_US: i64 = 1_500_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub sequences: usize,
    pub frames_per_sequence: usize,
    pub frame_interval_s: f64,
    pub world_length_m: f64,
    pub lane_count: usize,
    pub lane_width_m: f64,
    pub walkway_width_m: f64,
    pub crossing_spacing_m: f64,
    /// Lattice pitch for static layers; match it to the grid cell size.
    pub sample_spacing_m: f64,
    pub ego_speed_mps: (f64, f64),
    /// Relative weights per label. Dynamic labels drive agent spawning,
    /// stop-area and car-park weights pick static layer variants.
    pub label_weights: BTreeMap<String, f64>,
    /// Agents per 100 m of road. `None` calibrates the density so that
    /// dynamic occurrences match their weight relative to `walkway`.
    pub agents_per_100m: Option<f64>,
    pub countries: Vec<String>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sequences: 25,
            frames_per_sequence: 40,
            frame_interval_s: 0.5,
            world_length_m: 1000.0,
            lane_count: 2,
            lane_width_m: 3.5,
            walkway_width_m: 4.0,
            crossing_spacing_m: 120.0,
            sample_spacing_m: 2.0,
            ego_speed_mps: (6.0, 12.0),
            label_weights: DEFAULT_OCCURRENCES
                .iter()
                .map(|(label, _, n)| (label.to_string(), *n as f64))
                .collect(),
            agents_per_100m: None,
            countries: alloc::vec!["US".to_string(), "SG".to_string()],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub id: String,
    pub scenes: Vec<Scene>,
}

fn config_error(msg: impl Into<String>) -> SynthError {
    SynthError::ConfigError(msg.into())
}

impl SynthConfig {
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), SynthError> {
        let positive = [
            ("frame_interval_s", self.frame_interval_s),
            ("world_length_m", self.world_length_m),
            ("lane_width_m", self.lane_width_m),
            ("walkway_width_m", self.walkway_width_m),
            ("crossing_spacing_m", self.crossing_spacing_m),
            ("sample_spacing_m", self.sample_spacing_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_error(format!("{name} must be positive, got {v}")));
            }
        }
        if self.lane_count == 0 || self.frames_per_sequence == 0 {
            return Err(config_error("lane_count and frames_per_sequence must be at least 1"));
        }
        let (lo, hi) = self.ego_speed_mps;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(config_error(format!("ego speed range ({lo}, {hi}) is invalid")));
        }
        if self.world_length_m < self.travel_m(hi) + 2.0 * VIEW_MARGIN_M {
            return Err(config_error("world is too short for the ego trajectory"));
        }
        for (label, w) in &self.label_weights {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(config_error(format!("weight for {label:?} must be non-negative")));
            }
            if !taxonomy.contains(label) {
                return Err(config_error(format!("weighted label {label:?} is not in the taxonomy")));
            }
        }
        if let Some(d) = self.agents_per_100m {
            if !(d.is_finite() && d >= 0.0) {
                return Err(config_error("agents_per_100m must be non-negative"));
            }
        }
        if self.countries.is_empty() {
            return Err(config_error("at least one country is required"));
        }
        if let Some(c) = self
            .countries
            .iter()
            .find(|c| c.is_empty() || c.starts_with('<') || c.chars().any(char::is_whitespace))
        {
            return Err(config_error(format!("country {c:?} is not a plain word")));
        }
        Ok(())
    }

    fn travel_m(&self, speed: f64) -> f64 {
        speed * self.frame_interval_s * (self.frames_per_sequence - 1) as f64
    }

    fn weight(&self, label: &str) -> f64 {
        self.label_weights.get(label).copied().unwrap_or(0.0)
    }

    fn road_half(&self) -> f64 {
        self.lane_count as f64 * self.lane_width_m / 2.0
    }

    /// Lattice rows (lateral samples) that fall inside the walkway bands.
    fn walkway_samples_per_column(&self) -> usize {
        let r = self.road_half();
        lattice(-(r + self.walkway_width_m), r + self.walkway_width_m, self.sample_spacing_m)
            .filter(|v| libm::fabs(*v) >= r)
            .count()
    }
}

/// Lattice coordinates `(k + 0.5) * step` inside `[lo, hi)`.
fn lattice(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let first = libm::floor(lo / step) as i64;
    let last = libm::ceil(hi / step) as i64;
    (first..=last)
        .map(move |k| (k as f64 + 0.5) * step)
        .filter(move |x| *x >= lo && *x < hi)
}

fn pick<'a, R: Rng>(rng: &mut R, options: &[(&'a str, f64)]) -> Option<&'a str> {
    let total: f64 = options.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return None;
    }
    let mut x = rng.random::<f64>() * total;
    for (label, w) in options {
        if x < *w {
            return Some(label);
        }
        x -= w;
    }
    options.iter().rev().find(|(_, w)| *w > 0.0).map(|(l, _)| *l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Vehicle,
    Cyclist,
    Pedestrian,
    Fixture,
}

fn role(label: &str) -> Role {
    match label {
        "car" | "truck" | "bus rigid" | "trailer" | "emergency police" | "construction vehicle" => {
            Role::Vehicle
        }
        "bicycle" | "motorcycle" => Role::Cyclist,
        "adult" | "child" | "construction worker" | "police officer" | "stroller" | "animal" => {
            Role::Pedestrian
        }
        _ => Role::Fixture,
    }
}

#[derive(Debug, Clone)]
struct Agent {
    label: String,
    u0: f64,
    v: f64,
    speed: f64,
}

/// A static layer region in road coordinates, `u` and `v` half-open.
#[derive(Debug, Clone)]
struct Patch {
    label: String,
    u: (f64, f64),
    v: (f64, f64),
}

struct World {
    azimuth_deg: f64,
    origin: (f64, f64),
    lane_label: bool,
    walkway_label: bool,
    patches: Vec<Patch>,
    agents: Vec<Agent>,
    ego_u0: f64,
    ego_v: f64,
    ego_speed: f64,
    country: String,
}

impl World {
    fn to_map(&self, u: f64, v: f64) -> (f64, f64) {
        let (dx, dy) = rotate(u, v, self.azimuth_deg);
        (self.origin.0 + dx, self.origin.1 + dy)
    }
}

fn build_world<R: Rng>(cfg: &SynthConfig, taxonomy: &Taxonomy, rng: &mut R) -> World {
    let r = cfg.road_half();
    let outer = r + cfg.walkway_width_m;
    let length = cfg.world_length_m;
    let has = |label: &str| taxonomy.contains(label);
    let mut patches = Vec::new();

    let stop_options: Vec<(&str, f64)> = STOP_LABELS
        .iter()
        .filter(|l| has(l))
        .map(|l| (*l, cfg.weight(l)))
        .collect();
    let (w_int, w_pc) = (cfg.weight("intersection"), cfg.weight("pedestrian crossing"));
    let p_intersection = if w_int + w_pc > 0.0 { w_int / (w_int + w_pc) } else { 0.0 };
    let w_walk = cfg.weight("walkway");
    let p_car_park = if w_walk > 0.0 { (2.0 * cfg.weight("car park area") / w_walk).min(1.0) } else { 0.5 };

    let sites = libm::floor(length / cfg.crossing_spacing_m) as usize;
    for c in 0..sites {
        let uc = (c as f64 + 0.5) * cfg.crossing_spacing_m;
        let intersection = rng.random::<f64>() < p_intersection;
        if has("pedestrian crossing") {
            patches.push(Patch {
                label: "pedestrian crossing".into(),
                u: (uc - CROSSING_HALF_M, uc + CROSSING_HALF_M),
                v: (-r, r),
            });
        }
        let half = if intersection {
            if has("intersection") {
                patches.push(Patch {
                    label: "intersection".into(),
                    u: (uc - outer, uc + outer),
                    v: (-outer, outer),
                });
            }
            outer
        } else {
            CROSSING_HALF_M
        };
        // approach lanes: right-hand side heads +u, left-hand side heads -u
        for (u, v) in [
            ((uc - half - STOP_AREA_LEN_M, uc - half), (-r, 0.0)),
            ((uc + half, uc + half + STOP_AREA_LEN_M), (0.0, r)),
        ] {
            if let Some(label) = pick(rng, &stop_options) {
                patches.push(Patch { label: label.into(), u, v });
            }
        }
        if has("car park area") && rng.random::<f64>() < p_car_park {
            let start = uc + half + STOP_AREA_LEN_M + rng.random::<f64>() * 10.0;
            let v = if rng.random::<bool>() {
                (outer, outer + CAR_PARK_DEPTH_M)
            } else {
                (-outer - CAR_PARK_DEPTH_M, -outer)
            };
            patches.push(Patch { label: "car park area".into(), u: (start, start + CAR_PARK_LEN_M), v });
        }
    }

    let dynamic: Vec<(&str, f64)> = taxonomy
        .iter()
        .filter(|(_, name, kind)| *kind == Kind::Dynamic && *name != EGO_LABEL)
        .map(|(_, name, _)| (name, cfg.weight(name)))
        .collect();
    let dyn_total: f64 = dynamic.iter().map(|(_, w)| w).sum();
    let per_100m = match cfg.agents_per_100m {
        Some(d) => d,
        None if w_walk > 0.0 => {
            let walkway_per_m = cfg.walkway_samples_per_column() as f64 / cfg.sample_spacing_m;
            100.0 * walkway_per_m * dyn_total / w_walk
        }
        None => 5.0,
    };
    let expected = if dyn_total > 0.0 { per_100m * length / 100.0 } else { 0.0 };
    // integer part plus a Bernoulli draw for the fraction
    let mut count = libm::floor(expected) as usize;
    if rng.random::<f64>() < expected - libm::floor(expected) {
        count += 1;
    }
    let lanes = lane_centers(cfg);
    let mut agents = Vec::with_capacity(count);
    for _ in 0..count {
        let Some(label) = pick(rng, &dynamic) else { break };
        let u0 = rng.random::<f64>() * length;
        let (v, speed) = match role(label) {
            Role::Vehicle | Role::Cyclist => {
                let v = lanes[rng.random_range(0..lanes.len())];
                let top = if role(label) == Role::Vehicle { 12.0 } else { 6.0 };
                // a quarter of vehicles are parked or queued
                let s = if rng.random::<f64>() < 0.25 { 0.0 } else { rng.random_range(1.0..top) };
                (v, if v > 0.0 { -s } else { s })
            }
            Role::Pedestrian => {
                let v = r + rng.random::<f64>() * cfg.walkway_width_m;
                let v = if rng.random::<bool>() { v } else { -v };
                let s = rng.random::<f64>() * 1.5;
                (v, if rng.random::<bool>() { s } else { -s })
            }
            Role::Fixture => ((rng.random::<f64>() * 2.0 - 1.0) * outer, 0.0),
        };
        agents.push(Agent { label: label.to_string(), u0, v, speed });
    }

    let (lo, hi) = cfg.ego_speed_mps;
    let ego_speed = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let span = length - cfg.travel_m(ego_speed) - 2.0 * VIEW_MARGIN_M;
    let ego_u0 = VIEW_MARGIN_M + rng.random::<f64>() * span.max(0.0);
    let forward: Vec<f64> = lanes.iter().copied().filter(|v| *v <= 0.0).collect();
    let ego_v = forward[rng.random_range(0..forward.len())];

    World {
        azimuth_deg: rng.random::<f64>() * 360.0,
        origin: (rng.random_range(-1000.0..1000.0), rng.random_range(-1000.0..1000.0)),
        lane_label: has("lane"),
        walkway_label: has("walkway"),
        patches,
        agents,
        ego_u0,
        ego_v,
        ego_speed,
        country: cfg.countries[rng.random_range(0..cfg.countries.len())].clone(),
    }
}

fn lane_centers(cfg: &SynthConfig) -> Vec<f64> {
    let r = cfg.road_half();
    (0..cfg.lane_count)
        .map(|k| -r + (k as f64 + 0.5) * cfg.lane_width_m)
        .collect()
}

fn render_frame(cfg: &SynthConfig, world: &World, frame: usize) -> (EgoPose, Vec<SceneObject>) {
    let t = frame as f64 * cfg.frame_interval_s;
    let ego_u = world.ego_u0 + world.ego_speed * t;
    let r = cfg.road_half();
    let outer = r + cfg.walkway_width_m;
    let reach = outer + CAR_PARK_DEPTH_M;
    let step = cfg.sample_spacing_m;
    let mut objects = Vec::new();

    let us: Vec<f64> = lattice(ego_u - VIEW_MARGIN_M, ego_u + VIEW_MARGIN_M, step)
        .filter(|u| (0.0..cfg.world_length_m).contains(u))
        .collect();
    for v in lattice(-reach, reach, step) {
        for &u in &us {
            let mut emit = |label: &str| {
                let (x, y) = world.to_map(u, v);
                let id = format!("map-{}-{}-{}", libm::floor(u / step) as i64, libm::floor(v / step) as i64, objects.len());
                objects.push(SceneObject { id, label: label.to_string(), x, y });
            };
            let av = libm::fabs(v);
            if world.lane_label && av < r {
                emit("lane");
            }
            if world.walkway_label && av >= r && av < outer {
                emit("walkway");
            }
            for p in &world.patches {
                if u >= p.u.0 && u < p.u.1 && v >= p.v.0 && v < p.v.1 {
                    emit(&p.label);
                }
            }
        }
    }

    for (n, a) in world.agents.iter().enumerate() {
        let u = a.u0 + a.speed * t;
        let u = u - libm::floor(u / cfg.world_length_m) * cfg.world_length_m;
        if libm::fabs(u - ego_u) > VIEW_MARGIN_M {
            continue;
        }
        let (x, y) = world.to_map(u, a.v);
        objects.push(SceneObject { id: format!("agent-{n}"), label: a.label.clone(), x, y });
    }

    let (x, y) = world.to_map(ego_u, world.ego_v);
    let pose = EgoPose::new(x, y, world.azimuth_deg).expect("finite pose");
    (pose, objects)
}

/// Generates `config.sequences` sequences. Each sequence draws from its own
/// ChaCha8 stream seeded from the config seed and the sequence index, so the
/// corpus is reproducible and sequences are independent of each other.
pub fn synth_sequences(config: &SynthConfig, taxonomy: &Taxonomy) -> Result<Vec<Sequence>, SynthError> {
    config.validate(taxonomy)?;
    (0..config.sequences).map(|i| Ok(synth_one(config, taxonomy, i))).collect()
}

/// Generates the sequence at `index` alone.
pub fn synth_one(config: &SynthConfig, taxonomy: &Taxonomy, index: usize) -> Sequence {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, index as u64, "synth-sequence"));
    let world = build_world(config, taxonomy, &mut rng);
    let id = format!("seq-{index:04}");
    let frames = config.frames_per_sequence;
    let scene_id = |f: usize| format!("{id}-{f:03}");
    let interval_us = libm::round(config.frame_interval_s * 1e6) as i64;
    let scenes = (0..frames)
        .map(|f| {
            let (ego, objects) = render_frame(config, &world, f);
            Scene {
                scene_id: scene_id(f),
                sequence_id: id.clone(),
                timestamp_us: BASE_TIMESTAMP_US + index as i64 * 1_000_000_000 + f as i64 * interval_us,
                country: world.country.clone(),
                ego,
                objects,
                prev: f.checked_sub(1).map(scene_id),
                next: (f + 1 < frames).then(|| scene_id(f + 1)),
            }
        })
        .collect();
    Sequence { id, scenes }
}
