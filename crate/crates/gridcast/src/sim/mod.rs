//! Synthetic street scenes and their conversion into measurement-realistic
//! dynamic occupancy grid sequences.
//!
//! A [`Scenario`] is pure geometry and motion: static shapes, actors with
//! waypoint trajectories, and the ego trajectory. The [`engine`] renders it
//! through a first-order evidence filter with optional ray-cast occlusion
//! into [`DogmaFrame`](crate::grid::DogmaFrame) sequences; [`patch`] splices
//! recorded objects into existing sequences.

mod engine;
mod patch;
mod raster;
mod raycast;
pub mod scenarios;

pub use engine::{read_stats_csv, run_simulation, simulate, write_stats_csv, SimConfig, SimOutput, StatsRow};
pub use patch::{extract_patch, inject_patch, read_patch, write_patch, Patch, PatchFrame};
pub use raster::{rasterize_truth, TruthGrid, DYNAMIC_SPEED_EPS};
pub use raycast::{compute_visibility, crossed_cells};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario invalid: {0}")]
    BadScenario(String),
    #[error("sim config invalid: {0}")]
    BadConfig(String),
    #[error("patch does not fit: {0}")]
    BadPatch(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// What an actor is; sets no behavior by itself, only footprint conventions
/// in the scenario builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Vehicle,
    Pedestrian,
}

/// Coarse motion pattern tag; carried for dataset bookkeeping and scenario
/// files, not interpreted by the engine (the waypoints are authoritative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Maneuver {
    Straight,
    Turn,
    Stop,
    Cross,
    WaitThenCross,
}

/// One trajectory support point. Serialized as the 5-array
/// `[time_s, east_m, north_m, heading_rad, speed_mps]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f32, f32, f32, f32, f32)", into = "(f32, f32, f32, f32, f32)")]
pub struct Waypoint {
    pub time: f32,
    pub east: f32,
    pub north: f32,
    pub heading: f32,
    pub speed: f32,
}

impl From<(f32, f32, f32, f32, f32)> for Waypoint {
    fn from(v: (f32, f32, f32, f32, f32)) -> Self {
        Waypoint {
            time: v.0,
            east: v.1,
            north: v.2,
            heading: v.3,
            speed: v.4,
        }
    }
}

impl From<Waypoint> for (f32, f32, f32, f32, f32) {
    fn from(w: Waypoint) -> Self {
        (w.time, w.east, w.north, w.heading, w.speed)
    }
}

/// A moving object with a rectangular footprint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Actor {
    pub kind: ActorKind,
    /// Footprint extent along the heading, meters.
    pub length: f32,
    /// Footprint extent across the heading, meters.
    pub width: f32,
    pub maneuver: Maneuver,
    /// Support points sorted by time; position is interpolated linearly
    /// in between, held constant outside the covered span.
    pub waypoints: Vec<Waypoint>,
}

/// Immobile occupancy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StaticShape {
    Rect {
        center: (f32, f32),
        length: f32,
        width: f32,
        heading: f32,
    },
    Segment {
        a: (f32, f32),
        b: (f32, f32),
        thickness: f32,
    },
}

/// A complete scene description. World coordinates are meters east/north.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Length of the recording in seconds.
    pub duration: f32,
    /// Master seed for the sensor-noise stream.
    pub seed: u64,
    #[serde(default)]
    pub statics: Vec<StaticShape>,
    /// Ego trajectory; the grid stays centered on the ego cell.
    pub ego: Vec<Waypoint>,
    #[serde(default)]
    pub actors: Vec<Actor>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration > 0.0) {
            return Err(SimError::BadScenario(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.ego.is_empty() {
            return Err(SimError::BadScenario("ego trajectory needs at least one waypoint".into()));
        }
        check_waypoints("ego", &self.ego)?;
        for (i, actor) in self.actors.iter().enumerate() {
            if actor.waypoints.is_empty() {
                return Err(SimError::BadScenario(format!("actor {i} has no waypoints")));
            }
            if !(actor.length > 0.0) || !(actor.width > 0.0) {
                return Err(SimError::BadScenario(format!(
                    "actor {i} footprint must be positive, got {}x{}",
                    actor.length, actor.width
                )));
            }
            check_waypoints(&format!("actor {i}"), &actor.waypoints)?;
        }
        for (i, shape) in self.statics.iter().enumerate() {
            let ok = match shape {
                StaticShape::Rect { length, width, .. } => *length > 0.0 && *width > 0.0,
                StaticShape::Segment { thickness, .. } => *thickness > 0.0,
            };
            if !ok {
                return Err(SimError::BadScenario(format!("static shape {i} has a non-positive extent")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<(), SimError> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self, SimError> {
        Scenario::from_toml(&std::fs::read_to_string(path)?)
    }
}

fn check_waypoints(owner: &str, waypoints: &[Waypoint]) -> Result<(), SimError> {
    for pair in waypoints.windows(2) {
        if pair[1].time < pair[0].time {
            return Err(SimError::BadScenario(format!(
                "{owner} waypoints must be sorted by time ({} after {})",
                pair[1].time, pair[0].time
            )));
        }
    }
    Ok(())
}

/// Interpolated state of a trajectory at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub east: f64,
    pub north: f64,
    pub heading: f64,
    /// Velocity from the positional derivative of the trajectory.
    pub vel_east: f64,
    pub vel_north: f64,
}

impl Pose {
    pub fn speed(&self) -> f64 {
        self.vel_east.hypot(self.vel_north)
    }
}

/// Evaluates a waypoint trajectory at time `t`. Position interpolates
/// linearly between support points and holds still outside the covered span;
/// heading takes the shortest arc.
pub fn pose_at(waypoints: &[Waypoint], t: f32) -> Pose {
    assert!(!waypoints.is_empty(), "trajectory needs at least one waypoint");
    let first = waypoints[0];
    let last = waypoints[waypoints.len() - 1];
    if t <= first.time || waypoints.len() == 1 {
        return Pose {
            east: first.east as f64,
            north: first.north as f64,
            heading: first.heading as f64,
            vel_east: 0.0,
            vel_north: 0.0,
        };
    }
    if t >= last.time {
        return Pose {
            east: last.east as f64,
            north: last.north as f64,
            heading: last.heading as f64,
            vel_east: 0.0,
            vel_north: 0.0,
        };
    }
    let seg = waypoints.windows(2).find(|pair| t < pair[1].time).unwrap();
    let (a, b) = (seg[0], seg[1]);
    let dt = (b.time - a.time) as f64;
    if dt <= 0.0 {
        return Pose {
            east: b.east as f64,
            north: b.north as f64,
            heading: b.heading as f64,
            vel_east: 0.0,
            vel_north: 0.0,
        };
    }
    let u = ((t - a.time) as f64 / dt).clamp(0.0, 1.0);
    let de = (b.east - a.east) as f64;
    let dn = (b.north - a.north) as f64;
    let mut dh = (b.heading - a.heading) as f64;
    while dh > std::f64::consts::PI {
        dh -= 2.0 * std::f64::consts::PI;
    }
    while dh < -std::f64::consts::PI {
        dh += 2.0 * std::f64::consts::PI;
    }
    Pose {
        east: a.east as f64 + u * de,
        north: a.north as f64 + u * dn,
        heading: a.heading as f64 + u * dh,
        vel_east: de / dt,
        vel_north: dn / dt,
    }
}
