//! The measurement engine: renders a [`Scenario`] into a frame sequence by
//! running a first-order evidence filter per cell.
//!
//! Every frame, cells the sensor can see move a fraction `evidence_rate` of
//! the way toward their measurement target — `(0.9, 0.0)` mass for occupied
//! cells, `(0.0, 0.9)` for free ones — and occupied cells blend in a noisy
//! velocity measurement. Hidden cells decay toward ignorance with
//! `forget_rate`. Velocity variance interpolates from `var_prior` down to the
//! measurement noise floor as a cell's convergence grows, so fresh evidence
//! is marked uncertain and long-observed cells are trusted. Cells the sensor
//! has never seen keep masses at exactly zero.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::grid::{DogmaFrame, GridSpec, DEFAULT_VAR_PRIOR};

use super::raster::{rasterize_truth, TruthGrid};
use super::raycast::compute_visibility;
use super::{pose_at, Scenario, SimError};

/// Mass evidence a visible occupied cell converges to.
const OCCUPIED_TARGET: (f64, f64) = (0.9, 0.0);
/// Mass evidence a visible free cell converges to.
const FREE_TARGET: (f64, f64) = (0.0, 0.9);

/// Sensor and filter parameters of the measurement engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: GridSpec,
    /// Fraction of the gap between current evidence and the measurement
    /// target closed per observed frame, in (0, 1].
    pub evidence_rate: f32,
    /// Per-frame fraction of evidence, convergence and velocity lost on
    /// cells the sensor cannot currently see, in [0, 1).
    pub forget_rate: f32,
    /// Velocity variance of a cell with no measurement history, (m/s)^2.
    pub var_prior: f32,
    /// Standard deviation of the zero-mean noise added to observed masses.
    pub mass_noise: f32,
    /// Standard deviation of velocity measurement noise, m/s.
    pub vel_noise: f32,
    /// Sensor mount point relative to the ego cell center, meters east/north.
    pub sensor_offset: (f32, f32),
    /// When false, occlusion is ignored and every cell is visible.
    pub occlusion: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid: GridSpec::default(),
            evidence_rate: 0.5,
            forget_rate: 0.05,
            var_prior: DEFAULT_VAR_PRIOR,
            mass_noise: 0.02,
            vel_noise: 0.2,
            sensor_offset: (0.0, 0.0),
            occlusion: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.grid.validate()?;
        if !(self.evidence_rate > 0.0 && self.evidence_rate <= 1.0) {
            return Err(SimError::BadConfig(format!(
                "evidence_rate must be in (0, 1], got {}",
                self.evidence_rate
            )));
        }
        if !(self.forget_rate >= 0.0 && self.forget_rate < 1.0) {
            return Err(SimError::BadConfig(format!(
                "forget_rate must be in [0, 1), got {}",
                self.forget_rate
            )));
        }
        if !(self.var_prior >= 0.0) {
            return Err(SimError::BadConfig(format!("var_prior must be non-negative, got {}", self.var_prior)));
        }
        if !(self.mass_noise >= 0.0) || !(self.vel_noise >= 0.0) {
            return Err(SimError::BadConfig(format!(
                "noise levels must be non-negative, got mass {} velocity {}",
                self.mass_noise, self.vel_noise
            )));
        }
        Ok(())
    }
}

/// Per-frame scene statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub frame: usize,
    pub time_s: f64,
    /// Fraction of grid cells covered by an actor in motion.
    pub dynamic_fraction: f64,
    /// Fraction of grid cells the sensor can see.
    pub visible_fraction: f64,
}

/// Frames and statistics of one simulated recording.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub frames: Vec<DogmaFrame>,
    pub stats: Vec<StatsRow>,
}

/// Filter state of one cell, kept in f64 between frames.
#[derive(Debug, Clone, Copy, Default)]
struct CellFilter {
    m_occ: f64,
    m_free: f64,
    vel_e: f64,
    vel_n: f64,
    /// How much of the velocity prior has been replaced by measurements,
    /// in [0, 1].
    convergence: f64,
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Translates the filter state with the grid origin; vacated cells reset to
/// the never-observed state.
fn shift_state(state: &mut Vec<CellFilter>, spec: &GridSpec, delta: (i32, i32)) {
    let mut next = vec![CellFilter::default(); spec.cells()];
    for y in 0..spec.height {
        for x in 0..spec.width {
            let src_x = x as i64 + delta.0 as i64;
            let src_y = y as i64 + delta.1 as i64;
            if src_x >= 0 && src_y >= 0 && (src_x as usize) < spec.width && (src_y as usize) < spec.height {
                next[spec.index(x, y)] = state[spec.index(src_x as usize, src_y as usize)];
            }
        }
    }
    *state = next;
}

/// Rounds f64 masses to f32 without ever breaking the `m_occ + m_free <= 1`
/// invariant: the free mass is nudged down by single bits if the f32 sum
/// lands above one.
fn sanitize_masses(m_occ: f64, m_free: f64) -> (f32, f32) {
    let mo = m_occ.clamp(0.0, 1.0) as f32;
    let mut mf = m_free.clamp(0.0, 1.0) as f32;
    while mo + mf > 1.0 {
        mf = f32::from_bits(mf.to_bits() - 1);
    }
    (mo, mf)
}

fn state_to_frame(
    state: &[CellFilter],
    spec: &GridSpec,
    timestamp: f64,
    origin: (i32, i32),
    config: &SimConfig,
) -> Result<DogmaFrame, SimError> {
    let n = spec.cells();
    let mut m_occ = Vec::with_capacity(n);
    let mut m_free = Vec::with_capacity(n);
    let mut vel_e = Vec::with_capacity(n);
    let mut vel_n = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    for cell in state {
        let (mo, mf) = sanitize_masses(cell.m_occ, cell.m_free);
        m_occ.push(mo);
        m_free.push(mf);
        vel_e.push(cell.vel_e as f32);
        vel_n.push(cell.vel_n as f32);
        let v = config.var_prior as f64 * (1.0 - cell.convergence)
            + (config.vel_noise as f64).powi(2) * cell.convergence;
        var.push(v as f32);
    }
    let frame = DogmaFrame::from_planes(
        *spec,
        timestamp,
        origin,
        [m_occ, m_free, vel_e, vel_n, var.clone(), var, vec![0.0; n]],
    )?;
    Ok(frame)
}

/// Runs the scenario through the evidence filter, handing every finished
/// frame (plus the scene truth it was measured from) to `on_frame`. The
/// recording spans `round(duration / frame_period) + 1` frames starting at
/// t = 0. Returns the per-frame statistics.
pub fn run_simulation<F>(scenario: &Scenario, config: &SimConfig, mut on_frame: F) -> Result<Vec<StatsRow>, SimError>
where
    F: FnMut(&DogmaFrame, &TruthGrid) -> Result<(), SimError>,
{
    scenario.validate()?;
    config.validate()?;
    let spec = config.grid;
    let n = spec.cells();
    let cw = spec.cell_width as f64;
    let frame_count = (scenario.duration / spec.frame_period).round() as usize + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut state = vec![CellFilter::default(); n];
    let mut origin = (0i32, 0i32);
    let mut stats = Vec::with_capacity(frame_count);

    for frame_idx in 0..frame_count {
        let t = frame_idx as f32 * spec.frame_period;
        let ego = pose_at(&scenario.ego, t);
        let ego_cell = ((ego.east / cw).floor() as i32, (ego.north / cw).floor() as i32);
        let new_origin = (
            ego_cell.0 - (spec.width / 2) as i32,
            ego_cell.1 - (spec.height / 2) as i32,
        );
        if frame_idx == 0 {
            origin = new_origin;
        } else if new_origin != origin {
            shift_state(&mut state, &spec, (new_origin.0 - origin.0, new_origin.1 - origin.1));
            origin = new_origin;
        }

        let truth = rasterize_truth(scenario, t, &spec, origin);
        let visible = if config.occlusion {
            let sensor = (
                (ego_cell.0 - origin.0) as f64 + 0.5 + config.sensor_offset.0 as f64 / cw,
                (ego_cell.1 - origin.1) as f64 + 0.5 + config.sensor_offset.1 as f64 / cw,
            );
            compute_visibility(&truth, sensor, &spec)
        } else {
            vec![true; n]
        };

        let alpha = config.evidence_rate as f64;
        let forget = config.forget_rate as f64;
        for i in 0..n {
            let cell = &mut state[i];
            if visible[i] {
                let (target_occ, target_free) = if truth.occupied[i] { OCCUPIED_TARGET } else { FREE_TARGET };
                cell.m_occ += alpha * (target_occ - cell.m_occ);
                cell.m_free += alpha * (target_free - cell.m_free);
                cell.convergence += alpha * (1.0 - cell.convergence);
                if truth.occupied[i] {
                    let (tv_e, tv_n) = truth.velocity[i];
                    let meas_e = tv_e as f64 + config.vel_noise as f64 * normal(&mut rng);
                    let meas_n = tv_n as f64 + config.vel_noise as f64 * normal(&mut rng);
                    cell.vel_e += alpha * (meas_e - cell.vel_e);
                    cell.vel_n += alpha * (meas_n - cell.vel_n);
                } else {
                    cell.vel_e *= 1.0 - alpha;
                    cell.vel_n *= 1.0 - alpha;
                }
                if config.mass_noise > 0.0 {
                    cell.m_occ += config.mass_noise as f64 * normal(&mut rng);
                    cell.m_free += config.mass_noise as f64 * normal(&mut rng);
                    cell.m_occ = cell.m_occ.clamp(0.0, 1.0);
                    cell.m_free = cell.m_free.clamp(0.0, 1.0);
                    let sum = cell.m_occ + cell.m_free;
                    if sum > 1.0 {
                        cell.m_occ /= sum;
                        cell.m_free /= sum;
                    }
                }
            } else {
                cell.m_occ *= 1.0 - forget;
                cell.m_free *= 1.0 - forget;
                cell.convergence *= 1.0 - forget;
                cell.vel_e *= 1.0 - forget;
                cell.vel_n *= 1.0 - forget;
            }
        }

        let timestamp = frame_idx as f64 * spec.frame_period as f64;
        let frame = state_to_frame(&state, &spec, timestamp, origin, config)?;
        on_frame(&frame, &truth)?;

        let dynamic_cells = truth.dynamic.iter().filter(|&&d| d).count();
        let visible_cells = visible.iter().filter(|&&v| v).count();
        stats.push(StatsRow {
            frame: frame_idx,
            time_s: timestamp,
            dynamic_fraction: dynamic_cells as f64 / n as f64,
            visible_fraction: visible_cells as f64 / n as f64,
        });
    }
    Ok(stats)
}

/// Like [`run_simulation`], collecting all frames in memory.
pub fn simulate(scenario: &Scenario, config: &SimConfig) -> Result<SimOutput, SimError> {
    let mut frames = Vec::new();
    let stats = run_simulation(scenario, config, |frame, _| {
        frames.push(frame.clone());
        Ok(())
    })?;
    Ok(SimOutput { frames, stats })
}

pub fn write_stats_csv(path: &Path, rows: &[StatsRow]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stats_csv(path: &Path) -> Result<Vec<StatsRow>, SimError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().collect::<Result<Vec<_>, _>>().map_err(Into::into)
}
