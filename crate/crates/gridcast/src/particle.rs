//! Constant-velocity Monte-Carlo baseline predictor.
//!
//! The baseline reads a single grid frame, picks out the cells that look
//! like confidently moving objects, fills them with particles drawn from
//! each cell's velocity distribution, lets every particle fly in a straight
//! line, and histograms the swarm back onto the grid at each prediction
//! horizon. No learning, no interaction between objects, no map awareness:
//! whatever weaknesses the learned predictor has, this is the bar it has to
//! clear.
//!
//! A cell qualifies as dynamic when all three hold:
//!   occupancy `P_O > 0.5`, speed above [`ParticleConfig::speed_threshold`],
//!   and velocity variance below [`ParticleConfig::variance_threshold`]
//!   (summed over both axes, or per axis with
//!   [`ParticleConfig::per_axis_variance`]).
//! The variance gate matters: freshly observed cells still carry the prior
//! variance, and shooting particles along a velocity the filter has not
//! converged on yet sprays them everywhere.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::binio;
use crate::grid::{occupancy_probability, DogmaFrame};

#[derive(Debug, Error)]
pub enum ParticleError {
    #[error("bad particle config: {0}")]
    BadConfig(String),

    #[error("bad count grid: {0}")]
    BadGrid(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Swarm size, gating thresholds and prediction horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleConfig {
    /// Total particles distributed over all dynamic cells.
    pub particle_count: usize,
    /// Minimum cell speed (m/s) to count as moving.
    pub speed_threshold: f64,
    /// Maximum velocity variance (m^2/s^2) to count as converged.
    pub variance_threshold: f64,
    /// Gate each axis against the threshold instead of their sum.
    pub per_axis_variance: bool,
    /// Prediction horizons in seconds, each positive.
    pub horizons: Vec<f32>,
    pub seed: u64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        ParticleConfig {
            particle_count: 900_000,
            speed_threshold: 0.7,
            variance_threshold: 3.0,
            per_axis_variance: false,
            horizons: (1..=6).map(|k| k as f32 * 0.5).collect(),
            seed: 0,
        }
    }
}

impl ParticleConfig {
    pub fn validate(&self) -> Result<(), ParticleError> {
        if self.particle_count == 0 {
            return Err(ParticleError::BadConfig(
                "particle count must be positive".to_string(),
            ));
        }
        if self.speed_threshold < 0.0 || self.variance_threshold < 0.0 {
            return Err(ParticleError::BadConfig(format!(
                "thresholds must be non-negative, got speed {} variance {}",
                self.speed_threshold, self.variance_threshold
            )));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|&h| !(h > 0.0)) {
            return Err(ParticleError::BadConfig(format!(
                "horizons must be non-empty and positive, got {:?}",
                self.horizons
            )));
        }
        Ok(())
    }
}

/// Particle histogram for one horizon, in the frame of the input grid (the
/// baseline does not move the ego).
#[derive(Debug, Clone, PartialEq)]
pub struct CountGrid {
    pub width: usize,
    pub height: usize,
    pub ego_offset: (i32, i32),
    /// Seconds ahead of the input frame.
    pub horizon: f32,
    /// Particles that landed in each cell, row-major like the grid planes.
    pub counts: Vec<u32>,
}

impl CountGrid {
    pub fn zeros(width: usize, height: usize, ego_offset: (i32, i32), horizon: f32) -> Self {
        CountGrid {
            width,
            height,
            ego_offset,
            horizon,
            counts: vec![0; width * height],
        }
    }

    pub fn validate(&self) -> Result<(), ParticleError> {
        if self.counts.len() != self.width * self.height {
            return Err(ParticleError::BadGrid(format!(
                "{} counts for a {}x{} grid",
                self.counts.len(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    /// Counts scaled to [0, 1] by the grid's maximum; all zeros stay zero.
    /// Order-preserving, so threshold sweeps see the same ranking as the
    /// raw counts.
    pub fn score(&self) -> Vec<f64> {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        if max == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / max as f64)
            .collect()
    }

    /// Serializes the grid: magic `DCNT`, width u32, height u32, ego offset
    /// 2x i32, horizon f32 (s), then `width * height` little-endian u32
    /// counts.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<(), ParticleError> {
        self.validate()?;
        w.write_all(b"DCNT")?;
        w.write_u32::<LE>(self.width as u32)?;
        w.write_u32::<LE>(self.height as u32)?;
        w.write_i32::<LE>(self.ego_offset.0)?;
        w.write_i32::<LE>(self.ego_offset.1)?;
        w.write_f32::<LE>(self.horizon)?;
        for &c in &self.counts {
            w.write_u32::<LE>(c)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self, ParticleError> {
        binio::expect_magic(r, b"DCNT")?;
        let width = r.read_u32::<LE>()? as usize;
        let height = r.read_u32::<LE>()? as usize;
        let ego_offset = (r.read_i32::<LE>()?, r.read_i32::<LE>()?);
        let horizon = r.read_f32::<LE>()?;
        let mut counts = vec![0u32; width * height];
        for c in counts.iter_mut() {
            *c = r.read_u32::<LE>()?;
        }
        let grid = CountGrid {
            width,
            height,
            ego_offset,
            horizon,
            counts,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), ParticleError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, ParticleError> {
        let mut r = BufReader::new(File::open(path)?);
        CountGrid::read(&mut r)
    }
}

/// Flags each cell that passes the occupancy, speed, and variance gates.
pub fn classify_dynamic(frame: &DogmaFrame, config: &ParticleConfig) -> Vec<bool> {
    let spec = frame.spec;
    let mut out = vec![false; spec.cells()];
    for y in 0..spec.height {
        for x in 0..spec.width {
            let cell = frame.cell(x, y);
            if occupancy_probability(cell.m_occ, cell.m_free) <= 0.5 {
                continue;
            }
            let speed = (cell.vel_e as f64).hypot(cell.vel_n as f64);
            if speed <= config.speed_threshold {
                continue;
            }
            let converged = if config.per_axis_variance {
                (cell.var_e as f64) < config.variance_threshold
                    && (cell.var_n as f64) < config.variance_threshold
            } else {
                ((cell.var_e + cell.var_n) as f64) < config.variance_threshold
            };
            if converged {
                out[spec.index(x, y)] = true;
            }
        }
    }
    out
}

/// Splits `total` particles over the dynamic cells proportionally to their
/// occupancy probability, by largest remainder: every cell gets the floor of
/// its exact quota, and the leftover particles go to the largest fractional
/// parts (lowest cell index first on ties). The result always sums to
/// `total` when any cell is dynamic.
pub fn allocate_particles(frame: &DogmaFrame, dynamic: &[bool], total: usize) -> Vec<usize> {
    let spec = frame.spec;
    assert_eq!(dynamic.len(), spec.cells(), "mask length mismatch");
    let mut weights = vec![0.0f64; spec.cells()];
    let mut sum = 0.0;
    for y in 0..spec.height {
        for x in 0..spec.width {
            let i = spec.index(x, y);
            if dynamic[i] {
                let p = frame.occupancy(x, y);
                weights[i] = p;
                sum += p;
            }
        }
    }
    let mut counts = vec![0usize; spec.cells()];
    if sum <= 0.0 {
        return counts;
    }
    let mut assigned = 0;
    let mut remainders: Vec<(f64, usize)> = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            let quota = total as f64 * w / sum;
            let floor = quota.floor() as usize;
            counts[i] = floor;
            assigned += floor;
            remainders.push((quota - floor as f64, i));
        }
    }
    // Largest fraction first; the index ordering below is descending by
    // fraction, ascending by cell index within a tie.
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for (_, i) in remainders.iter().cycle().take(total - assigned) {
        counts[*i] += 1;
    }
    counts
}

/// Lower-triangular Cholesky factor of the 2x2 velocity covariance, with
/// negative diagonals clamped to zero so borderline-degenerate matrices
/// sample along their valid subspace instead of panicking.
fn cholesky2(var_e: f64, var_n: f64, cov: f64) -> (f64, f64, f64) {
    let l11 = var_e.max(0.0).sqrt();
    let l21 = if l11 > 0.0 { cov / l11 } else { 0.0 };
    let l22 = (var_n - l21 * l21).max(0.0).sqrt();
    (l11, l21, l22)
}

/// Runs the baseline on one frame: classify, allocate, sample, propagate,
/// histogram. Returns one [`CountGrid`] per configured horizon, in order.
///
/// Each cell draws its particles from its own seeded stream, so the output
/// is independent of iteration order and bit-reproducible for a given
/// frame, config, and seed. Particles leaving the grid are dropped.
pub fn predict_particles(
    frame: &DogmaFrame,
    config: &ParticleConfig,
) -> Result<Vec<CountGrid>, ParticleError> {
    config.validate()?;
    let dynamic = classify_dynamic(frame, config);
    predict_particles_from(frame, &dynamic, config)
}

/// [`predict_particles`] with the dynamic-cell classification supplied by
/// the caller instead of recomputed. Restricting the mask to one object's
/// cells attributes the predicted mass to that object alone. Two runs with
/// the same mask, cell values and config are bit-identical even when the
/// rest of the frame differs: each selected cell draws from its own seeded
/// stream, and the particle budget is shared only among selected cells.
pub fn predict_particles_from(
    frame: &DogmaFrame,
    dynamic: &[bool],
    config: &ParticleConfig,
) -> Result<Vec<CountGrid>, ParticleError> {
    config.validate()?;
    let spec = frame.spec;
    if dynamic.len() != spec.cells() {
        return Err(ParticleError::BadConfig(format!(
            "classification covers {} cells, frame has {}",
            dynamic.len(),
            spec.cells()
        )));
    }
    let cw = spec.cell_width as f64;
    let allocation = allocate_particles(frame, dynamic, config.particle_count);
    let mut grids: Vec<CountGrid> = config
        .horizons
        .iter()
        .map(|&h| CountGrid::zeros(spec.width, spec.height, frame.ego_offset, h))
        .collect();

    for y in 0..spec.height {
        for x in 0..spec.width {
            let i = spec.index(x, y);
            if allocation[i] == 0 {
                continue;
            }
            let cell = frame.cell(x, y);
            let (l11, l21, l22) =
                cholesky2(cell.var_e as f64, cell.var_n as f64, cell.cov as f64);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ mix(i as u64 + 1));
            // Positions in world-cell units: cell (x, y) spans
            // [wx, wx + 1) x [wy, wy + 1) where w = grid + ego offset.
            let wx = x as f64 + frame.ego_offset.0 as f64;
            let wy = y as f64 + frame.ego_offset.1 as f64;
            for _ in 0..allocation[i] {
                let px = wx + rng.gen::<f64>();
                let py = wy + rng.gen::<f64>();
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                let ve = cell.vel_e as f64 + l11 * z1;
                let vn = cell.vel_n as f64 + l21 * z1 + l22 * z2;
                for grid in grids.iter_mut() {
                    let t = grid.horizon as f64;
                    // Velocity in cells per second; the grid itself stays put.
                    let fx = (px + ve / cw * t).floor();
                    let fy = (py + vn / cw * t).floor();
                    let gx = fx - frame.ego_offset.0 as f64;
                    let gy = fy - frame.ego_offset.1 as f64;
                    if gx >= 0.0 && gx < spec.width as f64 && gy >= 0.0 && gy < spec.height as f64
                    {
                        grid.counts[spec.index(gx as usize, gy as usize)] += 1;
                    }
                }
            }
        }
    }
    Ok(grids)
}

/// SplitMix64 finalizer; decorrelates per-cell seeds derived from indices.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
