//! Core dynamic occupancy grid types: grid geometry, per-cell channel data,
//! occupancy probability, ego-centered origin shifts, per-cell time series,
//! and the binary frame format.
//!
//! A frame stores seven channels per cell: occupancy mass, free mass, velocity
//! mean (east, north), velocity variances (east, north) and the velocity
//! covariance. Grid index `(0, 0)` is the south-west corner; the east index
//! grows with `x` and the north index with `y`. World cell coordinates are
//! grid indices plus the frame's `ego_offset` (whole cells).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio;

/// Current version of the frame file format.
pub const FRAME_FORMAT_VERSION: u16 = 1;

/// Number of channels in a frame.
pub const CHANNEL_COUNT: usize = 7;

/// Velocity variance assigned to cells nothing is known about, in (m/s)^2.
pub const DEFAULT_VAR_PRIOR: f32 = 10.0;

/// Errors raised by grid construction, validation and frame I/O.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dimensions must be at least 1x1, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
    #[error("cell width must be positive, got {0}")]
    BadCellWidth(f32),
    #[error("frame period must be positive, got {0}")]
    BadFramePeriod(f32),
    #[error("channel plane for {channel:?} has {got} cells, grid needs {want}")]
    PlaneSize {
        channel: Channel,
        got: usize,
        want: usize,
    },
    #[error("cell ({x}, {y}): occupancy mass {m_occ} outside [0, 1]")]
    MassOccupiedRange { x: usize, y: usize, m_occ: f32 },
    #[error("cell ({x}, {y}): free mass {m_free} outside [0, 1]")]
    MassFreeRange { x: usize, y: usize, m_free: f32 },
    #[error("cell ({x}, {y}): mass sum {sum} exceeds 1")]
    MassSum { x: usize, y: usize, sum: f32 },
    #[error("cell ({x}, {y}): negative velocity variance {var}")]
    NegativeVariance { x: usize, y: usize, var: f32 },
    #[error("cell ({x}, {y}): covariance {cov} inconsistent with variances {var_e} and {var_n}")]
    CovarianceBound {
        x: usize,
        y: usize,
        cov: f32,
        var_e: f32,
        var_n: f32,
    },
    #[error("unsupported frame format version {0}")]
    UnsupportedVersion(u16),
    #[error("frame header declares {0} channels, this build reads {CHANNEL_COUNT}")]
    ChannelCount(u8),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Grid geometry and timing shared by every frame of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cells along the east axis.
    pub width: usize,
    /// Cells along the north axis.
    pub height: usize,
    /// Edge length of a square cell in meters.
    pub cell_width: f32,
    /// Time between consecutive frames in seconds.
    pub frame_period: f32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            width: 128,
            height: 128,
            cell_width: 0.15,
            frame_period: 0.1,
        }
    }
}

impl GridSpec {
    pub fn new(width: usize, height: usize, cell_width: f32, frame_period: f32) -> Result<Self, GridError> {
        let spec = GridSpec {
            width,
            height,
            cell_width,
            frame_period,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.width == 0 || self.height == 0 {
            return Err(GridError::EmptyGrid {
                width: self.width,
                height: self.height,
            });
        }
        if !(self.cell_width > 0.0) {
            return Err(GridError::BadCellWidth(self.cell_width));
        }
        if !(self.frame_period > 0.0) {
            return Err(GridError::BadFramePeriod(self.frame_period));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// Flat index of grid cell `(x, y)`; row-major with `y` as the slow axis.
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }
}

/// The seven per-cell channels, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    MassOccupied,
    MassFree,
    VelEast,
    VelNorth,
    VarVelEast,
    VarVelNorth,
    CovVel,
}

impl Channel {
    pub const ALL: [Channel; CHANNEL_COUNT] = [
        Channel::MassOccupied,
        Channel::MassFree,
        Channel::VelEast,
        Channel::VelNorth,
        Channel::VarVelEast,
        Channel::VarVelNorth,
        Channel::CovVel,
    ];
}

/// Full per-cell state, used when filling or inspecting single cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub m_occ: f32,
    pub m_free: f32,
    pub vel_e: f32,
    pub vel_n: f32,
    pub var_e: f32,
    pub var_n: f32,
    pub cov: f32,
}

impl CellState {
    /// State of a cell nothing has ever been observed in: no mass evidence,
    /// zero velocity mean, prior velocity variance.
    pub fn unknown(var_prior: f32) -> Self {
        CellState {
            m_occ: 0.0,
            m_free: 0.0,
            vel_e: 0.0,
            vel_n: 0.0,
            var_e: var_prior,
            var_n: var_prior,
            cov: 0.0,
        }
    }
}

/// One dynamic occupancy grid frame: geometry, timestamp, ego offset and the
/// seven channel planes.
#[derive(Debug, Clone, PartialEq)]
pub struct DogmaFrame {
    pub spec: GridSpec,
    /// Seconds since the start of the recording.
    pub timestamp: f64,
    /// World cell coordinates (east, north) of grid index (0, 0).
    pub ego_offset: (i32, i32),
    planes: [Vec<f32>; CHANNEL_COUNT],
}

impl DogmaFrame {
    /// A frame with every cell in the unknown state.
    pub fn unknown(spec: GridSpec, timestamp: f64, ego_offset: (i32, i32), var_prior: f32) -> Result<Self, GridError> {
        spec.validate()?;
        let n = spec.cells();
        let state = CellState::unknown(var_prior);
        Ok(DogmaFrame {
            spec,
            timestamp,
            ego_offset,
            planes: [
                vec![state.m_occ; n],
                vec![state.m_free; n],
                vec![state.vel_e; n],
                vec![state.vel_n; n],
                vec![state.var_e; n],
                vec![state.var_n; n],
                vec![state.cov; n],
            ],
        })
    }

    /// Builds a frame from raw channel planes, validating every invariant.
    pub fn from_planes(
        spec: GridSpec,
        timestamp: f64,
        ego_offset: (i32, i32),
        planes: [Vec<f32>; CHANNEL_COUNT],
    ) -> Result<Self, GridError> {
        spec.validate()?;
        for (channel, plane) in Channel::ALL.iter().zip(planes.iter()) {
            if plane.len() != spec.cells() {
                return Err(GridError::PlaneSize {
                    channel: *channel,
                    got: plane.len(),
                    want: spec.cells(),
                });
            }
        }
        let frame = DogmaFrame {
            spec,
            timestamp,
            ego_offset,
            planes,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn plane(&self, channel: Channel) -> &[f32] {
        &self.planes[channel as usize]
    }

    pub fn cell(&self, x: usize, y: usize) -> CellState {
        let i = self.spec.index(x, y);
        CellState {
            m_occ: self.planes[0][i],
            m_free: self.planes[1][i],
            vel_e: self.planes[2][i],
            vel_n: self.planes[3][i],
            var_e: self.planes[4][i],
            var_n: self.planes[5][i],
            cov: self.planes[6][i],
        }
    }

    pub fn set_cell(&mut self, x: usize, y: usize, state: CellState) {
        let i = self.spec.index(x, y);
        self.planes[0][i] = state.m_occ;
        self.planes[1][i] = state.m_free;
        self.planes[2][i] = state.vel_e;
        self.planes[3][i] = state.vel_n;
        self.planes[4][i] = state.var_e;
        self.planes[5][i] = state.var_n;
        self.planes[6][i] = state.cov;
    }

    /// World cell coordinates of grid index `(x, y)`.
    pub fn world_cell(&self, x: usize, y: usize) -> (i64, i64) {
        (
            self.ego_offset.0 as i64 + x as i64,
            self.ego_offset.1 as i64 + y as i64,
        )
    }

    /// Grid index of a world cell, if it lies inside this frame.
    pub fn grid_index(&self, world: (i64, i64)) -> Option<(usize, usize)> {
        let x = world.0 - self.ego_offset.0 as i64;
        let y = world.1 - self.ego_offset.1 as i64;
        if x >= 0 && y >= 0 && (x as usize) < self.spec.width && (y as usize) < self.spec.height {
            Some((x as usize, y as usize))
        } else {
            None
        }
    }

    /// Checks every cell against the channel invariants. Mass and variance
    /// violations are hard errors; the covariance bound allows one part in
    /// 10^6 of slack for f32 rounding.
    pub fn validate(&self) -> Result<(), GridError> {
        for y in 0..self.spec.height {
            for x in 0..self.spec.width {
                let c = self.cell(x, y);
                if !(0.0..=1.0).contains(&c.m_occ) {
                    return Err(GridError::MassOccupiedRange { x, y, m_occ: c.m_occ });
                }
                if !(0.0..=1.0).contains(&c.m_free) {
                    return Err(GridError::MassFreeRange { x, y, m_free: c.m_free });
                }
                if c.m_occ + c.m_free > 1.0 {
                    return Err(GridError::MassSum {
                        x,
                        y,
                        sum: c.m_occ + c.m_free,
                    });
                }
                if c.var_e < 0.0 {
                    return Err(GridError::NegativeVariance { x, y, var: c.var_e });
                }
                if c.var_n < 0.0 {
                    return Err(GridError::NegativeVariance { x, y, var: c.var_n });
                }
                let bound = c.var_e as f64 * c.var_n as f64;
                let cov_sq = c.cov as f64 * c.cov as f64;
                if cov_sq > bound * (1.0 + 1e-6) + 1e-12 {
                    return Err(GridError::CovarianceBound {
                        x,
                        y,
                        cov: c.cov,
                        var_e: c.var_e,
                        var_n: c.var_n,
                    });
                }
            }
        }
        Ok(())
    }

    /// Returns a copy whose origin moved by `delta` world cells. Content is
    /// translated so every world cell keeps its values; cells whose source
    /// falls outside the old frame become unknown with `var_prior` velocity
    /// variance. Positive `delta.0` moves the grid east.
    pub fn shift_origin(&self, delta: (i32, i32), var_prior: f32) -> DogmaFrame {
        let mut out = self.clone();
        out.ego_offset = (self.ego_offset.0 + delta.0, self.ego_offset.1 + delta.1);
        let unknown = CellState::unknown(var_prior);
        for y in 0..self.spec.height {
            for x in 0..self.spec.width {
                let src_x = x as i64 + delta.0 as i64;
                let src_y = y as i64 + delta.1 as i64;
                let state = if src_x >= 0
                    && src_y >= 0
                    && (src_x as usize) < self.spec.width
                    && (src_y as usize) < self.spec.height
                {
                    self.cell(src_x as usize, src_y as usize)
                } else {
                    unknown
                };
                out.set_cell(x, y, state);
            }
        }
        out
    }

    /// Occupancy probability of grid cell `(x, y)`.
    pub fn occupancy(&self, x: usize, y: usize) -> f64 {
        let i = self.spec.index(x, y);
        occupancy_probability(self.planes[0][i], self.planes[1][i])
    }

    /// Serializes the frame. The layout is: magic `DOGM`, version u16, width
    /// u32, height u32, cell width f32, frame period f32, timestamp f64, ego
    /// offset 2x i32, channel count u8, then seven planes of `width * height`
    /// little-endian f32 in channel order.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<(), GridError> {
        self.validate()?;
        w.write_all(b"DOGM")?;
        w.write_u16::<LE>(FRAME_FORMAT_VERSION)?;
        w.write_u32::<LE>(self.spec.width as u32)?;
        w.write_u32::<LE>(self.spec.height as u32)?;
        w.write_f32::<LE>(self.spec.cell_width)?;
        w.write_f32::<LE>(self.spec.frame_period)?;
        w.write_f64::<LE>(self.timestamp)?;
        w.write_i32::<LE>(self.ego_offset.0)?;
        w.write_i32::<LE>(self.ego_offset.1)?;
        w.write_u8(CHANNEL_COUNT as u8)?;
        for plane in &self.planes {
            binio::write_plane_f32(w, plane)?;
        }
        Ok(())
    }

    /// Reads one frame. Invariant violations in the header or planes are hard
    /// errors; nothing is clamped.
    pub fn read<R: Read>(r: &mut R) -> Result<Self, GridError> {
        binio::expect_magic(r, b"DOGM")?;
        let version = r.read_u16::<LE>()?;
        if version != FRAME_FORMAT_VERSION {
            return Err(GridError::UnsupportedVersion(version));
        }
        let width = r.read_u32::<LE>()? as usize;
        let height = r.read_u32::<LE>()? as usize;
        let cell_width = r.read_f32::<LE>()?;
        let frame_period = r.read_f32::<LE>()?;
        let timestamp = r.read_f64::<LE>()?;
        let ego_e = r.read_i32::<LE>()?;
        let ego_n = r.read_i32::<LE>()?;
        let channels = r.read_u8()?;
        if channels as usize != CHANNEL_COUNT {
            return Err(GridError::ChannelCount(channels));
        }
        let spec = GridSpec::new(width, height, cell_width, frame_period)?;
        let n = spec.cells();
        let planes = [
            binio::read_plane_f32(r, n)?,
            binio::read_plane_f32(r, n)?,
            binio::read_plane_f32(r, n)?,
            binio::read_plane_f32(r, n)?,
            binio::read_plane_f32(r, n)?,
            binio::read_plane_f32(r, n)?,
            binio::read_plane_f32(r, n)?,
        ];
        DogmaFrame::from_planes(spec, timestamp, (ego_e, ego_n), planes)
    }
}

/// Occupancy probability from the two mass channels:
/// `P_O = 0.5 * m_occ + 0.5 * (1 - m_free)`. A cell with no evidence at all
/// (both masses zero) comes out at exactly 0.5.
#[inline]
pub fn occupancy_probability(m_occ: f32, m_free: f32) -> f64 {
    0.5 * m_occ as f64 + 0.5 * (1.0 - m_free as f64)
}

/// Occupancy probability of one world cell traced through a frame sequence.
/// `values[i]` is meaningful only where `valid[i]` is true (the cell was
/// inside frame `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct CellSeries {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl CellSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Extracts the occupancy-probability series of one world cell across
/// `frames`, following ego offsets. Frames where the cell is outside the grid
/// are marked invalid and carry value 0.5.
pub fn extract_cell_series(frames: &[DogmaFrame], world: (i64, i64)) -> CellSeries {
    let mut values = Vec::with_capacity(frames.len());
    let mut valid = Vec::with_capacity(frames.len());
    for frame in frames {
        match frame.grid_index(world) {
            Some((x, y)) => {
                values.push(frame.occupancy(x, y));
                valid.push(true);
            }
            None => {
                values.push(0.5);
                valid.push(false);
            }
        }
    }
    CellSeries { values, valid }
}

/// Writes a sequence of frames back to back.
pub fn write_sequence(path: &Path, frames: &[DogmaFrame]) -> Result<(), GridError> {
    let mut w = BufWriter::new(File::create(path)?);
    for frame in frames {
        frame.write(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads all frames of a sequence file until end of file.
pub fn read_sequence(path: &Path) -> Result<Vec<DogmaFrame>, GridError> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut r = BufReader::new(file);
    let mut frames = Vec::new();
    let mut consumed = 0u64;
    while consumed < len {
        let frame = DogmaFrame::read(&mut r)?;
        consumed += frame_byte_len(&frame.spec) as u64;
        frames.push(frame);
    }
    Ok(frames)
}

/// On-disk size of one frame with the given geometry.
pub fn frame_byte_len(spec: &GridSpec) -> usize {
    4 + 2 + 4 + 4 + 4 + 4 + 8 + 4 + 4 + 1 + CHANNEL_COUNT * spec.cells() * 4
}
