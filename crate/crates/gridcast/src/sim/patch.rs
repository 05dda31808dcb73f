//! Splicing recorded objects into existing frame sequences.
//!
//! A patch is a small frame sequence in the regular frame format whose cells
//! are either *opaque* — carrying object evidence — or *transparent*, marked
//! by both masses being exactly zero (the never-observed state). Injection
//! overwrites the opaque cells of the target frames and leaves everything
//! else untouched, so an object recorded once can be replayed into any
//! scene. A patch frame's ego offset locates its cells relative to the
//! anchor cell chosen at extraction, and the anchor given at injection picks
//! where in the target world the object reappears.

use std::ops::Range;
use std::path::Path;

use crate::grid::{read_sequence, write_sequence, CellState, DogmaFrame, GridSpec, DEFAULT_VAR_PRIOR};

use super::SimError;

/// One frame of a recorded object.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFrame {
    /// Channel content; the ego offset is relative to the patch anchor.
    pub frame: DogmaFrame,
}

impl PatchFrame {
    /// True when the cell carries object evidence.
    pub fn is_opaque(&self, x: usize, y: usize) -> bool {
        let c = self.frame.cell(x, y);
        c.m_occ != 0.0 || c.m_free != 0.0
    }
}

/// A recorded object: a short sequence of small anchor-relative frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub frames: Vec<PatchFrame>,
}

impl Patch {
    pub fn spec(&self) -> &GridSpec {
        &self.frames[0].frame.spec
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.frames.is_empty() {
            return Err(SimError::BadPatch("patch has no frames".into()));
        }
        let spec = *self.spec();
        if self.frames.iter().any(|pf| pf.frame.spec != spec) {
            return Err(SimError::BadPatch("patch frames disagree on grid geometry".into()));
        }
        Ok(())
    }
}

/// Cuts the cells around `anchor` (world cell coordinates) with occupancy
/// probability above `occupancy_threshold` out of the given frames. The
/// patch covers `2 * half_extent + 1` cells per axis, centered on the
/// anchor; cells below the threshold or outside the source grid become
/// transparent. The threshold must exceed 0.5 — otherwise cells without
/// evidence would count as object.
pub fn extract_patch(
    frames: &[DogmaFrame],
    anchor: (i64, i64),
    half_extent: (u32, u32),
    frame_range: Range<usize>,
    occupancy_threshold: f64,
) -> Result<Patch, SimError> {
    if !(occupancy_threshold > 0.5 && occupancy_threshold <= 1.0) {
        return Err(SimError::BadPatch(format!(
            "occupancy threshold must be in (0.5, 1], got {occupancy_threshold}"
        )));
    }
    if frame_range.is_empty() || frame_range.end > frames.len() {
        return Err(SimError::BadPatch(format!(
            "frame range {frame_range:?} outside the {} source frames",
            frames.len()
        )));
    }
    let (hx, hy) = (half_extent.0 as usize, half_extent.1 as usize);
    let source_spec = frames[frame_range.start].spec;
    let spec = GridSpec::new(
        2 * hx + 1,
        2 * hy + 1,
        source_spec.cell_width,
        source_spec.frame_period,
    )?;
    let transparent = CellState::unknown(DEFAULT_VAR_PRIOR);

    let mut out = Vec::with_capacity(frame_range.len());
    for source in &frames[frame_range] {
        let mut frame = DogmaFrame::unknown(
            spec,
            source.timestamp,
            (-(hx as i32), -(hy as i32)),
            DEFAULT_VAR_PRIOR,
        )?;
        for y in 0..spec.height {
            for x in 0..spec.width {
                let world = (
                    anchor.0 + x as i64 - hx as i64,
                    anchor.1 + y as i64 - hy as i64,
                );
                let state = match source.grid_index(world) {
                    Some((sx, sy)) if source.occupancy(sx, sy) > occupancy_threshold => source.cell(sx, sy),
                    _ => transparent,
                };
                frame.set_cell(x, y, state);
            }
        }
        out.push(PatchFrame { frame });
    }
    Ok(Patch { frames: out })
}

/// Overwrites the opaque patch cells into `frames`, starting at
/// `start_frame`, with the patch anchor placed on world cell `anchor`. With
/// `hold_last` the final patch frame keeps being applied until the sequence
/// ends; otherwise injection stops when the patch runs out. Opaque cells
/// falling outside a target frame are dropped. Returns the number of cells
/// written.
pub fn inject_patch(
    frames: &mut [DogmaFrame],
    patch: &Patch,
    anchor: (i64, i64),
    start_frame: usize,
    hold_last: bool,
) -> Result<usize, SimError> {
    patch.validate()?;
    if start_frame >= frames.len() {
        return Err(SimError::BadPatch(format!(
            "start frame {start_frame} outside the {} target frames",
            frames.len()
        )));
    }
    let pspec = *patch.spec();
    let mut written = 0;
    for (ti, target) in frames.iter_mut().enumerate().skip(start_frame) {
        let k = ti - start_frame;
        let pf = if k < patch.frames.len() {
            &patch.frames[k]
        } else if hold_last {
            patch.frames.last().unwrap()
        } else {
            break;
        };
        if target.spec.cell_width != pspec.cell_width || target.spec.frame_period != pspec.frame_period {
            return Err(SimError::BadPatch(format!(
                "patch geometry {} m / {} s does not match target {} m / {} s",
                pspec.cell_width, pspec.frame_period, target.spec.cell_width, target.spec.frame_period
            )));
        }
        for y in 0..pspec.height {
            for x in 0..pspec.width {
                if !pf.is_opaque(x, y) {
                    continue;
                }
                let world = (
                    anchor.0 + pf.frame.ego_offset.0 as i64 + x as i64,
                    anchor.1 + pf.frame.ego_offset.1 as i64 + y as i64,
                );
                if let Some((tx, ty)) = target.grid_index(world) {
                    target.set_cell(tx, ty, pf.frame.cell(x, y));
                    written += 1;
                }
            }
        }
    }
    Ok(written)
}

/// Stores a patch as a plain frame sequence file.
pub fn write_patch(path: &Path, patch: &Patch) -> Result<(), SimError> {
    patch.validate()?;
    let frames: Vec<DogmaFrame> = patch.frames.iter().map(|pf| pf.frame.clone()).collect();
    write_sequence(path, &frames)?;
    Ok(())
}

/// Loads a patch written by [`write_patch`].
pub fn read_patch(path: &Path) -> Result<Patch, SimError> {
    let frames = read_sequence(path)?;
    let patch = Patch {
        frames: frames.into_iter().map(|frame| PatchFrame { frame }).collect(),
    };
    patch.validate()?;
    Ok(patch)
}
