//! Turning recordings into training samples, on disk and in memory.
//!
//! A sample pairs one input frame with the label tensor built around it.
//! On disk a labeled recording is a directory holding the frame sequence
//! (`frames.dogm`) and one `label_NNNNN.dlbl` per sample, named by the
//! frame index the labels belong to — the frames are not duplicated.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::grid::DogmaFrame;
use crate::label::{build_labels, DetectorConfig, LabelSpec, LabelTensor};
use crate::net::Sample;

/// Settling time skipped at the start of every recording before the first
/// sample window may begin. A freshly started filter climbs out of the
/// unknown state over its first few updates, and that ramp looks like an
/// occupancy rise to the event detector.
pub const FILTER_SETTLE_SECONDS: f64 = 1.0;

/// Frame indices around which a full label window fits, spaced `stride`
/// frames apart: the temporal smoother needs `smooth_radius` frames of
/// margin on both sides of the prediction window, and the window must not
/// reach into the first [`FILTER_SETTLE_SECONDS`] of the recording.
pub fn sample_t0_indices(
    frame_count: usize,
    period: f64,
    lspec: &LabelSpec,
    detector: &DetectorConfig,
    stride: usize,
) -> Vec<usize> {
    let horizon_frames = (lspec.horizon as f64 / period).round() as usize;
    let step_frames = ((lspec.step as f64 / period).round() as usize).max(1);
    let margin = detector.smooth_radius;
    let tail = (horizon_frames + margin).max(lspec.channels() * step_frames);
    let settle = if period > 0.0 {
        (FILTER_SETTLE_SECONDS / period).round() as usize
    } else {
        0
    };

    let mut out = Vec::new();
    let mut t0 = margin + settle;
    while frame_count > 0 && t0 + tail <= frame_count - 1 {
        out.push(t0);
        t0 += stride.max(1);
    }
    out
}

/// Labels every valid sample position of a recording.
pub fn label_sequence(
    frames: &[DogmaFrame],
    lspec: &LabelSpec,
    detector: &DetectorConfig,
    stride: usize,
) -> Result<Vec<(usize, LabelTensor)>, RunError> {
    let period = frames
        .first()
        .map(|f| f.spec.frame_period as f64)
        .unwrap_or(0.0);
    let mut out = Vec::new();
    for t0 in sample_t0_indices(frames.len(), period, lspec, detector, stride) {
        out.push((t0, build_labels(frames, t0, lspec, detector)?));
    }
    Ok(out)
}

/// Fraction of cells carrying any dynamic-object target: a masked value
/// above 0.5 in at least one horizon channel.
pub fn dynamic_cell_fraction(labels: &LabelTensor) -> f64 {
    let cells = labels.width * labels.height;
    if cells == 0 {
        return 0.0;
    }
    let mut dynamic = 0usize;
    for y in 0..labels.height {
        for x in 0..labels.width {
            let hit = (1..=labels.k)
                .any(|k| labels.mask_at(k, x, y) && labels.dynamic_at(k, x, y) > 0.5);
            if hit {
                dynamic += 1;
            }
        }
    }
    dynamic as f64 / cells as f64
}

/// One line of the per-sample statistics CSV emitted next to the labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionRow {
    pub sample: usize,
    pub t0_index: usize,
    pub t0_s: f64,
    pub dynamic_fraction: f64,
}

pub fn write_fraction_csv(path: &Path, rows: &[FractionRow]) -> Result<(), RunError> {
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn label_file_name(t0_index: usize) -> String {
    format!("label_{t0_index:05}.dlbl")
}

/// Writes one label file per sample into `dir`, named by frame index.
pub fn write_labels_dir(
    dir: &Path,
    labeled: &[(usize, LabelTensor)],
) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(labeled.len());
    for (t0, tensor) in labeled {
        let path = dir.join(label_file_name(*t0));
        tensor.write_file(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads the samples of one labeled recording directory (`frames.dogm`
/// plus `labels/label_NNNNN.dlbl`), returning them with the labels'
/// horizon-channel spacing in seconds.
pub fn load_samples(dir: &Path) -> Result<(Vec<Sample>, f32), RunError> {
    let frames_path = dir.join("frames.dogm");
    let labels_dir = dir.join("labels");
    let frames = crate::grid::read_sequence(&frames_path)?;

    let mut indexed: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(&labels_dir)? {
        let path = entry?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if let Some(t0) = name
            .strip_prefix("label_")
            .and_then(|s| s.strip_suffix(".dlbl"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            indexed.push((t0, path));
        }
    }
    indexed.sort();
    if indexed.is_empty() {
        return Err(RunError::Usage(format!(
            "no label_NNNNN.dlbl files under {}",
            labels_dir.display()
        )));
    }

    let mut samples = Vec::with_capacity(indexed.len());
    let mut step_seconds = None;
    for (t0, path) in indexed {
        if t0 >= frames.len() {
            return Err(RunError::Usage(format!(
                "{} names frame {t0}, but {} has only {} frames",
                path.display(),
                frames_path.display(),
                frames.len()
            )));
        }
        let tensor = LabelTensor::read_file(&path)?;
        match step_seconds {
            None => step_seconds = Some(tensor.step),
            Some(step) if step != tensor.step => {
                return Err(RunError::Usage(format!(
                    "{} uses channel step {} s, earlier labels use {} s",
                    path.display(),
                    tensor.step,
                    step
                )));
            }
            Some(_) => {}
        }
        samples.push(Sample::from_frame_labels(&frames[t0], &tensor)?);
    }
    Ok((samples, step_seconds.expect("checked non-empty")))
}
