//! Automatic separation of each cell's occupancy history into a static level
//! and dynamic episodes, and the label tensors built from that separation.
//!
//! Per cell, the occupancy-probability series is smoothed with a truncated
//! Gaussian kernel in time, its second derivative is scanned for curvature
//! events (local extrema of |kappa| above a threshold, thinned by
//! non-maximum suppression), and positive-curvature events are paired into
//! dynamic intervals: a rise opens an episode, the next drop-end closes it.
//! Within an episode the series is replaced by its maximum (`hold_max`); the
//! remaining frames define the static level as their median.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio;
use crate::grid::{extract_cell_series, CellSeries, DogmaFrame, GridError};

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("detector config invalid: {0}")]
    BadConfig(String),
    #[error("label spec invalid: {0}")]
    BadSpec(String),
    #[error("intervals must be sorted and disjoint; [{a_start}, {a_end}] collides with [{b_start}, {b_end}]")]
    OverlappingIntervals {
        a_start: usize,
        a_end: usize,
        b_start: usize,
        b_end: usize,
    },
    #[error("interval [{start}, {end}] out of range for series of length {len}")]
    IntervalOutOfRange { start: usize, end: usize, len: usize },
    #[error("label window needs frames [{want_first}, {want_last}] but only indices [0, {have_last}] exist")]
    WindowOutOfRange {
        want_first: i64,
        want_last: usize,
        have_last: usize,
    },
    #[error("frame {index} geometry differs from frame 0")]
    MixedGeometry { index: usize },
    #[error("no frames given")]
    EmptyFrames,
    #[error("label tensor invalid: {0}")]
    BadTensor(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Parameters of the per-cell dynamic-episode detector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Standard deviation of the temporal Gaussian kernel, in frames.
    pub smooth_sigma: f64,
    /// Kernel truncation radius, in frames.
    pub smooth_radius: usize,
    /// Minimum |second derivative| of the smoothed series for an event.
    pub curvature_threshold: f64,
    /// Non-maximum-suppression window in frames; must be odd.
    pub nms_window: usize,
    /// Minimum total rise of the smoothed series for a rise event to open an
    /// episode; filters sensor-noise bumps.
    pub min_peak_rise: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            smooth_sigma: 2.0,
            smooth_radius: 6,
            curvature_threshold: 0.01,
            nms_window: 5,
            min_peak_rise: 0.1,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.smooth_sigma > 0.0) {
            return Err(LabelError::BadConfig(format!(
                "smooth_sigma must be positive, got {}",
                self.smooth_sigma
            )));
        }
        if self.smooth_radius == 0 {
            return Err(LabelError::BadConfig("smooth_radius must be at least 1".into()));
        }
        if self.nms_window % 2 == 0 || self.nms_window == 0 {
            return Err(LabelError::BadConfig(format!(
                "nms_window must be odd, got {}",
                self.nms_window
            )));
        }
        if !(self.curvature_threshold > 0.0) {
            return Err(LabelError::BadConfig(format!(
                "curvature_threshold must be positive, got {}",
                self.curvature_threshold
            )));
        }
        if self.min_peak_rise < 0.0 {
            return Err(LabelError::BadConfig(format!(
                "min_peak_rise must not be negative, got {}",
                self.min_peak_rise
            )));
        }
        Ok(())
    }
}

/// One dynamic episode of a cell series; frame indices, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DynamicInterval {
    pub start: usize,
    pub end: usize,
}

impl DynamicInterval {
    pub fn contains(&self, frame: usize) -> bool {
        self.start <= frame && frame <= self.end
    }
}

/// Reflects an index into `[0, n)` around the sequence edges.
fn reflect(j: i64, n: usize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let mut j = j.rem_euclid(period);
    if j >= n as i64 {
        j = period - j;
    }
    j as usize
}

/// Smooths the valid portion of a series with a normalized truncated Gaussian
/// kernel in time. Edges are reflect-padded; invalid frames contribute no
/// weight and keep their stored value in the output.
pub fn smooth_series(series: &CellSeries, config: &DetectorConfig) -> Vec<f64> {
    let n = series.len();
    let mut out = series.values.clone();
    if n == 0 {
        return out;
    }
    let radius = config.smooth_radius as i64;
    let inv_two_sigma_sq = 1.0 / (2.0 * config.smooth_sigma * config.smooth_sigma);
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 * inv_two_sigma_sq).exp())
        .collect();
    for i in 0..n {
        if !series.valid[i] {
            continue;
        }
        let mut acc = 0.0;
        let mut weight = 0.0;
        for (ki, d) in (-radius..=radius).enumerate() {
            let j = reflect(i as i64 + d, n);
            if series.valid[j] {
                acc += kernel[ki] * series.values[j];
                weight += kernel[ki];
            }
        }
        // The center tap always lands on a valid frame, so weight > 0.
        out[i] = acc / weight;
    }
    out
}

/// Second derivative of the smoothed series by central differences (frame
/// units). `None` where the frame or a needed neighbor is invalid.
fn curvature(smoothed: &[f64], valid: &[bool]) -> Vec<Option<f64>> {
    let n = smoothed.len();
    (0..n)
        .map(|i| {
            if !valid[i] {
                return None;
            }
            let left = reflect(i as i64 - 1, n);
            let right = reflect(i as i64 + 1, n);
            if valid[left] && valid[right] {
                Some(smoothed[left] - 2.0 * smoothed[i] + smoothed[right])
            } else {
                None
            }
        })
        .collect()
}

/// A curvature event surviving non-maximum suppression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureEvent {
    pub frame: usize,
    pub kappa: f64,
    /// Positive curvature with a rising forward slope: candidate episode start.
    pub rise_start: bool,
    /// Positive curvature with a falling backward slope: candidate episode end.
    pub drop_end: bool,
}

/// Finds curvature events: local extrema of |kappa| above the threshold that
/// win non-maximum suppression over `nms_window` frames (ties go to the
/// earlier frame).
pub fn detect_events(smoothed: &[f64], valid: &[bool], config: &DetectorConfig) -> Vec<CurvatureEvent> {
    let n = smoothed.len();
    let kappa = curvature(smoothed, valid);
    let half = (config.nms_window / 2) as i64;
    let mut events = Vec::new();
    for i in 0..n {
        let Some(k) = kappa[i] else { continue };
        if k.abs() <= config.curvature_threshold {
            continue;
        }
        let mut wins = true;
        for d in -half..=half {
            if d == 0 {
                continue;
            }
            let j = i as i64 + d;
            if j < 0 || j >= n as i64 {
                continue;
            }
            if let Some(other) = kappa[j as usize] {
                let beats = other.abs() > k.abs() || (other.abs() == k.abs() && j < i as i64);
                if beats {
                    wins = false;
                    break;
                }
            }
        }
        if !wins {
            continue;
        }
        let forward = if i + 1 < n && valid[i + 1] {
            smoothed[i + 1] - smoothed[i]
        } else {
            0.0
        };
        let backward = if i >= 1 && valid[i - 1] {
            smoothed[i] - smoothed[i - 1]
        } else {
            0.0
        };
        events.push(CurvatureEvent {
            frame: i,
            kappa: k,
            rise_start: k > 0.0 && forward > 0.0,
            drop_end: k > 0.0 && backward < 0.0,
        });
    }
    events
}

/// Pairs curvature events into dynamic intervals.
///
/// A rise event opens an episode if the smoothed series climbs by at least
/// `min_peak_rise` before the next drop-end; the next drop-end closes it. A
/// rise that never sees a drop-end extends to the last frame; a drop-end
/// before any rise activity extends back to frame 0. Overlapping or abutting
/// intervals are coalesced.
pub fn detect_dynamic_intervals(series: &CellSeries, config: &DetectorConfig) -> Vec<DynamicInterval> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let smoothed = smooth_series(series, config);
    let events = detect_events(&smoothed, &series.valid, config);
    pair_events(&events, &smoothed, &series.valid, n, config)
}

/// Event-pairing core, shared by [`detect_dynamic_intervals`]. Separated so
/// tests can drive it with synthetic event lists.
pub fn pair_events(
    events: &[CurvatureEvent],
    smoothed: &[f64],
    valid: &[bool],
    n: usize,
    config: &DetectorConfig,
) -> Vec<DynamicInterval> {
    let mut intervals: Vec<DynamicInterval> = Vec::new();
    let mut open: Option<usize> = None;
    let mut saw_rise = false;
    for (ei, e) in events.iter().enumerate() {
        if e.drop_end {
            match open.take() {
                Some(start) => intervals.push(DynamicInterval { start, end: e.frame }),
                None => {
                    if !saw_rise && intervals.is_empty() {
                        intervals.push(DynamicInterval { start: 0, end: e.frame });
                    }
                }
            }
        }
        if e.rise_start {
            saw_rise = true;
            if open.is_none() {
                let close = events[ei + 1..]
                    .iter()
                    .find(|later| later.drop_end)
                    .map(|later| later.frame)
                    .unwrap_or(n - 1);
                let peak = (e.frame..=close)
                    .filter(|&t| valid[t])
                    .map(|t| smoothed[t])
                    .fold(f64::NEG_INFINITY, f64::max);
                if peak.is_finite() && peak - smoothed[e.frame] >= config.min_peak_rise {
                    open = Some(e.frame);
                }
            }
        }
    }
    if let Some(start) = open {
        intervals.push(DynamicInterval { start, end: n - 1 });
    }
    coalesce(intervals)
}

fn coalesce(mut intervals: Vec<DynamicInterval>) -> Vec<DynamicInterval> {
    intervals.sort_by_key(|iv| iv.start);
    let mut out: Vec<DynamicInterval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match out.last_mut() {
            Some(prev) if iv.start <= prev.end + 1 => prev.end = prev.end.max(iv.end),
            _ => out.push(iv),
        }
    }
    out
}

fn check_intervals(intervals: &[DynamicInterval], len: usize) -> Result<(), LabelError> {
    for (i, iv) in intervals.iter().enumerate() {
        if iv.start > iv.end || iv.end >= len {
            return Err(LabelError::IntervalOutOfRange {
                start: iv.start,
                end: iv.end,
                len,
            });
        }
        if i > 0 {
            let prev = intervals[i - 1];
            if iv.start <= prev.end {
                return Err(LabelError::OverlappingIntervals {
                    a_start: prev.start,
                    a_end: prev.end,
                    b_start: iv.start,
                    b_end: iv.end,
                });
            }
        }
    }
    Ok(())
}

/// Replaces each interval's valid frames with the interval maximum of the
/// raw (unsmoothed) series. Idempotent. Intervals must be sorted and
/// disjoint.
pub fn hold_max(
    values: &[f64],
    valid: &[bool],
    intervals: &[DynamicInterval],
) -> Result<Vec<f64>, LabelError> {
    check_intervals(intervals, values.len())?;
    let mut out = values.to_vec();
    for iv in intervals {
        let m = (iv.start..=iv.end)
            .filter(|&t| valid[t])
            .map(|t| values[t])
            .fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            continue; // no valid frame inside: nothing to hold
        }
        for t in iv.start..=iv.end {
            if valid[t] {
                out[t] = m;
            }
        }
    }
    Ok(out)
}

/// Median of the valid, non-dynamic raw values strictly inside
/// `(t0, t0 + horizon_frames)`. Falls back to 0.5 with `fully_dynamic = true`
/// when no frame qualifies.
pub fn static_level(
    values: &[f64],
    valid: &[bool],
    intervals: &[DynamicInterval],
    t0: usize,
    horizon_frames: usize,
) -> (f64, bool) {
    let mut pool: Vec<f64> = Vec::new();
    let end = t0 + horizon_frames;
    for t in (t0 + 1)..end.min(values.len()) {
        if valid[t] && !intervals.iter().any(|iv| iv.contains(t)) {
            pool.push(values[t]);
        }
    }
    if pool.is_empty() {
        return (0.5, true);
    }
    pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = pool.len() / 2;
    let median = if pool.len() % 2 == 1 {
        pool[mid]
    } else {
        0.5 * (pool[mid - 1] + pool[mid])
    };
    (median, false)
}

/// Prediction horizon layout: `channels() = round(horizon / step)` dynamic
/// channels at times `t0 + k * step`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LabelSpec {
    /// Prediction horizon in seconds.
    pub horizon: f32,
    /// Spacing of the dynamic channels in seconds.
    pub step: f32,
}

impl Default for LabelSpec {
    fn default() -> Self {
        LabelSpec {
            horizon: 3.0,
            step: 0.5,
        }
    }
}

impl LabelSpec {
    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.horizon > 0.0) || !(self.step > 0.0) {
            return Err(LabelError::BadSpec(format!(
                "horizon and step must be positive, got {} and {}",
                self.horizon, self.step
            )));
        }
        if self.channels() == 0 {
            return Err(LabelError::BadSpec(format!(
                "horizon {} with step {} yields zero channels",
                self.horizon, self.step
            )));
        }
        Ok(())
    }

    /// Number of dynamic channels.
    pub fn channels(&self) -> usize {
        (self.horizon as f64 / self.step as f64).max(0.0).round() as usize
    }
}

/// Training target for one input frame: a static occupancy channel plus
/// `k` dynamic channels with their validity masks. Dynamic values are the
/// held occupancy of the episode covering the channel's target time; cells
/// outside any episode carry 0 with a false mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTensor {
    pub width: usize,
    pub height: usize,
    pub k: usize,
    /// Timestamp of the input frame, seconds.
    pub t0: f32,
    /// Channel spacing, seconds.
    pub step: f32,
    static_p: Vec<f32>,
    dynamic_p: Vec<f32>,
    mask: Vec<bool>,
}

impl LabelTensor {
    pub fn new(width: usize, height: usize, k: usize, t0: f32, step: f32) -> Self {
        LabelTensor {
            width,
            height,
            k,
            t0,
            step,
            static_p: vec![0.0; width * height],
            dynamic_p: vec![0.0; k * width * height],
            mask: vec![false; k * width * height],
        }
    }

    #[inline]
    fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    pub fn static_at(&self, x: usize, y: usize) -> f32 {
        self.static_p[self.idx(x, y)]
    }

    pub fn set_static(&mut self, x: usize, y: usize, v: f32) {
        let i = self.idx(x, y);
        self.static_p[i] = v;
    }

    /// Dynamic channel `k` is 1-based to match the target time `t0 + k*step`.
    pub fn dynamic_at(&self, k: usize, x: usize, y: usize) -> f32 {
        debug_assert!((1..=self.k).contains(&k));
        self.dynamic_p[(k - 1) * self.width * self.height + self.idx(x, y)]
    }

    pub fn mask_at(&self, k: usize, x: usize, y: usize) -> bool {
        debug_assert!((1..=self.k).contains(&k));
        self.mask[(k - 1) * self.width * self.height + self.idx(x, y)]
    }

    pub fn set_dynamic(&mut self, k: usize, x: usize, y: usize, v: f32, masked: bool) {
        debug_assert!((1..=self.k).contains(&k));
        let i = (k - 1) * self.width * self.height + self.idx(x, y);
        self.dynamic_p[i] = v;
        self.mask[i] = masked;
    }

    pub fn static_plane(&self) -> &[f32] {
        &self.static_p
    }

    pub fn dynamic_plane(&self, k: usize) -> &[f32] {
        debug_assert!((1..=self.k).contains(&k));
        let n = self.width * self.height;
        &self.dynamic_p[(k - 1) * n..k * n]
    }

    pub fn mask_plane(&self, k: usize) -> &[bool] {
        debug_assert!((1..=self.k).contains(&k));
        let n = self.width * self.height;
        &self.mask[(k - 1) * n..k * n]
    }

    pub fn validate(&self) -> Result<(), LabelError> {
        for (i, &v) in self.static_p.iter().chain(self.dynamic_p.iter()).enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(LabelError::BadTensor(format!(
                    "plane value {v} at flat index {i} outside [0, 1]"
                )));
            }
        }
        for (i, (&v, &m)) in self.dynamic_p.iter().zip(self.mask.iter()).enumerate() {
            if !m && v != 0.0 {
                return Err(LabelError::BadTensor(format!(
                    "dynamic value {v} at flat index {i} is nonzero outside its mask"
                )));
            }
        }
        Ok(())
    }

    /// Serializes the tensor: magic `DLBL`, width u32, height u32, k u32,
    /// t0 f32 (s), step f32 (s), then the static plane, k dynamic planes
    /// (little-endian f32) and k mask planes (one byte per cell).
    pub fn write<W: Write>(&self, w: &mut W) -> Result<(), LabelError> {
        self.validate()?;
        w.write_all(b"DLBL")?;
        w.write_u32::<LE>(self.width as u32)?;
        w.write_u32::<LE>(self.height as u32)?;
        w.write_u32::<LE>(self.k as u32)?;
        w.write_f32::<LE>(self.t0)?;
        w.write_f32::<LE>(self.step)?;
        binio::write_plane_f32(w, &self.static_p)?;
        binio::write_plane_f32(w, &self.dynamic_p)?;
        binio::write_plane_bool(w, &self.mask)?;
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self, LabelError> {
        binio::expect_magic(r, b"DLBL")?;
        let width = r.read_u32::<LE>()? as usize;
        let height = r.read_u32::<LE>()? as usize;
        let k = r.read_u32::<LE>()? as usize;
        let t0 = r.read_f32::<LE>()?;
        let step = r.read_f32::<LE>()?;
        let n = width * height;
        let tensor = LabelTensor {
            width,
            height,
            k,
            t0,
            step,
            static_p: binio::read_plane_f32(r, n)?,
            dynamic_p: binio::read_plane_f32(r, k * n)?,
            mask: binio::read_plane_bool(r, k * n)?,
        };
        tensor.validate()?;
        Ok(tensor)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), LabelError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, LabelError> {
        let mut r = BufReader::new(File::open(path)?);
        LabelTensor::read(&mut r)
    }
}

/// Builds the label tensor for the frame at `t0_index`.
///
/// `frames` must cover the smoothing margin on both sides: at least
/// `smooth_radius` frames before `t0` and after `t0 + horizon`. Cell series
/// are traced by world cell, so ego motion inside the window is handled; a
/// cell that leaves the grid before a channel's target time gets a false
/// mask there.
///
/// Event detection runs on the sample window only, not the whole recording.
/// An occupancy edge outside the window (for example the filter's initial
/// convergence out of the unknown state at the start of a recording) cannot
/// open an interval that bleeds into the labels; an object that entered
/// earlier and releases the cell inside the window is still caught by the
/// unmatched-drop rule.
pub fn build_labels(
    frames: &[DogmaFrame],
    t0_index: usize,
    lspec: &LabelSpec,
    config: &DetectorConfig,
) -> Result<LabelTensor, LabelError> {
    lspec.validate()?;
    config.validate()?;
    if frames.is_empty() {
        return Err(LabelError::EmptyFrames);
    }
    let spec = frames[0].spec;
    for (i, f) in frames.iter().enumerate() {
        if f.spec != spec {
            return Err(LabelError::MixedGeometry { index: i });
        }
    }
    let period = spec.frame_period as f64;
    let horizon_frames = (lspec.horizon as f64 / period).round() as usize;
    let step_frames = (lspec.step as f64 / period).round().max(1.0) as usize;
    let k = lspec.channels();
    let margin = config.smooth_radius;
    let want_first = t0_index as i64 - margin as i64;
    let want_last = (t0_index + horizon_frames + margin).max(t0_index + k * step_frames);
    if want_first < 0 || want_last >= frames.len() {
        return Err(LabelError::WindowOutOfRange {
            want_first,
            want_last,
            have_last: frames.len() - 1,
        });
    }

    let window = &frames[want_first as usize..=want_last];
    let t0_rel = t0_index - want_first as usize;

    let t0_frame = &frames[t0_index];
    let mut tensor = LabelTensor::new(
        spec.width,
        spec.height,
        k,
        t0_frame.timestamp as f32,
        lspec.step,
    );
    for y in 0..spec.height {
        for x in 0..spec.width {
            let world = t0_frame.world_cell(x, y);
            let series = extract_cell_series(window, world);
            let intervals = detect_dynamic_intervals(&series, config);
            let held = hold_max(&series.values, &series.valid, &intervals)?;
            let (level, _fully_dynamic) =
                static_level(&series.values, &series.valid, &intervals, t0_rel, horizon_frames);
            tensor.set_static(x, y, level as f32);
            for ch in 1..=k {
                let target = t0_rel + ch * step_frames;
                let inside = intervals.iter().any(|iv| iv.contains(target));
                if inside && series.valid[target] {
                    tensor.set_dynamic(ch, x, y, held[target] as f32, true);
                } else {
                    tensor.set_dynamic(ch, x, y, 0.0, false);
                }
            }
        }
    }
    Ok(tensor)
}
