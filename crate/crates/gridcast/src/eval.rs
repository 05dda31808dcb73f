//! Scoring predictions against the frames that actually happened.
//!
//! A future frame is binarized into occupied / free / unobserved truth.
//! A predictor's output for one horizon is reduced to two planes: a static
//! occupancy map and a dynamic score in [0, 1]. Sweeping a threshold over
//! the dynamic score while the static map stays fixed yields an ROC curve
//! per horizon; the area under it is the headline comparison number.
//!
//! Cells count toward the score only when they are observed in the truth
//! frame and covered by the prediction grid — penalizing a predictor for
//! cells nobody measured would reward guessing about the void.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{occupancy_probability, DogmaFrame};
use crate::net::Tensor;
use crate::particle::CountGrid;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction/grid mismatch: {0}")]
    Mismatch(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Ground-truth state of one cell in a future frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthCell {
    /// Never measured: both masses exactly zero. Excluded from scoring.
    Unobserved,
    Free,
    Occupied,
}

/// Occupancy probability above which a truth cell counts as occupied.
pub const TRUTH_OCCUPIED_THRESHOLD: f64 = 0.55;

/// Static-map probability above which a predicted cell counts as occupied
/// regardless of its dynamic score.
pub const STATIC_PREDICTED_THRESHOLD: f64 = 0.55;

/// Binarizes a frame into per-cell truth, row-major like the grid planes.
pub fn binarize_truth(frame: &DogmaFrame) -> Vec<TruthCell> {
    let spec = frame.spec;
    let mut out = vec![TruthCell::Unobserved; spec.cells()];
    for y in 0..spec.height {
        for x in 0..spec.width {
            let cell = frame.cell(x, y);
            out[spec.index(x, y)] = if cell.m_occ == 0.0 && cell.m_free == 0.0 {
                TruthCell::Unobserved
            } else if occupancy_probability(cell.m_occ, cell.m_free) > TRUTH_OCCUPIED_THRESHOLD {
                TruthCell::Occupied
            } else {
                TruthCell::Free
            };
        }
    }
    out
}

/// One predictor's occupancy claim for one horizon, in the grid frame the
/// prediction was made from.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPlane {
    pub width: usize,
    pub height: usize,
    pub ego_offset: (i32, i32),
    /// Predicted static occupancy in [0, 1].
    pub static_p: Vec<f64>,
    /// Predicted dynamic occupancy score in [0, 1].
    pub score: Vec<f64>,
}

impl PredictionPlane {
    pub fn validate(&self) -> Result<(), EvalError> {
        let cells = self.width * self.height;
        if self.static_p.len() != cells || self.score.len() != cells {
            return Err(EvalError::Mismatch(format!(
                "planes of {} and {} values for a {}x{} grid",
                self.static_p.len(),
                self.score.len(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    /// Extracts the static channel and horizon channel `k` (1-based) from a
    /// network prediction for a single frame.
    pub fn from_network(
        pred: &Tensor,
        k: usize,
        ego_offset: (i32, i32),
    ) -> Result<Self, EvalError> {
        let (n, c, h, w) = pred.dims();
        if n != 1 {
            return Err(EvalError::Mismatch(format!(
                "expected a single-frame prediction, got batch {n}"
            )));
        }
        if k == 0 || k >= c {
            return Err(EvalError::Mismatch(format!(
                "horizon channel {k} outside 1..{c}"
            )));
        }
        Ok(PredictionPlane {
            width: w,
            height: h,
            ego_offset,
            static_p: pred.plane(0, 0).to_vec(),
            score: pred.plane(0, k).to_vec(),
        })
    }

    /// Builds the baseline's claim from the frame it started from: occupied
    /// cells persist as static unless they were classified dynamic (those
    /// moved off as particles), and the particle histogram is the score.
    pub fn from_particles(
        frame: &DogmaFrame,
        dynamic: &[bool],
        counts: &CountGrid,
    ) -> Result<Self, EvalError> {
        let spec = frame.spec;
        if dynamic.len() != spec.cells() || counts.counts.len() != spec.cells() {
            return Err(EvalError::Mismatch(format!(
                "mask of {} and counts of {} for a grid of {} cells",
                dynamic.len(),
                counts.counts.len(),
                spec.cells()
            )));
        }
        let mut static_p = vec![0.0; spec.cells()];
        for y in 0..spec.height {
            for x in 0..spec.width {
                let i = spec.index(x, y);
                if !dynamic[i] {
                    static_p[i] = frame.occupancy(x, y);
                }
            }
        }
        Ok(PredictionPlane {
            width: spec.width,
            height: spec.height,
            ego_offset: counts.ego_offset,
            static_p,
            score: counts.score(),
        })
    }
}

/// One threshold's operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub gamma: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Operating points for `gamma = 0.99` down to `0.01`, plus the area under
/// the completed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Strictest threshold first, so `fpr` is non-decreasing along the list.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps `gamma` over 0.99, 0.98, .., 0.01. A cell is predicted occupied
/// when its static map exceeds [`STATIC_PREDICTED_THRESHOLD`] or its score
/// exceeds `gamma`. With no occupied truth cells the true-positive rate is
/// defined as 1; with no free ones the false-positive rate is defined as 0.
///
/// The area is a trapezoidal sum after anchoring the curve at
/// `(0, tpr at the strictest gamma)` on the left and `(1, 1)` on the right:
/// the left anchor credits what the predictor finds at zero false-positive
/// cost, the right one completes the sweep to the accept-everything corner.
pub fn roc_curve(pred: &PredictionPlane, truth: &DogmaFrame) -> Result<RocCurve, EvalError> {
    pred.validate()?;
    let truth_cells = binarize_truth(truth);
    let tspec = truth.spec;

    // Per evaluated cell: (is truth occupied, static says occupied, score).
    let mut cells: Vec<(bool, bool, f64)> = Vec::new();
    for y in 0..pred.height {
        for x in 0..pred.width {
            let wx = x as i64 + pred.ego_offset.0 as i64;
            let wy = y as i64 + pred.ego_offset.1 as i64;
            let tx = wx - truth.ego_offset.0 as i64;
            let ty = wy - truth.ego_offset.1 as i64;
            if tx < 0 || ty < 0 || tx >= tspec.width as i64 || ty >= tspec.height as i64 {
                continue;
            }
            let t = truth_cells[tspec.index(tx as usize, ty as usize)];
            if t == TruthCell::Unobserved {
                continue;
            }
            let i = y * pred.width + x;
            cells.push((
                t == TruthCell::Occupied,
                pred.static_p[i] > STATIC_PREDICTED_THRESHOLD,
                pred.score[i],
            ));
        }
    }
    let positives = cells.iter().filter(|c| c.0).count();
    let negatives = cells.len() - positives;

    let mut points = Vec::with_capacity(99);
    for i in (1..=99).rev() {
        let gamma = i as f64 / 100.0;
        let mut tp = 0usize;
        let mut fp = 0usize;
        for &(occupied, static_hit, score) in &cells {
            if static_hit || score > gamma {
                if occupied {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let tpr = if positives == 0 {
            1.0
        } else {
            tp as f64 / positives as f64
        };
        let fpr = if negatives == 0 {
            0.0
        } else {
            fp as f64 / negatives as f64
        };
        points.push(RocPoint { gamma, tpr, fpr });
    }

    let mut auc = 0.0;
    let (mut last_fpr, mut last_tpr) = (0.0, points[0].tpr);
    for p in points.iter().chain(std::iter::once(&RocPoint {
        gamma: 0.0,
        tpr: 1.0,
        fpr: 1.0,
    })) {
        auc += (p.fpr - last_fpr) * 0.5 * (p.tpr + last_tpr);
        last_fpr = p.fpr;
        last_tpr = p.tpr;
    }
    Ok(RocCurve { points, auc })
}

/// True-positive rate of the completed curve at a false-positive budget,
/// linearly interpolated between operating points.
pub fn tpr_at_fpr(curve: &RocCurve, fpr: f64) -> f64 {
    let fpr = fpr.clamp(0.0, 1.0);
    let (mut x0, mut y0) = (0.0, curve.points.first().map_or(1.0, |p| p.tpr));
    for p in curve
        .points
        .iter()
        .chain(std::iter::once(&RocPoint {
            gamma: 0.0,
            tpr: 1.0,
            fpr: 1.0,
        }))
    {
        if p.fpr >= fpr {
            if p.fpr == x0 {
                return p.tpr.max(y0);
            }
            let f = (fpr - x0) / (p.fpr - x0);
            return y0 + f * (p.tpr - y0);
        }
        x0 = p.fpr;
        y0 = p.tpr;
    }
    1.0
}

/// One metrics CSV line: an operating point with its curve's area attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub predictor: String,
    pub horizon_s: f32,
    pub gamma: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub auc: f64,
}

/// Flattens one predictor's curve for one horizon into CSV rows.
pub fn metrics_rows(predictor: &str, horizon_s: f32, curve: &RocCurve) -> Vec<MetricsRow> {
    curve
        .points
        .iter()
        .map(|p| MetricsRow {
            predictor: predictor.to_string(),
            horizon_s,
            gamma: p.gamma,
            tpr: p.tpr,
            fpr: p.fpr,
            auc: curve.auc,
        })
        .collect()
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), EvalError> {
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Overlay rendering thresholds.
#[derive(Debug, Clone, Copy)]
pub struct OverlayConfig {
    /// Dynamic score threshold for lighting a predictor's channel.
    pub gamma: f64,
    /// Static-map probability above which the background turns light gray.
    pub static_threshold: f64,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        OverlayConfig {
            gamma: 0.5,
            static_threshold: 0.6,
        }
    }
}

/// Renders a truth frame with up to two predictions as a binary PPM (P6)
/// image, north at the top.
///
/// Channel coding per cell: red = truth occupied, green = network claims
/// occupied, blue = baseline claims occupied; agreement mixes additively
/// (truth + both predictors = white). Cells whose predicted static map
/// exceeds the threshold get a gray background, unknown space stays dark.
pub fn render_overlay<W: Write>(
    w: &mut W,
    truth: &DogmaFrame,
    net: Option<&PredictionPlane>,
    particle: Option<&PredictionPlane>,
    config: &OverlayConfig,
) -> Result<(), EvalError> {
    for plane in [net, particle].into_iter().flatten() {
        plane.validate()?;
    }
    let spec = truth.spec;
    let truth_cells = binarize_truth(truth);

    // Reads one plane's claim at a truth-grid cell via world coordinates:
    // (static hit, dynamic hit).
    let claim = |plane: Option<&PredictionPlane>, x: usize, y: usize| -> (bool, bool) {
        let Some(p) = plane else { return (false, false) };
        let wx = x as i64 + truth.ego_offset.0 as i64;
        let wy = y as i64 + truth.ego_offset.1 as i64;
        let px = wx - p.ego_offset.0 as i64;
        let py = wy - p.ego_offset.1 as i64;
        if px < 0 || py < 0 || px >= p.width as i64 || py >= p.height as i64 {
            return (false, false);
        }
        let i = py as usize * p.width + px as usize;
        (
            p.static_p[i] > config.static_threshold,
            p.static_p[i] > STATIC_PREDICTED_THRESHOLD || p.score[i] > config.gamma,
        )
    };

    write!(w, "P6\n{} {}\n255\n", spec.width, spec.height)?;
    let mut row = vec![0u8; spec.width * 3];
    for y in (0..spec.height).rev() {
        for x in 0..spec.width {
            let (net_bg, net_hit) = claim(net, x, y);
            let (part_bg, part_hit) = claim(particle, x, y);
            let base: u8 = if net_bg || part_bg { 110 } else { 30 };
            let mut px = [base, base, base];
            if truth_cells[spec.index(x, y)] == TruthCell::Occupied {
                px[0] = 230;
            }
            if net_hit {
                px[1] = 230;
            }
            if part_hit {
                px[2] = 230;
            }
            row[x * 3..x * 3 + 3].copy_from_slice(&px);
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn write_overlay_file(
    path: &Path,
    truth: &DogmaFrame,
    net: Option<&PredictionPlane>,
    particle: Option<&PredictionPlane>,
    config: &OverlayConfig,
) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    render_overlay(&mut w, truth, net, particle, config)?;
    w.flush()?;
    Ok(())
}
