//! Mini-batch training of the prediction network.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{DogmaFrame, CHANNEL_COUNT};
use crate::label::LabelTensor;

use super::adam::{Adam, AdamConfig};
use super::loss::{balanced_loss, LossValue, LossWeights};
use super::model::{backward, forward, forward_trace, NetworkParams};
use super::tensor::Tensor;
use super::NetError;

/// One training pair: a grid frame's raw channels and its label planes.
/// Stored as f32 to keep datasets small; batches are widened to f64 and
/// input-scaled on assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub width: usize,
    pub height: usize,
    /// The frame's channel planes, unscaled, in channel order.
    pub input: Vec<f32>,
    /// Target planes: the static map, then one plane per horizon step.
    pub target: Vec<f32>,
    /// Supervision flags matching `target` (the static plane is always
    /// fully supervised; dynamic planes only inside labelled episodes).
    pub mask: Vec<bool>,
}

impl Sample {
    /// Pairs a frame with the labels built for it.
    pub fn from_frame_labels(frame: &DogmaFrame, labels: &LabelTensor) -> Result<Self, NetError> {
        let spec = frame.spec;
        if labels.width != spec.width || labels.height != spec.height {
            return Err(NetError::BadInput(format!(
                "labels are {}x{}, frame is {}x{}",
                labels.width, labels.height, spec.width, spec.height
            )));
        }
        let cells = spec.cells();
        let mut input = Vec::with_capacity(CHANNEL_COUNT * cells);
        for channel in crate::grid::Channel::ALL {
            input.extend_from_slice(frame.plane(channel));
        }
        let mut target = Vec::with_capacity((1 + labels.k) * cells);
        let mut mask = Vec::with_capacity((1 + labels.k) * cells);
        target.extend_from_slice(labels.static_plane());
        mask.extend(std::iter::repeat(true).take(cells));
        for k in 1..=labels.k {
            target.extend_from_slice(labels.dynamic_plane(k));
            mask.extend_from_slice(labels.mask_plane(k));
        }
        Ok(Sample {
            width: spec.width,
            height: spec.height,
            input,
            target,
            mask,
        })
    }

    /// Number of horizon channels in the target.
    pub fn horizon_steps(&self) -> usize {
        let cells = self.width * self.height;
        self.target.len() / cells - 1
    }
}

/// Training schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Total optimizer steps (not epochs).
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 2000,
            batch_size: 2,
            seed: 7,
            adam: AdamConfig::default(),
            weights: LossWeights::default(),
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LossRow {
    pub iteration: usize,
    pub loss: f64,
    pub static_loss: f64,
    pub dynamic_loss: f64,
}

/// Checks that every sample fits the network's input and output layout.
fn check_samples(params: &NetworkParams, samples: &[Sample]) -> Result<(), NetError> {
    let spec = params.spec();
    if samples.is_empty() {
        return Err(NetError::BadInput("no training samples".to_string()));
    }
    let (w, h) = (samples[0].width, samples[0].height);
    let d = spec.spatial_divisor();
    if w % d != 0 || h % d != 0 {
        return Err(NetError::BadInput(format!(
            "sample grid {w}x{h} not divisible by the downsampling factor {d}"
        )));
    }
    for (i, s) in samples.iter().enumerate() {
        let cells = s.width * s.height;
        if (s.width, s.height) != (w, h) {
            return Err(NetError::BadInput(format!(
                "sample {i} is {}x{}, sample 0 is {w}x{h}",
                s.width, s.height
            )));
        }
        if s.input.len() != spec.in_channels * cells {
            return Err(NetError::BadInput(format!(
                "sample {i} has {} input values, network wants {}",
                s.input.len(),
                spec.in_channels * cells
            )));
        }
        if s.target.len() != spec.out_channels() * cells || s.mask.len() != s.target.len() {
            return Err(NetError::BadInput(format!(
                "sample {i} has {} target values, network predicts {}",
                s.target.len(),
                spec.out_channels() * cells
            )));
        }
    }
    Ok(())
}

/// Widens a batch of samples into network input, target, and mask buffers.
fn assemble_batch(
    params: &NetworkParams,
    samples: &[Sample],
    picks: &[usize],
) -> (Tensor, Tensor, Vec<bool>) {
    let spec = params.spec();
    let (w, h) = (samples[picks[0]].width, samples[picks[0]].height);
    let n = picks.len();
    let mut input = Tensor::zeros(n, spec.in_channels, h, w);
    let mut target = Tensor::zeros(n, spec.out_channels(), h, w);
    let mut mask = vec![false; target.len()];
    let cells = w * h;
    for (bi, &pick) in picks.iter().enumerate() {
        let s = &samples[pick];
        for c in 0..spec.in_channels {
            let scale = super::model::INPUT_SCALE.get(c).copied().unwrap_or(1.0);
            let dst = input.plane_mut(bi, c);
            let src = &s.input[c * cells..(c + 1) * cells];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = v as f64 * scale;
            }
        }
        for c in 0..spec.out_channels() {
            let dst = target.plane_mut(bi, c);
            let src = &s.target[c * cells..(c + 1) * cells];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = v as f64;
            }
            let mstart = (bi * spec.out_channels() + c) * cells;
            mask[mstart..mstart + cells].copy_from_slice(&s.mask[c * cells..(c + 1) * cells]);
        }
    }
    (input, target, mask)
}

/// Runs `config.iterations` Adam steps over epoch-shuffled mini-batches,
/// returning one [`LossRow`] per iteration. `progress` sees each row as it
/// is produced. Training aborts with [`NetError::Diverged`] the moment the
/// loss stops being finite, leaving the parameters untouched by that step.
pub fn train(
    params: &mut NetworkParams,
    samples: &[Sample],
    config: &TrainConfig,
    mut progress: impl FnMut(&LossRow),
) -> Result<Vec<LossRow>, NetError> {
    check_samples(params, samples)?;
    if config.iterations == 0 || config.batch_size == 0 {
        return Err(NetError::BadInput(
            "iterations and batch size must be positive".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(params.parameter_count(), config.adam);
    let mut rows = Vec::with_capacity(config.iterations);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut cursor = order.len(); // forces a shuffle on the first batch
    for iteration in 0..config.iterations {
        let mut picks = Vec::with_capacity(config.batch_size);
        while picks.len() < config.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            picks.push(order[cursor]);
            cursor += 1;
        }
        let (input, target, mask) = assemble_batch(params, samples, &picks);
        let trace = forward_trace(params, &input);
        let (value, grad_pred) = balanced_loss(trace.output(), &target, &mask, &config.weights);
        if !value.total.is_finite() {
            return Err(NetError::Diverged { iteration });
        }
        let grad = backward(params, &trace, &grad_pred);
        adam.step(params.data_mut(), &grad);
        let row = LossRow {
            iteration,
            loss: value.total,
            static_loss: value.static_part,
            dynamic_loss: value.dynamic_part,
        };
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}

/// Mean per-sample loss of the whole dataset under the current parameters,
/// leaving them untouched. Per-batch losses from [`train`] vary with each
/// batch's dynamic content; this is the stable number to compare across
/// training stages or against a held-out set. Runs one sample at a time to
/// bound memory.
pub fn dataset_loss(
    params: &NetworkParams,
    samples: &[Sample],
    weights: &LossWeights,
) -> Result<LossValue, NetError> {
    check_samples(params, samples)?;
    let mut sum = LossValue {
        total: 0.0,
        static_part: 0.0,
        dynamic_part: 0.0,
    };
    for i in 0..samples.len() {
        let (input, target, mask) = assemble_batch(params, samples, &[i]);
        let output = forward(params, &input);
        let (value, _) = balanced_loss(&output, &target, &mask, weights);
        sum.total += value.total;
        sum.static_part += value.static_part;
        sum.dynamic_part += value.dynamic_part;
    }
    let n = samples.len() as f64;
    sum.total /= n;
    sum.static_part /= n;
    sum.dynamic_part /= n;
    Ok(sum)
}

/// Writes the training log as CSV with a header row.
pub fn write_loss_csv(path: &Path, rows: &[LossRow]) -> Result<(), NetError> {
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<LossRow>, NetError> {
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
