//! The pipeline configuration file.
//!
//! One TOML file configures every stage; each section mirrors the owning
//! module's config struct and defaults to it, so an empty file (or none at
//! all) reproduces the library defaults. Any key can be overridden from the
//! command line with repeated `--set section.key=value` flags, where the
//! value is parsed as TOML (so `--set net.widths=[8,16]` works) and falls
//! back to a plain string.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::split::SplitFractions;
use super::RunError;
use crate::grid::GridSpec;
use crate::label::{DetectorConfig, LabelSpec};
use crate::net::{AdamConfig, LossWeights, NetworkSpec, TrainConfig};
use crate::particle::ParticleConfig;
use crate::sim::SimConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub grid: GridSection,
    pub sim: SimSection,
    pub label: LabelSection,
    pub net: NetSection,
    pub train: TrainSection,
    pub particle: ParticleSection,
    pub split: SplitFractions,
    /// Seed for the dataset split shuffle.
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub width: usize,
    pub height: usize,
    pub cell_width: f32,
    pub period: f32,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        GridSection {
            width: g.width,
            height: g.height,
            cell_width: g.cell_width,
            period: g.frame_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub evidence_rate: f32,
    pub forget_rate: f32,
    pub var_prior: f32,
    pub mass_noise: f32,
    pub vel_noise: f32,
    pub sensor_east: f32,
    pub sensor_north: f32,
    pub occlusion: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        SimSection {
            evidence_rate: s.evidence_rate,
            forget_rate: s.forget_rate,
            var_prior: s.var_prior,
            mass_noise: s.mass_noise,
            vel_noise: s.vel_noise,
            sensor_east: s.sensor_offset.0,
            sensor_north: s.sensor_offset.1,
            occlusion: s.occlusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    pub horizon: f32,
    pub step: f32,
    pub smooth_sigma: f64,
    pub smooth_radius: usize,
    pub curvature_threshold: f64,
    pub nms_window: usize,
    pub min_peak_rise: f64,
    /// Frames between consecutive samples drawn from one recording.
    pub stride: usize,
}

impl Default for LabelSection {
    fn default() -> Self {
        let l = LabelSpec::default();
        let d = DetectorConfig::default();
        LabelSection {
            horizon: l.horizon,
            step: l.step,
            smooth_sigma: d.smooth_sigma,
            smooth_radius: d.smooth_radius,
            curvature_threshold: d.curvature_threshold,
            nms_window: d.nms_window,
            min_peak_rise: d.min_peak_rise,
            stride: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSection {
    pub widths: Vec<usize>,
    pub kernel: usize,
}

impl Default for NetSection {
    fn default() -> Self {
        let n = NetworkSpec::default();
        NetSection {
            widths: n.widths,
            kernel: n.kernel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: usize,
    pub batch_size: usize,
    /// Seeds both parameter initialization and the batch shuffle.
    pub seed: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lambda_static: f64,
    pub lambda_dynamic: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            iterations: t.iterations,
            batch_size: t.batch_size,
            seed: t.seed,
            learning_rate: t.adam.learning_rate,
            beta1: t.adam.beta1,
            beta2: t.adam.beta2,
            epsilon: t.adam.epsilon,
            lambda_static: t.weights.lambda_static,
            lambda_dynamic: t.weights.lambda_dynamic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleSection {
    pub count: usize,
    pub speed_threshold: f64,
    pub variance_threshold: f64,
    pub per_axis_variance: bool,
    pub horizons: Vec<f32>,
    pub seed: u64,
}

impl Default for ParticleSection {
    fn default() -> Self {
        let p = ParticleConfig::default();
        ParticleSection {
            count: p.particle_count,
            speed_threshold: p.speed_threshold,
            variance_threshold: p.variance_threshold,
            per_axis_variance: p.per_axis_variance,
            horizons: p.horizons,
            seed: p.seed,
        }
    }
}

impl PipelineConfig {
    /// Loads the file (all keys optional) and applies `--set` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, RunError> {
        let mut root: toml::Table = match path {
            Some(p) => fs::read_to_string(p)?
                .parse()
                .map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?,
            None => toml::Table::new(),
        };
        for entry in overrides {
            let (key, value) = entry
                .split_once('=')
                .ok_or_else(|| RunError::Usage(format!("--set expects key=value, got {entry}")))?;
            apply_override(&mut root, key.trim(), value.trim())?;
        }
        let config: PipelineConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e| RunError::Config(e.to_string()))?;
        config.grid()?; // validates the grid section eagerly
        Ok(config)
    }

    pub fn grid(&self) -> Result<GridSpec, RunError> {
        Ok(GridSpec::new(
            self.grid.width,
            self.grid.height,
            self.grid.cell_width,
            self.grid.period,
        )?)
    }

    pub fn sim_config(&self) -> Result<SimConfig, RunError> {
        let config = SimConfig {
            grid: self.grid()?,
            evidence_rate: self.sim.evidence_rate,
            forget_rate: self.sim.forget_rate,
            var_prior: self.sim.var_prior,
            mass_noise: self.sim.mass_noise,
            vel_noise: self.sim.vel_noise,
            sensor_offset: (self.sim.sensor_east, self.sim.sensor_north),
            occlusion: self.sim.occlusion,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn label_spec(&self) -> LabelSpec {
        LabelSpec {
            horizon: self.label.horizon,
            step: self.label.step,
        }
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            smooth_sigma: self.label.smooth_sigma,
            smooth_radius: self.label.smooth_radius,
            curvature_threshold: self.label.curvature_threshold,
            nms_window: self.label.nms_window,
            min_peak_rise: self.label.min_peak_rise,
        }
    }

    /// Network spec for `horizon_steps` output channels spaced `step_seconds`
    /// apart — both come from the labels being trained on.
    pub fn net_spec(&self, horizon_steps: usize, step_seconds: f32) -> NetworkSpec {
        NetworkSpec {
            in_channels: crate::grid::CHANNEL_COUNT,
            horizon_steps,
            step_seconds,
            widths: self.net.widths.clone(),
            kernel: self.net.kernel,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.train.iterations,
            batch_size: self.train.batch_size,
            seed: self.train.seed,
            adam: AdamConfig {
                learning_rate: self.train.learning_rate,
                beta1: self.train.beta1,
                beta2: self.train.beta2,
                epsilon: self.train.epsilon,
            },
            weights: LossWeights {
                lambda_static: self.train.lambda_static,
                lambda_dynamic: self.train.lambda_dynamic,
            },
        }
    }

    pub fn particle_config(&self) -> ParticleConfig {
        ParticleConfig {
            particle_count: self.particle.count,
            speed_threshold: self.particle.speed_threshold,
            variance_threshold: self.particle.variance_threshold,
            per_axis_variance: self.particle.per_axis_variance,
            horizons: self.particle.horizons.clone(),
            seed: self.particle.seed,
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value, RunError> {
        Ok(serde_json::to_value(self)?)
    }
}

/// Writes `value` (parsed as TOML, else kept as a string) at the dotted
/// `key` path, creating intermediate tables.
fn apply_override(root: &mut toml::Table, key: &str, value: &str) -> Result<(), RunError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(RunError::Usage(format!("bad override key {key:?}")));
    }
    let leaf = parts.pop().expect("split yields at least one part");

    let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => toml::Value::String(value.to_string()),
    };

    let mut table = root;
    for part in parts {
        table = table
            .entry(part)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                RunError::Usage(format!("override {key:?} descends into a non-table value"))
            })?;
    }
    table.insert(leaf.to_string(), parsed);
    Ok(())
}
