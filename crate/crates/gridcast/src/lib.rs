//! Future-occupancy prediction for dynamic occupancy grid maps.
//!
//! The crate covers the full pipeline:
//!
//! - [`grid`]: grid geometry, the seven-channel cell state, occupancy
//!   probability, ego-centered origin shifts and the binary frame format.
//! - [`sim`]: synthetic street scenes rendered into measurement-realistic
//!   frame sequences, with ray-cast occlusion and patch injection.
//! - [`label`]: automatic static/dynamic separation of per-cell occupancy
//!   histories into training label tensors.
//! - [`net`]: a from-scratch convolutional encoder-decoder (tensors,
//!   convolution and its transpose, balanced loss, Adam, training loop,
//!   checkpoints).
//! - [`particle`]: a constant-velocity Monte-Carlo baseline predictor.
//! - [`eval`]: ROC/AUC comparison of both predictors against future frames
//!   and RGB overlay rendering.
//! - [`run`]: run configuration, manifests, dataset plumbing and the
//!   subcommand implementations behind the `gridcast` binary.
//!
//! The `examples/` directory holds one runnable walk-through per capability;
//! start with `cargo run --example simulate_downtown`.

mod binio;

pub mod eval;
pub mod grid;
pub mod label;
pub mod net;
pub mod particle;
pub mod run;
pub mod sim;

pub use eval::{binarize_truth, roc_curve, EvalError, PredictionPlane, RocCurve, TruthCell};
pub use grid::{occupancy_probability, CellSeries, CellState, DogmaFrame, GridError, GridSpec};
pub use label::{
    build_labels, detect_dynamic_intervals, hold_max, smooth_series, static_level,
    DetectorConfig, DynamicInterval, LabelError, LabelSpec, LabelTensor,
};
pub use net::{NetError, NetworkParams, NetworkSpec};
pub use particle::{
    predict_particles, predict_particles_from, CountGrid, ParticleConfig, ParticleError,
};
pub use run::{PipelineConfig, RunError, RunManifest};
pub use sim::{simulate, Scenario, SimConfig, SimError};
