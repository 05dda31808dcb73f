//! Pipeline plumbing behind the `gridcast` binary.
//!
//! Every subcommand follows the same shape: load the effective
//! [`PipelineConfig`] (file plus `--set` overrides), record a
//! [`RunManifest`] into the output directory before doing any work, run the
//! owning module, then finalize the manifest with the wall-clock end or the
//! error. All data artifacts are deterministic under a fixed seed and
//! config; only the manifest carries timestamps.

mod commands;
mod config;
mod dataset;
mod manifest;
mod split;

pub use commands::{
    cmd_eval, cmd_inject, cmd_label, cmd_predict_net, cmd_predict_particle, cmd_report,
    cmd_simulate, cmd_train, EvalArgs, InjectArgs, LabelArgs, PredictNetArgs,
    PredictParticleArgs, ReportArgs, SimulateArgs, TrainArgs,
};
pub use config::PipelineConfig;
pub use dataset::{
    dynamic_cell_fraction, label_sequence, load_samples, sample_t0_indices, write_fraction_csv,
    write_labels_dir, FractionRow,
};
pub use manifest::RunManifest;
pub use split::{split_dataset, Split, SplitFractions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    /// The command line or config asks for something contradictory.
    #[error("{0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),

    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),

    #[error(transparent)]
    Label(#[from] crate::label::LabelError),

    #[error(transparent)]
    Net(#[from] crate::net::NetError),

    #[error(transparent)]
    Particle(#[from] crate::particle::ParticleError),

    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
