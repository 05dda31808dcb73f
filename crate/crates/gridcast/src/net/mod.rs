//! Learned future-occupancy prediction.
//!
//! Everything here is self-contained f64 numerics: a rank-4 [`tensor`],
//! strided [`conv`]olutions with their exact adjoint transpose, the
//! class-balanced [`loss`], an [`adam`] optimizer, the encoder–decoder
//! [`model`] itself, a mini-batch [`train`]er, and the [`checkpoint`] file
//! format. The network consumes one dynamic grid frame and emits a static
//! occupancy map plus one future occupancy map per horizon step.

use std::io;

use thiserror::Error;

pub mod act;
pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod loss;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use loss::{balanced_loss, LossValue, LossWeights};
pub use model::{
    backward, forward, forward_trace, frame_to_input, predict, ForwardTrace, LayerDef,
    NetworkParams, NetworkSpec, INPUT_SCALE,
};
pub use tensor::Tensor;
pub use train::{dataset_loss, read_loss_csv, train, write_loss_csv, LossRow, Sample, TrainConfig};

#[derive(Debug, Error)]
pub enum NetError {
    /// The topology description is unusable.
    #[error("bad network spec: {0}")]
    BadSpec(String),

    /// Input data does not fit the network.
    #[error("bad network input: {0}")]
    BadInput(String),

    /// A checkpoint file disagrees with the topology it claims to store.
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    /// The training loss left the finite numbers.
    #[error("training diverged at iteration {iteration}: loss is not finite")]
    Diverged { iteration: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] io::Error),
}
