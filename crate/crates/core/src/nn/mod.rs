//! From-scratch 1-D residual CNN: tensors, layer kernels, the model,
//! Adam, the training loop, checkpoints, and a numeric gradient check.

pub mod checkpoint;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod ops;
pub mod optim;
pub mod scalar;
pub mod tensor;
pub mod train;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch statistics need at least 2 elements, got {elements}")]
    BatchTooSmall { elements: usize },
    #[error("non-finite gradient in group {group} at index {index}")]
    NonFiniteGradient { group: usize, index: usize },
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("checkpoint does not match this model: {0}")]
    VersionMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("i/o error")]
    Io(#[from] std::io::Error),
}

pub use checkpoint::{checkpoint_bytes, load_checkpoint, params_from_bytes, save_checkpoint};
pub use gradcheck::{check_config, gradient_check, gradient_check_faulted, GradCheckReport};
pub use model::{backward, forward_eval, forward_train, ModelConfig, ModelGrads, ModelParams, Trace};
pub use optim::{Adam, PlateauScheduler};
pub use scalar::Scalar;
pub use tensor::Tensor3;
pub use train::{history_csv, score_windows, train_model, EpochStats, TrainConfig, TrainOutcome};
