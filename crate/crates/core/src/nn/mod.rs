//! Feed-forward networks, losses, optimizers and the training loop.

mod check;
mod layer;
mod loss;
mod network;
mod optim;
mod train;

use thiserror::Error;

use crate::activation::ActivationError;
use crate::tensor::TensorError;

pub use check::{network_grad_check, NetworkCheckOptions};
pub use layer::{ActivationLayer, Dense, Layer};
pub use loss::{accuracy, loss_eval, LossKind, Targets};
pub use network::{Network, ParamSlot};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{evaluate, train, Divergence, EpochRecord, Samples, TrainConfig, TrainReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("backward called without a matching forward pass")]
    MissingCache,
    #[error("non-finite gradient for parameter {param}")]
    NonFiniteGradient { param: String },
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
