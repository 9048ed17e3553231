//! Activation functions: the classical Wendland family, the enhanced Wendland
//! activation, and the baseline activations it is compared against.

mod baseline;
mod enhanced;
mod spec;
mod wendland;

use thiserror::Error;

use crate::tensor::TensorError;

pub use baseline::{baseline_eval, baseline_grad, Phase};
pub use enhanced::{
    enhanced_backward, enhanced_forward, enhanced_radial, enhanced_radial_dparams, enhanced_radial_dr,
    radial_parts, EnhancedWendlandParams, NormMode, RadialGrad, RadialParts, TrainableMask,
    CHANNEL_NORM_GUARD, LOG_LIMIT, MAX_DEGREE,
};
pub use spec::{ActivationKind, ActivationSpec, ParamSchema};
pub use wendland::{wendland_c0, wendland_c2, wendland_c4};

pub(crate) use baseline::{pointwise_derivative, pointwise_param_grad, pointwise_value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActivationError {
    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("upstream gradient shape {actual:?} does not match input shape {expected:?}")]
    Shape { expected: Vec<usize>, actual: Vec<usize> },
    #[error("cannot parse activation `{token}`: {reason}")]
    Parse { token: String, reason: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
