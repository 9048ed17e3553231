//! Wendland radial-basis activations in a small deterministic `f64` neural
//! network engine.
//!
//! - [`activation`]: classical Wendland functions, the enhanced Wendland
//!   activation with its analytic gradients, and baseline activations.
//! - [`tensor`]: dense row-major tensors.
//! - [`gradcheck`]: directional central-difference gradient checking.
//! - [`nn`]: dense networks, losses, optimizers and the training loop.
//! - [`datasets`]: sine, moons and circles generators and an IDX loader.
//! - [`rng`]: seeded ChaCha8 generator with derived substreams.

pub mod activation;
pub mod datasets;
pub mod gradcheck;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use activation::{ActivationKind, ActivationSpec, EnhancedWendlandParams, NormMode, TrainableMask};
pub use rng::Rng;
pub use tensor::Tensor;
