//! Convolutional actor-critic network, written without an autodiff framework.
//!
//! The standard network maps a 1x75x75 binary observation image through
//! three valid (unpadded) ReLU convolutions
//!
//! | layer | in | out | kernel | stride | output   |
//! |-------|----|-----|--------|--------|----------|
//! | conv1 | 1  | 32  | 8x8    | 4      | 32x17x17 |
//! | conv2 | 32 | 64  | 4x4    | 2      | 64x7x7   |
//! | conv3 | 64 | 64  | 3x3    | 1      | 64x5x5   |
//!
//! flattens to 1600 features, applies a shared 1600->512 ReLU layer and
//! splits into a linear actor head (2 raw outputs) and a linear critic head
//! (1 value). Two state-independent log standard deviations parameterize the
//! Gaussian exploration noise of the actor.
//!
//! Everything is generic over [`Real`] so the same code runs in `f32` for
//! training and in `f64` for gradient checks.

pub mod init;
pub mod layers;
pub mod net;
pub mod optim;
pub mod policy;
pub mod real;
pub mod tensor;
pub mod weights;

pub use net::{ForwardCache, NetSpec, PolicyNet};
pub use optim::Adam;
pub use policy::{act, squash, ActMode, ActionSample, PolicyController};
pub use real::Real;
pub use tensor::{ParamSet, Tensor};
pub use weights::{load_weights, save_weights, WeightArchive, WeightError};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("contract violation: {0}")]
    Contract(String),
}
