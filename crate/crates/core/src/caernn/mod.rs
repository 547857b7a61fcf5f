//! Correspondence autoencoder RNN (CAE-RNN).
//!
//! A stack of GRU layers encodes a variable-length frame sequence; a linear
//! map from the top layer's final state gives the fixed-size embedding. The
//! decoder is a second GRU stack that receives the embedding as its input at
//! every step and emits frames through a linear output layer. Training first
//! reconstructs each token from itself, then reconstructs a different token
//! of the same word type, minimizing the summed squared frame error.

mod adam;
mod checkpoint;
mod layout;
mod network;
mod train;

pub use adam::{Adam, AdamState};
pub use checkpoint::{checkpoint_bytes, checkpoint_from_bytes, read_checkpoint, write_checkpoint};
pub use layout::{Architecture, TensorSpec};
pub use network::{frame_loss, Embedding, ModelParams};
pub use train::{pretrain_autoencoder, train_cae, EpochStats, TrainConfig, TrainLog, PRETRAIN_PHASE, TRAIN_PHASE};

/// Floating-point type the network can run in (f32 for training, f64 for
/// gradient checks).
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + std::iter::Sum
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::fmt::Debug
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + std::iter::Sum
        + std::ops::AddAssign
        + std::ops::SubAssign
        + std::ops::MulAssign
        + std::fmt::Debug
        + Default
        + Send
        + Sync
        + 'static
{
}
