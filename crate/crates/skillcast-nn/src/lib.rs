//! A minimal exact-gradient neural network kernel for tiny time-series
//! models: dense, LSTM, GRU, and 1-D convolution layers with hand-written
//! backward passes, mean squared error, and the Adam optimizer.
//!
//! Everything runs in `f64` on the CPU. Shapes are validated at call sites,
//! gradients are exact (checked against central finite differences in the
//! test suite), and all randomness flows through caller-provided seeded
//! generators so runs reproduce bit-for-bit.

pub mod adam;
pub mod conv1d;
pub mod dense;
pub mod error;
pub mod gradcheck;
pub mod gru;
pub mod layer;
pub mod loss;
pub mod lstm;
pub mod tensor;

pub use adam::{clip_global_norm, AdamConfig, AdamState, DEFAULT_CLIP_NORM};
pub use conv1d::{Conv1d, MAX_KERNEL, MIN_KERNEL};
pub use dense::Dense;
pub use error::{NnError, Result};
pub use gru::Gru;
pub use layer::{init_uniform, Param, SequenceLayer};
pub use loss::mse_loss;
pub use lstm::Lstm;
pub use tensor::Tensor;
