use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    /// Tensor or layer dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A layer or optimizer was configured with an out-of-range value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A gradient became NaN or infinite before the optimizer step.
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGrad(String),
}

pub type Result<T> = std::result::Result<T, NnError>;
