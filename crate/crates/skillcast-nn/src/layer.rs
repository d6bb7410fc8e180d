//! The common layer interface every sequence layer implements.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::Tensor;

/// A named parameter tensor with its accumulated gradient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// A layer mapping a `[steps, in_width]` sequence to `[steps, out_width]`.
///
/// `forward` caches whatever the matching `backward` needs; callers must pair
/// each `backward` with the immediately preceding `forward`. Parameter
/// gradients accumulate across calls until `zero_grad`.
pub trait SequenceLayer {
    fn kind(&self) -> &'static str;
    fn in_width(&self) -> usize;
    fn out_width(&self) -> usize;

    fn forward(&mut self, input: &Tensor) -> Result<Tensor>;

    /// Propagates `grad_out` (`[steps, out_width]`) back to the input,
    /// accumulating parameter gradients along the way.
    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor>;

    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}

/// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
///
/// The nets here are tiny; this keeps them trainable and, with a seeded
/// generator, bit-reproducible.
pub fn init_uniform(rng: &mut ChaCha8Rng, fan_in: usize, shape: &[usize]) -> Tensor {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let len: usize = shape.iter().product();
    let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape/data length agree by construction")
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
