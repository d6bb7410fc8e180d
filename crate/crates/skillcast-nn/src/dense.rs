//! Fully connected output head: a single affine map on a vector.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{init_uniform, Param};
use crate::tensor::{matvec, matvec_t_acc, outer_acc, Tensor};

/// `y = W x + b` with `W: [out, in]`.
///
/// Used as the readout on the last hidden state, so unlike the recurrent
/// layers it maps a plain vector, not a sequence.
pub struct Dense {
    in_width: usize,
    out_width: usize,
    w: Param,
    b: Param,
    cached_input: Option<Tensor>,
}

impl Dense {
    pub fn new(prefix: &str, in_width: usize, out_width: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = Param::new(
            format!("{prefix}.w"),
            init_uniform(rng, in_width, &[out_width, in_width]),
        );
        let b = Param::new(format!("{prefix}.b"), Tensor::zeros(&[out_width]));
        Self {
            in_width,
            out_width,
            w,
            b,
            cached_input: None,
        }
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        if input.shape() != [self.in_width] {
            return Err(NnError::Shape(format!(
                "dense expected input [{}], got {:?}",
                self.in_width,
                input.shape()
            )));
        }
        let mut out = vec![0.0; self.out_width];
        matvec(&self.w.value, input.data(), self.b.value.data(), &mut out);
        self.cached_input = Some(input.clone());
        Tensor::new(vec![self.out_width], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        if grad_out.shape() != [self.out_width] {
            return Err(NnError::Shape(format!(
                "dense expected output gradient [{}], got {:?}",
                self.out_width,
                grad_out.shape()
            )));
        }
        let input = self
            .cached_input
            .as_ref()
            .ok_or_else(|| NnError::Config("dense backward called before forward".into()))?;
        let g = grad_out.data();
        outer_acc(&mut self.w.grad, g, input.data());
        for (db, gi) in self.b.grad.data_mut().iter_mut().zip(g) {
            *db += gi;
        }
        let mut grad_in = vec![0.0; self.in_width];
        matvec_t_acc(&self.w.value, g, &mut grad_in);
        Tensor::new(vec![self.in_width], grad_in)
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn zero_grad(&mut self) {
        self.w.zero_grad();
        self.b.zero_grad();
    }
}
