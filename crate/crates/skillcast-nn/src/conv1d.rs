//! 1-D convolution over a sequence, stride 1, zero "same" padding, ReLU.
//!
//! Padding totals `kernel - 1` and goes on the left first (`ceil` on the
//! left, `floor` on the right), so position `t` mostly looks backward in
//! time; output length always equals input length.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{init_uniform, Param, SequenceLayer};
use crate::tensor::Tensor;

pub const MIN_KERNEL: usize = 2;
pub const MAX_KERNEL: usize = 64;

pub struct Conv1d {
    in_channels: usize,
    filters: usize,
    kernel: usize,
    pad_left: usize,
    w: Param, // [filters, in_channels, kernel]
    b: Param, // [filters]
    cache: Option<Cache>,
}

struct Cache {
    input: Tensor, // [T, C]
    pre: Tensor,   // [T, F] pre-activation (for the ReLU mask)
}

impl Conv1d {
    pub fn new(
        prefix: &str,
        in_channels: usize,
        filters: usize,
        kernel: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if !(MIN_KERNEL..=MAX_KERNEL).contains(&kernel) {
            return Err(NnError::Config(format!(
                "kernel size {kernel} outside [{MIN_KERNEL}, {MAX_KERNEL}]"
            )));
        }
        if in_channels == 0 || filters == 0 {
            return Err(NnError::Config(
                "conv1d needs at least one channel and one filter".into(),
            ));
        }
        let fan_in = in_channels * kernel;
        let w = Param::new(
            format!("{prefix}.w"),
            init_uniform(rng, fan_in, &[filters, in_channels, kernel]),
        );
        let b = Param::new(format!("{prefix}.b"), Tensor::zeros(&[filters]));
        Ok(Self {
            in_channels,
            filters,
            kernel,
            pad_left: kernel / 2,
            w,
            b,
            cache: None,
        })
    }

    fn weight(&self, f: usize, c: usize, k: usize) -> f64 {
        self.w.value.data()[(f * self.in_channels + c) * self.kernel + k]
    }

    fn weight_grad_mut(&mut self, f: usize, c: usize, k: usize) -> &mut f64 {
        &mut self.w.grad.data_mut()[(f * self.in_channels + c) * self.kernel + k]
    }
}

impl SequenceLayer for Conv1d {
    fn kind(&self) -> &'static str {
        "conv1d"
    }

    fn in_width(&self) -> usize {
        self.in_channels
    }

    fn out_width(&self) -> usize {
        self.filters
    }

    fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let shape = input.shape();
        if shape.len() != 2 || shape[1] != self.in_channels {
            return Err(NnError::Shape(format!(
                "conv1d expected input [steps, {}], got {:?}",
                self.in_channels, shape
            )));
        }
        let steps = shape[0];
        if steps == 0 {
            return Err(NnError::Shape("conv1d input has zero steps".into()));
        }
        let mut pre = Tensor::zeros(&[steps, self.filters]);
        for t in 0..steps {
            for f in 0..self.filters {
                let mut acc = self.b.value.data()[f];
                for k in 0..self.kernel {
                    let s = t + k;
                    if s < self.pad_left {
                        continue; // left zero padding
                    }
                    let s = s - self.pad_left;
                    if s >= steps {
                        continue; // right zero padding
                    }
                    let row = input.row(s);
                    for (c, xv) in row.iter().enumerate() {
                        acc += self.weight(f, c, k) * xv;
                    }
                }
                pre.set(t, f, acc);
            }
        }
        let mut out = pre.clone();
        for v in out.data_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.cache = Some(Cache {
            input: input.clone(),
            pre,
        });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NnError::Config("conv1d backward called before forward".into()))?;
        let steps = cache.input.shape()[0];
        if grad_out.shape() != [steps, self.filters] {
            return Err(NnError::Shape(format!(
                "conv1d expected output gradient [{steps}, {}], got {:?}",
                self.filters,
                grad_out.shape()
            )));
        }
        // ReLU gate: zero pre-activations contribute nothing.
        let mut dpre = grad_out.clone();
        for (g, p) in dpre.data_mut().iter_mut().zip(cache.pre.data()) {
            if *p <= 0.0 {
                *g = 0.0;
            }
        }

        let mut grad_in = Tensor::zeros(&[steps, self.in_channels]);
        for t in 0..steps {
            for f in 0..self.filters {
                let g = dpre.at(t, f);
                if g == 0.0 {
                    continue;
                }
                self.b.grad.data_mut()[f] += g;
                for k in 0..self.kernel {
                    let s = t + k;
                    if s < self.pad_left {
                        continue;
                    }
                    let s = s - self.pad_left;
                    if s >= steps {
                        continue;
                    }
                    for c in 0..self.in_channels {
                        let xv = cache.input.at(s, c);
                        *self.weight_grad_mut(f, c, k) += g * xv;
                        grad_in.row_mut(s)[c] += g * self.weight(f, c, k);
                    }
                }
            }
        }
        self.cache = Some(cache);
        Ok(grad_in)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}
