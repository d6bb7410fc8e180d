//! Central finite-difference gradient checking.
//!
//! Compares every analytic parameter and input gradient produced by a
//! layer's `backward` against `(L(θ+ε) − L(θ−ε)) / 2ε` under an MSE loss.
//! Used by the test suites; not needed at inference or training time.

use crate::error::Result;
use crate::layer::SequenceLayer;
use crate::loss::mse_loss;
use crate::tensor::Tensor;
use crate::Dense;

/// Step used for the central differences.
pub const FD_EPSILON: f64 = 1e-5;

/// Symmetric relative error with a floor that keeps near-zero pairs from
/// exploding the ratio.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    /// Worst relative error over all parameter and input coordinates.
    pub max_rel_err: f64,
    /// Number of scalar gradients compared.
    pub n_checked: usize,
}

impl GradCheckReport {
    fn absorb(&mut self, fd: f64, analytic: f64) {
        let e = relative_error(fd, analytic);
        if e > self.max_rel_err {
            self.max_rel_err = e;
        }
        self.n_checked += 1;
    }
}

/// Checks a sequence layer's gradients under `mse(layer(input), target)`.
pub fn check_sequence_layer(
    layer: &mut dyn SequenceLayer,
    input: &Tensor,
    target: &Tensor,
) -> Result<GradCheckReport> {
    layer.zero_grad();
    let out = layer.forward(input)?;
    let (_, lgrad) = mse_loss(&out, target)?;
    let grad_in = layer.backward(&lgrad)?;
    let analytic: Vec<Tensor> = layer.params().iter().map(|p| p.grad.clone()).collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        n_checked: 0,
    };
    let n_params = layer.params().len();
    for pi in 0..n_params {
        let len = layer.params()[pi].value.len();
        for i in 0..len {
            let orig = layer.params()[pi].value.data()[i];
            layer.params_mut()[pi].value.data_mut()[i] = orig + FD_EPSILON;
            let lp = seq_loss(layer, input, target)?;
            layer.params_mut()[pi].value.data_mut()[i] = orig - FD_EPSILON;
            let lm = seq_loss(layer, input, target)?;
            layer.params_mut()[pi].value.data_mut()[i] = orig;
            let fd = (lp - lm) / (2.0 * FD_EPSILON);
            report.absorb(fd, analytic[pi].data()[i]);
        }
    }
    for i in 0..input.len() {
        let mut plus = input.clone();
        plus.data_mut()[i] += FD_EPSILON;
        let mut minus = input.clone();
        minus.data_mut()[i] -= FD_EPSILON;
        let lp = seq_loss(layer, &plus, target)?;
        let lm = seq_loss(layer, &minus, target)?;
        let fd = (lp - lm) / (2.0 * FD_EPSILON);
        report.absorb(fd, grad_in.data()[i]);
    }
    Ok(report)
}

fn seq_loss(layer: &mut dyn SequenceLayer, input: &Tensor, target: &Tensor) -> Result<f64> {
    let out = layer.forward(input)?;
    Ok(mse_loss(&out, target)?.0)
}

/// Checks the dense head's gradients under `mse(dense(input), target)`.
pub fn check_dense(dense: &mut Dense, input: &Tensor, target: &Tensor) -> Result<GradCheckReport> {
    dense.zero_grad();
    let out = dense.forward(input)?;
    let (_, lgrad) = mse_loss(&out, target)?;
    let grad_in = dense.backward(&lgrad)?;
    let analytic: Vec<Tensor> = dense.params().iter().map(|p| p.grad.clone()).collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        n_checked: 0,
    };
    let n_params = dense.params().len();
    for pi in 0..n_params {
        let len = dense.params()[pi].value.len();
        for i in 0..len {
            let orig = dense.params()[pi].value.data()[i];
            dense.params_mut()[pi].value.data_mut()[i] = orig + FD_EPSILON;
            let lp = mse_loss(&dense.forward(input)?, target)?.0;
            dense.params_mut()[pi].value.data_mut()[i] = orig - FD_EPSILON;
            let lm = mse_loss(&dense.forward(input)?, target)?.0;
            dense.params_mut()[pi].value.data_mut()[i] = orig;
            let fd = (lp - lm) / (2.0 * FD_EPSILON);
            report.absorb(fd, analytic[pi].data()[i]);
        }
    }
    for i in 0..input.len() {
        let mut plus = input.clone();
        plus.data_mut()[i] += FD_EPSILON;
        let mut minus = input.clone();
        minus.data_mut()[i] -= FD_EPSILON;
        let lp = mse_loss(&dense.forward(&plus)?, target)?.0;
        let lm = mse_loss(&dense.forward(&minus)?, target)?.0;
        let fd = (lp - lm) / (2.0 * FD_EPSILON);
        report.absorb(fd, grad_in.data()[i]);
    }
    Ok(report)
}
