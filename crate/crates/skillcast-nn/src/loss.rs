use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// Mean squared error and its gradient w.r.t. the prediction.
///
/// Returns `(mean((p - t)^2), 2 (p - t) / n)`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(NnError::Shape(format!(
            "mse shapes differ: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.len();
    if n == 0 {
        return Err(NnError::Shape("mse over empty tensors".into()));
    }
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    for ((g, p), t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data())
        .zip(target.data())
    {
        let d = p - t;
        loss += d * d * inv_n;
        *g = 2.0 * d * inv_n;
    }
    Ok((loss, grad))
}
