use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Mean binary cross-entropy on logits and its gradient w.r.t. the logits.
///
/// Uses `log(1 + exp(-|z|)) + max(z, 0) - z*y`, which never overflows.
pub fn bce_with_logits(logits: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    if logits.shape() != targets.shape() {
        return Err(Error::Config(format!(
            "logits {:?} vs targets {:?}",
            logits.shape(),
            targets.shape()
        )));
    }
    if let Some(bad) = targets.data().iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::Input(format!("BCE target {bad} is not 0 or 1")));
    }
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(logits.shape());
    for ((g, &z), &y) in grad.data_mut().iter_mut().zip(logits.data()).zip(targets.data()) {
        loss += (z.max(0.0) - z * y) + (-z.abs()).exp().ln_1p();
        *g = (sigmoid(z) - y) / n;
    }
    Ok((loss / n, grad))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
