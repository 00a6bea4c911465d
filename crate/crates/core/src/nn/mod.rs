//! Minimal deterministic neural-network engine in `f64`.

mod layers;
mod loss;
mod network;
mod optim;
mod tensor;

pub use layers::{
    AdaptiveAvgPool1d, AvgPool2d, BatchNorm, Conv1d, Conv2d, Layer, Linear, Mode, Param,
};
pub use loss::{bce_with_logits, sigmoid};
pub use network::Network;
pub use optim::Adam;
pub use tensor::Tensor;
