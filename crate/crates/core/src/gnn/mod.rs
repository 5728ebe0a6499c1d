//! Crystal-graph-convolution classifier.
//!
//! Three residual conv layers, global average pooling, a dense ReLU layer,
//! dropout and a sigmoid head. Everything is `f64`; gradients are computed by
//! hand-written reverse mode over the same activations the forward pass
//! produces.

mod model;
mod params;
mod train;

pub use model::{crystal_conv, forward, gradient, loss, mean_loss, predict, predict_all, Dropout, Forward, PROB_CLAMP};
pub use params::{ModelDims, ModelParams, DEFAULT_LAYERS};
pub use train::{train, TrainConfig, TrainReport, Trainer, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
