//! Minimal reverse-mode neural network engine: dense, 2D convolution, 2D
//! transposed convolution, leaky-ReLU/tanh/sigmoid activations, inverted
//! dropout and Adam. Generic over f32/f64 so gradient checks run in full
//! double precision while large trainings can use single precision.

mod adam;
mod checkpoint;
mod conv;
mod layer;
mod network;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{load_network, save_network};
pub use layer::{Activation, Layer, LayerSpec};
pub use network::{ForwardCache, Mode, Network, ParamGrads};
pub use tensor::{Scalar, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error in layer {layer}: {message}")]
    Shape { layer: usize, message: String },
    #[error("state error: {0}")]
    State(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
