//! Minimal reverse-mode automatic differentiation over dense f64 tensors,
//! with the recurrent/convolutional layers and the Adam optimizer the
//! sequence models need. Double precision throughout so finite-difference
//! checks are reliable at desk scale.

mod adam;
mod graph;
mod layers;
mod params;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use graph::{BoundParams, Graph, NodeId};
pub use layers::{GruCell, Linear};
pub use params::{ParamId, ParamSet};
pub use tensor::Tensor;
