//! Minimal reverse-mode autodiff used by every trainable component.

pub mod gradcheck;
mod graph;
mod optim;
mod params;

pub use graph::{sigmoid, Backward, Graph, Var};
pub use optim::Adam;
pub use params::{Gradients, Mat, ParamId, ParamStore};
