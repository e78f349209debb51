//! Minimal dense-tensor engine with reverse-mode automatic differentiation.
//!
//! Layout is row-major `[N,C,H,W]` throughout and convolution follows the
//! cross-correlation convention (no kernel flip). The engine is generic over
//! [`Scalar`]: models train in `f32`, gradient checks instantiate `f64`.

pub mod gradcheck;
pub mod graph;
pub mod kernels;
pub mod optim;
pub mod scalar;

pub use graph::{Graph, TensorError, TensorId};
pub use kernels::softmax_slice;
pub use optim::SgdMomentum;
pub use scalar::Scalar;
