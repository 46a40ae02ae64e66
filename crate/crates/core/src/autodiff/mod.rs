//! Dense tensors and a define-by-run reverse-mode differentiation graph.

mod gradcheck;
mod graph;
mod tensor;

pub use gradcheck::{grad_check, GradCheck};
pub use graph::{log_sigmoid, sigmoid, Gradients, Graph, NodeId, BN_VAR_FLOOR};
pub use tensor::Tensor;
