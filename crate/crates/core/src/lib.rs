//! Mode-regularized GAN training and mode-coverage evaluation on synthetic 2-d data.
//!
//! The numerical core ([`autodiff`], [`nets`], [`objectives`]) is generic over
//! [`Scalar`]; everything above it runs in `f64` through the aliases below.

pub mod autodiff;
pub mod cli;
pub mod data;
pub mod error;
pub mod heatmap;
pub mod io;
pub mod metrics;
pub mod nets;
pub mod objectives;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default floating-point type for training and evaluation.
pub type Real = f64;

pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tensor32 = autodiff::Tensor<f32>;
pub type Graph64 = autodiff::Graph<f64>;
pub type Graph32 = autodiff::Graph<f32>;
pub type Network64 = nets::Network<f64>;
pub type Network32 = nets::Network<f32>;
pub type Parameters64 = nets::Parameters<f64>;
pub type Optimizer64 = nets::Optimizer<f64>;
