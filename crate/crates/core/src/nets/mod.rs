//! Feedforward networks, initialization, batch normalization with per-class running
//! statistics, dropout, and the SGD/Adam optimizers.

mod checkpoint;
mod network;
mod optim;
mod params;
mod spec;

pub(crate) use checkpoint::check_header;
pub use checkpoint::{NetworkCheckpoint, NETWORK_MAGIC, NETWORK_VERSION};
pub use network::{Bound, Forward, Mode, Network, Trace, BN_MOMENTUM};
pub use optim::{adam_step, sgd_step, Optimizer, OptimizerKind};
pub use params::{BatchClass, LayerParams, NormParams, Parameters, RunningStats};
pub use spec::{Activation, LayerSpec, NetworkSpec, OutputHead};
