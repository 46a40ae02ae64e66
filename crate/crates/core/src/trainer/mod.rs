//! Training loops for the plain, regularized and manifold-diffusion GANs, run
//! checkpoints, and the hyperparameter grid search.

mod config;
mod engine;
mod grid;
mod history;

pub use config::{
    Algorithm, ExperimentConfig, GridSpec, MixtureConfig, NetDesc, OptimConfig, TrainConfig, CONFIG_VERSION,
};
pub use engine::{
    derive_seed, train, train_gan, train_mdgan, train_reg_gan, Models, Slot, TrainOutcome, Trainer, HELDOUT_SIZE,
    RUN_MAGIC, RUN_VERSION,
};
pub use grid::{grid_search, Cell, CellResult, GridResults, DEFAULT_BUDGET, HISTOGRAM_BIN, RESULTS_CSV_HEADER};
pub use history::{EvalRecord, StepRecord, TrainHistory, HISTORY_CSV_HEADER};
