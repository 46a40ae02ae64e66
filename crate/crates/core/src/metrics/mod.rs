//! Evaluation: inception and MODE scores, mode coverage (#Miss, KL), and the noisy
//! third-party discriminator used to estimate missing probability mass.

mod coverage;
mod estimator;
mod report;
mod scores;

pub use coverage::{mode_coverage, mode_coverage_at, CaptureRule, CoverageReport, KL_SMOOTHING};
pub use estimator::{missing_mode_estimate, MissingModeConfig, MissingModeResult};
pub use report::{evaluate_samples, sample_generator, MetricsReport, MissingModeRow, REPORT_CSV_HEADER};
pub use scores::{
    inception_score, inception_score_from_posteriors, kl_divergence, marginal, mixture_posteriors,
    mode_score, mode_score_from_posteriors, LabelDist,
};
