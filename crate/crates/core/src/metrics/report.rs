use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::{sample_prior, MixtureSpec, PriorSpec};
use crate::error::Result;
use crate::io::fmt_f64;
use crate::nets::{BatchClass, Network};

use super::coverage::{mode_coverage, CaptureRule};
use super::scores::{inception_score_from_posteriors, mixture_posteriors, mode_score_from_posteriors, LabelDist};

/// One missing-mode estimator run summarized for a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingModeRow {
    pub sigma_noise: f64,
    pub tau: f64,
    pub flagged: usize,
    pub test_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub mode_score: f64,
    pub inception_score: f64,
    pub n_miss: usize,
    pub kl: f64,
    pub captured: Vec<usize>,
    pub missing_mode: Vec<MissingModeRow>,
}

pub const REPORT_CSV_HEADER: &[&str] = &[
    "n_samples",
    "mode_score",
    "inception_score",
    "n_miss",
    "kl",
    "captured",
];

impl MetricsReport {
    pub fn n_captured(&self) -> usize {
        self.captured.len()
    }

    fn captured_field(&self) -> String {
        self.captured
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Flat `key = value` record.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("n_samples".to_string(), self.n_samples.to_string()),
            ("mode_score".to_string(), fmt_f64(self.mode_score)),
            ("inception_score".to_string(), fmt_f64(self.inception_score)),
            ("n_miss".to_string(), self.n_miss.to_string()),
            ("kl".to_string(), fmt_f64(self.kl)),
            ("captured".to_string(), self.captured_field()),
        ];
        for (i, row) in self.missing_mode.iter().enumerate() {
            kv.push((format!("missing_mode.{i}.sigma"), fmt_f64(row.sigma_noise)));
            kv.push((format!("missing_mode.{i}.tau"), fmt_f64(row.tau)));
            kv.push((format!("missing_mode.{i}.flagged"), row.flagged.to_string()));
            kv.push((format!("missing_mode.{i}.test_points"), row.test_points.to_string()));
        }
        kv
    }

    /// Fields matching [`REPORT_CSV_HEADER`].
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n_samples.to_string(),
            fmt_f64(self.mode_score),
            fmt_f64(self.inception_score),
            self.n_miss.to_string(),
            fmt_f64(self.kl),
            self.captured_field(),
        ]
    }
}

/// Scores a set of generated points against the mixture.
pub fn evaluate_samples(
    samples: &Tensor<f64>,
    spec: &MixtureSpec,
    rule: &CaptureRule,
) -> Result<MetricsReport> {
    let posts = mixture_posteriors(samples, spec);
    let train = LabelDist::new(spec.weights())?;
    let coverage = mode_coverage(samples, spec, rule);
    Ok(MetricsReport {
        n_samples: samples.rows(),
        mode_score: mode_score_from_posteriors(&posts, &train)?,
        inception_score: inception_score_from_posteriors(&posts)?,
        n_miss: coverage.n_miss,
        kl: coverage.kl,
        captured: coverage.captured,
        missing_mode: Vec::new(),
    })
}

/// Draws `n` points `G(z)` with the generator in eval mode.
pub fn sample_generator<R: Rng + ?Sized>(
    generator: &Network<f64>,
    prior: &PriorSpec,
    n: usize,
    rng: &mut R,
) -> Result<Tensor<f64>> {
    let z = sample_prior(prior, n, rng);
    generator.eval(&z, BatchClass::Noise)
}
