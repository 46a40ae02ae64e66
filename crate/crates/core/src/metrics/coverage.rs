use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::{classify, MixtureSpec};

use super::scores::kl_divergence;

/// Additive smoothing applied to both histograms before the coverage KL.
pub const KL_SMOOTHING: f64 = 1e-6;

/// When a mode counts as captured: at least `max(1, ceil(min_fraction * N))` samples are
/// assigned to it, and at least one of them lies within `radius_sigmas * sigma` of its mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureRule {
    pub min_fraction: f64,
    pub radius_sigmas: f64,
}

impl Default for CaptureRule {
    fn default() -> Self {
        Self {
            min_fraction: 0.002,
            radius_sigmas: 3.0,
        }
    }
}

impl CaptureRule {
    pub fn threshold(&self, n: usize) -> usize {
        ((self.min_fraction * n as f64).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Samples assigned to each mode by the argmax posterior.
    pub counts: Vec<usize>,
    /// Indices of captured modes, ascending.
    pub captured: Vec<usize>,
    pub n_miss: usize,
    /// `KL(generated histogram || mixture weights)`, both smoothed.
    pub kl: f64,
    pub n_samples: usize,
}

/// Assigns each sample to its most probable mode and applies `rule`.
pub fn mode_coverage(samples: &Tensor<f64>, spec: &MixtureSpec, rule: &CaptureRule) -> CoverageReport {
    mode_coverage_at(samples, spec, rule, samples.rows())
}

/// Like [`mode_coverage`] but evaluates the count threshold at `reference_n` samples.
pub fn mode_coverage_at(
    samples: &Tensor<f64>,
    spec: &MixtureSpec,
    rule: &CaptureRule,
    reference_n: usize,
) -> CoverageReport {
    let k = spec.len();
    let radius2 = (rule.radius_sigmas * spec.sigma()).powi(2);
    let mut counts = vec![0usize; k];
    let mut near = vec![false; k];
    for r in 0..samples.rows() {
        let x = [samples.get(r, 0), samples.get(r, 1)];
        let j = classify(spec, x);
        counts[j] += 1;
        let m = spec.mean(j);
        if (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2) <= radius2 {
            near[j] = true;
        }
    }
    let thr = rule.threshold(reference_n);
    let captured: Vec<usize> = (0..k).filter(|&j| counts[j] >= thr && near[j]).collect();
    let n = samples.rows();
    let generated: Vec<f64> = counts
        .iter()
        .map(|&c| if n > 0 { c as f64 / n as f64 } else { 0.0 })
        .collect();
    let kl = kl_divergence(&smooth(&generated), &smooth(&spec.weights()));
    CoverageReport {
        n_miss: k - captured.len(),
        captured,
        counts,
        kl,
        n_samples: n,
    }
}

fn smooth(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().map(|v| v + KL_SMOOTHING).sum();
    p.iter().map(|v| (v + KL_SMOOTHING) / total).collect()
}
