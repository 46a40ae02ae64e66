use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::{posterior, MixtureSpec};
use crate::error::{Error, Result};

/// A probability vector over `k` classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDist(Vec<f64>);

impl LabelDist {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("label distribution needs non-negative entries".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("label distribution sums to {total}")));
        }
        Ok(Self(p))
    }

    /// Normalizes non-negative counts or weights.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("cannot normalize an all-zero histogram".into()));
        }
        Self::new(counts.iter().map(|c| c / total).collect())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// `KL(p || q)` with `0 * log(0 / q) = 0`. Infinite when `q` misses mass of `p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum()
}

/// Average of the posteriors: the label distribution of the generated samples.
pub fn marginal(posteriors: &[LabelDist]) -> Result<LabelDist> {
    let first = posteriors
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one sample".into()))?;
    let k = first.k();
    let mut acc = vec![0.0; k];
    for p in posteriors {
        if p.k() != k {
            return Err(Error::InvalidArgument("posteriors disagree on class count".into()));
        }
        for (a, v) in acc.iter_mut().zip(p.probs()) {
            *a += v;
        }
    }
    let n = posteriors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    // renormalize away accumulated rounding so the invariant holds to 1e-12
    let total: f64 = acc.iter().sum();
    acc.iter_mut().for_each(|a| *a /= total);
    LabelDist::new(acc)
}

/// `exp(E_x KL(p(y|x) || p*(y)))` where `p*` is the mean posterior.
pub fn inception_score_from_posteriors(posteriors: &[LabelDist]) -> Result<f64> {
    let pstar = marginal(posteriors)?;
    let mean_kl = posteriors
        .iter()
        .map(|p| kl_divergence(p.probs(), pstar.probs()))
        .sum::<f64>()
        / posteriors.len() as f64;
    Ok(mean_kl.exp())
}

/// `exp(E_x KL(p(y|x) || p(y)) - KL(p*(y) || p(y)))` against the training label
/// distribution `p(y)`.
pub fn mode_score_from_posteriors(posteriors: &[LabelDist], train: &LabelDist) -> Result<f64> {
    let pstar = marginal(posteriors)?;
    if pstar.k() != train.k() {
        return Err(Error::InvalidArgument(format!(
            "classifier has {} classes, training distribution {}",
            pstar.k(),
            train.k()
        )));
    }
    let mean_kl = posteriors
        .iter()
        .map(|p| kl_divergence(p.probs(), train.probs()))
        .sum::<f64>()
        / posteriors.len() as f64;
    let kl_star = kl_divergence(pstar.probs(), train.probs());
    if !mean_kl.is_finite() || !kl_star.is_finite() {
        return Err(Error::InvalidArgument(
            "training distribution has zero mass where the classifier does not".into(),
        ));
    }
    Ok((mean_kl - kl_star).exp())
}

/// Exact mixture posteriors for every row of an `n x 2` sample tensor.
pub fn mixture_posteriors(samples: &Tensor<f64>, spec: &MixtureSpec) -> Vec<LabelDist> {
    (0..samples.rows())
        .map(|r| LabelDist(posterior(spec, [samples.get(r, 0), samples.get(r, 1)])))
        .collect()
}

/// Inception score of `samples` under the mixture's Bayes classifier.
pub fn inception_score(samples: &Tensor<f64>, spec: &MixtureSpec) -> Result<f64> {
    inception_score_from_posteriors(&mixture_posteriors(samples, spec))
}

/// MODE score of `samples` against the mixture weights as training label distribution.
pub fn mode_score(samples: &Tensor<f64>, spec: &MixtureSpec) -> Result<f64> {
    let train = LabelDist::new(spec.weights())?;
    mode_score_from_posteriors(&mixture_posteriors(samples, spec), &train)
}
