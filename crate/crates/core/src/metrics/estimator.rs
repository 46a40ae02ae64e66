use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{sigmoid, Graph, Tensor};
use crate::data::LabeledBatch;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvText};
use crate::nets::{BatchClass, Mode, Network, NetworkSpec, Optimizer, OptimizerKind};
use crate::objectives::d_loss;

/// Settings of the noisy third-party discriminator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingModeConfig {
    /// Std of the Gaussian noise added to every discriminator input during training.
    pub sigma_noise: f64,
    /// A test point is flagged when `D(t) > tau`.
    pub tau: f64,
    pub spec: NetworkSpec,
    pub steps: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub seed: u64,
}

impl Default for MissingModeConfig {
    fn default() -> Self {
        Self {
            sigma_noise: 0.5,
            tau: 0.95,
            spec: NetworkSpec::ring_discriminator(128),
            steps: 20_000,
            batch_size: 64,
            optimizer: OptimizerKind::ADAM,
            lr: 1e-4,
            seed: 0,
        }
    }
}

impl MissingModeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return Err(Error::config("sigma", "noise std must be >= 0"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::config("tau", "threshold must lie in (0, 1)"));
        }
        if self.spec.input_dim() != 2 || self.spec.output_dim() != 1 {
            return Err(Error::config("estimator-spec", "must map 2-d points to one logit"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch-size", "must be positive"));
        }
        Ok(())
    }
}

/// Output of [`missing_mode_estimate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingModeResult {
    pub sigma_noise: f64,
    pub tau: f64,
    /// Number of test points with `D(t) > tau`.
    pub flagged: usize,
    /// `D(t)` per test point, noise-free.
    pub dstar: Vec<f64>,
    pub test_points: usize,
}

impl MissingModeResult {
    pub fn flagged_fraction(&self) -> f64 {
        if self.test_points == 0 {
            0.0
        } else {
            self.flagged as f64 / self.test_points as f64
        }
    }

    pub fn is_flagged(&self, i: usize) -> bool {
        self.dstar[i] > self.tau
    }

    /// `x0,x1,label,dstar,flagged` rows for the test set.
    pub fn to_csv(&self, test: &LabeledBatch) -> String {
        let mut csv = CsvText::with_header(&["x0", "x1", "label", "dstar", "flagged"]);
        for (i, &d) in self.dstar.iter().enumerate() {
            csv.row(&[
                fmt_f64(test.samples.get(i, 0)),
                fmt_f64(test.samples.get(i, 1)),
                test.labels[i].to_string(),
                fmt_f64(d),
                u8::from(self.is_flagged(i)).to_string(),
            ]);
        }
        csv.finish()
    }
}

fn gather_noisy<R: Rng + ?Sized>(
    pool: &Tensor<f64>,
    n: usize,
    noise: Option<&Normal<f64>>,
    rng: &mut R,
) -> Tensor<f64> {
    let cols = pool.cols();
    let mut data = Vec::with_capacity(n * cols);
    for _ in 0..n {
        let r = rng.random_range(0..pool.rows());
        for &v in pool.row_slice(r) {
            let eps = noise.map_or(0.0, |d| d.sample(rng));
            data.push(v + eps);
        }
    }
    Tensor::new(n, cols, data).expect("finite samples")
}

/// Trains a fresh discriminator to output 1 on `train` and 0 on `generated`, with
/// Gaussian input noise at every step, then scores the labeled `test` points without
/// noise. High values mark test points from modes the generator misses.
pub fn missing_mode_estimate(
    generated: &Tensor<f64>,
    train: &Tensor<f64>,
    test: &LabeledBatch,
    cfg: &MissingModeConfig,
) -> Result<MissingModeResult> {
    cfg.validate()?;
    if generated.rows() == 0 || train.rows() == 0 || test.is_empty() {
        return Err(Error::InvalidArgument("missing-mode estimate needs non-empty sample sets".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut disc = Network::<f64>::new(cfg.spec.clone(), rng.random());
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, &disc.params);
    let noise = (cfg.sigma_noise > 0.0)
        .then(|| Normal::new(0.0, cfg.sigma_noise).expect("validated noise std"));
    for step in 0..cfg.steps {
        let real = gather_noisy(train, cfg.batch_size, noise.as_ref(), &mut rng);
        let fake = gather_noisy(generated, cfg.batch_size, noise.as_ref(), &mut rng);
        let mut g = Graph::new();
        let bound = disc.bind(&mut g, true);
        let xr = g.constant(real);
        let xf = g.constant(fake);
        let lr = disc.forward(&mut g, &bound, xr, Mode::Train, BatchClass::Noise, &mut rng)?;
        let lf = disc.forward(&mut g, &bound, xf, Mode::Train, BatchClass::Noise, &mut rng)?;
        let loss = d_loss(&mut g, lr.output, lf.output)?;
        if !g.value(loss).item().is_finite() {
            return Err(Error::Diverged {
                step: step as u64,
                what: "estimator loss".into(),
            });
        }
        let grads = g.backward(loss)?;
        opt.step(&mut disc.params, &bound.gradients(&g, &grads))
            .map_err(|e| Error::Diverged {
                step: step as u64,
                what: e.to_string(),
            })?;
    }
    let logits = disc.eval(&test.samples, BatchClass::Noise)?;
    let dstar: Vec<f64> = logits.data().iter().map(|&l| sigmoid(l)).collect();
    let flagged = dstar.iter().filter(|&&d| d > cfg.tau).count();
    Ok(MissingModeResult {
        sigma_noise: cfg.sigma_noise,
        tau: cfg.tau,
        flagged,
        test_points: dstar.len(),
        dstar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ring_mixture, sample_mixture};

    #[test]
    fn rejects_bad_config_and_empty_sets() {
        let m = ring_mixture(6, 5.0, 0.1).unwrap();
        let b = sample_mixture(&m, 10, &mut ChaCha8Rng::seed_from_u64(0));
        let bad_tau = MissingModeConfig { tau: 1.0, ..Default::default() };
        assert!(missing_mode_estimate(&b.samples, &b.samples, &b, &bad_tau).is_err());
        let bad_sigma = MissingModeConfig { sigma_noise: -1.0, ..Default::default() };
        assert!(missing_mode_estimate(&b.samples, &b.samples, &b, &bad_sigma).is_err());
        let empty = Tensor::zeros(0, 2);
        assert!(missing_mode_estimate(&empty, &b.samples, &b, &MissingModeConfig::default()).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let m = ring_mixture(6, 5.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gen = sample_mixture(&m, 200, &mut rng).samples;
        let train = sample_mixture(&m, 200, &mut rng).samples;
        let test = sample_mixture(&m, 50, &mut rng);
        let cfg = MissingModeConfig { steps: 50, ..Default::default() };
        let a = missing_mode_estimate(&gen, &train, &test, &cfg).unwrap();
        let b = missing_mode_estimate(&gen, &train, &test, &cfg).unwrap();
        assert_eq!(a, b);
        let csv = a.to_csv(&test);
        assert!(csv.starts_with("x0,x1,label,dstar,flagged\n"));
        assert_eq!(csv.lines().count(), 51);
    }
}
