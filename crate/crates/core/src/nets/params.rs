use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::scalar::Scalar;

use super::spec::{Activation, NetworkSpec};

/// Which population a batch comes from. Batch-normalization layers keep one set of
/// running statistics per class while sharing the affine parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchClass {
    /// Batches produced from prior noise `z`.
    Noise,
    /// Batches produced from encoder codes `E(x)`.
    Encoded,
}

impl BatchClass {
    pub(crate) fn slot(self) -> usize {
        match self {
            Self::Noise => 0,
            Self::Encoded => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NormParams<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    /// Indexed by [`BatchClass`]: noise, then encoded.
    pub running: [RunningStats<T>; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LayerParams<T> {
    /// `in_dim x out_dim`.
    pub weight: Tensor<T>,
    /// `1 x out_dim`.
    pub bias: Tensor<T>,
    pub norm: Option<NormParams<T>>,
}

/// Trainable weights (and batch-norm running statistics) of one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Parameters<T> {
    pub layers: Vec<LayerParams<T>>,
}

impl<T: Scalar> Parameters<T> {
    /// He-style initialization: weights ~ N(0, 2/in) for ReLU layers and N(0, 1/in)
    /// otherwise; zero biases; `gamma = 1`, `beta = 0`; running mean 0 and variance 1.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = spec
            .layers()
            .iter()
            .map(|l| {
                let gain = if l.activation == Activation::Relu { 2.0 } else { 1.0 };
                let std = (gain / l.in_dim as f64).sqrt();
                let weight = (0..l.in_dim * l.out_dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        T::lit(z * std)
                    })
                    .collect();
                let norm = l.batch_norm.then(|| {
                    let stats = RunningStats {
                        mean: vec![T::zero(); l.out_dim],
                        var: vec![T::one(); l.out_dim],
                    };
                    NormParams {
                        gamma: Tensor::filled(1, l.out_dim, T::one()),
                        beta: Tensor::zeros(1, l.out_dim),
                        running: [stats.clone(), stats],
                    }
                });
                LayerParams {
                    weight: Tensor::from_raw(l.in_dim, l.out_dim, weight),
                    bias: Tensor::zeros(1, l.out_dim),
                    norm,
                }
            })
            .collect();
        Self { layers }
    }

    /// Trainable tensors in canonical order: per layer weight, bias, then gamma and beta
    /// when the layer is normalized.
    pub fn trainable(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
            if let Some(n) = &l.norm {
                out.push(&n.gamma);
                out.push(&n.beta);
            }
        }
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
            if let Some(n) = &mut l.norm {
                out.push(&mut n.gamma);
                out.push(&mut n.beta);
            }
        }
        out
    }

    /// Layer index owning each trainable tensor, in canonical order.
    pub fn trainable_layers(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let k = if l.norm.is_some() { 4 } else { 2 };
            out.extend(std::iter::repeat_n(i, k));
        }
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.trainable().iter().map(|t| t.len()).sum()
    }

    /// Order-sensitive FNV-1a hash over the bit patterns of all trainable values.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.trainable() {
            for v in t.data() {
                let bits = v.to_f64().unwrap_or(f64::NAN).to_bits();
                for b in bits.to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    /// True when shapes line up with `spec` and running variances are positive.
    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        self.layers.len() == spec.layers().len()
            && self.layers.iter().zip(spec.layers()).all(|(p, l)| {
                p.weight.shape() == (l.in_dim, l.out_dim)
                    && p.bias.shape() == (1, l.out_dim)
                    && match (&p.norm, l.batch_norm) {
                        (None, false) => true,
                        (Some(n), true) => {
                            n.gamma.shape() == (1, l.out_dim)
                                && n.beta.shape() == (1, l.out_dim)
                                && n.running.iter().all(|s| {
                                    s.mean.len() == l.out_dim
                                        && s.var.len() == l.out_dim
                                        && s.var.iter().all(|&v| v > T::zero())
                                })
                        }
                        _ => false,
                    }
            })
    }
}
