use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::params::Parameters;

/// Optimizer family and its fixed hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Plain gradient descent, no momentum.
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    /// Adam with `beta1 = 0.5`, `beta2 = 0.999`, `eps = 1e-8`.
    pub const ADAM: Self = Self::Adam {
        beta1: 0.5,
        beta2: 0.999,
        eps: 1e-8,
    };

    pub fn short_name(&self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Adam { .. } => "adam",
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::ADAM),
            other => Err(Error::InvalidArgument(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Optimizer state for one network. Moments are allocated for Adam only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Optimizer<T> {
    pub kind: OptimizerKind,
    pub lr: f64,
    /// Number of completed steps.
    pub t: u64,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, lr: f64, params: &Parameters<T>) -> Self {
        let zeros = || -> Vec<Tensor<T>> {
            match kind {
                OptimizerKind::Sgd => Vec::new(),
                OptimizerKind::Adam { .. } => params
                    .trainable()
                    .iter()
                    .map(|t| Tensor::zeros(t.rows(), t.cols()))
                    .collect(),
            }
        };
        Self {
            kind,
            lr,
            t: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// Applies one update. Gradients are validated before anything is modified, so a
    /// rejected step leaves both parameters and state untouched.
    pub fn step(&mut self, params: &mut Parameters<T>, grads: &[Tensor<T>]) -> Result<()> {
        validate(params, grads)?;
        if matches!(self.kind, OptimizerKind::Adam { .. })
            && (self.m.len() != grads.len() || self.v.len() != grads.len())
        {
            return Err(Error::InvalidArgument("optimizer state does not match parameters".into()));
        }
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => sgd_update(self.lr, params, grads),
            OptimizerKind::Adam { beta1, beta2, eps } => {
                adam_update(
                    AdamHyper { lr: self.lr, beta1, beta2, eps, t: self.t },
                    params,
                    &mut self.m,
                    &mut self.v,
                    grads,
                );
            }
        }
        Ok(())
    }
}

fn validate<T: Scalar>(params: &Parameters<T>, grads: &[Tensor<T>]) -> Result<()> {
    let shapes: Vec<_> = params.trainable().iter().map(|t| t.shape()).collect();
    if shapes.len() != grads.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} gradient tensors, got {}",
            shapes.len(),
            grads.len()
        )));
    }
    let layers = params.trainable_layers();
    for ((shape, g), &layer) in shapes.iter().zip(grads).zip(&layers) {
        if *shape != g.shape() {
            return Err(Error::Shape {
                op: "optimizer_step",
                lhs: *shape,
                rhs: g.shape(),
            });
        }
        if !g.all_finite() {
            return Err(Error::NonFiniteGradient { layer });
        }
    }
    Ok(())
}

fn sgd_update<T: Scalar>(lr: f64, params: &mut Parameters<T>, grads: &[Tensor<T>]) {
    let lr = T::lit(lr);
    for (p, g) in params.trainable_mut().into_iter().zip(grads) {
        for (w, &d) in p.data_mut().iter_mut().zip(g.data()) {
            *w = *w - lr * d;
        }
    }
}

struct AdamHyper {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
}

fn adam_update<T: Scalar>(
    h: AdamHyper,
    params: &mut Parameters<T>,
    m: &mut [Tensor<T>],
    v: &mut [Tensor<T>],
    grads: &[Tensor<T>],
) {
    let (b1, b2) = (T::lit(h.beta1), T::lit(h.beta2));
    let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
    let t = i32::try_from(h.t).unwrap_or(i32::MAX);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let (lr, eps) = (T::lit(h.lr), T::lit(h.eps));
    for (((p, g), m), v) in params.trainable_mut().into_iter().zip(grads).zip(m).zip(v) {
        let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
        for i in 0..pd.len() {
            let d = g.data()[i];
            md[i] = b1 * md[i] + one_b1 * d;
            vd[i] = b2 * vd[i] + one_b2 * d * d;
            let m_hat = md[i] / c1;
            let v_hat = vd[i] / c2;
            pd[i] = pd[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// One Adam step on `params`; thin wrapper over [`Optimizer::step`].
pub fn adam_step<T: Scalar>(
    state: &mut Optimizer<T>,
    params: &mut Parameters<T>,
    grads: &[Tensor<T>],
) -> Result<()> {
    debug_assert!(matches!(state.kind, OptimizerKind::Adam { .. }));
    state.step(params, grads)
}

/// One plain SGD step: `params <- params - lr * grads`.
pub fn sgd_step<T: Scalar>(
    state: &mut Optimizer<T>,
    params: &mut Parameters<T>,
    grads: &[Tensor<T>],
) -> Result<()> {
    debug_assert_eq!(state.kind, OptimizerKind::Sgd);
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::spec::{Activation, LayerSpec, NetworkSpec, OutputHead};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(w: f64) -> Parameters<f64> {
        let spec = NetworkSpec::new(vec![LayerSpec::dense(1, 1, Activation::Linear)], OutputHead::Linear)
            .unwrap();
        let mut p = Parameters::init(&spec, 0);
        p.layers[0].weight = Tensor::scalar(w);
        p
    }

    fn grads(w: f64, b: f64) -> Vec<Tensor<f64>> {
        vec![Tensor::scalar(w), Tensor::scalar(b)]
    }

    #[test]
    fn adam_first_step() {
        let mut p = scalar_net(1.0);
        let mut opt = Optimizer::new(OptimizerKind::ADAM, 0.1, &p);
        adam_step(&mut opt, &mut p, &grads(1.0, 0.0)).unwrap();
        let w = p.layers[0].weight.item();
        assert!((w - (1.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-15, "{w}");
        assert_eq!(opt.t, 1);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = Parameters::<f64>::init(&NetworkSpec::ring_generator(), 3);
        let before = p.clone();
        let mut opt = Optimizer::new(OptimizerKind::ADAM, 1e-3, &p);
        let zeros: Vec<_> = p.trainable().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect();
        opt.step(&mut p, &zeros).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn adam_is_deterministic() {
        let p0 = Parameters::<f64>::init(&NetworkSpec::ring_discriminator(8), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g: Vec<_> = p0
            .trainable()
            .iter()
            .map(|t| Tensor::new(t.rows(), t.cols(), (0..t.len()).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap())
            .collect();
        let run = || {
            let mut p = p0.clone();
            let mut o = Optimizer::new(OptimizerKind::ADAM, 1e-2, &p);
            o.step(&mut p, &g).unwrap();
            o.step(&mut p, &g).unwrap();
            (p, o)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sgd_arithmetic() {
        let mut p = scalar_net(1.0);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.5, &p);
        sgd_step(&mut opt, &mut p, &grads(2.0, 0.0)).unwrap();
        assert_eq!(p.layers[0].weight.item(), 0.0);
        sgd_step(&mut opt, &mut p, &grads(0.0, 0.0)).unwrap();
        assert_eq!(p.layers[0].weight.item(), 0.0);
    }

    #[test]
    fn sgd_matches_elementwise_loop() {
        let spec = NetworkSpec::new(vec![LayerSpec::dense(3, 2, Activation::Linear)], OutputHead::Linear).unwrap();
        let mut p = Parameters::<f64>::init(&spec, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gw: Vec<f64> = (0..6).map(|_| rng.random::<f64>() - 0.5).collect();
        let gb: Vec<f64> = (0..2).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut expect: Vec<f64> = p.layers[0].weight.data().to_vec();
        expect.extend_from_slice(p.layers[0].bias.data());
        for (e, g) in expect.iter_mut().zip(gw.iter().chain(&gb)) {
            *e -= 0.03 * g;
        }
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.03, &p);
        let g = vec![Tensor::new(3, 2, gw).unwrap(), Tensor::new(1, 2, gb).unwrap()];
        opt.step(&mut p, &g).unwrap();
        let mut got: Vec<f64> = p.layers[0].weight.data().to_vec();
        got.extend_from_slice(p.layers[0].bias.data());
        assert_eq!(got, expect);
    }

    #[test]
    fn non_finite_gradient_names_layer() {
        let mut p = Parameters::<f64>::init(&NetworkSpec::ring_discriminator(4), 0);
        let before = p.clone();
        let mut g: Vec<_> = p.trainable().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect();
        g[3] = Tensor::from_raw(1, 1, vec![f64::NAN]);
        let mut opt = Optimizer::new(OptimizerKind::ADAM, 1e-3, &p);
        assert!(matches!(opt.step(&mut p, &g), Err(Error::NonFiniteGradient { layer: 1 })));
        assert_eq!(p, before);
        assert_eq!(opt.t, 0);
    }
}
