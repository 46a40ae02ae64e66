use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Self::Relu),
            "tanh" => Ok(Self::Tanh),
            "sigmoid" => Ok(Self::Sigmoid),
            "linear" => Ok(Self::Linear),
            other => Err(Error::InvalidArgument(format!("unknown activation `{other}`"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Relu => "relu",
            Self::Tanh => "tanh",
            Self::Sigmoid => "sigmoid",
            Self::Linear => "linear",
        })
    }
}

/// What the last layer emits. Discriminators use [`OutputHead::Logit`]: raw scores that
/// only ever pass through a sigmoid inside a loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputHead {
    Linear,
    Logit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub batch_norm: bool,
    /// Inverted-dropout rate applied after the activation, in `[0, 1)`.
    pub dropout: f64,
}

impl LayerSpec {
    pub fn dense(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
            batch_norm: false,
            dropout: 0.0,
        }
    }
}

/// Feedforward architecture: a chain of dense layers plus the output head kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
    head: OutputHead,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>, head: OutputHead) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidSpec("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::InvalidSpec(format!("layer {i} has a zero dimension")));
            }
            if !(0.0..1.0).contains(&l.dropout) {
                return Err(Error::InvalidSpec(format!(
                    "layer {i} dropout {} outside [0, 1)",
                    l.dropout
                )));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::InvalidSpec(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim,
                    i + 1,
                    pair[1].in_dim
                )));
            }
        }
        if head == OutputHead::Logit && layers.last().unwrap().activation != Activation::Linear {
            return Err(Error::InvalidSpec("a logit head must end in a linear layer".into()));
        }
        Ok(Self { layers, head })
    }

    /// Multilayer perceptron with identical hidden layers.
    pub fn mlp(
        in_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        hidden_activation: Activation,
        output_activation: Activation,
        head: OutputHead,
    ) -> Result<Self> {
        let mut dims = vec![in_dim];
        dims.extend_from_slice(hidden);
        dims.push(out_dim);
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n {
                    output_activation
                } else {
                    hidden_activation
                };
                LayerSpec::dense(dims[i], dims[i + 1], act)
            })
            .collect();
        Self::new(layers, head)
    }

    /// Generator of the ring experiment: 3-d noise, two ReLU hidden layers of 128, 2-d output.
    pub fn ring_generator() -> Self {
        Self::mlp(3, &[128, 128], 2, Activation::Relu, Activation::Linear, OutputHead::Linear)
            .expect("valid preset")
    }

    /// Single ReLU hidden layer of `hidden` units mapping a 2-d point to one logit.
    pub fn ring_discriminator(hidden: usize) -> Self {
        Self::mlp(2, &[hidden], 1, Activation::Relu, Activation::Linear, OutputHead::Logit)
            .expect("valid preset")
    }

    /// Mirror of the generator with a sigmoid head, so codes land in `[0, 1]^3`.
    pub fn ring_encoder() -> Self {
        Self::mlp(2, &[128, 128], 3, Activation::Relu, Activation::Sigmoid, OutputHead::Linear)
            .expect("valid preset")
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn has_batch_norm(&self) -> bool {
        self.layers.iter().any(|l| l.batch_norm)
    }

    /// Returns a copy with batch norm switched on for every hidden layer.
    pub fn with_hidden_batch_norm(mut self) -> Self {
        let n = self.layers.len();
        for l in &mut self.layers[..n - 1] {
            l.batch_norm = true;
        }
        self
    }

    /// Returns a copy with `rate` dropout on every hidden layer.
    pub fn with_hidden_dropout(mut self, rate: f64) -> Result<Self> {
        let n = self.layers.len();
        for l in &mut self.layers[..n - 1] {
            l.dropout = rate;
        }
        Self::new(self.layers, self.head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_chain() {
        let g = NetworkSpec::ring_generator();
        assert_eq!((g.input_dim(), g.output_dim()), (3, 2));
        let d = NetworkSpec::ring_discriminator(128);
        assert_eq!((d.input_dim(), d.output_dim(), d.head()), (2, 1, OutputHead::Logit));
        let e = NetworkSpec::ring_encoder();
        assert_eq!(e.layers().last().unwrap().activation, Activation::Sigmoid);
    }

    #[test]
    fn broken_chain_rejected() {
        let layers = vec![
            LayerSpec::dense(2, 4, Activation::Relu),
            LayerSpec::dense(5, 1, Activation::Linear),
        ];
        assert!(NetworkSpec::new(layers, OutputHead::Linear).is_err());
    }

    #[test]
    fn dropout_one_rejected() {
        let spec = NetworkSpec::ring_discriminator(8);
        assert!(spec.clone().with_hidden_dropout(1.0).is_err());
        assert!(spec.with_hidden_dropout(0.5).is_ok());
    }

    #[test]
    fn logit_head_must_be_linear() {
        let layers = vec![LayerSpec::dense(2, 1, Activation::Sigmoid)];
        assert!(NetworkSpec::new(layers, OutputHead::Logit).is_err());
    }
}
