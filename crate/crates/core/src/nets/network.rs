use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Gradients, Graph, NodeId, Tensor, BN_VAR_FLOOR};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::params::{BatchClass, Parameters};
use super::spec::{Activation, NetworkSpec};

/// Running-statistics momentum: `running <- 0.9 * running + 0.1 * batch`.
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, running-stat updates, dropout on.
    Train,
    /// Running statistics, no dropout. A pure function of params, batch and class.
    Eval,
}

/// Graph handles for a network's trainable tensors, in [`Parameters::trainable`] order.
#[derive(Clone, Debug)]
pub struct Bound {
    ids: Vec<NodeId>,
}

impl Bound {
    /// Wraps nodes created elsewhere; they must follow [`Parameters::trainable`] order
    /// and shapes.
    pub fn new(ids: Vec<NodeId>) -> Self {
        Self { ids }
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Collects gradients for every bound tensor, zero-filled where none flowed.
    pub fn gradients<T: Scalar>(&self, graph: &Graph<T>, grads: &Gradients<T>) -> Vec<Tensor<T>> {
        self.ids.iter().map(|&id| grads.get_or_zeros(graph, id)).collect()
    }
}

/// Node ids produced by one forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    pub output: NodeId,
    /// Per layer, the input to the activation function (after batch norm when present).
    pub pre_activations: Vec<NodeId>,
    /// Per layer, the activation output (after dropout).
    pub activations: Vec<NodeId>,
}

/// Materialized forward pass.
#[derive(Clone, Debug)]
pub struct Forward<T> {
    pub output: Tensor<T>,
    pub pre_activations: Vec<Tensor<T>>,
    /// Per layer, the activation output (after dropout).
    pub hidden: Vec<Tensor<T>>,
}

struct StatUpdate<T> {
    layer: usize,
    mean: Vec<T>,
    var: Vec<T>,
}

/// A feedforward network: architecture plus owned parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Network<T> {
    pub spec: NetworkSpec,
    pub params: Parameters<T>,
}

impl<T: Scalar> Network<T> {
    pub fn new(spec: NetworkSpec, seed: u64) -> Self {
        let params = Parameters::init(&spec, seed);
        Self { spec, params }
    }

    pub fn from_parts(spec: NetworkSpec, params: Parameters<T>) -> Result<Self> {
        if !params.matches(&spec) {
            return Err(Error::InvalidSpec("parameters do not match the network spec".into()));
        }
        Ok(Self { spec, params })
    }

    /// Places the trainable tensors into `graph`, as parameters or as constants.
    pub fn bind(&self, graph: &mut Graph<T>, trainable: bool) -> Bound {
        let ids = self
            .params
            .trainable()
            .into_iter()
            .map(|t| {
                if trainable {
                    graph.param(t.clone())
                } else {
                    graph.constant(t.clone())
                }
            })
            .collect();
        Bound { ids }
    }

    /// Forward pass inside `graph`. In train mode the running statistics of `class`
    /// are updated from this batch.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        graph: &mut Graph<T>,
        bound: &Bound,
        x: NodeId,
        mode: Mode,
        class: BatchClass,
        rng: &mut R,
    ) -> Result<Trace> {
        let (trace, updates) = self.run(graph, bound, x, mode, class, Some(rng))?;
        self.apply_stats(class, updates);
        Ok(trace)
    }

    /// Eval-mode output for a batch, without touching any state.
    pub fn eval(&self, x: &Tensor<T>, class: BatchClass) -> Result<Tensor<T>> {
        let mut graph = Graph::new();
        let bound = self.bind(&mut graph, false);
        let xi = graph.constant(x.clone());
        let (trace, _) = self.run::<ChaCha8Rng>(&mut graph, &bound, xi, Mode::Eval, class, None)?;
        Ok(graph.value(trace.output).clone())
    }

    /// Standalone forward pass returning output, pre-activations and hidden activations.
    pub fn predict<R: Rng + ?Sized>(
        &mut self,
        x: &Tensor<T>,
        mode: Mode,
        class: BatchClass,
        rng: &mut R,
    ) -> Result<Forward<T>> {
        let mut graph = Graph::new();
        let bound = self.bind(&mut graph, false);
        let xi = graph.constant(x.clone());
        let (trace, hidden) = {
            let (trace, updates) = self.run(&mut graph, &bound, xi, mode, class, Some(rng))?;
            self.apply_stats(class, updates);
            let hidden = trace
                .activations
                .iter()
                .map(|&id| graph.value(id).clone())
                .collect();
            (trace, hidden)
        };
        Ok(Forward {
            output: graph.value(trace.output).clone(),
            pre_activations: trace
                .pre_activations
                .iter()
                .map(|&id| graph.value(id).clone())
                .collect(),
            hidden,
        })
    }

    fn apply_stats(&mut self, class: BatchClass, updates: Vec<StatUpdate<T>>) {
        let m = T::lit(BN_MOMENTUM);
        let one_m = T::one() - m;
        for u in updates {
            let norm = self.params.layers[u.layer]
                .norm
                .as_mut()
                .expect("stat update only for normalized layers");
            let stats = &mut norm.running[class.slot()];
            for (r, b) in stats.mean.iter_mut().zip(&u.mean) {
                *r = m * *r + one_m * *b;
            }
            for (r, b) in stats.var.iter_mut().zip(&u.var) {
                *r = m * *r + one_m * *b;
            }
        }
    }

    fn run<R: Rng + ?Sized>(
        &self,
        graph: &mut Graph<T>,
        bound: &Bound,
        x: NodeId,
        mode: Mode,
        class: BatchClass,
        mut rng: Option<&mut R>,
    ) -> Result<(Trace, Vec<StatUpdate<T>>)> {
        let (rows, cols) = graph.shape(x);
        if cols != self.spec.input_dim() {
            return Err(Error::Shape {
                op: "forward",
                lhs: (rows, cols),
                rhs: (self.spec.input_dim(), self.spec.output_dim()),
            });
        }
        let ids = bound.ids();
        let mut cursor = 0;
        let mut h = x;
        let mut pre = Vec::with_capacity(self.spec.layers().len());
        let mut acts = Vec::with_capacity(self.spec.layers().len());
        let mut updates = Vec::new();
        for (i, (layer, lp)) in self.spec.layers().iter().zip(&self.params.layers).enumerate() {
            let (w, b) = (ids[cursor], ids[cursor + 1]);
            cursor += 2;
            h = graph.matmul(h, w)?;
            h = graph.add_row(h, b)?;
            if let Some(norm) = &lp.norm {
                let (gamma, beta) = (ids[cursor], ids[cursor + 1]);
                cursor += 2;
                match mode {
                    Mode::Train => {
                        let (y, mean, var) = graph.batch_norm(h, gamma, beta)?;
                        updates.push(StatUpdate { layer: i, mean, var });
                        h = y;
                    }
                    Mode::Eval => {
                        let stats = &norm.running[class.slot()];
                        let floor = T::lit(BN_VAR_FLOOR);
                        let neg_mean = graph.constant(Tensor::from_raw(
                            1,
                            stats.mean.len(),
                            stats.mean.iter().map(|&m| -m).collect(),
                        ));
                        let inv_std = graph.constant(Tensor::from_raw(
                            1,
                            stats.var.len(),
                            stats
                                .var
                                .iter()
                                .map(|&v| T::one() / v.max(floor).sqrt())
                                .collect(),
                        ));
                        h = graph.add_row(h, neg_mean)?;
                        h = graph.mul_row(h, inv_std)?;
                        h = graph.mul_row(h, gamma)?;
                        h = graph.add_row(h, beta)?;
                    }
                }
            }
            pre.push(h);
            h = match layer.activation {
                Activation::Relu => graph.relu(h),
                Activation::Tanh => graph.tanh(h),
                Activation::Sigmoid => graph.sigmoid(h),
                Activation::Linear => h,
            };
            if mode == Mode::Train && layer.dropout > 0.0 {
                let rng = rng
                    .as_deref_mut()
                    .ok_or_else(|| Error::InvalidArgument("dropout needs an rng".into()))?;
                let (r, c) = graph.shape(h);
                let keep = T::lit(1.0 / (1.0 - layer.dropout));
                let mask = (0..r * c)
                    .map(|_| {
                        if rng.random::<f64>() < layer.dropout {
                            T::zero()
                        } else {
                            keep
                        }
                    })
                    .collect();
                let mask = graph.constant(Tensor::from_raw(r, c, mask));
                h = graph.mul(h, mask)?;
            }
            acts.push(h);
        }
        Ok((
            Trace {
                output: h,
                pre_activations: pre,
                activations: acts,
            },
            updates,
        ))
    }
}
