use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{Graph, NodeId};
use super::tensor::Tensor;

/// Outcome of a finite-difference gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    /// `max |analytic - numeric| / max(1e-8, |analytic| + |numeric|)` over all entries.
    pub max_rel_error: f64,
    /// `(parameter, flat index)` where the maximum was attained.
    pub worst: Option<(usize, usize)>,
    pub entries: usize,
}

/// Compares reverse-mode gradients of `loss` against central differences with step `eps`.
///
/// `loss` receives a fresh graph and one node per parameter tensor and must return a
/// `1 x 1` node. It is called once with trainable leaves and twice per parameter entry
/// with constant leaves, so it must be deterministic.
pub fn grad_check<T, F>(params: &[Tensor<T>], eps: T, loss: F) -> Result<GradCheck>
where
    T: Scalar,
    F: Fn(&mut Graph<T>, &[NodeId]) -> Result<NodeId>,
{
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("grad_check step must be positive".into()));
    }
    let mut graph = Graph::new();
    let ids: Vec<NodeId> = params.iter().map(|p| graph.param(p.clone())).collect();
    let root = loss(&mut graph, &ids)?;
    let grads = graph.backward(root)?;

    let eval = |probe: &[Tensor<T>]| -> Result<T> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = probe.iter().map(|p| g.constant(p.clone())).collect();
        let root = loss(&mut g, &ids)?;
        Ok(g.value(root).item())
    };

    let floor = T::lit(1e-8);
    let two_eps = eps + eps;
    let mut probe: Vec<Tensor<T>> = params.to_vec();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        entries: 0,
    };
    for (p, id) in ids.iter().enumerate() {
        let analytic = grads.get_or_zeros(&graph, *id);
        for i in 0..params[p].len() {
            let orig = params[p].data()[i];
            probe[p].data_mut()[i] = orig + eps;
            let up = eval(&probe)?;
            probe[p].data_mut()[i] = orig - eps;
            let down = eval(&probe)?;
            probe[p].data_mut()[i] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NonFiniteProbe { param: p, index: i });
            }
            let numeric = (up - down) / two_eps;
            let a = analytic.data()[i];
            let rel = (a - numeric).abs() / floor.max(a.abs() + numeric.abs());
            let rel = rel.to_f64().unwrap_or(f64::INFINITY);
            report.entries += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((p, i));
            }
        }
    }
    Ok(report)
}
