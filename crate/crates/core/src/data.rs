//! Ground-truth 2-d Gaussian mixtures, prior sampling and the exact Bayes classifier.

use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic, CsvText};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: [f64; 2],
    pub weight: f64,
}

/// Isotropic Gaussian mixture in the plane with one shared component std.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    components: Vec<Component>,
    sigma: f64,
}

impl MixtureSpec {
    pub fn new(components: Vec<Component>, sigma: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("component std {sigma} must be positive")));
        }
        if components.iter().any(|c| !(c.weight >= 0.0) || !c.mean.iter().all(|m| m.is_finite())) {
            return Err(Error::InvalidArgument("mixture weights must be non-negative".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components, sigma })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn mean(&self, j: usize) -> [f64; 2] {
        self.components[j].mean
    }

    /// Copy with component `j` removed and the remaining weights renormalized.
    pub fn without(&self, j: usize) -> Result<Self> {
        let rest: Vec<Component> = self
            .components
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, c)| *c)
            .collect();
        let total: f64 = rest.iter().map(|c| c.weight).sum();
        if rest.is_empty() || total <= 0.0 {
            return Err(Error::InvalidArgument("no mass left after removing the component".into()));
        }
        let rest = rest
            .into_iter()
            .map(|c| Component { weight: c.weight / total, ..c })
            .collect();
        Self::new(rest, self.sigma)
    }

    /// Axis-aligned window covering every mean with `margin_sigmas * sigma` to spare.
    pub fn bounds(&self, margin_sigmas: f64) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.components {
            for d in 0..2 {
                lo[d] = lo[d].min(c.mean[d]);
                hi[d] = hi[d].max(c.mean[d]);
            }
        }
        let m = margin_sigmas * self.sigma;
        ([lo[0] - m, lo[1] - m], [hi[0] + m, hi[1] + m])
    }
}

/// `k` equal-weight components evenly spaced on a circle, the first at `(radius, 0)`.
pub fn ring_mixture(k: usize, radius: f64, sigma: f64) -> Result<MixtureSpec> {
    if k == 0 || !(radius >= 0.0) {
        return Err(Error::InvalidArgument("ring needs k >= 1 and radius >= 0".into()));
    }
    let w = 1.0 / k as f64;
    let components = (0..k)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / k as f64;
            Component {
                mean: [radius * a.cos(), radius * a.sin()],
                weight: w,
            }
        })
        .collect();
    MixtureSpec::new(renormalized(components), sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightProfile {
    Uniform,
    /// Weight of lattice index `i` proportional to `r^i`.
    Geometric(f64),
}

impl FromStr for WeightProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(Self::Uniform);
        }
        let r = s
            .strip_prefix("geometric(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("geometric:"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown weight profile `{s}`")))?;
        let r: f64 = r
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad geometric ratio in `{s}`")))?;
        Ok(Self::Geometric(r))
    }
}

impl std::fmt::Display for WeightProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::Geometric(r) => write!(f, "geometric({r})"),
        }
    }
}

/// `rows x cols` components on a lattice centered at the origin. Index `i * cols + j`
/// sits at column `j` (x grows with `j`) and row `i` (y shrinks with `i`).
pub fn grid_mixture(
    rows: usize,
    cols: usize,
    spacing: f64,
    sigma: f64,
    profile: WeightProfile,
) -> Result<MixtureSpec> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid needs at least one row and column".into()));
    }
    if let WeightProfile::Geometric(r) = profile {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("geometric ratio {r} must be positive")));
        }
    }
    let cx = (cols as f64 - 1.0) / 2.0;
    let cy = (rows as f64 - 1.0) / 2.0;
    let mut components = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let idx = i * cols + j;
            let weight = match profile {
                WeightProfile::Uniform => 1.0,
                WeightProfile::Geometric(r) => r.powi(idx as i32),
            };
            components.push(Component {
                mean: [(j as f64 - cx) * spacing, (cy - i as f64) * spacing],
                weight,
            });
        }
    }
    MixtureSpec::new(renormalized(components), sigma)
}

fn renormalized(mut components: Vec<Component>) -> Vec<Component> {
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in &mut components {
        c.weight /= total;
    }
    components
}

/// Samples with their generating component.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledBatch {
    /// `n x 2`.
    pub samples: Tensor<f64>,
    pub labels: Vec<usize>,
}

impl LabeledBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Draws a component by weight, then a point from `N(mean, sigma^2 I)`.
pub fn sample_mixture<R: Rng + ?Sized>(spec: &MixtureSpec, n: usize, rng: &mut R) -> LabeledBatch {
    let picker = WeightedIndex::new(spec.components.iter().map(|c| c.weight))
        .expect("validated mixture weights");
    let mut data = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let j = picker.sample(rng);
        let m = spec.components[j].mean;
        let dx: f64 = StandardNormal.sample(rng);
        let dy: f64 = StandardNormal.sample(rng);
        data.push(m[0] + spec.sigma * dx);
        data.push(m[1] + spec.sigma * dy);
        labels.push(j);
    }
    LabeledBatch {
        samples: Tensor::from_raw(n, 2, data),
        labels,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// i.i.d. uniform on `[0, 1]`.
    Uniform01,
    StandardGaussian,
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" | "uniform" => Ok(Self::Uniform01),
            "standard-gaussian" | "gaussian" => Ok(Self::StandardGaussian),
            other => Err(Error::InvalidArgument(format!("unknown prior `{other}`"))),
        }
    }
}

impl std::fmt::Display for PriorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Uniform01 => "uniform01",
            Self::StandardGaussian => "standard-gaussian",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub dim: usize,
    pub kind: PriorKind,
}

impl PriorSpec {
    pub fn new(dim: usize, kind: PriorKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("prior dimension must be at least 1".into()));
        }
        Ok(Self { dim, kind })
    }

    /// 3-d uniform noise on `[0, 1]`.
    pub fn uniform3() -> Self {
        Self {
            dim: 3,
            kind: PriorKind::Uniform01,
        }
    }
}

pub fn sample_prior<R: Rng + ?Sized>(prior: &PriorSpec, n: usize, rng: &mut R) -> Tensor<f64> {
    let data = (0..n * prior.dim)
        .map(|_| match prior.kind {
            PriorKind::Uniform01 => rng.random::<f64>(),
            PriorKind::StandardGaussian => StandardNormal.sample(rng),
        })
        .collect();
    Tensor::from_raw(n, prior.dim, data)
}

/// Exact class posterior `p(y = j | x)` of the mixture, via log-space normalization.
pub fn posterior(spec: &MixtureSpec, x: [f64; 2]) -> Vec<f64> {
    let inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
    let logits: Vec<f64> = spec
        .components
        .iter()
        .map(|c| {
            let dx = x[0] - c.mean[0];
            let dy = x[1] - c.mean[1];
            if c.weight > 0.0 {
                c.weight.ln() - (dx * dx + dy * dy) * inv2s2
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Index of the most probable component (ties go to the lowest index).
pub fn classify(spec: &MixtureSpec, x: [f64; 2]) -> usize {
    let p = posterior(spec, x);
    let mut best = 0;
    for (j, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = j;
        }
    }
    best
}

/// Writes `x0,x1,label` rows; `label` is -1 where unknown.
pub fn write_samples_csv(path: &Path, samples: &Tensor<f64>, labels: Option<&[usize]>) -> Result<()> {
    write_atomic(path, samples_csv(samples, labels).as_bytes())
}

pub fn samples_csv(samples: &Tensor<f64>, labels: Option<&[usize]>) -> String {
    let mut csv = CsvText::with_header(&["x0", "x1", "label"]);
    for r in 0..samples.rows() {
        let label = labels.map_or("-1".to_string(), |l| l[r].to_string());
        csv.row(&[fmt_f64(samples.get(r, 0)), fmt_f64(samples.get(r, 1)), label]);
    }
    csv.finish()
}

/// Reads a sample dump written by [`write_samples_csv`]. Labels of -1 become `None`;
/// a zero-byte file holds no samples.
pub fn read_samples_csv(path: &Path) -> Result<(Tensor<f64>, Vec<Option<usize>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Ok((Tensor::zeros(0, 2), Vec::new()));
    }
    let bad = |line: usize, msg: &str| Error::config(format!("{}:{line}", path.display()), msg);
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x0,x1,label" => {}
        _ => return Err(bad(1, "expected header `x0,x1,label`")),
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad(i + 2, "expected 3 fields"));
        }
        let x0: f64 = f[0].trim().parse().map_err(|_| bad(i + 2, "bad x0"))?;
        let x1: f64 = f[1].trim().parse().map_err(|_| bad(i + 2, "bad x1"))?;
        let label: i64 = f[2].trim().parse().map_err(|_| bad(i + 2, "bad label"))?;
        data.push(x0);
        data.push(x1);
        labels.push(usize::try_from(label).ok());
    }
    let n = labels.len();
    Ok((Tensor::new(n, 2, data)?, labels))
}
