//! Training configuration and its flat `key = value` file format.
//!
//! Every key is kebab-case; command-line flags reuse the same names. Unknown keys are
//! rejected so a typo never silently falls back to a default.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{grid_mixture, ring_mixture, MixtureSpec, PriorKind, PriorSpec, WeightProfile};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::nets::{Activation, NetworkSpec, OptimizerKind, OutputHead};
use crate::objectives::{LossWeights, ModeSign};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gan,
    RegGan,
    Mdgan,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gan" => Ok(Self::Gan),
            "reg-gan" => Ok(Self::RegGan),
            "mdgan" => Ok(Self::Mdgan),
            other => Err(Error::config("algorithm", format!("unknown algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gan => "gan",
            Self::RegGan => "reg-gan",
            Self::Mdgan => "mdgan",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
}

impl OptimConfig {
    pub fn adam(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::ADAM,
            lr,
        }
    }
}

/// Shape of a multilayer perceptron in the config file: hidden widths, their shared
/// activation, optional batch norm and dropout, and the output activation.
#[derive(Clone, Debug, PartialEq)]
pub struct NetDesc {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub batch_norm: bool,
    pub dropout: f64,
    pub output: Activation,
}

impl NetDesc {
    pub fn build(&self, in_dim: usize, out_dim: usize, head: OutputHead) -> Result<NetworkSpec> {
        let mut spec = NetworkSpec::mlp(in_dim, &self.hidden, out_dim, self.activation, self.output, head)?;
        if self.batch_norm {
            spec = spec.with_hidden_batch_norm();
        }
        if self.dropout > 0.0 {
            spec = spec.with_hidden_dropout(self.dropout)?;
        }
        Ok(spec)
    }

    /// Reads back the description of an MLP built by [`NetDesc::build`].
    pub fn of(spec: &NetworkSpec) -> Self {
        let layers = spec.layers();
        let hidden = &layers[..layers.len() - 1];
        Self {
            hidden: hidden.iter().map(|l| l.out_dim).collect(),
            activation: hidden.first().map_or(Activation::Relu, |l| l.activation),
            batch_norm: hidden.iter().any(|l| l.batch_norm),
            dropout: hidden.first().map_or(0.0, |l| l.dropout),
            output: layers.last().unwrap().activation,
        }
    }
}

/// Ground-truth distribution named in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MixtureConfig {
    Ring {
        modes: usize,
        radius: f64,
        sigma: f64,
    },
    Grid {
        rows: usize,
        cols: usize,
        spacing: f64,
        sigma: f64,
        weights: WeightProfile,
    },
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self::Ring {
            modes: 6,
            radius: 5.0,
            sigma: 0.1,
        }
    }
}

impl MixtureConfig {
    pub fn build(&self) -> Result<MixtureSpec> {
        match *self {
            Self::Ring { modes, radius, sigma } => ring_mixture(modes, radius, sigma),
            Self::Grid {
                rows,
                cols,
                spacing,
                sigma,
                weights,
            } => grid_mixture(rows, cols, spacing, sigma, weights),
        }
        .map_err(|e| Error::config("mixture", e.to_string()))
    }

    fn to_kv(&self, out: &mut Vec<(String, String)>) {
        match self {
            Self::Ring { modes, radius, sigma } => {
                push(out, "mixture", "ring");
                push(out, "mixture-modes", modes);
                push(out, "mixture-radius", fmt_f64(*radius));
                push(out, "mixture-sigma", fmt_f64(*sigma));
            }
            Self::Grid {
                rows,
                cols,
                spacing,
                sigma,
                weights,
            } => {
                push(out, "mixture", "grid");
                push(out, "mixture-rows", rows);
                push(out, "mixture-cols", cols);
                push(out, "mixture-spacing", fmt_f64(*spacing));
                push(out, "mixture-sigma", fmt_f64(*sigma));
                push(out, "mixture-weights", weights);
            }
        }
    }

    fn from_kv(kv: &mut Kv) -> Result<Self> {
        let sigma = kv.get("mixture-sigma", 0.1)?;
        match kv.get::<String>("mixture", "ring".into())?.as_str() {
            "ring" => Ok(Self::Ring {
                modes: kv.get("mixture-modes", 6)?,
                radius: kv.get("mixture-radius", 5.0)?,
                sigma,
            }),
            "grid" => Ok(Self::Grid {
                rows: kv.get("mixture-rows", 10)?,
                cols: kv.get("mixture-cols", 10)?,
                spacing: kv.get("mixture-spacing", 2.0)?,
                sigma,
                weights: kv.get("mixture-weights", WeightProfile::Uniform)?,
            }),
            other => Err(Error::config("mixture", format!("unknown mixture `{other}`"))),
        }
    }
}

/// All hyperparameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub generator: NetworkSpec,
    /// Present iff the algorithm is not plain `gan`.
    pub encoder: Option<NetworkSpec>,
    /// Present iff the algorithm is `gan` or `reg-gan`.
    pub discriminator: Option<NetworkSpec>,
    /// Manifold-step discriminator, `mdgan` only.
    pub d1: Option<NetworkSpec>,
    /// Diffusion-step discriminator, `mdgan` only.
    pub d2: Option<NetworkSpec>,
    pub prior: PriorSpec,
    pub weights: LossWeights,
    pub optim_g: OptimConfig,
    /// Shared by D, D1 and D2.
    pub optim_d: OptimConfig,
    pub optim_e: OptimConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    /// Discriminator steps per generator step (`gan` and `reg-gan`).
    pub d_steps: usize,
    pub seed: u64,
    /// Cycles between metric evaluations; 0 evaluates only at the end.
    pub eval_every: usize,
    pub eval_samples: usize,
    pub mode_sign: ModeSign,
    /// When false the encoder is frozen at its initialization.
    pub train_encoder: bool,
}

impl TrainConfig {
    /// Ring-experiment architectures: 3-d uniform noise, a 3-128-128-2 ReLU generator,
    /// a 2-128-1 discriminator, a 2-128-128-3 sigmoid-headed encoder, Adam at 1e-4.
    pub fn ring(algorithm: Algorithm) -> Self {
        let d = NetworkSpec::ring_discriminator(128);
        let (encoder, discriminator, d1, d2) = match algorithm {
            Algorithm::Gan => (None, Some(d), None, None),
            Algorithm::RegGan => (Some(NetworkSpec::ring_encoder()), Some(d), None, None),
            Algorithm::Mdgan => (Some(NetworkSpec::ring_encoder()), None, Some(d.clone()), Some(d)),
        };
        Self {
            algorithm,
            generator: NetworkSpec::ring_generator(),
            encoder,
            discriminator,
            d1,
            d2,
            prior: PriorSpec::uniform3(),
            weights: LossWeights::default(),
            optim_g: OptimConfig::adam(1e-4),
            optim_d: OptimConfig::adam(1e-4),
            optim_e: OptimConfig::adam(1e-4),
            batch_size: 64,
            epochs: 25,
            steps_per_epoch: 1000,
            d_steps: 1,
            seed: 0,
            eval_every: 1000,
            eval_samples: 10_000,
            mode_sign: ModeSign::Rewarding,
            train_encoder: true,
        }
    }

    /// Number of generator steps (training cycles).
    pub fn total_steps(&self) -> u64 {
        (self.epochs as u64) * (self.steps_per_epoch as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let has_e = self.algorithm != Algorithm::Gan;
        let has_d = self.algorithm != Algorithm::Mdgan;
        if self.encoder.is_some() != has_e {
            return Err(Error::config("encoder", format!("must be present iff algorithm != gan ({})", self.algorithm)));
        }
        if self.discriminator.is_some() != has_d {
            return Err(Error::config("discriminator", "must be present iff algorithm != mdgan"));
        }
        if self.d1.is_some() != !has_d || self.d2.is_some() != !has_d {
            return Err(Error::config("d1/d2", "must be present iff algorithm = mdgan"));
        }
        if self.generator.input_dim() != self.prior.dim {
            return Err(Error::config("generator", "input width must equal the noise dimension"));
        }
        if self.generator.output_dim() != 2 {
            return Err(Error::config("generator", "output width must equal the data dimension 2"));
        }
        if let Some(e) = &self.encoder {
            if e.input_dim() != 2 || e.output_dim() != self.prior.dim {
                return Err(Error::config("encoder", "must map 2-d data to the noise dimension"));
            }
        }
        for (name, d) in [("discriminator", &self.discriminator), ("d1", &self.d1), ("d2", &self.d2)] {
            if let Some(d) = d {
                if d.input_dim() != 2 || d.output_dim() != 1 || d.head() != OutputHead::Logit {
                    return Err(Error::config(name, "must map 2-d data to a single logit"));
                }
            }
        }
        for (name, o) in [("lr-g", self.optim_g), ("lr-d", self.optim_d), ("lr-e", self.optim_e)] {
            if !(o.lr > 0.0 && o.lr.is_finite()) {
                return Err(Error::config(name, "learning rate must be positive"));
            }
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch-size", "must be at least 2"));
        }
        if self.d_steps == 0 {
            return Err(Error::config("d-steps", "must be at least 1"));
        }
        if self.eval_samples == 0 {
            return Err(Error::config("eval-samples", "must be positive"));
        }
        LossWeights::new(self.weights.lambda1, self.weights.lambda2, self.weights.lambda)?;
        Ok(())
    }

    fn to_kv(&self, out: &mut Vec<(String, String)>) {
        push(out, "algorithm", self.algorithm);
        push(out, "seed", self.seed);
        push(out, "noise-dim", self.prior.dim);
        push(out, "prior", self.prior.kind);
        net_to_kv(out, "g", &self.generator);
        if let Some(d) = self.discriminator.as_ref().or(self.d1.as_ref()) {
            net_to_kv(out, "d", d);
        }
        if let Some(e) = &self.encoder {
            net_to_kv(out, "e", e);
        }
        push(out, "lambda1", fmt_f64(self.weights.lambda1));
        push(out, "lambda2", fmt_f64(self.weights.lambda2));
        push(out, "lambda", fmt_f64(self.weights.lambda));
        push(out, "literal-mode-sign", self.mode_sign == ModeSign::Literal);
        push(out, "train-encoder", self.train_encoder);
        for (tag, o) in [("g", self.optim_g), ("d", self.optim_d), ("e", self.optim_e)] {
            push(out, &format!("optim-{tag}"), o.kind);
            push(out, &format!("lr-{tag}"), fmt_f64(o.lr));
        }
        push(out, "batch-size", self.batch_size);
        push(out, "epochs", self.epochs);
        push(out, "steps-per-epoch", self.steps_per_epoch);
        push(out, "d-steps", self.d_steps);
        push(out, "eval-every", self.eval_every);
        push(out, "eval-samples", self.eval_samples);
    }

    fn from_kv(kv: &mut Kv) -> Result<Self> {
        let algorithm: Algorithm = kv.get("algorithm", Algorithm::Gan)?;
        let base = Self::ring(algorithm);
        let prior_kind: PriorKind = kv.get("prior", PriorKind::Uniform01)?;
        let noise_dim: usize = kv.get("noise-dim", 3)?;
        let prior = PriorSpec::new(noise_dim, prior_kind).map_err(|e| Error::config("noise-dim", e.to_string()))?;
        let generator = net_from_kv(kv, "g", NetDesc::of(&base.generator))?.build(
            noise_dim,
            2,
            OutputHead::Linear,
        );
        let generator = generator.map_err(|e| Error::config("g-hidden", e.to_string()))?;
        let d_desc = net_from_kv(kv, "d", NetDesc::of(&NetworkSpec::ring_discriminator(128)))?;
        let d = d_desc.build(2, 1, OutputHead::Logit).map_err(|e| Error::config("d-hidden", e.to_string()))?;
        let e_default = NetDesc {
            output: match prior_kind {
                PriorKind::Uniform01 => Activation::Sigmoid,
                PriorKind::StandardGaussian => Activation::Linear,
            },
            ..NetDesc::of(&NetworkSpec::ring_encoder())
        };
        let e_desc = net_from_kv(kv, "e", e_default)?;
        let encoder = (algorithm != Algorithm::Gan)
            .then(|| e_desc.build(2, noise_dim, OutputHead::Linear))
            .transpose()
            .map_err(|e| Error::config("e-hidden", e.to_string()))?;
        let (discriminator, d1, d2) = match algorithm {
            Algorithm::Mdgan => (None, Some(d.clone()), Some(d)),
            _ => (Some(d), None, None),
        };
        let lr: Option<f64> = kv.opt("lr")?;
        let mut optim = |tag: &str| -> Result<OptimConfig> {
            Ok(OptimConfig {
                kind: kv.get(&format!("optim-{tag}"), OptimizerKind::ADAM)?,
                lr: kv.get(&format!("lr-{tag}"), lr.unwrap_or(1e-4))?,
            })
        };
        let (optim_g, optim_d, optim_e) = (optim("g")?, optim("d")?, optim("e")?);
        let weights = LossWeights::new(
            kv.get("lambda1", base.weights.lambda1)?,
            kv.get("lambda2", base.weights.lambda2)?,
            kv.get("lambda", base.weights.lambda)?,
        )?;
        let cfg = Self {
            algorithm,
            generator,
            encoder,
            discriminator,
            d1,
            d2,
            prior,
            weights,
            optim_g,
            optim_d,
            optim_e,
            batch_size: kv.get("batch-size", base.batch_size)?,
            epochs: kv.get("epochs", base.epochs)?,
            steps_per_epoch: kv.get("steps-per-epoch", base.steps_per_epoch)?,
            d_steps: kv.get("d-steps", base.d_steps)?,
            seed: kv.get("seed", base.seed)?,
            eval_every: kv.get("eval-every", base.eval_every)?,
            eval_samples: kv.get("eval-samples", base.eval_samples)?,
            mode_sign: if kv.get("literal-mode-sign", false)? {
                ModeSign::Literal
            } else {
                ModeSign::Rewarding
            },
            train_encoder: kv.get("train-encoder", true)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A training run as described by a config file: hyperparameters plus the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub mixture: MixtureConfig,
}

impl ExperimentConfig {
    /// Parses `key = value` pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut kv = Kv::new(pairs)?;
        let cfg = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    fn from_kv(kv: &mut Kv) -> Result<Self> {
        let version: u32 = kv.get("version", CONFIG_VERSION)?;
        if version != CONFIG_VERSION {
            return Err(Error::config("version", format!("unsupported config version {version}")));
        }
        let mixture = MixtureConfig::from_kv(kv)?;
        mixture.build()?;
        Ok(Self {
            train: TrainConfig::from_kv(kv)?,
            mixture,
        })
    }

    /// Canonical `key = value` rendering; parsing it back yields an equal config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        push(&mut out, "version", CONFIG_VERSION);
        self.mixture.to_kv(&mut out);
        self.train.to_kv(&mut out);
        out
    }
}

/// Candidate lists of a hyperparameter search. Layer counts include the output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base: ExperimentConfig,
    pub n_layer_g: Vec<usize>,
    pub n_layer_d: Vec<usize>,
    pub size_g: Vec<usize>,
    pub size_d: Vec<usize>,
    pub dropout_d: Vec<bool>,
    pub optim_g: Vec<OptimizerKind>,
    pub optim_d: Vec<OptimizerKind>,
    pub lr: Vec<f64>,
    /// Discriminator dropout rate for cells with `dropout_d = true`.
    pub dropout_rate: f64,
    pub seeds: Vec<u64>,
}

impl GridSpec {
    /// The full eight-axis search with `lambda1 = 0.2` and `lambda2 = 0.4`.
    pub fn table(base: ExperimentConfig) -> Self {
        let mut base = base;
        base.train.weights.lambda1 = 0.2;
        base.train.weights.lambda2 = 0.4;
        Self {
            base,
            n_layer_g: vec![2, 3, 4],
            n_layer_d: vec![2, 3, 4],
            size_g: vec![400, 800, 1600, 3200],
            size_d: vec![256, 512, 1024],
            dropout_d: vec![true, false],
            optim_g: vec![OptimizerKind::Sgd, OptimizerKind::ADAM],
            optim_d: vec![OptimizerKind::Sgd, OptimizerKind::ADAM],
            lr: vec![1e-2, 1e-3, 1e-4],
            dropout_rate: 0.5,
            seeds: vec![0],
        }
    }

    /// Number of hyperparameter cells (each trained once per seed and algorithm).
    pub fn cells(&self) -> usize {
        self.n_layer_g.len()
            * self.n_layer_d.len()
            * self.size_g.len()
            * self.size_d.len()
            * self.dropout_d.len()
            * self.optim_g.len()
            * self.optim_d.len()
            * self.lr.len()
    }

    pub fn validate(&self) -> Result<()> {
        let lens = [
            ("search-n-layer-g", self.n_layer_g.len()),
            ("search-n-layer-d", self.n_layer_d.len()),
            ("search-size-g", self.size_g.len()),
            ("search-size-d", self.size_d.len()),
            ("search-dropout-d", self.dropout_d.len()),
            ("search-optim-g", self.optim_g.len()),
            ("search-optim-d", self.optim_d.len()),
            ("search-lr", self.lr.len()),
            ("search-seeds", self.seeds.len()),
        ];
        for (name, n) in lens {
            if n == 0 {
                return Err(Error::config(name, "candidate list is empty"));
            }
        }
        if self.n_layer_g.iter().chain(&self.n_layer_d).any(|&n| n == 0) {
            return Err(Error::config("search-n-layer", "layer counts must be at least 1"));
        }
        if self.size_g.iter().chain(&self.size_d).any(|&n| n == 0) {
            return Err(Error::config("search-size", "layer widths must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("search-dropout-rate", "must lie in [0, 1)"));
        }
        if self.lr.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::config("search-lr", "learning rates must be positive"));
        }
        Ok(())
    }

    /// Parses a search config: every experiment key plus the `search-*` lists. Lists
    /// default to the full eight-axis search, loss weights to `0.2` and `0.4`.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut kv = Kv::new(pairs)?;
        let lambdas_given = kv.contains("lambda1") || kv.contains("lambda2");
        let base = ExperimentConfig::from_kv(&mut kv)?;
        let mut grid = Self::table(base.clone());
        if lambdas_given {
            grid.base.train.weights = base.train.weights;
        }
        grid.n_layer_g = kv.list("search-n-layer-g", grid.n_layer_g)?;
        grid.n_layer_d = kv.list("search-n-layer-d", grid.n_layer_d)?;
        grid.size_g = kv.list("search-size-g", grid.size_g)?;
        grid.size_d = kv.list("search-size-d", grid.size_d)?;
        grid.dropout_d = kv.list("search-dropout-d", grid.dropout_d)?;
        grid.optim_g = kv.list("search-optim-g", grid.optim_g)?;
        grid.optim_d = kv.list("search-optim-d", grid.optim_d)?;
        grid.lr = kv.list("search-lr", grid.lr)?;
        grid.dropout_rate = kv.get("search-dropout-rate", grid.dropout_rate)?;
        grid.seeds = kv.list("search-seeds", vec![base.train.seed])?;
        kv.finish()?;
        grid.validate()?;
        Ok(grid)
    }
}

fn push(out: &mut Vec<(String, String)>, key: &str, value: impl ToString) {
    out.push((key.to_string(), value.to_string()));
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn net_to_kv(out: &mut Vec<(String, String)>, tag: &str, spec: &NetworkSpec) {
    let d = NetDesc::of(spec);
    push(out, &format!("{tag}-hidden"), join(&d.hidden));
    push(out, &format!("{tag}-activation"), d.activation);
    push(out, &format!("{tag}-output"), d.output);
    push(out, &format!("{tag}-batch-norm"), d.batch_norm);
    push(out, &format!("{tag}-dropout"), fmt_f64(d.dropout));
}

fn net_from_kv(kv: &mut Kv, tag: &str, default: NetDesc) -> Result<NetDesc> {
    Ok(NetDesc {
        hidden: kv.list(&format!("{tag}-hidden"), default.hidden)?,
        activation: kv.get(&format!("{tag}-activation"), default.activation)?,
        output: kv.get(&format!("{tag}-output"), default.output)?,
        batch_norm: kv.get(&format!("{tag}-batch-norm"), default.batch_norm)?,
        dropout: kv.get(&format!("{tag}-dropout"), default.dropout)?,
    })
}

/// Key lookup that remembers which keys were consumed.
struct Kv {
    map: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl Kv {
    fn new(pairs: &[(String, String)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            map.insert(k.clone(), v.clone());
        }
        Ok(Self {
            map,
            used: BTreeSet::new(),
        })
    }

    fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.used.insert(key.to_string());
        self.map
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::config(key, format!("`{v}`: {e}"))))
            .transpose()
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.used.insert(key.to_string());
        let Some(v) = self.map.get(key) else {
            return Ok(default);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| Error::config(key, format!("`{s}`: {e}"))))
            .collect()
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(Error::config(k.clone(), "unknown key")),
            None => Ok(()),
        }
    }
}
