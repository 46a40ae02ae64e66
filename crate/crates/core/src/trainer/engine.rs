use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId, Tensor};
use crate::data::{sample_mixture, sample_prior, MixtureSpec};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::{evaluate_samples, sample_generator, CaptureRule};
use crate::nets::{check_header, BatchClass, Bound, Mode, Network, NetworkSpec, Optimizer};
use crate::objectives::{d_loss, g_loss, manifold_generator_loss, reg_generator_target};
use crate::scalar::Scalar;

use super::config::{Algorithm, OptimConfig, TrainConfig};
use super::history::{EvalRecord, StepRecord, TrainHistory};

pub const RUN_MAGIC: &str = "MODEGAN-RUN";
pub const RUN_VERSION: u32 = 1;
/// Size of the fixed held-out set used for reconstruction error.
pub const HELDOUT_SIZE: usize = 1000;

const TAG_TRAIN: u64 = 0;
const TAG_G: u64 = 1;
const TAG_E: u64 = 2;
const TAG_D: u64 = 3;
const TAG_D1: u64 = 4;
const TAG_D2: u64 = 5;
const TAG_HELDOUT: u64 = 6;
const TAG_EVAL: u64 = 7;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent sub-seed of `seed` for the stream named by `tag`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// A network together with its optimizer state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub net: Network<f64>,
    pub opt: Optimizer<f64>,
}

impl Slot {
    fn new(spec: &NetworkSpec, optim: OptimConfig, seed: u64) -> Self {
        let net = Network::new(spec.clone(), seed);
        let opt = Optimizer::new(optim.kind, optim.lr, &net.params);
        Self { net, opt }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Models {
    pub g: Slot,
    pub e: Option<Slot>,
    pub d: Option<Slot>,
    pub d1: Option<Slot>,
    pub d2: Option<Slot>,
}

/// Trained networks and the run's history.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub generator: Network<f64>,
    pub encoder: Option<Network<f64>>,
    pub discriminator: Option<Network<f64>>,
    pub d1: Option<Network<f64>>,
    pub d2: Option<Network<f64>>,
    pub history: TrainHistory,
}

/// Complete state of a training run. Serializing it mid-run and resuming continues
/// the run bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trainer {
    config: TrainConfig,
    mixture: MixtureSpec,
    models: Models,
    rng: ChaCha8Rng,
    step: u64,
    history: TrainHistory,
    heldout: Tensor<f64>,
}

#[derive(Serialize, Deserialize)]
struct RunCheckpoint {
    magic: String,
    version: u32,
    scalar: String,
    trainer: Trainer,
}

fn diverged(step: u64, what: impl Into<String>) -> Error {
    Error::Diverged {
        step,
        what: what.into(),
    }
}

fn grad_norm(grads: &[Tensor<f64>]) -> f64 {
    grads
        .iter()
        .flat_map(|t| t.data())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

fn mean_sq_dist(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    let total: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    total / a.rows().max(1) as f64
}

fn loss_value(g: &Graph<f64>, id: NodeId, step: u64, what: &str) -> Result<f64> {
    let v = g.value(id).item();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(diverged(step, what))
    }
}

/// Pulls the gradients of `bound` out of a finished backward pass and applies them.
fn apply(
    slot: &mut Slot,
    bound: &Bound,
    g: &Graph<f64>,
    grads: &crate::autodiff::Gradients<f64>,
    step: u64,
    what: &str,
) -> Result<f64> {
    let gs = bound.gradients(g, grads);
    let norm = grad_norm(&gs);
    slot.opt
        .step(&mut slot.net.params, &gs)
        .map_err(|e| diverged(step, format!("{what} ({e})")))?;
    Ok(norm)
}

/// One discriminator update on `real` (target 1) and `fake` (target 0). Returns the
/// loss, the gradient norm and the number of correctly classified rows.
fn d_update(
    slot: &mut Slot,
    real: &Tensor<f64>,
    fake: &Tensor<f64>,
    step: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, usize)> {
    let mut g = Graph::new();
    let bound = slot.net.bind(&mut g, true);
    let xr = g.constant(real.clone());
    let xf = g.constant(fake.clone());
    let lr = slot.net.forward(&mut g, &bound, xr, Mode::Train, BatchClass::Noise, rng)?.output;
    let lf = slot.net.forward(&mut g, &bound, xf, Mode::Train, BatchClass::Noise, rng)?.output;
    let correct = g.value(lr).data().iter().filter(|&&l| l > 0.0).count()
        + g.value(lf).data().iter().filter(|&&l| l < 0.0).count();
    let loss = d_loss(&mut g, lr, lf)?;
    let v = loss_value(&g, loss, step, "discriminator loss")?;
    let grads = g.backward(loss)?;
    let norm = apply(slot, &bound, &g, &grads, step, "discriminator gradient")?;
    Ok((v, norm, correct))
}

fn train_output(net: &mut Network<f64>, x: &Tensor<f64>, class: BatchClass, rng: &mut ChaCha8Rng) -> Result<Tensor<f64>> {
    Ok(net.predict(x, Mode::Train, class, rng)?.output)
}

impl Trainer {
    pub fn new(config: TrainConfig, mixture: MixtureSpec) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let slot = |spec: &Option<NetworkSpec>, optim, tag| spec.as_ref().map(|s| Slot::new(s, optim, derive_seed(seed, tag)));
        let models = Models {
            g: Slot::new(&config.generator, config.optim_g, derive_seed(seed, TAG_G)),
            e: slot(&config.encoder, config.optim_e, TAG_E),
            d: slot(&config.discriminator, config.optim_d, TAG_D),
            d1: slot(&config.d1, config.optim_d, TAG_D1),
            d2: slot(&config.d2, config.optim_d, TAG_D2),
        };
        let mut held_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_HELDOUT));
        let heldout = sample_mixture(&mixture, HELDOUT_SIZE, &mut held_rng).samples;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_TRAIN)),
            config,
            mixture,
            models,
            step: 0,
            history: TrainHistory::default(),
            heldout,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn mixture(&self) -> &MixtureSpec {
        &self.mixture
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    /// Completed training cycles.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn total_steps(&self) -> u64 {
        self.config.total_steps()
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.total_steps()
    }

    pub fn heldout(&self) -> &Tensor<f64> {
        &self.heldout
    }

    /// Runs every remaining cycle.
    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.total_steps())
    }

    /// Runs cycles until `target` (capped at the total) have completed.
    pub fn run_until(&mut self, target: u64) -> Result<()> {
        let target = target.min(self.total_steps());
        if self.step == 0 && self.step < target && self.history.initial.is_none() {
            self.history.initial = Some(self.evaluate(0)?);
        }
        while self.step < target {
            let mut record = self.cycle(self.step + 1)?;
            self.step += 1;
            if self.eval_due(self.step) {
                record.eval = Some(self.evaluate(self.step)?);
            }
            self.history.push(record);
        }
        Ok(())
    }

    fn eval_due(&self, step: u64) -> bool {
        let every = self.config.eval_every as u64;
        step == self.total_steps() || (every > 0 && step.is_multiple_of(every))
    }

    /// Metrics of the current generator. Uses its own rng keyed by `step`, so
    /// evaluating never perturbs the training stream.
    pub fn evaluate(&self, step: u64) -> Result<EvalRecord> {
        let seed = derive_seed(derive_seed(self.config.seed, TAG_EVAL), step);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = &self.models.g.net;
        let samples = sample_generator(g, &self.config.prior, self.config.eval_samples, &mut rng)?;
        let metrics = evaluate_samples(&samples, &self.mixture, &CaptureRule::default())?;
        Ok(EvalRecord {
            step,
            metrics,
            recon: self.heldout_recon()?,
        })
    }

    /// Mean squared distance between held-out points and their reconstructions
    /// `G(E(x))`, in eval mode.
    pub fn heldout_recon(&self) -> Result<Option<f64>> {
        let Some(e) = &self.models.e else {
            return Ok(None);
        };
        let code = e.net.eval(&self.heldout, BatchClass::Noise)?;
        let x_hat = self.models.g.net.eval(&code, BatchClass::Encoded)?;
        Ok(Some(mean_sq_dist(&self.heldout, &x_hat)))
    }

    fn data(&mut self, n: usize) -> Tensor<f64> {
        sample_mixture(&self.mixture, n, &mut self.rng).samples
    }

    fn noise(&mut self, n: usize) -> Tensor<f64> {
        sample_prior(&self.config.prior, n, &mut self.rng)
    }

    fn cycle(&mut self, step: u64) -> Result<StepRecord> {
        match self.config.algorithm {
            Algorithm::Gan => self.gan_cycle(step),
            // Without regularizer weight the encoder has no influence, and the cycle
            // reduces exactly to the plain one.
            Algorithm::RegGan if !self.config.weights.regularized() => self.gan_cycle(step),
            Algorithm::RegGan => self.reg_cycle(step),
            Algorithm::Mdgan => self.mdgan_cycle(step),
        }
    }

    fn gan_cycle(&mut self, step: u64) -> Result<StepRecord> {
        let mut d = (0.0, 0.0);
        for _ in 0..self.config.d_steps {
            d = self.gan_d_step(step)?;
        }
        let (loss_g, grad_norm_g) = self.gan_g_step(step)?;
        Ok(StepRecord {
            step,
            loss_d: d.0,
            loss_g,
            loss_e: None,
            loss_d2: None,
            loss_g2: None,
            recon: None,
            d2_acc: None,
            grad_norm_d: d.1,
            grad_norm_g,
            grad_norm_e: None,
            eval: None,
        })
    }

    fn gan_d_step(&mut self, step: u64) -> Result<(f64, f64)> {
        let b = self.config.batch_size;
        let x = self.data(b);
        let z = self.noise(b);
        let Models { g, d, .. } = &mut self.models;
        let fake = train_output(&mut g.net, &z, BatchClass::Noise, &mut self.rng)?;
        let d = d.as_mut().expect("validated config has a discriminator");
        let (loss, norm, _) = d_update(d, &x, &fake, step, &mut self.rng)?;
        Ok((loss, norm))
    }

    fn gan_g_step(&mut self, step: u64) -> Result<(f64, f64)> {
        let z = self.noise(self.config.batch_size);
        let Models { g: gs, d, .. } = &mut self.models;
        let ds = d.as_mut().expect("validated config has a discriminator");
        let mut g = Graph::new();
        let bg = gs.net.bind(&mut g, true);
        let bd = ds.net.bind(&mut g, false);
        let zi = g.constant(z);
        let rng = &mut self.rng;
        let fake = gs.net.forward(&mut g, &bg, zi, Mode::Train, BatchClass::Noise, rng)?.output;
        let logits = ds.net.forward(&mut g, &bd, fake, Mode::Train, BatchClass::Noise, rng)?.output;
        let loss = g_loss(&mut g, logits)?;
        let v = loss_value(&g, loss, step, "generator loss")?;
        let grads = g.backward(loss)?;
        let norm = apply(gs, &bg, &g, &grads, step, "generator gradient")?;
        Ok((v, norm))
    }

    fn reg_cycle(&mut self, step: u64) -> Result<StepRecord> {
        let mut d = (0.0, 0.0);
        for _ in 0..self.config.d_steps {
            d = self.reg_d_step(step)?;
        }
        let r = self.reg_ge_step(step)?;
        Ok(StepRecord {
            step,
            loss_d: d.0,
            loss_g: r.loss_g,
            loss_e: Some(r.loss_e),
            loss_d2: None,
            loss_g2: None,
            recon: Some(r.recon),
            d2_acc: None,
            grad_norm_d: d.1,
            grad_norm_g: r.norm_g,
            grad_norm_e: r.norm_e,
            eval: None,
        })
    }

    /// Fakes are `G(z)` for half the batch and `G(E(x))` for the other half, each
    /// pushed through G under its own batch-norm class.
    fn reg_d_step(&mut self, step: u64) -> Result<(f64, f64)> {
        let b = self.config.batch_size;
        let half = b / 2;
        let x = self.data(b);
        let z = self.noise(half);
        let x_enc = self.data(b - half);
        let Models { g, e, d, .. } = &mut self.models;
        let e = e.as_mut().expect("validated config has an encoder");
        let rng = &mut self.rng;
        let gz = train_output(&mut g.net, &z, BatchClass::Noise, rng)?;
        let code = train_output(&mut e.net, &x_enc, BatchClass::Noise, rng)?;
        let gex = train_output(&mut g.net, &code, BatchClass::Encoded, rng)?;
        let fake = Tensor::concat_rows(&[&gz, &gex])?;
        let d = d.as_mut().expect("validated config has a discriminator");
        let (loss, norm, _) = d_update(d, &x, &fake, step, rng)?;
        Ok((loss, norm))
    }

    /// One backward pass of the generator target. Its encoder gradient equals that
    /// of the encoder target, since the adversarial term does not depend on E.
    fn reg_ge_step(&mut self, step: u64) -> Result<RegStep> {
        let b = self.config.batch_size;
        let z = self.noise(b);
        let x = self.data(b);
        let train_e = self.config.train_encoder;
        let (weights, sign) = (self.config.weights, self.config.mode_sign);
        let Models { g: gs, e, d, .. } = &mut self.models;
        let es = e.as_mut().expect("validated config has an encoder");
        let ds = d.as_mut().expect("validated config has a discriminator");
        let rng = &mut self.rng;
        let mut g = Graph::new();
        let bg = gs.net.bind(&mut g, true);
        let be = es.net.bind(&mut g, train_e);
        let bd = ds.net.bind(&mut g, false);
        let zi = g.constant(z);
        let xi = g.constant(x);
        let fake = gs.net.forward(&mut g, &bg, zi, Mode::Train, BatchClass::Noise, rng)?.output;
        let fake_logits = ds.net.forward(&mut g, &bd, fake, Mode::Train, BatchClass::Noise, rng)?.output;
        let code = es.net.forward(&mut g, &be, xi, Mode::Train, BatchClass::Noise, rng)?.output;
        let x_hat = gs.net.forward(&mut g, &bg, code, Mode::Train, BatchClass::Encoded, rng)?.output;
        let recon_logits = ds.net.forward(&mut g, &bd, x_hat, Mode::Train, BatchClass::Noise, rng)?.output;
        let terms = reg_generator_target(&mut g, fake_logits, recon_logits, xi, x_hat, &weights, sign)?;
        let loss_g = loss_value(&g, terms.total, step, "generator target")?;
        let loss_e = loss_value(&g, terms.regularizer, step, "encoder target")?;
        let recon = g.value(terms.reconstruction).item();
        let grads = g.backward(terms.total)?;
        let norm_g = apply(gs, &bg, &g, &grads, step, "generator gradient")?;
        let norm_e = if train_e {
            Some(apply(es, &be, &g, &grads, step, "encoder gradient")?)
        } else {
            None
        };
        Ok(RegStep {
            loss_g,
            loss_e,
            recon,
            norm_g,
            norm_e,
        })
    }

    fn mdgan_cycle(&mut self, step: u64) -> Result<StepRecord> {
        let b = self.config.batch_size;
        let x = self.data(b);
        let (loss_d, grad_norm_d) = self.manifold_d1_step(step, &x)?;
        let m = self.manifold_ge_step(step, &x)?;
        let x = self.data(b);
        let z = self.noise(b);
        let (loss_d2, acc) = self.diffusion_d2_step(step, &x, &z)?;
        let loss_g2 = self.diffusion_g_step(step, &z)?;
        Ok(StepRecord {
            step,
            loss_d,
            loss_g: m.loss,
            loss_e: None,
            loss_d2: Some(loss_d2),
            loss_g2: Some(loss_g2),
            recon: Some(m.recon),
            d2_acc: Some(acc),
            grad_norm_d,
            grad_norm_g: m.norm_g,
            grad_norm_e: m.norm_e,
            eval: None,
        })
    }

    /// D1 separates real `x` from reconstructions `G(E(x))`.
    fn manifold_d1_step(&mut self, step: u64, x: &Tensor<f64>) -> Result<(f64, f64)> {
        let Models { g, e, d1, .. } = &mut self.models;
        let e = e.as_mut().expect("validated config has an encoder");
        let rng = &mut self.rng;
        let code = train_output(&mut e.net, x, BatchClass::Noise, rng)?;
        let x_hat = train_output(&mut g.net, &code, BatchClass::Encoded, rng)?;
        let d1 = d1.as_mut().expect("validated config has D1");
        let (loss, norm, _) = d_update(d1, x, &x_hat, step, rng)?;
        Ok((loss, norm))
    }

    /// G and E descend the manifold loss on the same batch D1 just saw.
    fn manifold_ge_step(&mut self, step: u64, x: &Tensor<f64>) -> Result<ManifoldStep> {
        let train_e = self.config.train_encoder;
        let lambda = self.config.weights.lambda;
        let Models { g: gs, e, d1, .. } = &mut self.models;
        let es = e.as_mut().expect("validated config has an encoder");
        let ds = d1.as_mut().expect("validated config has D1");
        let rng = &mut self.rng;
        let mut g = Graph::new();
        let bg = gs.net.bind(&mut g, true);
        let be = es.net.bind(&mut g, train_e);
        let bd = ds.net.bind(&mut g, false);
        let xi = g.constant(x.clone());
        let code = es.net.forward(&mut g, &be, xi, Mode::Train, BatchClass::Noise, rng)?.output;
        let x_hat = gs.net.forward(&mut g, &bg, code, Mode::Train, BatchClass::Encoded, rng)?.output;
        let logits = ds.net.forward(&mut g, &bd, x_hat, Mode::Train, BatchClass::Noise, rng)?.output;
        let loss = manifold_generator_loss(&mut g, xi, x_hat, logits, lambda)?;
        let v = loss_value(&g, loss, step, "manifold loss")?;
        let recon = mean_sq_dist(x, g.value(x_hat));
        let grads = g.backward(loss)?;
        let norm_g = apply(gs, &bg, &g, &grads, step, "generator gradient")?;
        let norm_e = if train_e {
            Some(apply(es, &be, &g, &grads, step, "encoder gradient")?)
        } else {
            None
        };
        Ok(ManifoldStep {
            loss: v,
            recon,
            norm_g,
            norm_e,
        })
    }

    /// D2 takes `G(E(x))` as real and `G(z)` as fake. Returns the loss and D2's
    /// accuracy on the batch before the update.
    fn diffusion_d2_step(&mut self, step: u64, x: &Tensor<f64>, z: &Tensor<f64>) -> Result<(f64, f64)> {
        let Models { g, e, d2, .. } = &mut self.models;
        let e = e.as_mut().expect("validated config has an encoder");
        let rng = &mut self.rng;
        let code = train_output(&mut e.net, x, BatchClass::Noise, rng)?;
        let recon = train_output(&mut g.net, &code, BatchClass::Encoded, rng)?;
        let gen = train_output(&mut g.net, z, BatchClass::Noise, rng)?;
        let d2 = d2.as_mut().expect("validated config has D2");
        let (loss, _, correct) = d_update(d2, &recon, &gen, step, rng)?;
        Ok((loss, correct as f64 / (recon.rows() + gen.rows()) as f64))
    }

    /// G ascends `log D2(G(z))` on the diffusion batch's noise.
    fn diffusion_g_step(&mut self, step: u64, z: &Tensor<f64>) -> Result<f64> {
        let Models { g: gs, d2, .. } = &mut self.models;
        let ds = d2.as_mut().expect("validated config has D2");
        let rng = &mut self.rng;
        let mut g = Graph::new();
        let bg = gs.net.bind(&mut g, true);
        let bd = ds.net.bind(&mut g, false);
        let zi = g.constant(z.clone());
        let gen = gs.net.forward(&mut g, &bg, zi, Mode::Train, BatchClass::Noise, rng)?.output;
        let gen_logits = ds.net.forward(&mut g, &bd, gen, Mode::Train, BatchClass::Noise, rng)?.output;
        let loss = g_loss(&mut g, gen_logits)?;
        let v = loss_value(&g, loss, step, "diffusion loss")?;
        let grads = g.backward(loss)?;
        apply(gs, &bg, &g, &grads, step, "generator gradient")?;
        Ok(v)
    }

    pub fn to_json(&self) -> Result<String> {
        let ck = RunCheckpoint {
            magic: RUN_MAGIC.to_string(),
            version: RUN_VERSION,
            scalar: f64::NAME.to_string(),
            trainer: self.clone(),
        };
        Ok(serde_json::to_string(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: RunCheckpoint = serde_json::from_str(text)?;
        check_header(&ck.magic, RUN_MAGIC, ck.version, RUN_VERSION)?;
        if ck.scalar != f64::NAME {
            return Err(Error::Checkpoint(format!("run checkpoint holds {} values", ck.scalar)));
        }
        let t = ck.trainer;
        t.config.validate()?;
        let c = &t.config;
        let pairs = [
            (Some(&t.models.g), Some(&c.generator)),
            (t.models.e.as_ref(), c.encoder.as_ref()),
            (t.models.d.as_ref(), c.discriminator.as_ref()),
            (t.models.d1.as_ref(), c.d1.as_ref()),
            (t.models.d2.as_ref(), c.d2.as_ref()),
        ];
        for (slot, spec) in pairs {
            let ok = match (slot, spec) {
                (Some(s), Some(spec)) => s.net.spec == *spec && s.net.params.matches(spec),
                (None, None) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::Checkpoint("networks do not match the stored config".into()));
            }
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn into_outcome(self) -> TrainOutcome {
        let m = self.models;
        TrainOutcome {
            generator: m.g.net,
            encoder: m.e.map(|s| s.net),
            discriminator: m.d.map(|s| s.net),
            d1: m.d1.map(|s| s.net),
            d2: m.d2.map(|s| s.net),
            history: self.history,
        }
    }
}

struct RegStep {
    loss_g: f64,
    loss_e: f64,
    recon: f64,
    norm_g: f64,
    norm_e: Option<f64>,
}

struct ManifoldStep {
    loss: f64,
    recon: f64,
    norm_g: f64,
    norm_e: Option<f64>,
}

/// Runs `config` to completion, whatever its algorithm.
pub fn train(config: TrainConfig, mixture: &MixtureSpec) -> Result<TrainOutcome> {
    let mut t = Trainer::new(config, mixture.clone())?;
    t.run()?;
    Ok(t.into_outcome())
}

fn train_as(want: Algorithm, config: TrainConfig, mixture: &MixtureSpec) -> Result<TrainOutcome> {
    if config.algorithm != want {
        return Err(Error::config(
            "algorithm",
            format!("expected {want}, config says {}", config.algorithm),
        ));
    }
    train(config, mixture)
}

pub fn train_gan(config: TrainConfig, mixture: &MixtureSpec) -> Result<TrainOutcome> {
    train_as(Algorithm::Gan, config, mixture)
}

pub fn train_reg_gan(config: TrainConfig, mixture: &MixtureSpec) -> Result<TrainOutcome> {
    train_as(Algorithm::RegGan, config, mixture)
}

pub fn train_mdgan(config: TrainConfig, mixture: &MixtureSpec) -> Result<TrainOutcome> {
    train_as(Algorithm::Mdgan, config, mixture)
}
