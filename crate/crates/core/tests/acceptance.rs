//! Exit criteria. Prints one `PASS`/`FAIL` line per criterion and exits non-zero if
//! any criterion fails. Run with `cargo test -p modegan --test acceptance`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use modegan::autodiff::{grad_check, Graph, NodeId, Tensor};
use modegan::data::{grid_mixture, ring_mixture, sample_mixture, WeightProfile};
use modegan::metrics::{
    inception_score_from_posteriors, marginal, missing_mode_estimate, mode_score_from_posteriors, LabelDist,
    MissingModeConfig,
};
use modegan::nets::{Activation, BatchClass, Bound, LayerSpec, Mode, Network, NetworkSpec, OutputHead};
use modegan::objectives::{
    d_loss, encoder_target, g_loss, manifold_generator_loss, mdgan_diffusion_losses, mdgan_manifold_losses,
    reconstruction, reg_generator_target, LossWeights, ModeSign,
};
use modegan::trainer::{train, Algorithm, TrainConfig, TrainOutcome, Trainer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn median_usize(mut v: Vec<usize>) -> usize {
    v.sort_unstable();
    v[v.len() / 2]
}

fn median_f64(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

// ---------------------------------------------------------------- gradients

#[derive(Clone, Copy, Debug)]
enum Loss {
    Discriminator,
    Generator,
    Reconstruction,
    RegGenerator(ModeSign),
    Encoder,
    Manifold,
    ManifoldD1,
    DiffusionD2,
    DiffusionG,
}

const LOSSES: [Loss; 10] = [
    Loss::Discriminator,
    Loss::Generator,
    Loss::Reconstruction,
    Loss::RegGenerator(ModeSign::Rewarding),
    Loss::RegGenerator(ModeSign::Literal),
    Loss::Encoder,
    Loss::Manifold,
    Loss::ManifoldD1,
    Loss::DiffusionD2,
    Loss::DiffusionG,
];

/// Random smooth MLP: tanh or sigmoid hidden units, optional dropout. Batch norm is left
/// out: the bias feeding a normalized layer has an identically zero gradient, where the
/// relative error measures only finite-difference roundoff.
fn random_net(rng: &mut ChaCha8Rng, input: usize, output: usize, out_act: Activation, head: OutputHead) -> NetworkSpec {
    let depth = rng.random_range(1..=2);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(3..=6)).collect();
    let act = if rng.random_bool(0.5) { Activation::Tanh } else { Activation::Sigmoid };
    let dropout = if rng.random_bool(0.3) { 0.25 } else { 0.0 };
    let base = NetworkSpec::mlp(input, &hidden, output, act, out_act, head).unwrap();
    let n = base.layers().len();
    let layers: Vec<LayerSpec> = base
        .layers()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut l = l.clone();
            if i + 1 < n {
                l.dropout = dropout;
            }
            l
        })
        .collect();
    NetworkSpec::new(layers, head).unwrap()
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor<f64> {
    let data = (0..rows * cols)
        .map(|_| { let v: f64 = StandardNormal.sample(rng); scale * v })
        .collect();
    Tensor::new(rows, cols, data).unwrap()
}

fn gradient_correctness() -> Check {
    const CONFIGS: usize = 30;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let mut worst = 0.0f64;
    let mut entries = 0;
    for i in 0..CONFIGS {
        let loss = LOSSES[i % LOSSES.len()];
        let noise_dim = rng.random_range(2..=4);
        let gen = Network::<f64>::new(
            random_net(&mut rng, noise_dim, 2, Activation::Linear, OutputHead::Linear),
            rng.random(),
        );
        let enc = Network::<f64>::new(
            random_net(&mut rng, 2, noise_dim, Activation::Sigmoid, OutputHead::Linear),
            rng.random(),
        );
        let disc = Network::<f64>::new(
            random_net(&mut rng, 2, 1, Activation::Linear, OutputHead::Logit),
            rng.random(),
        );
        let batch = rng.random_range(4..=8);
        let x = random_tensor(&mut rng, batch, 2, 2.0);
        let z = Tensor::new(batch, noise_dim, (0..batch * noise_dim).map(|_| rng.random::<f64>()).collect()).unwrap();
        let weights = LossWeights::new(rng.random_range(0.1..1.0), rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)).unwrap();
        let dropout_seed: u64 = rng.random();

        let mut params: Vec<Tensor<f64>> = Vec::new();
        let counts: Vec<usize> = [&gen, &enc, &disc]
            .iter()
            .map(|n| {
                let t = n.params.trainable();
                params.extend(t.iter().map(|t| (*t).clone()));
                t.len()
            })
            .collect();

        // roundoff in the difference quotient is ~1e-16 / eps; 1e-4 keeps it below
        // the tolerance for gradients down to ~1e-8
        let report = grad_check(&params, 1e-4, |g: &mut Graph<f64>, ids: &[NodeId]| {
            let mut drop_rng = ChaCha8Rng::seed_from_u64(dropout_seed);
            let (gi, rest) = ids.split_at(counts[0]);
            let (ei, di) = rest.split_at(counts[1]);
            let (gb, eb, db) = (Bound::new(gi.to_vec()), Bound::new(ei.to_vec()), Bound::new(di.to_vec()));
            let (mut gn, mut en, mut dn) = (gen.clone(), enc.clone(), disc.clone());
            let xn = g.constant(x.clone());
            let zn = g.constant(z.clone());
            let fake = gn.forward(g, &gb, zn, Mode::Train, BatchClass::Noise, &mut drop_rng)?.output;
            let code = en.forward(g, &eb, xn, Mode::Train, BatchClass::Noise, &mut drop_rng)?.output;
            let x_hat = gn.forward(g, &gb, code, Mode::Train, BatchClass::Encoded, &mut drop_rng)?.output;
            let real_l = dn.forward(g, &db, xn, Mode::Train, BatchClass::Noise, &mut drop_rng)?.output;
            let fake_l = dn.forward(g, &db, fake, Mode::Train, BatchClass::Noise, &mut drop_rng)?.output;
            let recon_l = dn.forward(g, &db, x_hat, Mode::Train, BatchClass::Noise, &mut drop_rng)?.output;
            match loss {
                Loss::Discriminator => d_loss(g, real_l, fake_l),
                Loss::Generator => g_loss(g, fake_l),
                Loss::Reconstruction => reconstruction(g, xn, x_hat),
                Loss::RegGenerator(sign) => {
                    Ok(reg_generator_target(g, fake_l, recon_l, xn, x_hat, &weights, sign)?.total)
                }
                Loss::Encoder => Ok(encoder_target(g, recon_l, xn, x_hat, &weights, ModeSign::Rewarding)?.total),
                Loss::Manifold => manifold_generator_loss(g, xn, x_hat, recon_l, weights.lambda),
                Loss::ManifoldD1 => Ok(mdgan_manifold_losses(g, xn, x_hat, real_l, recon_l, weights.lambda)?.0),
                Loss::DiffusionD2 => Ok(mdgan_diffusion_losses(g, recon_l, fake_l)?.0),
                Loss::DiffusionG => Ok(mdgan_diffusion_losses(g, recon_l, fake_l)?.1),
            }
        })
        .map_err(|e| format!("config {i} ({loss:?}): {e}"))?;
        entries += report.entries;
        ensure(
            report.max_rel_error < 1e-4,
            format!("config {i} ({loss:?}): max relative error {:.3e} at {:?}", report.max_rel_error, report.worst),
        )?;
        worst = worst.max(report.max_rel_error);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1}s, limit 30s"))?;
    Ok(format!("{CONFIGS} configs, {entries} entries, worst relative error {worst:.2e}, {secs:.1}s"))
}

// ---------------------------------------------------------------- metric oracles

/// `exp(H(p*) - mean H(p(y|x)))`, the entropy form of the inception score.
fn oracle_inception(post: &[Vec<f64>]) -> f64 {
    let n = post.len() as f64;
    let k = post[0].len();
    let entropy = |p: &[f64]| -> f64 { -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>() };
    let pstar: Vec<f64> = (0..k).map(|j| post.iter().map(|p| p[j]).sum::<f64>() / n).collect();
    let mean_h = post.iter().map(|p| entropy(p)).sum::<f64>() / n;
    (entropy(&pstar) - mean_h).exp()
}

/// The MODE score expression evaluated term by term.
fn oracle_mode(post: &[Vec<f64>], train: &[f64]) -> f64 {
    let n = post.len() as f64;
    let k = train.len();
    let mut expected_kl = 0.0;
    for p in post {
        for j in 0..k {
            if p[j] > 0.0 {
                expected_kl += p[j] * (p[j].ln() - train[j].ln()) / n;
            }
        }
    }
    let mut kl_star = 0.0;
    for j in 0..k {
        let s = post.iter().map(|p| p[j]).sum::<f64>() / n;
        if s > 0.0 {
            kl_star += s * (s.ln() - train[j].ln());
        }
    }
    (expected_kl - kl_star).exp()
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize, sparse: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            if sparse && rng.random_bool(0.3) {
                0.0
            } else {
                Exp1.sample(rng)
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    // fold rounding into the largest entry so the vector sums to one
    let err = 1.0 - v.iter().sum::<f64>();
    let top = (0..k).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    v[top] += err;
    v
}

fn metric_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut worst_is, mut worst_ms, mut worst_id) = (0.0f64, 0.0f64, 0.0f64);
    for set in 0..100 {
        let k = rng.random_range(2..=12);
        let n = rng.random_range(1..=200);
        let sparse = set % 3 == 0;
        let raw: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, k, sparse)).collect();
        let train = random_simplex(&mut rng, k, false);
        let post: Vec<LabelDist> = raw.iter().map(|p| LabelDist::new(p.clone()).unwrap()).collect();
        let train_d = LabelDist::new(train.clone()).unwrap();

        let is = inception_score_from_posteriors(&post).map_err(|e| e.to_string())?;
        let ms = mode_score_from_posteriors(&post, &train_d).map_err(|e| e.to_string())?;
        let d_is = (is - oracle_inception(&raw)).abs();
        let d_ms = (ms - oracle_mode(&raw, &train)).abs();
        ensure(d_is <= 1e-9, format!("set {set}: inception score off by {d_is:.3e}"))?;
        ensure(d_ms <= 1e-9, format!("set {set}: MODE score off by {d_ms:.3e}"))?;

        let pstar = marginal(&post).map_err(|e| e.to_string())?;
        let ms_star = mode_score_from_posteriors(&post, &pstar).map_err(|e| e.to_string())?;
        let d_id = (ms_star - is).abs();
        ensure(d_id <= 1e-12, format!("set {set}: MODE(p*) - IS = {d_id:.3e}"))?;
        worst_is = worst_is.max(d_is);
        worst_ms = worst_ms.max(d_ms);
        worst_id = worst_id.max(d_id);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, format!("took {secs:.2}s, limit 5s"))?;
    Ok(format!(
        "100 sets, max |IS - oracle| {worst_is:.1e}, max |MODE - oracle| {worst_ms:.1e}, identity gap {worst_id:.1e}"
    ))
}

// ---------------------------------------------------------------- ring reproduction

const RING_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn ring_run(algorithm: Algorithm, seed: u64) -> Result<TrainOutcome, String> {
    let mut cfg = TrainConfig::ring(algorithm);
    cfg.seed = seed;
    cfg.eval_every = 0;
    let mixture = ring_mixture(6, 5.0, 0.1).unwrap();
    train(cfg, &mixture).map_err(|e| format!("{algorithm} seed {seed}: {e}"))
}

fn ring_reproduction() -> Check {
    let cfg = TrainConfig::ring(Algorithm::RegGan);
    ensure(cfg.total_steps() >= 25_000, format!("only {} generator steps", cfg.total_steps()))?;
    ensure(
        cfg.weights.lambda1 == 0.005 && cfg.weights.lambda2 == 0.005,
        "loss weights differ from 0.005".into(),
    )?;
    let mut captured: BTreeMap<Algorithm, Vec<usize>> = BTreeMap::new();
    let mut scores: BTreeMap<Algorithm, Vec<f64>> = BTreeMap::new();
    for algorithm in [Algorithm::Gan, Algorithm::RegGan] {
        for seed in RING_SEEDS {
            let out = ring_run(algorithm, seed)?;
            let last = out.history.last_eval().ok_or("no final evaluation")?;
            captured.entry(algorithm).or_default().push(last.metrics.n_captured());
            scores.entry(algorithm).or_default().push(last.metrics.mode_score);
        }
    }
    let cap_gan = median_usize(captured[&Algorithm::Gan].clone());
    let cap_reg = median_usize(captured[&Algorithm::RegGan].clone());
    let ms_gan = median_f64(scores[&Algorithm::Gan].clone());
    let ms_reg = median_f64(scores[&Algorithm::RegGan].clone());
    let detail = format!(
        "captured gan {:?} (median {cap_gan}), reg-gan {:?} (median {cap_reg}); MODE median gan {ms_gan:.3}, reg-gan {ms_reg:.3}",
        captured[&Algorithm::Gan], captured[&Algorithm::RegGan]
    );
    ensure(cap_reg >= 5, format!("reg-gan median captured {cap_reg} < 5; {detail}"))?;
    ensure(cap_reg > cap_gan, format!("reg-gan median captured not above gan + 1; {detail}"))?;
    ensure(ms_reg > ms_gan, format!("reg-gan median MODE score not above gan; {detail}"))?;
    Ok(detail)
}

// ---------------------------------------------------------------- grid mixture

fn grid_comparison() -> Check {
    let mixture = grid_mixture(10, 10, 2.0, 0.1, WeightProfile::Geometric(0.95)).unwrap();
    let mut miss: BTreeMap<Algorithm, Vec<usize>> = BTreeMap::new();
    let mut kl: BTreeMap<Algorithm, Vec<f64>> = BTreeMap::new();
    for algorithm in [Algorithm::Gan, Algorithm::RegGan] {
        for seed in [0u64, 1, 2] {
            let mut cfg = TrainConfig::ring(algorithm);
            cfg.seed = seed;
            cfg.eval_every = 0;
            let out = train(cfg, &mixture).map_err(|e| format!("{algorithm} seed {seed}: {e}"))?;
            let last = out.history.last_eval().ok_or("no final evaluation")?;
            miss.entry(algorithm).or_default().push(last.metrics.n_miss);
            kl.entry(algorithm).or_default().push(last.metrics.kl);
        }
    }
    let (m_gan, m_reg) = (median_usize(miss[&Algorithm::Gan].clone()), median_usize(miss[&Algorithm::RegGan].clone()));
    let (k_gan, k_reg) = (median_f64(kl[&Algorithm::Gan].clone()), median_f64(kl[&Algorithm::RegGan].clone()));
    let detail = format!(
        "#Miss gan {:?} reg-gan {:?}; KL gan {:?} reg-gan {:?}; medians #Miss {m_gan} vs {m_reg}, KL {k_gan:.3} vs {k_reg:.3}",
        miss[&Algorithm::Gan],
        miss[&Algorithm::RegGan],
        kl[&Algorithm::Gan].iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
        kl[&Algorithm::RegGan].iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
    );
    ensure(m_reg < m_gan && k_reg < k_gan, detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- estimator

fn estimator_sanity() -> Check {
    const DELETED: usize = 3;
    let mixture = ring_mixture(6, 5.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train_set = sample_mixture(&mixture, 10_000, &mut rng).samples;
    let test = sample_mixture(&mixture, 2000, &mut rng);
    let same = sample_mixture(&mixture, 10_000, &mut rng).samples;
    let partial = sample_mixture(&mixture.without(DELETED).unwrap(), 10_000, &mut rng).samples;
    let cfg = MissingModeConfig {
        sigma_noise: 0.5,
        tau: 0.95,
        ..Default::default()
    };

    let r = missing_mode_estimate(&same, &train_set, &test, &cfg).map_err(|e| e.to_string())?;
    let same_frac = r.flagged_fraction();
    ensure(same_frac < 0.02, format!("p_g = p_d flags {:.2}%", 100.0 * same_frac))?;

    let r = missing_mode_estimate(&partial, &train_set, &test, &cfg).map_err(|e| e.to_string())?;
    let (mut hit, mut n_del, mut other_hit, mut n_other) = (0, 0, 0, 0);
    for i in 0..test.len() {
        if test.labels[i] == DELETED {
            n_del += 1;
            hit += usize::from(r.is_flagged(i));
        } else {
            n_other += 1;
            other_hit += usize::from(r.is_flagged(i));
        }
    }
    let del_frac = hit as f64 / n_del as f64;
    let other_frac = other_hit as f64 / n_other as f64;
    let detail = format!(
        "p_g = p_d flagged {:.2}%; deleted mode flagged {:.1}% of {n_del}, others {:.2}%",
        100.0 * same_frac,
        100.0 * del_frac,
        100.0 * other_frac
    );
    ensure(del_frac >= 0.8 && other_frac < 0.1, detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- mdgan

fn mdgan_checks() -> Check {
    let out = ring_run(Algorithm::Mdgan, 0)?;
    let initial = out.history.initial.as_ref().and_then(|e| e.recon).ok_or("no initial reconstruction")?;
    let last = out.history.last_eval().and_then(|e| e.recon).ok_or("no final reconstruction")?;
    let n = out.history.records.len();
    let tail = &out.history.records[n - n / 10..];
    let acc = tail.iter().map(|r| r.d2_acc.unwrap_or(f64::NAN)).sum::<f64>() / tail.len() as f64;
    let detail = format!(
        "held-out recon {initial:.4} -> {last:.4} (ratio {:.3}); D2 accuracy over last {} steps {acc:.3}",
        last / initial,
        tail.len()
    );
    ensure(last <= 0.5 * initial && (0.35..=0.65).contains(&acc), detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- reduction identity

fn reduction_identity() -> Check {
    let mixture = ring_mixture(6, 5.0, 0.1).unwrap();
    let mut gan = TrainConfig::ring(Algorithm::Gan);
    gan.seed = 11;
    gan.epochs = 3;
    gan.steps_per_epoch = 1000;
    gan.eval_every = 1000;
    gan.eval_samples = 2000;
    let mut reg = TrainConfig::ring(Algorithm::RegGan);
    reg.seed = gan.seed;
    reg.epochs = gan.epochs;
    reg.steps_per_epoch = gan.steps_per_epoch;
    reg.eval_every = gan.eval_every;
    reg.eval_samples = gan.eval_samples;
    reg.weights.lambda1 = 0.0;
    reg.weights.lambda2 = 0.0;
    let a = train(gan, &mixture).map_err(|e| e.to_string())?;
    let b = train(reg, &mixture).map_err(|e| e.to_string())?;
    ensure(a.history.records.len() == b.history.records.len(), "history lengths differ".into())?;
    for (x, y) in a.history.records.iter().zip(&b.history.records) {
        let same = x.loss_d.to_bits() == y.loss_d.to_bits()
            && x.loss_g.to_bits() == y.loss_g.to_bits()
            && x.grad_norm_d.to_bits() == y.grad_norm_d.to_bits()
            && x.grad_norm_g.to_bits() == y.grad_norm_g.to_bits()
            && x.eval.as_ref().map(|e| &e.metrics) == y.eval.as_ref().map(|e| &e.metrics);
        ensure(same, format!("histories diverge at step {}", x.step))?;
    }
    ensure(a.generator == b.generator, "final generators differ".into())?;
    ensure(a.discriminator == b.discriminator, "final discriminators differ".into())?;
    Ok(format!("{} steps bit-identical", a.history.records.len()))
}

// ---------------------------------------------------------------- determinism

fn resume_matches(algorithm: Algorithm) -> std::result::Result<(), String> {
    let mixture = ring_mixture(6, 5.0, 0.1).unwrap();
    let mut cfg = TrainConfig::ring(algorithm);
    cfg.seed = 21;
    cfg.epochs = 2;
    cfg.steps_per_epoch = 150;
    cfg.eval_every = 100;
    cfg.eval_samples = 1000;
    let mut whole = Trainer::new(cfg.clone(), mixture.clone()).map_err(|e| e.to_string())?;
    whole.run().map_err(|e| e.to_string())?;
    let mut first = Trainer::new(cfg, mixture).map_err(|e| e.to_string())?;
    first.run_until(130).map_err(|e| e.to_string())?;
    let json = first.to_json().map_err(|e| e.to_string())?;
    let mut resumed = Trainer::from_json(&json).map_err(|e| e.to_string())?;
    resumed.run().map_err(|e| e.to_string())?;
    ensure(resumed == whole, format!("{algorithm}: resumed run differs"))?;
    ensure(
        resumed.to_json().map_err(|e| e.to_string())? == whole.to_json().map_err(|e| e.to_string())?,
        format!("{algorithm}: checkpoints differ"),
    )
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
        }
    }
}

fn cli_session(dir: &Path) -> std::result::Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let runs: [&[&str]; 4] = [
        &[
            "train", "--algorithm", "reg-gan", "--seed", "3", "--epochs", "2", "--steps-per-epoch", "100",
            "--eval-every", "100", "--eval-samples", "1000", "--checkpoint-every", "100",
        ],
        &[
            "eval", "--checkpoint", "runs/train/checkpoint.json", "--samples", "1000", "--missing-mode",
            "--sigma", "0.5", "--sigma", "1.0", "--estimator-steps", "200", "--test-points", "200",
        ],
        &["heatmap", "--checkpoint", "runs/train/checkpoint.json", "--n", "1000", "--resolution", "32"],
        &[
            "gridsearch", "--search-n-layer-g", "2", "--search-n-layer-d", "2", "--search-size-g", "16",
            "--search-size-d", "16", "--search-dropout-d", "false,true", "--search-optim-g", "adam",
            "--search-optim-d", "adam", "--search-lr", "1e-3", "--epochs", "1", "--steps-per-epoch", "50",
            "--eval-samples", "500", "--jobs", "2",
        ],
    ];
    for args in runs {
        let out = Command::new(env!("CARGO_BIN_EXE_modegan"))
            .args(args)
            .current_dir(dir)
            .env_remove("MODEGAN_OUT")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            out.status.success(),
            format!("`modegan {}` failed: {}", args[0], String::from_utf8_lossy(&out.stderr)),
        )?;
    }
    let mut files = BTreeMap::new();
    collect_files(dir, dir, &mut files);
    Ok(files)
}

fn determinism() -> Check {
    for algorithm in [Algorithm::Gan, Algorithm::RegGan, Algorithm::Mdgan] {
        resume_matches(algorithm)?;
    }
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fa = cli_session(a.path())?;
    let fb = cli_session(b.path())?;
    ensure(
        fa.keys().eq(fb.keys()),
        format!("artifact sets differ: {:?} vs {:?}", fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>()),
    )?;
    for (path, bytes) in &fa {
        ensure(fb[path] == *bytes, format!("{} differs between reruns", path.display()))?;
    }
    Ok(format!("resume bit-exact for gan, reg-gan, mdgan; {} CLI artifacts byte-identical", fa.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("gradient correctness", gradient_correctness),
        ("metric oracle equivalence", metric_oracles),
        ("ring mixture mode capture", ring_reproduction),
        ("weighted grid #Miss and KL", grid_comparison),
        ("missing-mode estimator sanity", estimator_sanity),
        ("mdgan procedure checks", mdgan_checks),
        ("reduction identity", reduction_identity),
        ("determinism and persistence", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} {name}: PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
