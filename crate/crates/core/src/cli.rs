//! Command-line front end: `train`, `eval`, `gridsearch` and `heatmap`.
//!
//! Configuration flags carry the same names as config-file keys and override them.
//! Every artifact is written atomically, and reruns with the same inputs reproduce
//! every file byte for byte.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{classify, read_samples_csv, sample_mixture, samples_csv, MixtureSpec, PriorKind, PriorSpec};
use crate::error::{Error, Result};
use crate::heatmap::Heatmap;
use crate::io::{fmt_f64, parse_kv, render_kv, write_atomic, CsvText};
use crate::metrics::{
    evaluate_samples, missing_mode_estimate, sample_generator, CaptureRule, MetricsReport, MissingModeConfig,
    MissingModeRow, REPORT_CSV_HEADER,
};
use crate::nets::{Network, NetworkCheckpoint, NETWORK_MAGIC};
use crate::trainer::{derive_seed, grid_search, ExperimentConfig, GridSpec, Trainer, DEFAULT_BUDGET, RUN_MAGIC};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "modegan", version, about = "Mode-regularized GAN experiments on 2-d Gaussian mixtures")]
pub struct Cli {
    /// Output root for commands run without `--out`.
    #[arg(long, env = "MODEGAN_OUT", default_value = "runs", global = true)]
    pub out_root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a gan, reg-gan or mdgan and write history, checkpoints and heatmaps.
    Train(TrainArgs),
    /// Score a generator checkpoint and optionally run the missing-mode estimator.
    Eval(EvalArgs),
    /// Train every cell of a hyperparameter grid with gan and reg-gan.
    Gridsearch(GridArgs),
    /// Histogram 2-d samples into a CSV grid and a PGM image.
    Heatmap(HeatmapArgs),
}

macro_rules! key_flags {
    ($name:ident { $($field:ident => $key:literal),* $(,)? }) => {
        #[derive(Args, Debug, Default, Clone)]
        pub struct $name {
            $(
                #[arg(long = $key, value_name = "VALUE", help = concat!("Overrides config key `", $key, "`"))]
                pub $field: Option<String>,
            )*
        }

        impl $name {
            fn pairs(&self) -> Vec<(String, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push(($key.to_string(), v.clone()));
                    }
                )*
                out
            }
        }
    };
}

key_flags!(TrainFlags {
    algorithm => "algorithm",
    seed => "seed",
    epochs => "epochs",
    steps_per_epoch => "steps-per-epoch",
    batch_size => "batch-size",
    d_steps => "d-steps",
    lambda1 => "lambda1",
    lambda2 => "lambda2",
    lambda => "lambda",
    lr => "lr",
    lr_g => "lr-g",
    lr_d => "lr-d",
    lr_e => "lr-e",
    optim_g => "optim-g",
    optim_d => "optim-d",
    optim_e => "optim-e",
    eval_every => "eval-every",
    eval_samples => "eval-samples",
    literal_mode_sign => "literal-mode-sign",
    train_encoder => "train-encoder",
    g_hidden => "g-hidden",
    d_hidden => "d-hidden",
    e_hidden => "e-hidden",
    d_dropout => "d-dropout",
});

key_flags!(MixtureFlags {
    mixture => "mixture",
    mixture_modes => "mixture-modes",
    mixture_radius => "mixture-radius",
    mixture_sigma => "mixture-sigma",
    mixture_rows => "mixture-rows",
    mixture_cols => "mixture-cols",
    mixture_spacing => "mixture-spacing",
    mixture_weights => "mixture-weights",
    noise_dim => "noise-dim",
    prior => "prior",
});

key_flags!(SearchFlags {
    search_n_layer_g => "search-n-layer-g",
    search_n_layer_d => "search-n-layer-d",
    search_size_g => "search-size-g",
    search_size_d => "search-size-d",
    search_dropout_d => "search-dropout-d",
    search_optim_g => "search-optim-g",
    search_optim_d => "search-optim-d",
    search_lr => "search-lr",
    search_seeds => "search-seeds",
});

#[derive(Args, Debug, Default, Clone)]
pub struct FileFlags {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sets any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl FileFlags {
    /// File pairs first, then `--set`, then `extra`; later pairs win.
    fn pairs(&self, extra: Vec<(String, String)>) -> Result<Vec<(String, String)>> {
        let mut out = match &self.config {
            Some(p) => parse_kv(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
            None => Vec::new(),
        };
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::config(s.clone(), "expected KEY=VALUE"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        out.extend(extra);
        Ok(out)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub file: FileFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub mixture: MixtureFlags,
    /// Steps between checkpoints and heatmaps; 0 writes them only at the start and end.
    #[arg(long, default_value_t = 5000)]
    pub checkpoint_every: u64,
    /// Output directory (default: `<out-root>/train`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Run checkpoint or network checkpoint holding the generator.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub file: FileFlags,
    #[command(flatten)]
    pub mixture: MixtureFlags,
    /// Number of generated samples.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also run the noisy third-party discriminator.
    #[arg(long)]
    pub missing_mode: bool,
    /// Estimator noise std; repeat for one estimator run per value.
    #[arg(long = "sigma")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub tau: f64,
    #[arg(long, default_value_t = 20_000)]
    pub estimator_steps: usize,
    /// Labeled test points scored by the estimator.
    #[arg(long, default_value_t = 2000)]
    pub test_points: usize,
    /// Output directory (default: `<out-root>/eval`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[command(flatten)]
    pub file: FileFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub mixture: MixtureFlags,
    #[command(flatten)]
    pub search: SearchFlags,
    /// Maximum number of cells × seeds.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory (default: `<out-root>/gridsearch`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HeatmapArgs {
    /// Sample dump with header `x0,x1,label`.
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    pub samples: Option<PathBuf>,
    /// Checkpoint whose generator is sampled instead.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Samples drawn from a checkpoint.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    pub y_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub y_max: f64,
    /// Bins per axis.
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    /// Output directory (default: `<out-root>/heatmap`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for an error: 2 for invalid input, 1 for failures at run time.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::InvalidSpec(_) | Error::OverBudget { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let out = a.out.clone().unwrap_or_else(|| cli.out_root.join("train"));
            cmd_train(&a, &out)
        }
        Command::Eval(a) => {
            let out = a.out.clone().unwrap_or_else(|| cli.out_root.join("eval"));
            cmd_eval(&a, &out)
        }
        Command::Gridsearch(a) => {
            let out = a.out.clone().unwrap_or_else(|| cli.out_root.join("gridsearch"));
            cmd_gridsearch(&a, &out)
        }
        Command::Heatmap(a) => {
            let out = a.out.clone().unwrap_or_else(|| cli.out_root.join("heatmap"));
            cmd_heatmap(&a, &out)
        }
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<String> {
    write_atomic(&dir.join(name), text.as_bytes())?;
    Ok(name.to_string())
}

/// `[-6, 6]^2` when it holds every mode with a 5-sigma margin, else that margin box.
pub fn default_window(mixture: &MixtureSpec) -> ([f64; 2], [f64; 2]) {
    let (lo, hi) = mixture.bounds(5.0);
    if lo.iter().all(|&v| v >= -6.0) && hi.iter().all(|&v| v <= 6.0) {
        ([-6.0, -6.0], [6.0, 6.0])
    } else {
        (lo, hi)
    }
}

fn heatmap_of(samples: &crate::autodiff::Tensor<f64>, lo: [f64; 2], hi: [f64; 2], res: (usize, usize)) -> Result<Heatmap> {
    let mut h = Heatmap::new(lo, hi, res.0, res.1)?;
    h.add(samples);
    if h.total() == 0 {
        eprintln!(
            "warning: none of the {} samples fall inside [{}, {}] x [{}, {}]; the heatmap is empty",
            samples.rows(),
            lo[0],
            hi[0],
            lo[1],
            hi[1]
        );
    }
    Ok(h)
}

const HEATMAP_STREAM: u64 = 0x4845_4154;

fn cmd_train(args: &TrainArgs, out: &Path) -> Result<()> {
    let mut extra = args.mixture.pairs();
    extra.extend(args.train.pairs());
    let exp = ExperimentConfig::from_pairs(&args.file.pairs(extra)?)?;
    let mixture = exp.mixture.build()?;
    let mut trainer = Trainer::new(exp.train.clone(), mixture.clone())?;
    let (lo, hi) = default_window(&mixture);
    let total = trainer.total_steps();
    let every = if args.checkpoint_every == 0 { total.max(1) } else { args.checkpoint_every };

    let mut artifacts = vec![("config".to_string(), write_text(out, "config.kv", &render_kv(&exp.to_pairs()))?)];
    let mut heatmaps = Vec::new();
    let snapshot = |t: &Trainer, heatmaps: &mut Vec<String>| -> Result<()> {
        t.save(&out.join("checkpoint.json"))?;
        let seed = derive_seed(derive_seed(t.config().seed, HEATMAP_STREAM), t.step());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_generator(&t.models().g.net, &t.config().prior, t.config().eval_samples, &mut rng)?;
        let h = heatmap_of(&s, lo, hi, (128, 128))?;
        let stem = format!("heatmaps/step_{:08}", t.step());
        write_text(out, &format!("{stem}.csv"), &h.to_csv())?;
        heatmaps.push(write_text(out, &format!("{stem}.pgm"), &h.to_pgm())?);
        Ok(())
    };
    snapshot(&trainer, &mut heatmaps)?;
    while !trainer.is_finished() {
        let next = ((trainer.step() / every + 1) * every).min(total);
        if let Err(e) = trainer.run_until(next) {
            write_text(out, "history.csv", &trainer.history().to_csv())?;
            return Err(e);
        }
        snapshot(&trainer, &mut heatmaps)?;
    }
    artifacts.push(("history".into(), write_text(out, "history.csv", &trainer.history().to_csv())?));
    artifacts.push(("checkpoint".into(), "checkpoint.json".into()));
    for (i, h) in heatmaps.iter().enumerate() {
        artifacts.push((format!("heatmap.{i}"), h.clone()));
    }

    let mut m = vec![
        ("manifest-version".to_string(), MANIFEST_VERSION.to_string()),
        ("code-version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command".to_string(), "train".to_string()),
        ("seed".to_string(), exp.train.seed.to_string()),
        ("start-step".to_string(), "0".to_string()),
        ("end-step".to_string(), trainer.step().to_string()),
    ];
    m.extend(artifacts.into_iter().map(|(k, v)| (format!("artifact.{k}"), v)));
    m.extend(exp.to_pairs().into_iter().map(|(k, v)| (format!("config.{k}"), v)));
    if let Some(e) = trainer.history().last_eval() {
        m.extend(e.metrics.to_kv().into_iter().map(|(k, v)| (format!("final.{k}"), v)));
    }
    write_text(out, "manifest.kv", &render_kv(&m))?;

    match trainer.history().last_eval() {
        Some(e) => println!(
            "trained {} for {} steps: MODE score {:.4}, missing modes {}, KL {:.4}",
            exp.train.algorithm, trainer.step(), e.metrics.mode_score, e.metrics.n_miss, e.metrics.kl
        ),
        None => println!("no training steps; wrote the initial checkpoint"),
    }
    Ok(())
}

struct LoadedGenerator {
    net: Network<f64>,
    prior: Option<PriorSpec>,
    mixture: Option<MixtureSpec>,
}

fn load_generator(path: &Path) -> Result<LoadedGenerator> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("magic").and_then(|m| m.as_str()) {
        Some(RUN_MAGIC) => {
            let t = Trainer::from_json(&text)?;
            Ok(LoadedGenerator {
                net: t.models().g.net.clone(),
                prior: Some(t.config().prior),
                mixture: Some(t.mixture().clone()),
            })
        }
        Some(NETWORK_MAGIC) => Ok(LoadedGenerator {
            net: NetworkCheckpoint::<f64>::from_json(&text)?.network,
            prior: None,
            mixture: None,
        }),
        _ => Err(Error::Checkpoint(format!("{}: not a modegan checkpoint", path.display()))),
    }
}

/// Generator, prior and mixture for `eval` and `heatmap`. Explicit flags and config
/// files override what the checkpoint carries.
fn resolve(ckpt: &Path, file: &FileFlags, flags: &MixtureFlags) -> Result<(Network<f64>, PriorSpec, MixtureSpec)> {
    let loaded = load_generator(ckpt)?;
    let pairs = file.pairs(flags.pairs())?;
    let overridden = |key: &str| pairs.iter().any(|(k, _)| k == key);
    let exp = ExperimentConfig::from_pairs(&pairs)?;
    let mixture = match loaded.mixture {
        Some(m) if !pairs.iter().any(|(k, _)| k.starts_with("mixture")) => m,
        _ => exp.mixture.build()?,
    };
    let prior = match loaded.prior {
        Some(p) if !overridden("noise-dim") && !overridden("prior") => p,
        _ => {
            let dim = if overridden("noise-dim") { exp.train.prior.dim } else { loaded.net.spec.input_dim() };
            let kind = if overridden("prior") { exp.train.prior.kind } else { PriorKind::Uniform01 };
            PriorSpec::new(dim, kind)?
        }
    };
    let spec = &loaded.net.spec;
    if spec.input_dim() != prior.dim || spec.output_dim() != 2 {
        return Err(Error::config(
            "checkpoint",
            format!(
                "generator maps {} -> {}, expected {} -> 2",
                spec.input_dim(),
                spec.output_dim(),
                prior.dim
            ),
        ));
    }
    Ok((loaded.net, prior, mixture))
}

const EVAL_STREAM: u64 = 0x4556_414c;

fn cmd_eval(args: &EvalArgs, out: &Path) -> Result<()> {
    if args.samples == 0 {
        return Err(Error::config("samples", "must be positive"));
    }
    if args.missing_mode && args.sigmas.is_empty() {
        return Err(Error::config("sigma", "--missing-mode needs at least one --sigma"));
    }
    let (net, prior, mixture) = resolve(&args.checkpoint, &args.file, &args.mixture)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, EVAL_STREAM));
    let samples = sample_generator(&net, &prior, args.samples, &mut rng)?;
    let mut report: MetricsReport = evaluate_samples(&samples, &mixture, &CaptureRule::default())?;
    let labels: Vec<usize> = (0..samples.rows())
        .map(|r| classify(&mixture, [samples.get(r, 0), samples.get(r, 1)]))
        .collect();

    let mut estimator_files = Vec::new();
    if args.missing_mode {
        let train = sample_mixture(&mixture, args.samples, &mut rng).samples;
        let test = sample_mixture(&mixture, args.test_points, &mut rng);
        let results = args
            .sigmas
            .par_iter()
            .enumerate()
            .map(|(i, &sigma)| {
                let cfg = MissingModeConfig {
                    sigma_noise: sigma,
                    tau: args.tau,
                    steps: args.estimator_steps,
                    seed: derive_seed(args.seed, i as u64),
                    ..Default::default()
                };
                missing_mode_estimate(&samples, &train, &test, &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = CsvText::with_header(&["sigma", "tau", "flagged", "test_points", "flagged_fraction", "file"]);
        for (i, r) in results.iter().enumerate() {
            let name = write_text(out, &format!("estimator_{i}.csv"), &r.to_csv(&test))?;
            table.row(&[
                fmt_f64(r.sigma_noise),
                fmt_f64(r.tau),
                r.flagged.to_string(),
                r.test_points.to_string(),
                fmt_f64(r.flagged_fraction()),
                name.clone(),
            ]);
            estimator_files.push(name);
            report.missing_mode.push(MissingModeRow {
                sigma_noise: r.sigma_noise,
                tau: r.tau,
                flagged: r.flagged,
                test_points: r.test_points,
            });
        }
        write_text(out, "missing_mode.csv", &table.finish())?;
    }

    let mut csv = CsvText::with_header(REPORT_CSV_HEADER);
    csv.row(&report.csv_fields());
    write_text(out, "report.csv", &csv.finish())?;
    write_text(out, "report.kv", &render_kv(&report.to_kv()))?;
    write_text(out, "samples.csv", &samples_csv(&samples, Some(&labels)))?;
    println!(
        "MODE score {:.4}, inception score {:.4}, missing modes {}, KL {:.4}",
        report.mode_score, report.inception_score, report.n_miss, report.kl
    );
    for row in &report.missing_mode {
        println!("sigma {}: {} of {} test points flagged at tau {}", row.sigma_noise, row.flagged, row.test_points, row.tau);
    }
    Ok(())
}

fn cmd_gridsearch(args: &GridArgs, out: &Path) -> Result<()> {
    let mut extra = args.mixture.pairs();
    extra.extend(args.train.pairs());
    extra.extend(args.search.pairs());
    let grid = GridSpec::from_pairs(&args.file.pairs(extra)?)?;
    let mixture = grid.base.mixture.build()?;
    let results = grid_search(&grid, &mixture, args.budget, args.jobs)?;
    write_text(out, "results.csv", &results.to_csv())?;
    write_text(out, "histogram.csv", &results.histogram_csv())?;
    println!(
        "{} runs, {} failed; median MODE score gan {} reg-gan {}",
        results.rows.len(),
        results.failures(),
        results.median_mode_score(crate::trainer::Algorithm::Gan).map_or("n/a".into(), |v| format!("{v:.4}")),
        results.median_mode_score(crate::trainer::Algorithm::RegGan).map_or("n/a".into(), |v| format!("{v:.4}")),
    );
    Ok(())
}

fn cmd_heatmap(args: &HeatmapArgs, out: &Path) -> Result<()> {
    let samples = match (&args.samples, &args.checkpoint) {
        (Some(p), _) => read_samples_csv(p)?.0,
        (None, Some(c)) => {
            let (net, prior, _) = resolve(c, &FileFlags::default(), &MixtureFlags::default())?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, HEATMAP_STREAM));
            sample_generator(&net, &prior, args.n, &mut rng)?
        }
        (None, None) => return Err(Error::config("samples", "give --samples or --checkpoint")),
    };
    let h = heatmap_of(
        &samples,
        [args.x_min, args.y_min],
        [args.x_max, args.y_max],
        (args.resolution, args.resolution),
    )?;
    write_text(out, "heatmap.csv", &h.to_csv())?;
    write_text(out, "heatmap.pgm", &h.to_pgm())?;
    println!("{} of {} samples binned into {} cells", h.total(), samples.rows(), h.nonzero());
    Ok(())
}
