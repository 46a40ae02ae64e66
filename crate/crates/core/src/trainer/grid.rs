use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MixtureSpec;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvText};
use crate::metrics::MetricsReport;
use crate::nets::{Activation, NetworkSpec, OptimizerKind, OutputHead};

use super::config::{Algorithm, GridSpec, NetDesc, OptimConfig, TrainConfig};
use super::engine::train;

/// Default cap on cells × seeds.
pub const DEFAULT_BUDGET: usize = 64;
/// Width of a MODE-score histogram bin.
pub const HISTOGRAM_BIN: f64 = 0.5;

/// One point of the hyperparameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub n_layer_g: usize,
    pub n_layer_d: usize,
    pub size_g: usize,
    pub size_d: usize,
    pub dropout_d: bool,
    pub optim_g: OptimizerKind,
    pub optim_d: OptimizerKind,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Final metrics, or the failure message of a diverged run.
    pub outcome: std::result::Result<MetricsReport, String>,
}

impl CellResult {
    pub fn mode_score(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|m| m.mode_score)
    }
}

/// Search results sorted by MODE score, best first; failed runs come last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResults {
    pub modes: usize,
    pub rows: Vec<CellResult>,
}

impl GridSpec {
    /// Runs the search would take: cells × seeds × both algorithms.
    pub fn runs(&self) -> usize {
        self.cells() * self.seeds.len() * 2
    }

    /// Cell `index` in row-major order over the candidate lists (`lr` varies fastest).
    pub fn cell(&self, index: usize) -> Cell {
        let mut rest = index;
        let mut pick = |len: usize| {
            let i = rest % len;
            rest /= len;
            i
        };
        let lr = self.lr[pick(self.lr.len())];
        let optim_d = self.optim_d[pick(self.optim_d.len())];
        let optim_g = self.optim_g[pick(self.optim_g.len())];
        let dropout_d = self.dropout_d[pick(self.dropout_d.len())];
        let size_d = self.size_d[pick(self.size_d.len())];
        let size_g = self.size_g[pick(self.size_g.len())];
        let n_layer_d = self.n_layer_d[pick(self.n_layer_d.len())];
        let n_layer_g = self.n_layer_g[pick(self.n_layer_g.len())];
        Cell {
            index,
            n_layer_g,
            n_layer_d,
            size_g,
            size_d,
            dropout_d,
            optim_g,
            optim_d,
            lr,
        }
    }

    /// Training config of `cell`. The encoder mirrors the generator's hidden layers.
    pub fn config_for(&self, cell: &Cell, algorithm: Algorithm, seed: u64) -> Result<TrainConfig> {
        let base = &self.base.train;
        let noise = base.prior.dim;
        let g_desc = NetDesc {
            hidden: vec![cell.size_g; cell.n_layer_g - 1],
            ..NetDesc::of(&base.generator)
        };
        let d_base = base.discriminator.as_ref().or(base.d1.as_ref()).cloned();
        let d_base = d_base.unwrap_or_else(|| NetworkSpec::ring_discriminator(128));
        let d_desc = NetDesc {
            hidden: vec![cell.size_d; cell.n_layer_d - 1],
            dropout: if cell.dropout_d { self.dropout_rate } else { 0.0 },
            ..NetDesc::of(&d_base)
        };
        let e_output = base.encoder.as_ref().map_or(Activation::Sigmoid, |e| NetDesc::of(e).output);
        let e_desc = NetDesc {
            output: e_output,
            ..g_desc.clone()
        };
        let cfg = TrainConfig {
            algorithm,
            generator: g_desc.build(noise, 2, OutputHead::Linear)?,
            encoder: (algorithm == Algorithm::RegGan)
                .then(|| e_desc.build(2, noise, OutputHead::Linear))
                .transpose()?,
            discriminator: Some(d_desc.build(2, 1, OutputHead::Logit)?),
            d1: None,
            d2: None,
            optim_g: OptimConfig {
                kind: cell.optim_g,
                lr: cell.lr,
            },
            optim_d: OptimConfig {
                kind: cell.optim_d,
                lr: cell.lr,
            },
            optim_e: OptimConfig {
                kind: cell.optim_g,
                lr: cell.lr,
            },
            seed,
            ..base.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn order(a: &CellResult, b: &CellResult) -> Ordering {
    let score = |r: &CellResult| r.mode_score().unwrap_or(f64::NEG_INFINITY);
    score(b)
        .total_cmp(&score(a))
        .then(a.cell.index.cmp(&b.cell.index))
        .then(a.seed.cmp(&b.seed))
        .then((a.algorithm as u8).cmp(&(b.algorithm as u8)))
}

/// Trains every cell with both `gan` and `reg-gan` under identical seeds, on at most
/// `jobs` worker threads. Refuses before training when the run count exceeds
/// `budget` (counted as cells × seeds).
pub fn grid_search(grid: &GridSpec, mixture: &MixtureSpec, budget: usize, jobs: usize) -> Result<GridResults> {
    grid.validate()?;
    let cells = grid.cells() * grid.seeds.len();
    if cells > budget {
        return Err(Error::OverBudget { cells, budget });
    }
    let mut runs = Vec::with_capacity(cells * 2);
    for index in 0..grid.cells() {
        let cell = grid.cell(index);
        for &seed in &grid.seeds {
            for algorithm in [Algorithm::Gan, Algorithm::RegGan] {
                runs.push((cell, seed, algorithm, grid.config_for(&cell, algorithm, seed)?));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut rows: Vec<CellResult> = pool.install(|| {
        runs.into_par_iter()
            .map(|(cell, seed, algorithm, cfg)| {
                let outcome = train(cfg, mixture)
                    .and_then(|o| {
                        o.history
                            .last_eval()
                            .map(|e| e.metrics.clone())
                            .ok_or_else(|| Error::InvalidArgument("run has no training steps".into()))
                    })
                    .map_err(|e| e.to_string());
                CellResult {
                    cell,
                    algorithm,
                    seed,
                    outcome,
                }
            })
            .collect()
    });
    rows.sort_by(order);
    Ok(GridResults {
        modes: mixture.len(),
        rows,
    })
}

pub const RESULTS_CSV_HEADER: &[&str] = &[
    "algorithm",
    "cell",
    "seed",
    "n_layer_g",
    "n_layer_d",
    "size_g",
    "size_d",
    "dropout_d",
    "optim_g",
    "optim_d",
    "lr",
    "status",
    "mode_score",
    "inception_score",
    "n_miss",
    "kl",
    "error",
];

impl GridResults {
    pub fn scores(&self, algorithm: Algorithm) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .filter_map(CellResult::mode_score)
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Median MODE score of the successful runs of `algorithm`.
    pub fn median_mode_score(&self, algorithm: Algorithm) -> Option<f64> {
        let mut s = self.scores(algorithm);
        if s.is_empty() {
            return None;
        }
        s.sort_by(f64::total_cmp);
        let n = s.len();
        Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
    }

    /// One row per (cell, seed, algorithm).
    pub fn to_csv(&self) -> String {
        let mut csv = CsvText::with_header(RESULTS_CSV_HEADER);
        for r in &self.rows {
            let c = &r.cell;
            let mut row = vec![
                r.algorithm.to_string(),
                c.index.to_string(),
                r.seed.to_string(),
                c.n_layer_g.to_string(),
                c.n_layer_d.to_string(),
                c.size_g.to_string(),
                c.size_d.to_string(),
                c.dropout_d.to_string(),
                c.optim_g.to_string(),
                c.optim_d.to_string(),
                fmt_f64(c.lr),
            ];
            match &r.outcome {
                Ok(m) => row.extend([
                    "ok".to_string(),
                    fmt_f64(m.mode_score),
                    fmt_f64(m.inception_score),
                    m.n_miss.to_string(),
                    fmt_f64(m.kl),
                    String::new(),
                ]),
                Err(e) => {
                    row.push("failed".to_string());
                    row.extend(std::iter::repeat_n(String::new(), 4));
                    row.push(e.replace([',', '\n'], ";"));
                }
            }
            csv.row(&row);
        }
        csv.finish()
    }

    /// Counts of MODE scores per bin of width 0.5 over `[0, k]`, one column per
    /// algorithm. The last bin is closed.
    pub fn histogram(&self, algorithm: Algorithm) -> Vec<usize> {
        let bins = ((self.modes as f64) / HISTOGRAM_BIN).ceil().max(1.0) as usize;
        let mut counts = vec![0; bins];
        for s in self.scores(algorithm) {
            let i = ((s / HISTOGRAM_BIN).floor().max(0.0) as usize).min(bins - 1);
            counts[i] += 1;
        }
        counts
    }

    pub fn histogram_csv(&self) -> String {
        let gan = self.histogram(Algorithm::Gan);
        let reg = self.histogram(Algorithm::RegGan);
        let mut csv = CsvText::with_header(&["bin_lo", "bin_hi", "gan", "reg_gan"]);
        for (i, (a, b)) in gan.iter().zip(&reg).enumerate() {
            csv.row(&[
                fmt_f64(i as f64 * HISTOGRAM_BIN),
                fmt_f64((i + 1) as f64 * HISTOGRAM_BIN),
                a.to_string(),
                b.to_string(),
            ]);
        }
        csv.finish()
    }
}
