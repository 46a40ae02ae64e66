use serde::{Deserialize, Serialize};

use crate::io::{fmt_f64, CsvText};
use crate::metrics::MetricsReport;

/// Metrics of the generator at one step, plus held-out reconstruction error when the
/// run has an encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: u64,
    pub metrics: MetricsReport,
    pub recon: Option<f64>,
}

/// Losses and gradient norms of one training cycle. Fields not produced by the
/// algorithm are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    /// D loss (D1 for `mdgan`) of the last discriminator step in the cycle.
    pub loss_d: f64,
    /// G loss; for `reg-gan` the full regularized target, for `mdgan` the manifold loss.
    pub loss_g: f64,
    /// Encoder target (the regularizer part of the generator target).
    pub loss_e: Option<f64>,
    pub loss_d2: Option<f64>,
    pub loss_g2: Option<f64>,
    /// Mean squared reconstruction distance on the training batch.
    pub recon: Option<f64>,
    /// Fraction of the diffusion batch that D2 classifies correctly.
    pub d2_acc: Option<f64>,
    pub grad_norm_d: f64,
    pub grad_norm_g: f64,
    pub grad_norm_e: Option<f64>,
    pub eval: Option<EvalRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Evaluation before the first step; absent when the run has no steps.
    pub initial: Option<EvalRecord>,
    pub records: Vec<StepRecord>,
}

pub const HISTORY_CSV_HEADER: &[&str] = &[
    "step",
    "loss_d",
    "loss_g",
    "loss_e",
    "loss_d2",
    "loss_g2",
    "recon",
    "d2_acc",
    "grad_norm_d",
    "grad_norm_g",
    "grad_norm_e",
    "eval_recon",
    "mode_score",
    "inception_score",
    "n_miss",
    "kl",
];

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn eval_fields(e: Option<&EvalRecord>) -> [String; 5] {
    match e {
        Some(e) => [
            opt(e.recon),
            fmt_f64(e.metrics.mode_score),
            fmt_f64(e.metrics.inception_score),
            e.metrics.n_miss.to_string(),
            fmt_f64(e.metrics.kl),
        ],
        None => Default::default(),
    }
}

impl TrainHistory {
    pub fn is_empty(&self) -> bool {
        self.initial.is_none() && self.records.is_empty()
    }

    /// Appends a record. Steps must be strictly increasing.
    pub fn push(&mut self, record: StepRecord) {
        if let Some(last) = self.records.last() {
            assert!(record.step > last.step, "history steps must increase");
        }
        self.records.push(record);
    }

    pub fn evals(&self) -> impl Iterator<Item = &EvalRecord> {
        self.initial
            .iter()
            .chain(self.records.iter().filter_map(|r| r.eval.as_ref()))
    }

    pub fn last_eval(&self) -> Option<&EvalRecord> {
        self.evals().last()
    }

    /// One row per step; the initial evaluation is row `step = 0`.
    pub fn to_csv(&self) -> String {
        let mut csv = CsvText::with_header(HISTORY_CSV_HEADER);
        if let Some(init) = &self.initial {
            let mut row = vec![init.step.to_string()];
            row.extend(std::iter::repeat_n(String::new(), 10));
            row.extend(eval_fields(Some(init)));
            csv.row(&row);
        }
        for r in &self.records {
            let mut row = vec![
                r.step.to_string(),
                fmt_f64(r.loss_d),
                fmt_f64(r.loss_g),
                opt(r.loss_e),
                opt(r.loss_d2),
                opt(r.loss_g2),
                opt(r.recon),
                opt(r.d2_acc),
                fmt_f64(r.grad_norm_d),
                fmt_f64(r.grad_norm_g),
                opt(r.grad_norm_e),
            ];
            row.extend(eval_fields(r.eval.as_ref()));
            csv.row(&row);
        }
        csv.finish()
    }
}
