//! Classification metrics: confusion-matrix rates, precision-recall curves,
//! average precision and cross-validated per-class reports.

mod confusion;
mod io;
mod pr;
mod report;

use serde::Serialize;
use thiserror::Error;

pub use confusion::{confusion, f1_from, ConfusionMatrix};
pub use io::{read_predictions, write_pr_curves, PREDICTIONS_HEADER, PR_CURVE_HEADER};
pub use pr::{average_precision, pr_curve, PrCurve, PrPoint};
pub use report::{evaluate, pr_curves, Averaging, EvalReport, ReportRow, Sample, MODEL_AVERAGE};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no positive samples")]
    NoPositives,
    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),
    #[error("fold {0} has no samples")]
    EmptyFold(usize),
    #[error("sample {id:?} has fold {fold}, expected 0..{folds}")]
    FoldOutOfRange { id: String, fold: usize, folds: usize },
    #[error("fold count must be at least 1")]
    NoFolds,
    #[error("row {row}: {detail}")]
    BadRow { row: usize, detail: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A rate plus whether its denominator was zero (value is then 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub value: f64,
    pub undefined: bool,
}

impl Metric {
    pub fn defined(value: f64) -> Self {
        Metric { value, undefined: false }
    }

    pub fn undefined() -> Self {
        Metric { value: 0.0, undefined: true }
    }

    pub fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Metric::undefined()
        } else {
            Metric::defined(num as f64 / den as f64)
        }
    }

    /// Weighted mean; undefined if any input is.
    pub fn mean_weighted(items: impl IntoIterator<Item = (Metric, f64)>) -> Metric {
        let mut sum = 0.0;
        let mut weight = 0.0;
        let mut undefined = false;
        for (m, w) in items {
            sum += m.value * w;
            weight += w;
            undefined |= m.undefined;
        }
        Metric {
            value: if weight > 0.0 { sum / weight } else { 0.0 },
            undefined,
        }
    }

    pub fn mean(items: impl IntoIterator<Item = Metric>) -> Metric {
        Metric::mean_weighted(items.into_iter().map(|m| (m, 1.0)))
    }
}
