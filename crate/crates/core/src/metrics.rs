//! Confusion counts and the derived rates, kept as exact rationals.

use std::fmt;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{0} true labels but {1} predictions")]
    Length(usize, usize),
    #[error("no labels to evaluate")]
    Empty,
    #[error("positive class must be +1 or -1, got {0}")]
    BadPositive(i8),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Counts as seen with the other class declared positive.
    pub fn swapped(&self) -> Self {
        Self { tp: self.tn, fp: self.fn_, tn: self.tp, fn_: self.fp }
    }
}

/// Counts with `positive` as the positive class.
pub fn confusion(y_true: &[i8], y_pred: &[i8], positive: i8) -> Result<ConfusionMatrix, MetricsError> {
    if positive != 1 && positive != -1 {
        return Err(MetricsError::BadPositive(positive));
    }
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::Length(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// A rate with a zero denominator is `None`.
pub type Rate = Option<Ratio<u64>>;

fn rate(num: u64, den: u64) -> Rate {
    (den > 0).then(|| Ratio::new(num, den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsReport {
    pub accuracy: Rate,
    pub precision: Rate,
    pub recall: Rate,
    pub f1: Rate,
    pub specificity: Rate,
}

pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let precision = rate(cm.tp, cm.tp + cm.fp);
    let recall = rate(cm.tp, cm.tp + cm.fn_);
    // 2PR/(P+R) simplifies to 2tp/(2tp+fp+fn); zero when P = R = 0
    let f1 = match (precision, recall) {
        (Some(_), Some(_)) => rate(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_),
        _ => None,
    };
    Ok(MetricsReport {
        accuracy: rate(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1,
        specificity: rate(cm.tn, cm.tn + cm.fp),
    })
}

impl MetricsReport {
    pub fn entries(&self) -> [(&'static str, Rate); 5] {
        [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("specificity", self.specificity),
        ]
    }
}

pub fn rate_to_f64(r: Rate) -> Option<f64> {
    r.and_then(|v| v.to_f64())
}

/// Decimal rendering, or `n/a` when undefined.
pub struct ShowRate(pub Rate);

impl fmt::Display for ShowRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match rate_to_f64(self.0) {
            Some(v) => write!(f, "{v:.4}"),
            None => f.write_str("n/a"),
        }
    }
}
