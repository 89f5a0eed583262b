use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::Label;

/// The five reported scores, all percentages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(rename = "P_p")]
    pub precision: f64,
    #[serde(rename = "R_p")]
    pub recall: f64,
    #[serde(rename = "F1_p")]
    pub f1: f64,
    #[serde(rename = "F1_macro")]
    pub f1_macro: f64,
    #[serde(rename = "Acc")]
    pub accuracy: f64,
}

impl Metrics {
    /// Element-wise mean; zero for an empty input.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Metrics>) -> Metrics {
        let mut sum = Metrics::default();
        let mut n = 0usize;
        for m in items {
            sum.precision += m.precision;
            sum.recall += m.recall;
            sum.f1 += m.f1;
            sum.f1_macro += m.f1_macro;
            sum.accuracy += m.accuracy;
            n += 1;
        }
        if n == 0 {
            return sum;
        }
        let n = n as f64;
        Metrics {
            precision: sum.precision / n,
            recall: sum.recall / n,
            f1: sum.f1 / n,
            f1_macro: sum.f1_macro / n,
            accuracy: sum.accuracy / n,
        }
    }

    /// `"P_p R_p F1_p F1_macro Acc"` with two decimals each.
    pub fn row(&self) -> String {
        format!(
            "{:.2} {:.2} {:.2} {:.2} {:.2}",
            self.precision, self.recall, self.f1, self.f1_macro, self.accuracy
        )
    }
}

/// Scores for one evaluated batch together with its confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub metrics: Metrics,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Scores derived from confusion counts; a zero denominator gives 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let f1 = |tp: usize, fp: usize, fn_: usize| pct(2 * tp, 2 * tp + fp + fn_);
        let pos = f1(tp, fp, fn_);
        let neg = f1(tn, fn_, fp);
        EvalReport {
            metrics: Metrics {
                precision: pct(tp, tp + fp),
                recall: pct(tp, tp + fn_),
                f1: pos,
                f1_macro: (pos + neg) / 2.0,
                accuracy: pct(tp + tn, tp + fp + fn_ + tn),
            },
            tp,
            fp,
            fn_,
            tn,
        }
    }
}

pub fn compute_metrics(predictions: &[Label], labels: &[Label]) -> Result<EvalReport, HarnessError> {
    if predictions.len() != labels.len() {
        return Err(HarnessError::Contract(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(HarnessError::Contract("cannot score an empty batch".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, y) in predictions.iter().zip(labels) {
        match (p.is_positive(), y.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, fn_, tn))
}
