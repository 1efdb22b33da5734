//! Confusion-matrix metrics for imbalanced binary classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class index convention: 0 = insecure, 1 = secure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SecurityClass {
    Insecure = 0,
    Secure = 1,
}

impl SecurityClass {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Self::Insecure),
            1 => Some(Self::Secure),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::Insecure => Self::Secure,
            Self::Secure => Self::Insecure,
        }
    }
}

impl TryFrom<u8> for SecurityClass {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Self::from_index(v as usize).ok_or_else(|| format!("class label must be 0 or 1, got {v}"))
    }
}

impl From<SecurityClass> for u8 {
    fn from(c: SecurityClass) -> u8 {
        c as u8
    }
}

impl fmt::Display for SecurityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Insecure => "insecure",
            Self::Secure => "secure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub positive_class: SecurityClass,
}

impl ConfusionMatrix {
    pub fn from_predictions(
        predictions: &[SecurityClass],
        labels: &[SecurityClass],
        positive_class: SecurityClass,
    ) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::shape(
                "confusion matrix",
                format!("{} predictions vs {} labels", predictions.len(), labels.len()),
            ));
        }
        if labels.is_empty() {
            return Err(Error::InvalidArgument("nothing to evaluate".into()));
        }
        let mut cm = Self {
            tp: 0,
            fn_: 0,
            fp: 0,
            tn: 0,
            positive_class,
        };
        for (&p, &y) in predictions.iter().zip(labels) {
            match (y == positive_class, p == positive_class) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fn_ += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The same counts read with the other class as positive.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
            positive_class: self.positive_class.other(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub g_mean: f64,
    /// Names of metrics whose denominator was zero (reported as 0).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

fn ratio(num: u64, den: u64, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let ConfusionMatrix { tp, fn_, fp, tn, .. } = confusion;
        let mut undefined = Vec::new();
        let precision = ratio(tp, tp + fp, "precision", &mut undefined);
        let recall = ratio(tp, tp + fn_, "recall", &mut undefined);
        let specificity = ratio(tn, tn + fp, "specificity", &mut undefined);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            undefined.push("f1".into());
            0.0
        };
        let g_mean = (recall * specificity).sqrt();
        if !undefined.is_empty() {
            log::debug!("metrics with zero denominator reported as 0: {undefined:?}");
        }
        Self {
            confusion,
            precision,
            recall,
            specificity,
            f1,
            g_mean,
            undefined,
        }
    }

    pub const CSV_HEADER: &'static str = "positive,tp,fn,fp,tn,precision,recall,specificity,f1,g_mean";

    /// One row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let c = &self.confusion;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            c.positive_class,
            c.tp,
            c.fn_,
            c.fp,
            c.tn,
            self.precision,
            self.recall,
            self.specificity,
            self.f1,
            self.g_mean
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Metrics of `predictions` against `labels` with `positive_class` as the
/// positive class.
pub fn evaluate(
    predictions: &[SecurityClass],
    labels: &[SecurityClass],
    positive_class: SecurityClass,
) -> Result<EvalReport> {
    Ok(EvalReport::from_confusion(ConfusionMatrix::from_predictions(
        predictions,
        labels,
        positive_class,
    )?))
}
