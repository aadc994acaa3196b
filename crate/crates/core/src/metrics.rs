//! Confusion matrix, classification rates, and the figure of merit D.
//!
//! D scores a classifier by placing the pair of per-class accuracies as a
//! vector in the plane: an ideal classifier sits at (1, 1), with magnitude
//! sqrt(2) and a 45° angle. D averages the normalized magnitude with the
//! cosine of the angular deviation from 45°, giving a single number in
//! [0, 1] that penalizes both overall inaccuracy and class imbalance.
//!
//! Published reference tables for D are reproduced by feeding sensitivity
//! and specificity as the two coordinates; a conventional
//! predictive-value variant is available via [`predictive_values`] for
//! callers that want it, but it is not what the reference values use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;

/// Binary confusion matrix at cutout or case granularity. Dysplastic is
/// the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn new(true_pos: u64, true_neg: u64, false_pos: u64, false_neg: u64) -> Self {
        ConfusionMatrix {
            true_pos,
            true_neg,
            false_pos,
            false_neg,
        }
    }

    /// Tallies one decision.
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Dysplastic, Label::Dysplastic) => self.true_pos += 1,
            (Label::NonDysplastic, Label::NonDysplastic) => self.true_neg += 1,
            (Label::NonDysplastic, Label::Dysplastic) => self.false_pos += 1,
            (Label::Dysplastic, Label::NonDysplastic) => self.false_neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.true_pos += other.true_pos;
        self.true_neg += other.true_neg;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
    }
}

/// Sensitivity, specificity and accuracy of a confusion matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

/// The figure of merit and its intermediate quantities. `ppv`/`npv` hold
/// whatever pair of per-class accuracies the caller fed in (sensitivity
/// and specificity for the reference tables).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureOfMeritD {
    pub ppv: f64,
    pub npv: f64,
    /// Normalized magnitude of the (ppv, npv) vector.
    pub d1: f64,
    /// Cosine of the angular deviation from the 45° ideal.
    pub d2: f64,
    pub theta_deg: f64,
    pub d: f64,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("sensitivity is undefined: no positive cases (TP + FN == 0)")]
    NoPositives,
    #[error("specificity is undefined: no negative cases (TN + FP == 0)")]
    NoNegatives,
    #[error("accuracy is undefined: empty confusion matrix")]
    Empty,
    #[error("figure of merit input ({0}, {1}) outside [0, 1]")]
    OutOfRange(f64, f64),
    #[error("figure of merit is undefined when both inputs are zero")]
    BothZero,
}

/// Sensitivity `TP/(TP+FN)`, specificity `TN/(TN+FP)`, accuracy
/// `(TP+TN)/n`. Each rate reports its own zero denominator.
pub fn rates(cm: &ConfusionMatrix) -> Result<RateMetrics, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let pos = cm.true_pos + cm.false_neg;
    if pos == 0 {
        return Err(MetricsError::NoPositives);
    }
    let neg = cm.true_neg + cm.false_pos;
    if neg == 0 {
        return Err(MetricsError::NoNegatives);
    }
    Ok(RateMetrics {
        sensitivity: cm.true_pos as f64 / pos as f64,
        specificity: cm.true_neg as f64 / neg as f64,
        accuracy: (cm.true_pos + cm.true_neg) as f64 / cm.total() as f64,
    })
}

/// Conventional predictive values `TP/(TP+FP)` and `TN/(TN+FN)`. Not used
/// by the reference D tables; exposed for callers that opt in.
pub fn predictive_values(cm: &ConfusionMatrix) -> Result<(f64, f64), MetricsError> {
    let pred_pos = cm.true_pos + cm.false_pos;
    let pred_neg = cm.true_neg + cm.false_neg;
    if pred_pos == 0 {
        return Err(MetricsError::NoPositives);
    }
    if pred_neg == 0 {
        return Err(MetricsError::NoNegatives);
    }
    Ok((
        cm.true_pos as f64 / pred_pos as f64,
        cm.true_neg as f64 / pred_neg as f64,
    ))
}

/// Which pair of per-class accuracies feeds the figure of merit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DSource {
    /// Sensitivity and specificity — reproduces the reference tables.
    #[default]
    Rates,
    /// Conventional positive/negative predictive values.
    PredictiveValues,
}

/// Figure of merit computed from a confusion matrix under the chosen
/// coordinate definition.
pub fn d_from_confusion(
    cm: &ConfusionMatrix,
    source: DSource,
) -> Result<FigureOfMeritD, MetricsError> {
    let (a, b) = match source {
        DSource::Rates => {
            let r = rates(cm)?;
            (r.sensitivity, r.specificity)
        }
        DSource::PredictiveValues => predictive_values(cm)?,
    };
    figure_of_merit_d(a, b)
}

/// Figure of merit D for a pair of per-class accuracies in [0, 1].
///
/// `D1 = sqrt(ppv² + npv²) / sqrt(2)`, `θ = arctan(npv / ppv)` in degrees
/// (90° when `ppv` is zero), `D2 = cos(45° − θ)`, and
/// `D = (|D1| + |D2|) / 2`.
pub fn figure_of_merit_d(ppv: f64, npv: f64) -> Result<FigureOfMeritD, MetricsError> {
    if !(0.0..=1.0).contains(&ppv) || !(0.0..=1.0).contains(&npv) {
        return Err(MetricsError::OutOfRange(ppv, npv));
    }
    if ppv == 0.0 && npv == 0.0 {
        return Err(MetricsError::BothZero);
    }
    let d1 = (ppv * ppv + npv * npv).sqrt() / std::f64::consts::SQRT_2;
    let theta_deg = if ppv == 0.0 {
        90.0
    } else {
        (npv / ppv).atan().to_degrees()
    };
    let d2 = (45.0 - theta_deg).to_radians().cos();
    Ok(FigureOfMeritD {
        ppv,
        npv,
        d1,
        d2,
        theta_deg,
        d: (d1.abs() + d2.abs()) / 2.0,
    })
}

/// Header for the metrics report CSV.
pub fn csv_header() -> &'static str {
    "tp,tn,fp,fn,se,sp,acc,d1,d2,theta_deg,d"
}

/// One metrics report row; rates use fixed six-decimal formatting so
/// reports stay diffable.
pub fn csv_row(cm: &ConfusionMatrix, r: &RateMetrics, f: &FigureOfMeritD) -> String {
    format!(
        "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        cm.true_pos,
        cm.true_neg,
        cm.false_pos,
        cm.false_neg,
        r.sensitivity,
        r.specificity,
        r.accuracy,
        f.d1,
        f.d2,
        f.theta_deg,
        f.d
    )
}
