//! Risk-weighted decisions: per-cutout Bayes rule and per-case majority
//! vote.
//!
//! A cutout is assigned to the dysplastic class when the posterior ratio
//! clears the loss ratio: `P(dysplastic|x) / P(non_dysplastic|x) >=
//! fp_loss / fn_loss`. Raising the false-negative loss therefore pushes
//! decisions toward the dysplastic class. The case diagnosis is the
//! majority over its cutout decisions, with exact ties resolved to
//! dysplastic and flagged for audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;
use crate::nnet::Posterior;

/// Misclassification losses for the Bayes rule. `fp_loss` is the cost of
/// calling a healthy case dysplastic; `fn_loss` the cost of missing a
/// dysplastic case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPair {
    pub fp_loss: f64,
    pub fn_loss: f64,
}

impl LossPair {
    /// Equal losses: the rule reduces to picking the larger posterior.
    pub fn symmetric() -> Self {
        LossPair {
            fp_loss: 1.0,
            fn_loss: 1.0,
        }
    }

    pub fn new(fp_loss: f64, fn_loss: f64) -> Result<Self, DecisionError> {
        if fp_loss < 0.0 || fn_loss < 0.0 || (fp_loss == 0.0 && fn_loss == 0.0) {
            return Err(DecisionError::InvalidLosses { fp_loss, fn_loss });
        }
        Ok(LossPair { fp_loss, fn_loss })
    }
}

impl Default for LossPair {
    fn default() -> Self {
        LossPair::symmetric()
    }
}

/// Majority-vote outcome for one case. `votes_for` counts dysplastic
/// cutout decisions, `votes_against` the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseDiagnosis {
    pub case_id: String,
    pub predicted: Label,
    pub votes_for: usize,
    pub votes_against: usize,
    pub tie_broken: bool,
}

#[derive(Debug, Error)]
pub enum DecisionError {
    #[error("loss pair ({fp_loss}, {fn_loss}) is invalid: losses must be >= 0 and not both zero")]
    InvalidLosses { fp_loss: f64, fn_loss: f64 },
    #[error("false-negative loss of zero leaves the decision threshold undefined")]
    ZeroFnLoss,
    #[error("cannot diagnose a case with no classified cutouts")]
    NoCutouts,
}

/// Header for the per-case decision report CSV.
pub fn case_csv_header() -> &'static str {
    "case_id,truth,prediction,votes_for,votes_against,tie_broken"
}

/// One decision-report row for a diagnosed case and its ground truth.
pub fn case_csv_row(truth: Label, d: &CaseDiagnosis) -> String {
    format!(
        "{},{},{},{},{},{}",
        d.case_id, truth, d.predicted, d.votes_for, d.votes_against, d.tie_broken
    )
}

/// Writes the per-case decision report.
pub fn write_case_report<'a, W, I>(rows: I, w: &mut W) -> std::io::Result<()>
where
    W: std::io::Write,
    I: IntoIterator<Item = (Label, &'a CaseDiagnosis)>,
{
    writeln!(w, "{}", case_csv_header())?;
    for (truth, d) in rows {
        writeln!(w, "{}", case_csv_row(truth, d))?;
    }
    Ok(())
}

/// Classifies one posterior under the given losses.
///
/// The boundary is inclusive: a posterior exactly on the threshold is
/// assigned to the dysplastic class. The comparison is done in
/// cross-multiplied form, so a vanishing non-dysplastic posterior with
/// positive dysplastic mass also yields dysplastic.
pub fn classify_cutout(p: &Posterior, losses: &LossPair) -> Result<Label, DecisionError> {
    if losses.fn_loss == 0.0 {
        return Err(DecisionError::ZeroFnLoss);
    }
    // p1/p2 >= fp/fn  <=>  p1 * fn >= p2 * fp  (all factors non-negative)
    if p.dysplastic() * losses.fn_loss >= p.non_dysplastic() * losses.fp_loss {
        Ok(Label::Dysplastic)
    } else {
        Ok(Label::NonDysplastic)
    }
}

/// Majority vote over a case's cutout decisions. An exact tie resolves to
/// dysplastic with `tie_broken` set.
pub fn classify_case(
    cutout_classes: &[Label],
    case_id: impl Into<String>,
) -> Result<CaseDiagnosis, DecisionError> {
    if cutout_classes.is_empty() {
        return Err(DecisionError::NoCutouts);
    }
    let votes_for = cutout_classes
        .iter()
        .filter(|&&c| c == Label::Dysplastic)
        .count();
    let votes_against = cutout_classes.len() - votes_for;
    let (predicted, tie_broken) = match votes_for.cmp(&votes_against) {
        std::cmp::Ordering::Greater => (Label::Dysplastic, false),
        std::cmp::Ordering::Less => (Label::NonDysplastic, false),
        std::cmp::Ordering::Equal => (Label::Dysplastic, true),
    };
    Ok(CaseDiagnosis {
        case_id: case_id.into(),
        predicted,
        votes_for,
        votes_against,
        tie_broken,
    })
}
