//! Experiment protocols and multi-realization statistics.
//!
//! Two evaluation granularities mirror the two design phases: a
//! cutout-level holdout that scores individual cutouts, and a case-level
//! leave-one-out cross-validation that trains one network per held-out
//! case and diagnoses it by majority vote. Both repeat over independently
//! seeded realizations and aggregate mean ± SD statistics.
//!
//! Every work unit derives its seeds from
//! `(master seed, realization index, case index)`, so realizations and
//! folds can run in parallel while the complete experiment stays
//! bit-reproducible.

use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{augment_rotations, CaseSet, Cutout, Label};
use crate::decision::{classify_case, classify_cutout, CaseDiagnosis, DecisionError, LossPair};
use crate::metrics::{
    d_from_confusion, rates, ConfusionMatrix, DSource, FigureOfMeritD, MetricsError, RateMetrics,
};
use crate::nnet::{MlpModel, MlpStructure, NnetError, Posterior, TrainingSet};
use crate::scg::{split_data, train, TrainError, TrainOptions};
use crate::seed::derive_seed;

/// Seed-derivation stage tags. Combined with the master seed and the
/// work-unit indices (`realization` and, for LOOCV, the held-out case)
/// they name every random stream an experiment consumes; run summaries
/// echo the derived values.
pub mod stage {
    pub const BALANCE: u64 = 0;
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SAMPLE_TRAIN: u64 = 3;
    pub const SAMPLE_TEST: u64 = 4;
}

use stage::{
    BALANCE as STAGE_BALANCE, INIT as STAGE_INIT, SAMPLE_TEST as STAGE_SAMPLE_TEST,
    SAMPLE_TRAIN as STAGE_SAMPLE_TRAIN, SPLIT as STAGE_SPLIT,
};

/// Diagnosis of one case together with its ground truth.
#[derive(Clone, Debug)]
pub struct EvaluatedCase {
    pub truth: Label,
    pub diagnosis: CaseDiagnosis,
}

/// Case-level outcome of one realization.
#[derive(Clone, Debug)]
pub struct RealizationResult {
    pub realization_index: usize,
    pub cases: Vec<EvaluatedCase>,
    pub confusion: ConfusionMatrix,
    pub rates: RateMetrics,
    pub merit: FigureOfMeritD,
}

/// Cutout-level outcome of one realization (no case voting).
#[derive(Clone, Debug)]
pub struct CutoutRealization {
    pub realization_index: usize,
    pub confusion: ConfusionMatrix,
    pub rates: RateMetrics,
    pub merit: FigureOfMeritD,
}

/// Element-wise mean of confusion matrices across realizations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanConfusionMatrix {
    pub true_pos: f64,
    pub true_neg: f64,
    pub false_pos: f64,
    pub false_neg: f64,
}

/// Mean ± SD statistics over realizations. The SD uses the sample
/// (n − 1) denominator and is zero for a single realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateReport {
    pub n_realizations: usize,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub max_accuracy: f64,
    pub mean_sensitivity: f64,
    pub mean_specificity: f64,
    pub mean_d: f64,
    pub mean_confusion: MeanConfusionMatrix,
}

impl AggregateReport {
    /// Streaming aggregation (Welford) over per-realization metrics.
    pub fn from_metrics<'a, I>(metrics: I) -> Option<AggregateReport>
    where
        I: IntoIterator<Item = (&'a ConfusionMatrix, &'a RateMetrics, &'a FigureOfMeritD)>,
    {
        let mut n = 0usize;
        let mut mean_acc = 0.0;
        let mut m2_acc = 0.0;
        let mut max_acc = f64::NEG_INFINITY;
        let mut sum_se = 0.0;
        let mut sum_sp = 0.0;
        let mut sum_d = 0.0;
        let mut cm_sum = [0.0f64; 4];
        for (cm, r, f) in metrics {
            n += 1;
            let delta = r.accuracy - mean_acc;
            mean_acc += delta / n as f64;
            m2_acc += delta * (r.accuracy - mean_acc);
            max_acc = max_acc.max(r.accuracy);
            sum_se += r.sensitivity;
            sum_sp += r.specificity;
            sum_d += f.d;
            cm_sum[0] += cm.true_pos as f64;
            cm_sum[1] += cm.true_neg as f64;
            cm_sum[2] += cm.false_pos as f64;
            cm_sum[3] += cm.false_neg as f64;
        }
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let sd_accuracy = if n > 1 { (m2_acc / (nf - 1.0)).sqrt() } else { 0.0 };
        Some(AggregateReport {
            n_realizations: n,
            mean_accuracy: mean_acc,
            sd_accuracy,
            max_accuracy: max_acc,
            mean_sensitivity: sum_se / nf,
            mean_specificity: sum_sp / nf,
            mean_d: sum_d / nf,
            mean_confusion: MeanConfusionMatrix {
                true_pos: cm_sum[0] / nf,
                true_neg: cm_sum[1] / nf,
                false_pos: cm_sum[2] / nf,
                false_neg: cm_sum[3] / nf,
            },
        })
    }

    pub fn from_realizations(results: &[RealizationResult]) -> Option<AggregateReport> {
        Self::from_metrics(results.iter().map(|r| (&r.confusion, &r.rates, &r.merit)))
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("class {label} has no cutouts")]
    MissingClass { label: Label },
    #[error("need at least two cases with both classes present")]
    TooFewCases,
    #[error("training failed (realization {realization}, case `{case_id}`): {source}")]
    TrainingFailed {
        realization: usize,
        case_id: String,
        #[source]
        source: TrainError,
    },
    #[error("train and test pools share {count} cutout(s)")]
    PoolsOverlap { count: usize },
    #[error("pool has {have} {label} cutouts, {need} requested")]
    InsufficientPool {
        label: Label,
        need: usize,
        have: usize,
    },
    #[error("case `{case_id}` appears in both the training and test case sets")]
    CasesOverlap { case_id: String },
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Undersamples the majority class's cutout pool to the minority count.
/// Both classes must be present. Augmentation is applied afterwards by
/// [`balanced_augmented_cutouts`].
pub fn balance_cutouts(train_cases: &CaseSet, seed: u64) -> Result<Vec<Cutout>, EvalError> {
    let mut dys: Vec<&Cutout> = Vec::new();
    let mut non: Vec<&Cutout> = Vec::new();
    for c in train_cases.all_cutouts() {
        match c.label {
            Label::Dysplastic => dys.push(c),
            Label::NonDysplastic => non.push(c),
        }
    }
    if dys.is_empty() {
        return Err(EvalError::MissingClass {
            label: Label::Dysplastic,
        });
    }
    if non.is_empty() {
        return Err(EvalError::MissingClass {
            label: Label::NonDysplastic,
        });
    }
    let target = dys.len().min(non.len());
    let mut rng = crate::seed::rng_for(seed, &[]);
    let mut pick = |pool: &[&Cutout]| -> Vec<Cutout> {
        if pool.len() == target {
            return pool.iter().map(|c| (*c).clone()).collect();
        }
        let mut chosen = rand::seq::index::sample(&mut rng, pool.len(), target).into_vec();
        chosen.sort_unstable();
        chosen.into_iter().map(|i| pool[i].clone()).collect()
    };
    let mut out = pick(&dys);
    out.extend(pick(&non));
    Ok(out)
}

/// Balanced training pool with the four rotation variants of every
/// selected cutout (test-time cutouts are never augmented).
pub fn balanced_augmented_cutouts(
    train_cases: &CaseSet,
    seed: u64,
) -> Result<Vec<Cutout>, EvalError> {
    let balanced = balance_cutouts(train_cases, seed)?;
    Ok(balanced.iter().flat_map(augment_rotations).collect())
}

/// The exact training pool used for one LOOCV fold; exposed so audits can
/// reproduce what a fold trained on.
pub fn fold_training_cutouts(
    cases: &CaseSet,
    held_out: usize,
    master_seed: u64,
    realization: usize,
) -> Result<Vec<Cutout>, EvalError> {
    let train_cases = cases.without_case(held_out);
    balanced_augmented_cutouts(
        &train_cases,
        derive_seed(master_seed, &[realization as u64, held_out as u64, STAGE_BALANCE]),
    )
}

/// Posteriors of one held-out case's cutouts under one realization.
#[derive(Clone, Debug)]
pub struct CasePosteriors {
    pub case_index: usize,
    pub posteriors: Vec<Posterior>,
}

fn train_fold_and_classify(
    cases: &CaseSet,
    structure: &MlpStructure,
    opts: &TrainOptions,
    realization: usize,
    held_out: usize,
) -> Result<CasePosteriors, EvalError> {
    let annotate = |source: TrainError| EvalError::TrainingFailed {
        realization,
        case_id: cases.cases()[held_out].case_id.clone(),
        source,
    };
    let (r, i) = (realization as u64, held_out as u64);
    let pool = fold_training_cutouts(cases, held_out, opts.seed, realization)?;
    let split = split_data(
        &pool,
        |c| c.label,
        &opts.split,
        derive_seed(opts.seed, &[r, i, STAGE_SPLIT]),
    )
    .map_err(annotate)?;
    let train_set = TrainingSet::from_cutouts(&split.train)?;
    let val_set = TrainingSet::from_cutouts(&split.val)?;
    let model = MlpModel::init(
        structure.clone(),
        derive_seed(opts.seed, &[r, i, STAGE_INIT]),
    )?;
    let (trained, _history) = train(model, &train_set, &val_set, opts).map_err(annotate)?;

    let held = &cases.cases()[held_out];
    let posteriors = held
        .cutouts
        .iter()
        .map(|c| trained.forward(c.flatten()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CasePosteriors {
        case_index: held_out,
        posteriors,
    })
}

/// Trains every LOOCV fold for `n_realizations` realizations and returns
/// the held-out posteriors, grouped by realization. Decision rules can
/// then be applied (and re-applied under different losses) without
/// retraining.
pub fn loocv_posteriors(
    cases: &CaseSet,
    structure: &MlpStructure,
    opts: &TrainOptions,
    n_realizations: usize,
) -> Result<Vec<Vec<CasePosteriors>>, EvalError> {
    check_case_pool(cases)?;
    let n_cases = cases.len();
    let jobs: Vec<(usize, usize)> = (0..n_realizations)
        .flat_map(|r| (0..n_cases).map(move |i| (r, i)))
        .collect();
    let folds: Vec<CasePosteriors> = jobs
        .into_par_iter()
        .map(|(r, i)| train_fold_and_classify(cases, structure, opts, r, i))
        .collect::<Result<_, _>>()?;
    Ok(folds
        .chunks(n_cases)
        .map(|chunk| chunk.to_vec())
        .collect())
}

fn check_case_pool(cases: &CaseSet) -> Result<(), EvalError> {
    if cases.len() < 2 {
        return Err(EvalError::TooFewCases);
    }
    let has = |label| cases.cases().iter().any(|c| c.label == label);
    if !has(Label::Dysplastic) || !has(Label::NonDysplastic) {
        return Err(EvalError::TooFewCases);
    }
    Ok(())
}

/// Applies the Bayes rule and majority vote to pre-computed posteriors,
/// producing one realization's case-level result.
pub fn decide_cases(
    cases: &CaseSet,
    case_posteriors: &[CasePosteriors],
    losses: &LossPair,
    realization_index: usize,
    d_source: DSource,
) -> Result<RealizationResult, EvalError> {
    let mut confusion = ConfusionMatrix::default();
    let mut evaluated = Vec::with_capacity(case_posteriors.len());
    for cp in case_posteriors {
        let case = &cases.cases()[cp.case_index];
        let votes = cp
            .posteriors
            .iter()
            .map(|p| classify_cutout(p, losses))
            .collect::<Result<Vec<_>, _>>()?;
        let diagnosis = classify_case(&votes, case.case_id.clone())?;
        confusion.record(case.label, diagnosis.predicted);
        evaluated.push(EvaluatedCase {
            truth: case.label,
            diagnosis,
        });
    }
    let r = rates(&confusion)?;
    let merit = d_from_confusion(&confusion, d_source)?;
    Ok(RealizationResult {
        realization_index,
        cases: evaluated,
        confusion,
        rates: r,
        merit,
    })
}

/// Outcome of a LOOCV experiment.
#[derive(Clone, Debug)]
pub struct LoocvOutcome {
    pub realizations: Vec<RealizationResult>,
    pub aggregate: AggregateReport,
}

/// Case-level leave-one-out cross-validation.
///
/// Per realization, each case is held out once: a network is trained on
/// the balanced, augmented cutouts of the remaining cases and the held-out
/// case is diagnosed by majority vote over its (unaugmented) cutouts.
/// `opts.seed` acts as the experiment's master seed.
pub fn loocv(
    cases: &CaseSet,
    structure: &MlpStructure,
    losses: &LossPair,
    opts: &TrainOptions,
    n_realizations: usize,
    d_source: DSource,
) -> Result<LoocvOutcome, EvalError> {
    let posterior_sets = loocv_posteriors(cases, structure, opts, n_realizations)?;
    let realizations = posterior_sets
        .iter()
        .enumerate()
        .map(|(r, set)| decide_cases(cases, set, losses, r, d_source))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate =
        AggregateReport::from_realizations(&realizations).expect("n_realizations >= 1");
    Ok(LoocvOutcome {
        realizations,
        aggregate,
    })
}

/// Outcome of the cutout-level holdout protocol.
#[derive(Clone, Debug)]
pub struct CutoutHoldoutOutcome {
    pub realizations: Vec<CutoutRealization>,
    pub aggregate: AggregateReport,
}

fn cutout_identity(c: &Cutout) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    c.case_id.hash(&mut h);
    c.side.hash(&mut h);
    for v in &c.pixels {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn per_class<'a>(pool: &'a [Cutout]) -> (Vec<&'a Cutout>, Vec<&'a Cutout>) {
    let mut dys = Vec::new();
    let mut non = Vec::new();
    for c in pool {
        match c.label {
            Label::Dysplastic => dys.push(c),
            Label::NonDysplastic => non.push(c),
        }
    }
    (dys, non)
}

fn sample_per_class(
    pool: &[Cutout],
    per_class: usize,
    seed: u64,
) -> Result<Vec<Cutout>, EvalError> {
    let (dys, non) = self::per_class(pool);
    for (label, class_pool) in [(Label::Dysplastic, &dys), (Label::NonDysplastic, &non)] {
        if class_pool.len() < per_class {
            return Err(EvalError::InsufficientPool {
                label,
                need: per_class,
                have: class_pool.len(),
            });
        }
    }
    let mut rng = crate::seed::rng_for(seed, &[]);
    let mut out = Vec::with_capacity(2 * per_class);
    for class_pool in [&dys, &non] {
        let mut idx = rand::seq::index::sample(&mut rng, class_pool.len(), per_class).into_vec();
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| class_pool[i].clone()));
    }
    Ok(out)
}

/// Cutout-level holdout evaluation.
///
/// Per realization: `per_class_train` cutouts per class are drawn from the
/// training pool (then augmented and split for training) and
/// `per_class_test` per class from the reserved test pool; test cutouts
/// are classified individually under symmetric losses, with no case
/// voting. Pools must be disjoint.
#[allow(clippy::too_many_arguments)]
pub fn cutout_holdout_eval(
    train_pool: &[Cutout],
    test_pool: &[Cutout],
    structure: &MlpStructure,
    opts: &TrainOptions,
    n_realizations: usize,
    per_class_train: usize,
    per_class_test: usize,
    d_source: DSource,
) -> Result<CutoutHoldoutOutcome, EvalError> {
    let train_ids: HashSet<u64> = train_pool.iter().map(cutout_identity).collect();
    let overlap = test_pool
        .iter()
        .filter(|c| train_ids.contains(&cutout_identity(c)))
        .count();
    if overlap > 0 {
        return Err(EvalError::PoolsOverlap { count: overlap });
    }

    let losses = LossPair::symmetric();
    let realizations: Vec<CutoutRealization> = (0..n_realizations)
        .into_par_iter()
        .map(|r| -> Result<CutoutRealization, EvalError> {
            let annotate = |source: TrainError| EvalError::TrainingFailed {
                realization: r,
                case_id: "<cutout holdout>".to_string(),
                source,
            };
            let ru = r as u64;
            let picked = sample_per_class(
                train_pool,
                per_class_train,
                derive_seed(opts.seed, &[ru, STAGE_SAMPLE_TRAIN]),
            )?;
            let augmented: Vec<Cutout> = picked.iter().flat_map(augment_rotations).collect();
            let split = split_data(
                &augmented,
                |c| c.label,
                &opts.split,
                derive_seed(opts.seed, &[ru, STAGE_SPLIT]),
            )
            .map_err(annotate)?;
            let train_set = TrainingSet::from_cutouts(&split.train)?;
            let val_set = TrainingSet::from_cutouts(&split.val)?;
            let model = MlpModel::init(
                structure.clone(),
                derive_seed(opts.seed, &[ru, STAGE_INIT]),
            )?;
            let (trained, _) = train(model, &train_set, &val_set, opts).map_err(annotate)?;

            let tests = sample_per_class(
                test_pool,
                per_class_test,
                derive_seed(opts.seed, &[ru, STAGE_SAMPLE_TEST]),
            )?;
            let mut confusion = ConfusionMatrix::default();
            for c in &tests {
                let p = trained.forward(c.flatten())?;
                let predicted = classify_cutout(&p, &losses)?;
                confusion.record(c.label, predicted);
            }
            let rates = rates(&confusion)?;
            let merit = d_from_confusion(&confusion, d_source)?;
            Ok(CutoutRealization {
                realization_index: r,
                confusion,
                rates,
                merit,
            })
        })
        .collect::<Result<_, _>>()?;

    let aggregate = AggregateReport::from_metrics(
        realizations.iter().map(|r| (&r.confusion, &r.rates, &r.merit)),
    )
    .expect("n_realizations >= 1");
    Ok(CutoutHoldoutOutcome {
        realizations,
        aggregate,
    })
}

/// Trains one network on all cases of `cases`: balance, augment, split
/// per `opts`, then run the trainer. Stage seeds derive from
/// `(opts.seed, realization)`, so distinct realizations are independent.
pub fn train_realization(
    cases: &CaseSet,
    structure: &MlpStructure,
    opts: &TrainOptions,
    realization: usize,
) -> Result<(MlpModel, crate::scg::TrainHistory), EvalError> {
    let annotate = |source: TrainError| EvalError::TrainingFailed {
        realization,
        case_id: "<training set>".to_string(),
        source,
    };
    let ru = realization as u64;
    let pool =
        balanced_augmented_cutouts(cases, derive_seed(opts.seed, &[ru, STAGE_BALANCE]))?;
    let split = split_data(
        &pool,
        |c| c.label,
        &opts.split,
        derive_seed(opts.seed, &[ru, STAGE_SPLIT]),
    )
    .map_err(annotate)?;
    let train_set = TrainingSet::from_cutouts(&split.train)?;
    let val_set = TrainingSet::from_cutouts(&split.val)?;
    let model = MlpModel::init(
        structure.clone(),
        derive_seed(opts.seed, &[ru, STAGE_INIT]),
    )?;
    train(model, &train_set, &val_set, opts).map_err(annotate)
}

/// Outcome of [`best_by_d`]: the winning model plus every realization's
/// test-set result.
#[derive(Debug)]
pub struct BestByD {
    pub model: MlpModel,
    pub best: RealizationResult,
    pub realizations: Vec<RealizationResult>,
    pub aggregate: AggregateReport,
}

/// Trains `n_realizations` networks on all training cases and returns the
/// one whose test-set figure of merit D is highest (ties go to the lowest
/// realization index), along with its result.
pub fn best_by_d(
    train_cases: &CaseSet,
    test_cases: &CaseSet,
    structure: &MlpStructure,
    losses: &LossPair,
    opts: &TrainOptions,
    n_realizations: usize,
    d_source: DSource,
) -> Result<BestByD, EvalError> {
    let train_ids: HashSet<&str> = train_cases.case_ids().collect();
    if let Some(shared) = test_cases.case_ids().find(|id| train_ids.contains(id)) {
        return Err(EvalError::CasesOverlap {
            case_id: shared.to_string(),
        });
    }
    check_case_pool(train_cases)?;

    let run_one = |r: usize| -> Result<(RealizationResult, MlpModel), EvalError> {
        let (trained, _) = train_realization(train_cases, structure, opts, r)?;

        let case_posteriors = test_cases
            .cases()
            .iter()
            .enumerate()
            .map(|(i, case)| {
                let posteriors = case
                    .cutouts
                    .iter()
                    .map(|c| trained.forward(c.flatten()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(CasePosteriors {
                    case_index: i,
                    posteriors,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        let result = decide_cases(test_cases, &case_posteriors, losses, r, d_source)?;
        Ok((result, trained))
    };

    let outcomes: Vec<(RealizationResult, MlpModel)> = (0..n_realizations)
        .into_par_iter()
        .map(run_one)
        .collect::<Result<_, _>>()?;

    let mut realizations = Vec::with_capacity(n_realizations);
    let mut best: Option<(usize, f64, MlpModel, RealizationResult)> = None;
    for (result, model) in outcomes {
        let better = match &best {
            None => true,
            Some((_, d, _, _)) => result.merit.d > *d,
        };
        if better {
            best = Some((
                result.realization_index,
                result.merit.d,
                model,
                result.clone(),
            ));
        }
        realizations.push(result);
    }
    let (_, _, model, best_result) = best.expect("n_realizations >= 1");
    let aggregate =
        AggregateReport::from_realizations(&realizations).expect("n_realizations >= 1");
    Ok(BestByD {
        model,
        best: best_result,
        realizations,
        aggregate,
    })
}

/// Writes one row per (realization, case): the per-case decision report
/// with the realization index prepended.
pub fn write_cases_csv<W: Write>(
    results: &[RealizationResult],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "realization,{}", crate::decision::case_csv_header())?;
    for r in results {
        for ec in &r.cases {
            writeln!(
                w,
                "{},{}",
                r.realization_index,
                crate::decision::case_csv_row(ec.truth, &ec.diagnosis)
            )?;
        }
    }
    Ok(())
}

/// Writes one metrics row per realization.
pub fn write_realizations_csv<'a, W, I>(rows: I, w: &mut W) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, &'a ConfusionMatrix, &'a RateMetrics, &'a FigureOfMeritD)>,
{
    writeln!(w, "realization,{}", crate::metrics::csv_header())?;
    for (index, cm, r, f) in rows {
        writeln!(w, "{},{}", index, crate::metrics::csv_row(cm, r, f))?;
    }
    Ok(())
}

/// Writes the aggregate statistics as a single CSV row.
pub fn write_aggregate_csv<W: Write>(agg: &AggregateReport, w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "n_realizations,mean_accuracy,sd_accuracy,max_accuracy,\
         mean_sensitivity,mean_specificity,mean_d,\
         mean_tp,mean_tn,mean_fp,mean_fn"
    )?;
    writeln!(
        w,
        "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        agg.n_realizations,
        agg.mean_accuracy,
        agg.sd_accuracy,
        agg.max_accuracy,
        agg.mean_sensitivity,
        agg.mean_specificity,
        agg.mean_d,
        agg.mean_confusion.true_pos,
        agg.mean_confusion.true_neg,
        agg.mean_confusion.false_pos,
        agg.mean_confusion.false_neg
    )
}
