//! Scaled conjugate gradient training with early stopping.
//!
//! The trainer runs full-batch scaled conjugate gradient over the flat
//! parameter vector. Each epoch is one SCG iteration: second-order
//! information is estimated from a finite difference of gradients along
//! the current conjugate direction, a candidate step is computed, and the
//! step is accepted only if the comparison parameter shows the quadratic
//! approximation actually reduced the cost. Rejected steps raise the
//! scaling parameter and try again on the next epoch, so the recorded
//! train cost never increases.
//!
//! Training stops at the first of: the epoch budget is exhausted, the
//! train cost is exactly zero, the gradient 2-norm falls to `grad_tol`,
//! or the validation cost rises strictly for `val_patience` consecutive
//! epochs. The returned model carries the parameters from the epoch with
//! the lowest validation cost.

use std::fmt;
use std::io::Write;

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;
use crate::nnet::{MlpModel, NnetError, TrainingSet};

/// Møller's suggested constants: sigma bounds the finite-difference step
/// for the Hessian-vector estimate, lambda seeds the scaling parameter.
const SIGMA: f64 = 5e-5;
const LAMBDA_INIT: f64 = 5e-7;

/// Fractions of the training pool routed to each inner split.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<(), TrainError> {
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TrainError::InvalidOptions("split fractions must sum to 1"));
        }
        if self.train <= 0.0 || self.val <= 0.0 || self.test < 0.0 {
            return Err(TrainError::InvalidOptions(
                "train and validation fractions must be positive",
            ));
        }
        Ok(())
    }
}

/// Knobs for one training run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainOptions {
    pub max_epochs: usize,
    pub grad_tol: f64,
    pub val_patience: usize,
    pub split: SplitFractions,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_epochs: 1000,
            grad_tol: 1e-6,
            val_patience: 6,
            split: SplitFractions::default(),
            seed: 0,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.max_epochs < 1 {
            return Err(TrainError::InvalidOptions("max_epochs must be >= 1"));
        }
        if self.val_patience < 1 {
            return Err(TrainError::InvalidOptions("val_patience must be >= 1"));
        }
        self.split.validate()
    }
}

/// Why training stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxEpochs,
    ZeroError,
    GradientTol,
    ValidationPatience,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::ZeroError => "zero_error",
            StopReason::GradientTol => "gradient_tol",
            StopReason::ValidationPatience => "validation_patience",
        };
        write!(f, "{s}")
    }
}

/// State evaluated at the start of an epoch, before that epoch's step.
#[derive(Clone, Copy, Debug)]
pub struct EpochRecord {
    pub train_cost: f64,
    pub val_cost: f64,
    pub grad_norm: f64,
}

/// Per-epoch trace of a training run.
#[derive(Clone, Debug)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    /// 0-based index of the epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    /// Writes the log as CSV: one row per epoch, with a trailing line
    /// naming the stop reason.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_cost,val_cost,grad_norm")?;
        for (i, e) in self.epochs.iter().enumerate() {
            writeln!(w, "{},{},{},{}", i + 1, e.train_cost, e.val_cost, e.grad_norm)?;
        }
        writeln!(w, "stop_reason,{}", self.stop_reason)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training options: {0}")]
    InvalidOptions(&'static str),
    #[error("{n} samples are too few to populate train/validation/test splits")]
    TooFewSamples { n: usize },
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { epoch: usize, what: &'static str },
    #[error(transparent)]
    Nnet(#[from] NnetError),
}

/// The three disjoint subsets produced by [`split_data`].
#[derive(Clone, Debug)]
pub struct SplitData<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Randomly partitions `items` into train/validation/test subsets of sizes
/// `floor(f_train n)` / `floor(f_val n)` / remainder, stratified so each
/// subset's class ratio stays within one item of the pool's ratio.
///
/// The inner test subset is carved out for protocol fidelity but left
/// untouched by the trainer.
pub fn split_data<T: Clone>(
    items: &[T],
    label_of: impl Fn(&T) -> Label,
    fractions: &SplitFractions,
    seed: u64,
) -> Result<SplitData<T>, TrainError> {
    fractions.validate()?;
    let n = items.len();
    let n_train = (fractions.train * n as f64).floor() as usize;
    let n_val = (fractions.val * n as f64).floor() as usize;
    let n_test = n - n_train - n_val;
    if n_train == 0 || n_val == 0 || (fractions.test > 0.0 && n_test == 0) {
        return Err(TrainError::TooFewSamples { n });
    }

    // Queue indices per class in seeded shuffled order.
    let mut rng = crate::seed::rng_for(seed, &[]);
    let classes = [Label::Dysplastic, Label::NonDysplastic];
    let mut queues: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| {
            (0..n)
                .filter(|&i| label_of(&items[i]) == c)
                .collect::<Vec<_>>()
        })
        .collect();
    for q in &mut queues {
        rand::seq::SliceRandom::shuffle(q.as_mut_slice(), &mut rng);
    }
    let class_counts: Vec<usize> = queues.iter().map(Vec::len).collect();

    // Largest-remainder apportionment of a split of size `m` across the
    // classes, capped by what is still available in each queue.
    let mut remaining = class_counts.clone();
    let mut take_split = |m: usize| -> Vec<usize> {
        let mut base: Vec<usize> = Vec::with_capacity(classes.len());
        let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(classes.len());
        for (c, &count) in class_counts.iter().enumerate() {
            let quota = m as f64 * count as f64 / n as f64;
            base.push((quota.floor() as usize).min(remaining[c]));
            fracs.push((c, quota - quota.floor()));
        }
        let mut leftover = m - base.iter().sum::<usize>().min(m);
        fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        while leftover > 0 {
            let mut progressed = false;
            for &(c, _) in &fracs {
                if leftover == 0 {
                    break;
                }
                if base[c] < remaining[c] {
                    base[c] += 1;
                    leftover -= 1;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        for (c, &take) in base.iter().enumerate() {
            remaining[c] -= take;
        }
        base
    };

    let train_alloc = take_split(n_train);
    let val_alloc = take_split(n_val);

    let mut out = SplitData {
        train: Vec::with_capacity(n_train),
        val: Vec::with_capacity(n_val),
        test: Vec::with_capacity(n_test),
    };
    for (c, queue) in queues.iter().enumerate() {
        let mut it = queue.iter();
        for _ in 0..train_alloc[c] {
            out.train.push(items[*it.next().expect("allocation fits")].clone());
        }
        for _ in 0..val_alloc[c] {
            out.val.push(items[*it.next().expect("allocation fits")].clone());
        }
        for &i in it {
            out.test.push(items[i].clone());
        }
    }
    Ok(out)
}

/// Number of strictly increasing steps at the tail of `vals`.
/// Equal consecutive values (a plateau) reset the count.
pub(crate) fn trailing_strict_increases(vals: &[f64]) -> usize {
    vals.windows(2).rev().take_while(|w| w[1] > w[0]).count()
}

/// Trains `model` on `train_set` with full-batch scaled conjugate
/// gradient, monitoring `val_set` for early stopping. Returns the model
/// restored to the epoch with minimum validation cost, plus the history.
pub fn train(
    model: MlpModel,
    train_set: &TrainingSet,
    val_set: &TrainingSet,
    opts: &TrainOptions,
) -> Result<(MlpModel, TrainHistory), TrainError> {
    opts.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }

    let mut model = model;
    let n_params = model.param_count();

    let mut train_cost = model.cost(train_set)?;
    let mut grad = model.gradient(train_set)?;
    ensure_finite(train_cost, 1, "cost")?;
    ensure_finite_vec(&grad, 1, "gradient")?;

    let mut r = -grad.clone();
    let mut p = r.clone();
    let mut success = true;
    let mut delta = 0.0;
    let mut lambda = LAMBDA_INIT;
    let mut lambda_bar = 0.0;

    let mut history = Vec::new();
    let mut val_series = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = model.params();
    let mut stop = None;

    for epoch in 1..=opts.max_epochs {
        let val_cost = model.cost(val_set)?;
        ensure_finite(val_cost, epoch, "validation cost")?;
        let grad_norm = norm(&r);
        history.push(EpochRecord {
            train_cost,
            val_cost,
            grad_norm,
        });
        val_series.push(val_cost);
        if val_cost < best_val {
            best_val = val_cost;
            best_epoch = epoch - 1;
            best_params = model.params();
        }

        if epoch == opts.max_epochs {
            stop = Some(StopReason::MaxEpochs);
        } else if train_cost == 0.0 {
            stop = Some(StopReason::ZeroError);
        } else if grad_norm <= opts.grad_tol {
            stop = Some(StopReason::GradientTol);
        } else if trailing_strict_increases(&val_series) >= opts.val_patience {
            stop = Some(StopReason::ValidationPatience);
        }
        if stop.is_some() {
            break;
        }

        // --- one SCG iteration ---
        let mut p_norm_sq = p.dot(&p);
        if p_norm_sq == 0.0 {
            // Conjugate direction collapsed; restart along the gradient.
            p = r.clone();
            p_norm_sq = p.dot(&p);
            if p_norm_sq == 0.0 {
                // True stationary point; nothing can move. Let the stop
                // checks handle it on the next epoch.
                continue;
            }
        }
        if p.dot(&r) == 0.0 {
            // Direction orthogonal to the gradient would zero the step
            // size and poison the comparison parameter; restart and
            // re-estimate curvature next epoch.
            p = r.clone();
            success = true;
            continue;
        }

        if success {
            // Hessian-vector product along p from a one-sided gradient
            // difference.
            let sigma_k = SIGMA / p_norm_sq.sqrt();
            let probe = model.params() + &(&p * sigma_k);
            let mut probe_model = model.clone();
            probe_model.set_params(probe.view())?;
            let grad_probe = probe_model.gradient(train_set)?;
            ensure_finite_vec(&grad_probe, epoch, "gradient")?;
            let s = (&grad_probe - &grad) / sigma_k;
            delta = p.dot(&s);
        }

        delta += (lambda - lambda_bar) * p_norm_sq;
        if delta <= 0.0 {
            // Force the scaled Hessian estimate positive definite.
            lambda_bar = 2.0 * (lambda - delta / p_norm_sq);
            delta = -delta + lambda * p_norm_sq;
            lambda = lambda_bar;
        }

        let mu = p.dot(&r);
        let alpha = mu / delta;
        let candidate = model.params() + &(&p * alpha);
        let mut cand_model = model.clone();
        cand_model.set_params(candidate.view())?;
        let cand_cost = cand_model.cost(train_set)?;
        ensure_finite(cand_cost, epoch, "cost")?;
        let comparison = 2.0 * delta * (train_cost - cand_cost) / (mu * mu);

        if comparison >= 0.0 {
            // Accepted: the step reduced (or matched) the train cost.
            model = cand_model;
            train_cost = cand_cost;
            let grad_new = model.gradient(train_set)?;
            ensure_finite_vec(&grad_new, epoch, "gradient")?;
            let r_new = -grad_new.clone();
            lambda_bar = 0.0;
            success = true;
            if epoch % n_params == 0 {
                p = r_new.clone();
            } else {
                let beta = (r_new.dot(&r_new) - r_new.dot(&r)) / mu;
                p = &r_new + &(&p * beta);
            }
            r = r_new;
            grad = grad_new;
            if comparison >= 0.75 {
                lambda *= 0.25;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if comparison < 0.25 {
            lambda += delta * (1.0 - comparison) / p_norm_sq;
        }
    }

    let stop_reason = stop.unwrap_or(StopReason::MaxEpochs);
    model.set_params(best_params.view())?;
    Ok((
        model,
        TrainHistory {
            epochs: history,
            stop_reason,
            best_epoch,
        },
    ))
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn ensure_finite(v: f64, epoch: usize, what: &'static str) -> Result<(), TrainError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(TrainError::NonFinite { epoch, what })
    }
}

fn ensure_finite_vec(v: &Array1<f64>, epoch: usize, what: &'static str) -> Result<(), TrainError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(TrainError::NonFinite { epoch, what })
    }
}
