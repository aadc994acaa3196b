//! Classification toolkit for detecting dysplastic epithelium from square
//! image cutouts with a deliberately small multilayer perceptron.
//!
//! The pipeline is organized as a set of composable modules:
//!
//! - [`dataset`] — manifest loading and cutout preprocessing (grayscale,
//!   unit-range normalization, 90° rotation augmentation)
//! - [`nnet`] — feed-forward MLP (tanh hidden layers, softmax output),
//!   cost functions and exact backpropagated gradients
//! - [`scg`] — scaled conjugate gradient trainer with early stopping and
//!   a stratified 70/15/15 split
//! - [`decision`] — risk-weighted Bayes decision per cutout and majority
//!   vote per case
//! - [`metrics`] — confusion matrix, sensitivity/specificity/accuracy and
//!   the composite figure of merit D
//! - [`evaluation`] — experiment protocols: cutout-level holdout,
//!   case-level leave-one-out cross-validation, best-model selection by D
//! - [`complexity`] — FLOP estimates for a given network structure
//! - [`synth`] — seeded synthetic cutout generator with controllable
//!   class separability, used as a ground-truth oracle
//!
//! All randomness flows from explicit seeds; repeated runs with the same
//! seeds are bit-for-bit reproducible.

pub mod complexity;
pub mod dataset;
pub mod decision;
pub mod evaluation;
pub mod metrics;
pub mod nnet;
pub mod scg;
pub mod seed;
pub mod synth;

pub use complexity::{estimate_flops, CostEstimate};
pub use dataset::{Case, CaseSet, Cutout, DatasetError, Label, RawCutout, Rotation};
pub use decision::{classify_case, classify_cutout, CaseDiagnosis, DecisionError, LossPair};
pub use evaluation::{
    balance_cutouts, best_by_d, cutout_holdout_eval, loocv, train_realization, AggregateReport,
    EvalError, LoocvOutcome, RealizationResult,
};
pub use metrics::{
    d_from_confusion, figure_of_merit_d, rates, ConfusionMatrix, DSource, FigureOfMeritD,
    MetricsError, RateMetrics,
};
pub use nnet::{CostKind, MlpModel, MlpStructure, NnetError, Posterior, TrainingSet};
pub use scg::{
    split_data, train, SplitData, StopReason, TrainError, TrainHistory, TrainOptions,
};
pub use synth::{generate, SynthParams};
