//! Acceptance suite: one test per criterion, each printing a pass line
//! with the measured values. Tolerances are pinned in the assertions.
//!
//! Run with `cargo test -p epiclass-cli --test acceptance -- --nocapture`
//! to see the per-criterion detail lines.

use std::path::Path;
use std::process::Command;

use epiclass::dataset::{augment_rotations, Cutout, Label, Rotation};
use epiclass::decision::LossPair;
use epiclass::evaluation::{
    balanced_augmented_cutouts, decide_cases, fold_training_cutouts, loocv, loocv_posteriors,
};
use epiclass::metrics::{figure_of_merit_d, DSource};
use epiclass::nnet::{CostKind, MlpModel, MlpStructure, TrainingSet};
use epiclass::scg::{train, StopReason, TrainOptions};
use epiclass::synth::{generate, SynthParams};
use ndarray::Array1;
use rand::Rng;

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand_chacha::rand_core::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Criterion 1: the figure of merit reproduces every published D value
/// from the reference tables within ±0.05 percentage points.
#[test]
fn criterion_01_figure_of_merit_reproduction() {
    let rows = [
        (0.8125, 0.80, 90.31),   // structure 4
        (0.8125, 0.9333, 93.63), // structure 11
        (0.8125, 0.9333, 93.63), // structure 13
        (0.9375, 0.8667, 95.10), // pre-trained CNN
        (1.0, 0.80, 94.97),      // evaluator 1
        (1.0, 0.2667, 79.86),    // evaluator 2
        (1.0, 0.7334, 93.26),    // evaluator 3
    ];
    let mut worst = 0.0f64;
    for (se, sp, published) in rows {
        let d = figure_of_merit_d(se, sp).unwrap().d * 100.0;
        let err = (d - published).abs();
        worst = worst.max(err);
        assert!(
            err < 0.05,
            "D({se}, {sp}) = {d:.4}% vs published {published}% (err {err:.4} pp)"
        );
    }
    println!("criterion 01 PASS: 7/7 published D values reproduced, worst error {worst:.4} pp");
}

/// Criterion 2: FLOP estimates for the three reference structures fall
/// within ±0.5% of the published costs.
#[test]
fn criterion_02_flop_reproduction() {
    let rows = [
        (vec![50, 50], 6.58e6),
        (vec![100, 100, 100, 100], 13.20e6),
        (vec![150, 150, 150], 19.79e6),
    ];
    let mut worst = 0.0f64;
    for (hidden, published) in rows {
        let s = MlpStructure::new(65536, hidden.clone(), CostKind::CrossEntropy).unwrap();
        let flops = epiclass::complexity::estimate_flops(&s).flops as f64;
        let rel = (flops - published).abs() / published;
        worst = worst.max(rel);
        assert!(
            rel < 0.005,
            "structure {hidden:?}: {flops} vs published {published} ({:.3}% off)",
            rel * 100.0
        );
    }
    println!(
        "criterion 02 PASS: 3/3 reference FLOP counts within 0.5% (worst {:.3}%)",
        worst * 100.0
    );
}

/// Independent oracle: central finite differences over the flat
/// parameter vector.
fn fd_gradient(model: &MlpModel, set: &TrainingSet, h: f64) -> Array1<f64> {
    let base = model.params();
    let mut grad = Array1::zeros(base.len());
    let mut work = model.clone();
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        work.set_params(plus.view()).unwrap();
        let up = work.cost(set).unwrap();
        let mut minus = base.clone();
        minus[i] -= h;
        work.set_params(minus.view()).unwrap();
        let down = work.cost(set).unwrap();
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Criterion 3: analytic gradients match central finite differences with
/// max relative error below 1e-6 on 20 random toy structures covering
/// hidden depths 2..=5 and both cost functions.
#[test]
fn criterion_03_gradient_correctness() {
    let mut r = rng(0x6ead);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let depth = 2 + trial % 4; // 2, 3, 4, 5
        let cost = if trial % 2 == 0 { CostKind::Mse } else { CostKind::CrossEntropy };
        let input_width = r.random_range(2..=6);
        let hidden: Vec<usize> = (0..depth).map(|_| r.random_range(1..=20)).collect();
        let structure = MlpStructure::new(input_width, hidden.clone(), cost).unwrap();
        let model = MlpModel::init(structure, r.random()).unwrap();

        let pairs: Vec<(Vec<f64>, [f64; 2])> = (0..4)
            .map(|j| {
                let x: Vec<f64> = (0..input_width).map(|_| r.random_range(-1.0..1.0)).collect();
                let t = if j % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
                (x, t)
            })
            .collect();
        let set = TrainingSet::from_pairs(&pairs).unwrap();

        let analytic = model.gradient(&set).unwrap();
        let numeric = fd_gradient(&model, &set, 1e-5);
        // Scale floor 1e-3: components below it are compared absolutely
        // against 1e-9, two decades above the ~1e-11 rounding floor of
        // h=1e-5 central differences; everything larger is compared
        // relatively.
        let max_rel = analytic
            .iter()
            .zip(numeric.iter())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-3))
            .fold(0.0, f64::max);
        worst = worst.max(max_rel);
        assert!(
            max_rel < 1e-6,
            "trial {trial} ({cost:?}, depth {depth}, hidden {hidden:?}): max rel err {max_rel:e}"
        );
    }
    println!("criterion 03 PASS: 20/20 gradient checks, worst relative error {worst:.2e}");
}

/// Criterion 4: softmax posteriors stay normalized and finite for 10,000
/// random logit pairs with magnitudes up to 500.
#[test]
fn criterion_04_softmax_normalization() {
    // All-zero weights with hand-set output biases turn the forward pass
    // into softmax of an arbitrary logit pair.
    let structure = MlpStructure::new(1, vec![1], CostKind::Mse).unwrap();
    let mut model = MlpModel::init(structure, 0).unwrap();
    let mut r = rng(0x50f7);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let (l1, l2) = match i {
            0 => (500.0, -500.0),
            1 => (-500.0, 500.0),
            2 => (500.0, 500.0),
            _ => (r.random_range(-500.0..=500.0), r.random_range(-500.0..=500.0)),
        };
        model
            .set_params(Array1::from_vec(vec![0.0, 0.0, 0.0, 0.0, l1, l2]).view())
            .unwrap();
        let p = model.forward(&[0.0]).unwrap();
        assert!(p.dysplastic().is_finite() && p.non_dysplastic().is_finite());
        let err = (p.dysplastic() + p.non_dysplastic() - 1.0).abs();
        worst = worst.max(err);
        assert!(err <= 1e-12, "logits ({l1}, {l2}): sum error {err:e}");
    }
    println!("criterion 04 PASS: 10000/10000 posteriors normalized, worst sum error {worst:.2e}");
}

/// Criterion 5: with posteriors fixed from one synthetic LOOCV run,
/// raising the false-negative loss never lowers sensitivity and never
/// raises specificity.
#[test]
fn criterion_05_decision_monotonicity() {
    let params = SynthParams {
        cases_per_class: 4,
        cutouts_per_case: (3, 5),
        side: 64,
        class_contrast: 0.5,
        noise_sd: 0.05,
        id_prefix: String::new(),
        seed: 21,
    };
    let cases = generate(&params).unwrap();
    let structure = MlpStructure::new(4096, vec![8], CostKind::CrossEntropy).unwrap();
    let opts = TrainOptions {
        max_epochs: 200,
        seed: 21,
        ..TrainOptions::default()
    };
    let posteriors = loocv_posteriors(&cases, &structure, &opts, 1).unwrap();

    let mut last_se = f64::NEG_INFINITY;
    let mut last_sp = f64::INFINITY;
    let mut swept = Vec::new();
    for fn_loss in [1.0, 2.0, 4.0] {
        let losses = LossPair::new(1.0, fn_loss).unwrap();
        let result = decide_cases(&cases, &posteriors[0], &losses, 0, DSource::Rates).unwrap();
        swept.push((fn_loss, result.rates.sensitivity, result.rates.specificity));
        assert!(
            result.rates.sensitivity >= last_se,
            "sensitivity dropped when fn_loss rose to {fn_loss}: {swept:?}"
        );
        assert!(
            result.rates.specificity <= last_sp,
            "specificity rose when fn_loss rose to {fn_loss}: {swept:?}"
        );
        last_se = result.rates.sensitivity;
        last_sp = result.rates.specificity;
    }
    println!("criterion 05 PASS: lambda sweep (fn_loss, Se, Sp) = {swept:?}");
}

fn oracle_synth(contrast: f64) -> SynthParams {
    SynthParams {
        cases_per_class: 10,
        cutouts_per_case: (3, 7),
        side: 64,
        class_contrast: contrast,
        noise_sd: 0.02,
        id_prefix: String::new(),
        seed: 42,
    }
}

fn oracle_structure() -> MlpStructure {
    MlpStructure::new(4096, vec![20, 20], CostKind::CrossEntropy).unwrap()
}

/// Criterion 6: full end-to-end LOOCV on the separable synthetic oracle
/// reaches mean case accuracy >= 0.95, and every fold's training pool
/// verifiably excludes the held-out case.
#[test]
fn criterion_06_end_to_end_oracle() {
    let cases = generate(&oracle_synth(1.0)).unwrap();
    assert_eq!(cases.len(), 20);
    let opts = TrainOptions {
        seed: 42,
        ..TrainOptions::default()
    };
    let n_realizations = 5;

    // Identity audit: rebuild each fold's training pool and check the
    // held-out case never contributes a cutout.
    for r in 0..n_realizations {
        for i in 0..cases.len() {
            let pool = fold_training_cutouts(&cases, i, opts.seed, r).unwrap();
            let held_id = &cases.cases()[i].case_id;
            assert!(
                pool.iter().all(|c| &c.case_id != held_id),
                "realization {r}: held-out case {held_id} leaked into training"
            );
        }
    }

    let outcome = loocv(
        &cases,
        &oracle_structure(),
        &LossPair::symmetric(),
        &opts,
        n_realizations,
        DSource::Rates,
    )
    .unwrap();
    assert!(
        outcome.aggregate.mean_accuracy >= 0.95,
        "mean case accuracy {:.4} below 0.95",
        outcome.aggregate.mean_accuracy
    );
    println!(
        "criterion 06 PASS: mean accuracy {:.4} +/- {:.4} over {} realizations; \
         100 fold audits clean",
        outcome.aggregate.mean_accuracy, outcome.aggregate.sd_accuracy, n_realizations
    );
}

/// Criterion 7: the same protocol with zero class contrast scores at
/// chance level (mean accuracy within [0.35, 0.65]).
#[test]
fn criterion_07_null_separability_control() {
    let cases = generate(&oracle_synth(0.0)).unwrap();
    let opts = TrainOptions {
        seed: 42,
        ..TrainOptions::default()
    };
    let outcome = loocv(
        &cases,
        &oracle_structure(),
        &LossPair::symmetric(),
        &opts,
        5,
        DSource::Rates,
    )
    .unwrap();
    let acc = outcome.aggregate.mean_accuracy;
    assert!(
        (0.35..=0.65).contains(&acc),
        "mean accuracy {acc:.4} outside the chance band [0.35, 0.65]"
    );
    println!("criterion 07 PASS: null-contrast mean accuracy {acc:.4} within [0.35, 0.65]");
}

/// Criterion 8: constructed runs trigger each of the four stop reasons.
#[test]
fn criterion_08_early_stopping_protocol() {
    let mut reasons = Vec::new();

    // MaxEpochs: a one-epoch budget stops immediately.
    let pairs = [
        (vec![0.9, 0.1], [1.0, 0.0]),
        (vec![0.1, 0.9], [0.0, 1.0]),
    ];
    let set = TrainingSet::from_pairs(&pairs).unwrap();
    let structure = MlpStructure::new(2, vec![3], CostKind::Mse).unwrap();
    let model = MlpModel::init(structure, 1).unwrap();
    let opts = TrainOptions {
        max_epochs: 1,
        ..TrainOptions::default()
    };
    let (_, h) = train(model, &set, &set, &opts).unwrap();
    assert_eq!(h.stop_reason, StopReason::MaxEpochs);
    assert_eq!(h.epochs.len(), 1);
    reasons.push(h.stop_reason);

    // GradientTol: start at a pre-converged stationary point (all-zero
    // parameters, label-balanced batch on one input -> exact zero
    // gradient while the cost stays ln 2).
    let structure = MlpStructure::new(2, vec![2], CostKind::CrossEntropy).unwrap();
    let mut model = MlpModel::init(structure, 2).unwrap();
    model.set_params(Array1::zeros(model.param_count()).view()).unwrap();
    let balanced = TrainingSet::from_pairs(&[
        (vec![0.4, -0.6], [1.0, 0.0]),
        (vec![0.4, -0.6], [0.0, 1.0]),
    ])
    .unwrap();
    let (_, h) = train(model, &balanced, &balanced, &TrainOptions::default()).unwrap();
    assert_eq!(h.stop_reason, StopReason::GradientTol);
    reasons.push(h.stop_reason);

    // ValidationPatience: train and validation carry opposite labels, so
    // every train improvement strictly raises the validation cost until
    // six consecutive increases trip the stop.
    let train_set = TrainingSet::from_pairs(&[(vec![1.0], [1.0, 0.0])]).unwrap();
    let val_set = TrainingSet::from_pairs(&[(vec![1.0], [0.0, 1.0])]).unwrap();
    let structure = MlpStructure::new(1, vec![2], CostKind::CrossEntropy).unwrap();
    let model = MlpModel::init(structure, 3).unwrap();
    let (_, h) = train(model, &train_set, &val_set, &TrainOptions::default()).unwrap();
    assert_eq!(h.stop_reason, StopReason::ValidationPatience);
    reasons.push(h.stop_reason);

    // ZeroError: a saturated net whose softmax underflows to exactly
    // (1, 0) has an exactly-zero MSE train cost.
    let structure = MlpStructure::new(1, vec![1], CostKind::Mse).unwrap();
    let mut model = MlpModel::init(structure, 4).unwrap();
    model
        .set_params(Array1::from_vec(vec![1.0, 5.0, 400.0, -400.0, 0.0, 0.0]).view())
        .unwrap();
    let set = TrainingSet::from_pairs(&[(vec![1.0], [1.0, 0.0])]).unwrap();
    let (_, h) = train(model, &set, &set, &TrainOptions::default()).unwrap();
    assert_eq!(h.stop_reason, StopReason::ZeroError);
    reasons.push(h.stop_reason);

    println!("criterion 08 PASS: stop reasons triggered in order {reasons:?}");
}

/// Criterion 9: two CLI runs with identical config and master seed write
/// byte-identical report files.
#[test]
fn criterion_09_cli_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| std::fs::write(dir.path().join(name), body).unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_epiclass"))
            .current_dir(dir.path())
            .args(args)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "{:?}: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
    };

    write(
        "synth.json",
        r#"{"synth": {"cases_per_class": 2, "cutouts_per_case": [3, 3], "side": 64,
                      "class_contrast": 1.0, "noise_sd": 0.02},
            "master_seed": 11}"#,
    );
    run(&["synth", "--config", "synth.json", "--out", "data"]);

    write(
        "exp.json",
        r#"{"structure": {"input_width": 4096, "hidden_layers": [6], "cost": "cross_entropy"},
            "losses": {"lambda_12": 1.0, "lambda_21": 1.0},
            "protocol": "loocv", "n_realizations": 2, "master_seed": 11,
            "manifest": "data/manifest.json",
            "train_options": {"max_epochs": 80}}"#,
    );

    let reports = ["cases.csv", "realizations.csv", "aggregate.csv", "run_summary.json"];
    let snapshot = |label: &str| -> Vec<(String, Vec<u8>)> {
        reports
            .iter()
            .map(|f| {
                let path = dir.path().join("run").join(f);
                (
                    f.to_string(),
                    std::fs::read(&path).unwrap_or_else(|_| panic!("{label}: missing {f}")),
                )
            })
            .collect()
    };

    run(&["loocv", "--config", "exp.json", "--out", "run"]);
    let first = snapshot("first run");
    run(&["loocv", "--config", "exp.json", "--out", "run"]);
    let second = snapshot("second run");

    for ((name, a), (_, b)) in first.iter().zip(&second) {
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    println!(
        "criterion 09 PASS: {} report files byte-identical across reruns",
        reports.len()
    );
}

/// Criterion 10: four quarter turns are the identity on 1,000 random
/// cutouts, and augmented training sets have exactly 4x cardinality.
#[test]
fn criterion_10_rotation_augmentation_algebra() {
    let mut r = rng(0xa0a0);
    for trial in 0..1_000 {
        let side = [3usize, 4, 5, 8][trial % 4];
        let pixels: Vec<f64> = (0..side * side).map(|_| r.random_range(0.0..=1.0)).collect();
        let cutout = Cutout {
            pixels: pixels.clone(),
            side,
            case_id: "p".into(),
            label: Label::Dysplastic,
            rotation: Rotation::R0,
        };
        let mut turned = cutout.clone();
        for _ in 0..4 {
            turned = epiclass::dataset::rotate(&turned, Rotation::R90);
        }
        assert_eq!(turned.pixels, pixels, "trial {trial}: R90^4 != identity");
        assert_eq!(augment_rotations(&cutout).len(), 4);
    }

    // Augmented training sets: balanced pool of 44 cutouts -> 176 vectors.
    let cases = generate(&SynthParams {
        cases_per_class: 11,
        cutouts_per_case: (2, 2),
        side: 64,
        class_contrast: 0.5,
        noise_sd: 0.02,
        id_prefix: String::new(),
        seed: 9,
    })
    .unwrap();
    let pool = balanced_augmented_cutouts(&cases, 1).unwrap();
    assert_eq!(pool.len(), cases.total_cutouts() * 4);
    assert_eq!(pool.len(), 176);
    println!("criterion 10 PASS: 1000 rotation identities verified; augmented pool is 4x (176)");
}
