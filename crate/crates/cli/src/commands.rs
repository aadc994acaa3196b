//! Command implementations: each binds config fields to a pipeline in the
//! core library and writes its reports and artifacts under the output
//! directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use epiclass::complexity::{estimate_flops, format_flops};
use epiclass::dataset::{load_input_vector, load_manifest, CaseSet};
use epiclass::decision::{classify_cutout, LossPair};
use epiclass::evaluation::{
    best_by_d, cutout_holdout_eval, loocv, stage, train_realization, write_aggregate_csv,
    write_cases_csv, write_realizations_csv, EvalError,
};
use epiclass::metrics::DSource;
use epiclass::nnet::{CostKind, MlpModel, MlpStructure, NnetError};
use epiclass::scg::TrainOptions;
use epiclass::seed::derive_seed;
use epiclass::synth::write_manifest;

use crate::config::{side_for, ConfigFile, SynthConfig};
use crate::CliError;

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Exec(format!("cannot create output directory {}: {e}", out.display())))
}

fn open_report(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Exec(format!("cannot write {}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Exec(format!("writing {}: {e}", path.display()))
}

fn load_cases(path: &Path, side: usize) -> Result<CaseSet, CliError> {
    load_manifest(path, side).map_err(|e| {
        if e.is_missing_file() {
            CliError::MissingInput(e.to_string())
        } else {
            CliError::Exec(e.to_string())
        }
    })
}

fn map_eval(e: EvalError) -> CliError {
    CliError::Exec(e.to_string())
}

/// Everything a summary needs to re-execute the run.
#[derive(Serialize)]
struct RunSummary {
    command: String,
    out_dir: String,
    master_seed: u64,
    config: ConfigFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_options: Option<TrainOptions>,
    derived_seeds: serde_json::Value,
}

fn write_summary(out: &Path, summary: &RunSummary) -> Result<PathBuf, CliError> {
    let path = out.join("run_summary.json");
    let body = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Exec(format!("serializing run summary: {e}")))?;
    std::fs::write(&path, body).map_err(io_err(&path))?;
    Ok(path)
}

/// Resolved copy of the config echoed into the summary.
fn resolve_config(cfg: &ConfigFile, master_seed: u64, protocol: Option<&str>) -> ConfigFile {
    let mut resolved = cfg.clone();
    resolved.master_seed = Some(master_seed);
    if let Some(p) = protocol {
        resolved.protocol = Some(p.to_string());
    }
    resolved
}

fn realization_seed_entries(master: u64, n_realizations: usize) -> serde_json::Value {
    let folds: Vec<serde_json::Value> = (0..n_realizations as u64)
        .map(|r| {
            json!({
                "realization": r,
                "balance": derive_seed(master, &[r, stage::BALANCE]),
                "split": derive_seed(master, &[r, stage::SPLIT]),
                "init": derive_seed(master, &[r, stage::INIT]),
            })
        })
        .collect();
    json!({
        "scheme": "splitmix64 fold of (master_seed, realization, stage)",
        "folds": folds,
    })
}

fn loocv_seed_entries(master: u64, n_realizations: usize, n_cases: usize) -> serde_json::Value {
    let mut folds = Vec::with_capacity(n_realizations * n_cases);
    for r in 0..n_realizations as u64 {
        for i in 0..n_cases as u64 {
            folds.push(json!({
                "realization": r,
                "held_out_case": i,
                "balance": derive_seed(master, &[r, i, stage::BALANCE]),
                "split": derive_seed(master, &[r, i, stage::SPLIT]),
                "init": derive_seed(master, &[r, i, stage::INIT]),
            }));
        }
    }
    json!({
        "scheme": "splitmix64 fold of (master_seed, realization, held_out_case, stage)",
        "folds": folds,
    })
}

pub fn run_synth(cfg: &ConfigFile, out: &Path, master_seed: u64) -> Result<(), CliError> {
    let synth_cfg: &SynthConfig = cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Config("config is missing `synth`".into()))?;
    ensure_out_dir(out)?;
    let params = synth_cfg.to_params(master_seed);
    let manifest = write_manifest(&params, out).map_err(|e| CliError::Exec(e.to_string()))?;

    let summary = RunSummary {
        command: "synth".into(),
        out_dir: out.display().to_string(),
        master_seed,
        config: resolve_config(cfg, master_seed, None),
        train_options: None,
        derived_seeds: json!({
            "scheme": "splitmix64 fold of (master_seed, class, case, cutout)",
            "folds": [],
        }),
    };
    let summary_path = write_summary(out, &summary)?;
    println!("wrote {}", manifest.display());
    println!("wrote {}", summary_path.display());
    Ok(())
}

pub fn run_train(cfg: &ConfigFile, out: &Path, master_seed: u64) -> Result<(), CliError> {
    cfg.check_protocol("train")?;
    let structure = cfg.require_structure()?;
    let side = side_for(&structure)?;
    let cases = load_cases(cfg.require_manifest()?, side)?;
    let opts = cfg
        .train_options
        .clone()
        .unwrap_or_default()
        .to_options(master_seed);
    ensure_out_dir(out)?;

    let (model, history) =
        train_realization(&cases, &structure, &opts, 0).map_err(map_eval)?;

    let model_path = out.join("model.bin");
    model
        .save(&model_path)
        .map_err(|e| CliError::Exec(format!("saving model: {e}")))?;
    let log_path = out.join("training_log.csv");
    let mut w = open_report(&log_path)?;
    history.write_csv(&mut w).map_err(io_err(&log_path))?;
    w.flush().map_err(io_err(&log_path))?;

    let summary = RunSummary {
        command: "train".into(),
        out_dir: out.display().to_string(),
        master_seed,
        config: resolve_config(cfg, master_seed, Some("train")),
        train_options: Some(opts),
        derived_seeds: realization_seed_entries(master_seed, 1),
    };
    let summary_path = write_summary(out, &summary)?;
    println!(
        "trained {} epochs, stop reason {}, best epoch {}",
        history.epochs.len(),
        history.stop_reason,
        history.best_epoch + 1
    );
    println!("wrote {}", model_path.display());
    println!("wrote {}", log_path.display());
    println!("wrote {}", summary_path.display());
    Ok(())
}

pub fn run_loocv(
    cfg: &ConfigFile,
    out: &Path,
    master_seed: u64,
    cli_losses: Option<(f64, f64)>,
) -> Result<(), CliError> {
    cfg.check_protocol("loocv")?;
    let structure = cfg.require_structure()?;
    let side = side_for(&structure)?;
    let cases = load_cases(cfg.require_manifest()?, side)?;
    let losses = cfg.losses_or_symmetric(cli_losses)?;
    let n_realizations = cfg
        .n_realizations
        .ok_or_else(|| CliError::Config("config is missing `n_realizations`".into()))?;
    let d_source = cfg.d_source.unwrap_or(DSource::Rates);
    let opts = cfg
        .train_options
        .clone()
        .unwrap_or_default()
        .to_options(master_seed);
    ensure_out_dir(out)?;

    let outcome = loocv(&cases, &structure, &losses, &opts, n_realizations, d_source)
        .map_err(map_eval)?;

    let cases_path = out.join("cases.csv");
    let mut w = open_report(&cases_path)?;
    write_cases_csv(&outcome.realizations, &mut w).map_err(io_err(&cases_path))?;
    w.flush().map_err(io_err(&cases_path))?;

    let rel_path = out.join("realizations.csv");
    let mut w = open_report(&rel_path)?;
    write_realizations_csv(
        outcome
            .realizations
            .iter()
            .map(|r| (r.realization_index, &r.confusion, &r.rates, &r.merit)),
        &mut w,
    )
    .map_err(io_err(&rel_path))?;
    w.flush().map_err(io_err(&rel_path))?;

    let agg_path = out.join("aggregate.csv");
    let mut w = open_report(&agg_path)?;
    write_aggregate_csv(&outcome.aggregate, &mut w).map_err(io_err(&agg_path))?;
    w.flush().map_err(io_err(&agg_path))?;

    let summary = RunSummary {
        command: "loocv".into(),
        out_dir: out.display().to_string(),
        master_seed,
        config: resolve_config(cfg, master_seed, Some("loocv")),
        train_options: Some(opts),
        derived_seeds: loocv_seed_entries(master_seed, n_realizations, cases.len()),
    };
    let summary_path = write_summary(out, &summary)?;
    println!(
        "loocv: {} cases x {} realizations, mean accuracy {:.4} +/- {:.4}, mean D {:.4}",
        cases.len(),
        n_realizations,
        outcome.aggregate.mean_accuracy,
        outcome.aggregate.sd_accuracy,
        outcome.aggregate.mean_d
    );
    for p in [&cases_path, &rel_path, &agg_path, &summary_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn run_holdout(
    cfg: &ConfigFile,
    out: &Path,
    master_seed: u64,
    cli_losses: Option<(f64, f64)>,
) -> Result<(), CliError> {
    cfg.check_protocol("holdout")?;
    let structure = cfg.require_structure()?;
    let side = side_for(&structure)?;
    let train_cases = load_cases(cfg.require_manifest()?, side)?;
    let test_cases = load_cases(cfg.require_test_manifest()?, side)?;
    let losses = cfg.losses_or_symmetric(cli_losses)?;
    let n_realizations = cfg
        .n_realizations
        .ok_or_else(|| CliError::Config("config is missing `n_realizations`".into()))?;
    let d_source = cfg.d_source.unwrap_or(DSource::Rates);
    let opts = cfg
        .train_options
        .clone()
        .unwrap_or_default()
        .to_options(master_seed);
    ensure_out_dir(out)?;

    let outcome = best_by_d(
        &train_cases,
        &test_cases,
        &structure,
        &losses,
        &opts,
        n_realizations,
        d_source,
    )
    .map_err(map_eval)?;

    let model_path = out.join("best_model.bin");
    outcome
        .model
        .save(&model_path)
        .map_err(|e| CliError::Exec(format!("saving model: {e}")))?;

    let best_path = out.join("best_cases.csv");
    let mut w = open_report(&best_path)?;
    write_cases_csv(std::slice::from_ref(&outcome.best), &mut w).map_err(io_err(&best_path))?;
    w.flush().map_err(io_err(&best_path))?;

    let rel_path = out.join("realizations.csv");
    let mut w = open_report(&rel_path)?;
    write_realizations_csv(
        outcome
            .realizations
            .iter()
            .map(|r| (r.realization_index, &r.confusion, &r.rates, &r.merit)),
        &mut w,
    )
    .map_err(io_err(&rel_path))?;
    w.flush().map_err(io_err(&rel_path))?;

    let agg_path = out.join("aggregate.csv");
    let mut w = open_report(&agg_path)?;
    write_aggregate_csv(&outcome.aggregate, &mut w).map_err(io_err(&agg_path))?;
    w.flush().map_err(io_err(&agg_path))?;

    let summary = RunSummary {
        command: "holdout".into(),
        out_dir: out.display().to_string(),
        master_seed,
        config: resolve_config(cfg, master_seed, Some("holdout")),
        train_options: Some(opts),
        derived_seeds: realization_seed_entries(master_seed, n_realizations),
    };
    let summary_path = write_summary(out, &summary)?;
    println!(
        "holdout: best realization {} with D {:.4} (test accuracy {:.4})",
        outcome.best.realization_index,
        outcome.best.merit.d,
        outcome.best.rates.accuracy
    );
    for p in [&model_path, &best_path, &rel_path, &agg_path, &summary_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn run_cutout_holdout(cfg: &ConfigFile, out: &Path, master_seed: u64) -> Result<(), CliError> {
    cfg.check_protocol("cutout_holdout")?;
    let structure = cfg.require_structure()?;
    let side = side_for(&structure)?;
    let train_pool: Vec<_> = load_cases(cfg.require_manifest()?, side)?
        .all_cutouts()
        .cloned()
        .collect();
    let test_pool: Vec<_> = load_cases(cfg.require_test_manifest()?, side)?
        .all_cutouts()
        .cloned()
        .collect();
    let sizes = cfg
        .cutout_holdout
        .ok_or_else(|| CliError::Config("config is missing `cutout_holdout`".into()))?;
    let n_realizations = cfg
        .n_realizations
        .ok_or_else(|| CliError::Config("config is missing `n_realizations`".into()))?;
    let d_source = cfg.d_source.unwrap_or(DSource::Rates);
    let opts = cfg
        .train_options
        .clone()
        .unwrap_or_default()
        .to_options(master_seed);
    ensure_out_dir(out)?;

    let outcome = cutout_holdout_eval(
        &train_pool,
        &test_pool,
        &structure,
        &opts,
        n_realizations,
        sizes.per_class_train,
        sizes.per_class_test,
        d_source,
    )
    .map_err(map_eval)?;

    let rel_path = out.join("realizations.csv");
    let mut w = open_report(&rel_path)?;
    write_realizations_csv(
        outcome
            .realizations
            .iter()
            .map(|r| (r.realization_index, &r.confusion, &r.rates, &r.merit)),
        &mut w,
    )
    .map_err(io_err(&rel_path))?;
    w.flush().map_err(io_err(&rel_path))?;

    let agg_path = out.join("aggregate.csv");
    let mut w = open_report(&agg_path)?;
    write_aggregate_csv(&outcome.aggregate, &mut w).map_err(io_err(&agg_path))?;
    w.flush().map_err(io_err(&agg_path))?;

    let summary = RunSummary {
        command: "cutout-holdout".into(),
        out_dir: out.display().to_string(),
        master_seed,
        config: resolve_config(cfg, master_seed, Some("cutout_holdout")),
        train_options: Some(opts),
        derived_seeds: realization_seed_entries(master_seed, n_realizations),
    };
    let summary_path = write_summary(out, &summary)?;
    println!(
        "cutout-holdout: {} realizations, mean accuracy {:.4} +/- {:.4}",
        n_realizations, outcome.aggregate.mean_accuracy, outcome.aggregate.sd_accuracy
    );
    for p in [&rel_path, &agg_path, &summary_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn run_classify(
    model_path: &Path,
    image_path: &Path,
    cli_losses: Option<(f64, f64)>,
) -> Result<(), CliError> {
    let model = MlpModel::load(model_path).map_err(|e| match &e {
        NnetError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            CliError::MissingInput(format!("model file {}: not found", model_path.display()))
        }
        _ => CliError::Exec(format!("loading model: {e}")),
    })?;
    let side = side_for(model.structure())?;
    let losses = match cli_losses {
        Some((l12, l21)) => {
            LossPair::new(l12, l21).map_err(|e| CliError::Config(format!("--losses: {e}")))?
        }
        None => LossPair::symmetric(),
    };
    let x = load_input_vector(image_path, side).map_err(|e| {
        if e.is_missing_file() {
            CliError::MissingInput(e.to_string())
        } else {
            CliError::Exec(e.to_string())
        }
    })?;
    let posterior = model
        .forward(&x)
        .map_err(|e| CliError::Exec(e.to_string()))?;
    let decision = classify_cutout(&posterior, &losses)
        .map_err(|e| CliError::Exec(e.to_string()))?;
    println!(
        "p_dysplastic={:.6} p_non_dysplastic={:.6} losses={},{} decision={}",
        posterior.dysplastic(),
        posterior.non_dysplastic(),
        losses.fp_loss,
        losses.fn_loss,
        crate::config::label_name(decision)
    );
    Ok(())
}

pub fn run_flops(
    cfg: Option<&ConfigFile>,
    input: Option<usize>,
    hidden: Option<Vec<usize>>,
    cost: Option<String>,
) -> Result<(), CliError> {
    let mut structures: Vec<MlpStructure> = Vec::new();
    if let (Some(input), Some(hidden)) = (input, hidden) {
        let cost = match cost.as_deref() {
            None | Some("cross_entropy") | Some("ce") => CostKind::CrossEntropy,
            Some("mse") => CostKind::Mse,
            Some(other) => {
                return Err(CliError::Config(format!("unknown cost function `{other}`")))
            }
        };
        structures.push(
            MlpStructure::new(input, hidden, cost)
                .map_err(|e| CliError::Config(e.to_string()))?,
        );
    } else if let Some(cfg) = cfg {
        if let Some(list) = &cfg.structures {
            structures.extend(list.iter().cloned());
        } else if let Some(s) = &cfg.structure {
            structures.push(s.clone());
        }
    }
    if structures.is_empty() {
        return Err(CliError::Config(
            "flops needs --input/--hidden or a config with `structure`/`structures`".into(),
        ));
    }
    for s in &structures {
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }

    println!(
        "{:<40}{}",
        "Structures (NHL/NNPHL/Cost function)", "Computational cost (FLOPs)"
    );
    for s in &structures {
        let est = estimate_flops(s);
        println!("{:<40}{}", s.descriptor(), format_flops(est.flops));
    }
    Ok(())
}

pub fn run_report(run_dir: &Path) -> Result<(), CliError> {
    let summary_path = run_dir.join("run_summary.json");
    let text = std::fs::read_to_string(&summary_path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingInput(format!("{}: not found", summary_path.display()))
        } else {
            CliError::Exec(format!("{}: {e}", summary_path.display()))
        }
    })?;
    let summary: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Exec(format!("{}: {e}", summary_path.display())))?;

    let command = summary["command"].as_str().unwrap_or("?");
    let master_seed = summary["master_seed"].as_u64().unwrap_or(0);
    let descriptor = summary["config"]["structure"]
        .clone()
        .as_object()
        .and_then(|_| {
            serde_json::from_value::<MlpStructure>(summary["config"]["structure"].clone()).ok()
        })
        .map(|s| s.descriptor())
        .unwrap_or_else(|| "-".into());

    println!("run: {command}   structure: {descriptor}   master seed: {master_seed}");

    let agg_path = run_dir.join("aggregate.csv");
    let agg = std::fs::read_to_string(&agg_path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingInput(format!(
                "{}: not found (report needs a completed evaluation run)",
                agg_path.display()
            ))
        } else {
            CliError::Exec(format!("{}: {e}", agg_path.display()))
        }
    })?;
    let mut lines = agg.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Exec("aggregate.csv is empty".into()))?
        .split(',')
        .collect();
    let values: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Exec("aggregate.csv has no data row".into()))?
        .split(',')
        .collect();
    let field = |name: &str| -> Result<f64, CliError> {
        header
            .iter()
            .position(|h| *h == name)
            .and_then(|i| values.get(i))
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| CliError::Exec(format!("aggregate.csv is missing `{name}`")))
    };

    println!(
        "accuracy: {:.4} +/- {:.4} (max {:.4})",
        field("mean_accuracy")?,
        field("sd_accuracy")?,
        field("max_accuracy")?
    );
    println!(
        "sensitivity: {:.2}%   specificity: {:.2}%   figure of merit D: {:.2}%",
        field("mean_sensitivity")? * 100.0,
        field("mean_specificity")? * 100.0,
        field("mean_d")? * 100.0
    );
    Ok(())
}
