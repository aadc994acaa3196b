//! Experiment configuration: JSON schema, validation, and the resolved
//! form echoed into every run summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use epiclass::dataset::Label;
use epiclass::decision::LossPair;
use epiclass::metrics::DSource;
use epiclass::nnet::MlpStructure;
use epiclass::scg::{SplitFractions, TrainOptions};
use epiclass::synth::SynthParams;

use crate::CliError;

/// Loss weights as they appear in config files: `lambda_12` prices a
/// false positive, `lambda_21` a false negative.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_12: f64,
    pub lambda_21: f64,
}

impl LossConfig {
    pub fn to_losses(self) -> Result<LossPair, CliError> {
        LossPair::new(self.lambda_12, self.lambda_21)
            .map_err(|e| CliError::Config(format!("losses: {e}")))
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_patience: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitFractions>,
}

impl TrainConfig {
    /// Fills unset fields with the protocol defaults; `seed` is always the
    /// resolved master seed.
    pub fn to_options(&self, master_seed: u64) -> TrainOptions {
        let d = TrainOptions::default();
        TrainOptions {
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            val_patience: self.val_patience.unwrap_or(d.val_patience),
            split: self.split.unwrap_or(d.split),
            seed: master_seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoutHoldoutConfig {
    pub per_class_train: usize,
    pub per_class_test: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub cases_per_class: usize,
    /// Inclusive [min, max] cutouts per case.
    pub cutouts_per_case: [usize; 2],
    pub side: usize,
    pub class_contrast: f64,
    pub noise_sd: f64,
    /// Case-id prefix, for generating sets with disjoint ids.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub id_prefix: String,
}

impl SynthConfig {
    pub fn to_params(&self, seed: u64) -> SynthParams {
        SynthParams {
            cases_per_class: self.cases_per_class,
            cutouts_per_case: (self.cutouts_per_case[0], self.cutouts_per_case[1]),
            side: self.side,
            class_contrast: self.class_contrast,
            noise_sd: self.noise_sd,
            id_prefix: self.id_prefix.clone(),
            seed,
        }
    }
}

/// The experiment config file. Individual commands require different
/// subsets of these fields.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<MlpStructure>,
    /// Alternative to `structure` for the flops table: several rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structures: Option<Vec<MlpStructure>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub losses: Option<LossConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_options: Option<TrainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_source: Option<DSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutout_holdout: Option<CutoutHoldoutConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::MissingInput(format!("config file {}: not found", path.display()))
            } else {
                CliError::Exec(format!("config file {}: {e}", path.display()))
            }
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }

    pub fn require_structure(&self) -> Result<MlpStructure, CliError> {
        let s = self
            .structure
            .clone()
            .ok_or_else(|| CliError::Config("config is missing `structure`".into()))?;
        s.validate()
            .map_err(|e| CliError::Config(format!("structure: {e}")))?;
        Ok(s)
    }

    pub fn require_manifest(&self) -> Result<&Path, CliError> {
        self.manifest
            .as_deref()
            .ok_or_else(|| CliError::Config("config is missing `manifest`".into()))
    }

    pub fn require_test_manifest(&self) -> Result<&Path, CliError> {
        self.test_manifest
            .as_deref()
            .ok_or_else(|| CliError::Config("config is missing `test_manifest`".into()))
    }

    /// The command name is authoritative; a conflicting `protocol` field
    /// is a schema violation.
    pub fn check_protocol(&self, expected: &str) -> Result<(), CliError> {
        match &self.protocol {
            Some(p) if p != expected => Err(CliError::Config(format!(
                "config protocol `{p}` does not match the `{expected}` command"
            ))),
            _ => Ok(()),
        }
    }

    pub fn losses_or_symmetric(&self, cli_losses: Option<(f64, f64)>) -> Result<LossPair, CliError> {
        if let Some((l12, l21)) = cli_losses {
            return LossPair::new(l12, l21)
                .map_err(|e| CliError::Config(format!("--losses: {e}")));
        }
        match self.losses {
            Some(lc) => lc.to_losses(),
            None => Ok(LossPair::symmetric()),
        }
    }
}

/// Side length implied by a network structure; manifest images must match.
pub fn side_for(structure: &MlpStructure) -> Result<usize, CliError> {
    let side = (structure.input_width as f64).sqrt().round() as usize;
    if side * side != structure.input_width {
        return Err(CliError::Config(format!(
            "input_width {} is not a square; cannot infer cutout side",
            structure.input_width
        )));
    }
    Ok(side)
}

/// Label as it appears in CSV/report output.
pub fn label_name(label: Label) -> &'static str {
    match label {
        Label::Dysplastic => "dysplastic",
        Label::NonDysplastic => "non_dysplastic",
    }
}
