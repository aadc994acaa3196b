//! Synthetic two-class cutout generator.
//!
//! Stands in for the private histology archive: each class is a smoothed
//! value-noise texture whose spatial frequency and intensity histogram
//! shift with `class_contrast`. At zero contrast the classes are
//! identically distributed; at full contrast a threshold on the mean
//! spatial-gradient magnitude separates them, giving tests a closed-form
//! ground truth. Generation is deterministic in the seed, with per-cutout
//! derived streams so cases can be produced in parallel.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{preprocess, Case, CaseSet, Cutout, DatasetError, Label, RawCutout};

/// Coarse noise cells along one edge at zero contrast; the texture scale
/// stays proportional to the cutout size.
const BASE_CELL_DIVISOR: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthParams {
    /// Cases generated for each class.
    pub cases_per_class: usize,
    /// Inclusive range of cutouts per case.
    pub cutouts_per_case: (usize, usize),
    pub side: usize,
    /// 0 = identically distributed classes, 1 = cleanly separable.
    pub class_contrast: f64,
    /// Standard deviation of additive pixel noise, in intensity units.
    pub noise_sd: f64,
    /// Prepended to every case id so separately generated sets can keep
    /// disjoint ids (e.g. a training set and a test set).
    pub id_prefix: String,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            cases_per_class: 10,
            cutouts_per_case: (3, 7),
            side: 64,
            class_contrast: 1.0,
            noise_sd: 0.02,
            id_prefix: String::new(),
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.cases_per_class == 0 {
            return Err(SynthError::InvalidParams("cases_per_class must be >= 1"));
        }
        if !matches!(self.side, 64 | 128 | 256) {
            return Err(SynthError::InvalidParams("side must be 64, 128 or 256"));
        }
        if !(0.0..=1.0).contains(&self.class_contrast) {
            return Err(SynthError::InvalidParams("class_contrast must be in [0, 1]"));
        }
        if self.cutouts_per_case.0 < 1 || self.cutouts_per_case.0 > self.cutouts_per_case.1 {
            return Err(SynthError::InvalidParams("cutouts_per_case range is empty"));
        }
        if self.noise_sd < 0.0 {
            return Err(SynthError::InvalidParams("noise_sd must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis parameters: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

struct RawCase {
    case_id: String,
    label: Label,
    images: Vec<Vec<u8>>,
}

fn class_tag(label: Label) -> u64 {
    match label {
        Label::Dysplastic => 0,
        Label::NonDysplastic => 1,
    }
}

fn generate_raw(params: &SynthParams) -> Vec<RawCase> {
    let mut specs = Vec::new();
    for label in [Label::Dysplastic, Label::NonDysplastic] {
        for case_idx in 0..params.cases_per_class {
            specs.push((label, case_idx));
        }
    }
    specs
        .into_par_iter()
        .map(|(label, case_idx)| {
            let prefix = match label {
                Label::Dysplastic => "dys",
                Label::NonDysplastic => "non",
            };
            let mut case_rng =
                crate::seed::rng_for(params.seed, &[class_tag(label), case_idx as u64]);
            let count =
                case_rng.random_range(params.cutouts_per_case.0..=params.cutouts_per_case.1);
            let images = (0..count)
                .map(|cutout_idx| {
                    texture(
                        params,
                        label,
                        crate::seed::derive_seed(
                            params.seed,
                            &[class_tag(label), case_idx as u64, cutout_idx as u64],
                        ),
                    )
                })
                .collect();
            RawCase {
                case_id: format!("{}{prefix}-{case_idx:03}", params.id_prefix),
                label,
                images,
            }
        })
        .collect()
}

/// One quantized grayscale texture for the given class.
fn texture(params: &SynthParams, label: Label, seed: u64) -> Vec<u8> {
    let side = params.side;
    let base_cells = side / BASE_CELL_DIVISOR;
    let (cells, gamma) = match label {
        Label::NonDysplastic => (base_cells, 1.0),
        Label::Dysplastic => (
            ((base_cells as f64) * (1.0 + params.class_contrast)).round() as usize,
            1.0 + 2.0 * params.class_contrast,
        ),
    };
    let mut rng = crate::seed::rng_for(seed, &[]);
    let grid: Vec<f64> = (0..(cells + 1) * (cells + 1))
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    let noise = if params.noise_sd > 0.0 {
        Some(Normal::new(0.0, params.noise_sd).expect("valid noise sd"))
    } else {
        None
    };

    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let gy = r as f64 * cells as f64 / side as f64;
            let gx = c as f64 * cells as f64 / side as f64;
            let (i0, j0) = (gy.floor() as usize, gx.floor() as usize);
            let (fy, fx) = (gy - i0 as f64, gx - j0 as f64);
            let at = |i: usize, j: usize| grid[i * (cells + 1) + j];
            let v = at(i0, j0) * (1.0 - fy) * (1.0 - fx)
                + at(i0, j0 + 1) * (1.0 - fy) * fx
                + at(i0 + 1, j0) * fy * (1.0 - fx)
                + at(i0 + 1, j0 + 1) * fy * fx;
            let mut v = v.powf(gamma);
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

/// Generates a preprocessed case set. The raw quantized textures flow
/// through the same grayscale/normalize path as images loaded from disk,
/// so [`write_manifest`] followed by a manifest load reproduces this
/// case set exactly.
pub fn generate(params: &SynthParams) -> Result<CaseSet, SynthError> {
    params.validate()?;
    let cases = generate_raw(params)
        .into_iter()
        .map(|raw| {
            let cutouts: Vec<Cutout> = raw
                .images
                .iter()
                .map(|gray| {
                    let pixels = gray.iter().map(|&v| [v, v, v]).collect();
                    let rc = RawCutout::new(
                        pixels,
                        params.side,
                        params.side,
                        raw.case_id.clone(),
                        raw.label,
                    )
                    .expect("generated images are square");
                    preprocess(&rc)
                })
                .collect();
            Case {
                case_id: raw.case_id,
                label: raw.label,
                cutouts,
            }
        })
        .collect();
    Ok(CaseSet::new(cases)?)
}

/// Writes the generated cutouts as PNG files plus a manifest consumable
/// by the dataset loader. Returns the manifest path.
pub fn write_manifest(params: &SynthParams, dir: &Path) -> Result<PathBuf, SynthError> {
    params.validate()?;
    std::fs::create_dir_all(dir).map_err(|source| SynthError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for raw in generate_raw(params) {
        let mut files = Vec::new();
        for (i, gray) in raw.images.iter().enumerate() {
            let name = format!("{}_{i}.png", raw.case_id);
            let path = dir.join(&name);
            let img = image::GrayImage::from_raw(
                params.side as u32,
                params.side as u32,
                gray.clone(),
            )
            .expect("buffer matches dimensions");
            img.save(&path).map_err(|source| SynthError::Write {
                path: path.clone(),
                source,
            })?;
            files.push(name);
        }
        entries.push(serde_json::json!({
            "case_id": raw.case_id,
            "label": match raw.label {
                Label::Dysplastic => "dysplastic",
                Label::NonDysplastic => "non_dysplastic",
            },
            "cutouts": files,
        }));
    }
    let manifest = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&entries).expect("valid JSON");
    std::fs::write(&manifest, body).map_err(|source| SynthError::Io {
        path: manifest.clone(),
        source,
    })?;
    Ok(manifest)
}

/// Mean absolute intensity step between horizontally and vertically
/// adjacent pixels. Dysplastic textures run at a higher spatial frequency,
/// so this statistic separates the classes at high contrast; tests use it
/// as the generator's ground-truth discriminant.
pub fn mean_gradient_magnitude(c: &Cutout) -> f64 {
    let n = c.side;
    let px = |r: usize, col: usize| c.pixels[r * n + col];
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..n {
        for col in 0..n {
            if col + 1 < n {
                total += (px(r, col + 1) - px(r, col)).abs();
                count += 1;
            }
            if r + 1 < n {
                total += (px(r + 1, col) - px(r, col)).abs();
                count += 1;
            }
        }
    }
    total / count as f64
}
