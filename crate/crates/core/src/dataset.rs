//! Case manifests, cutout images and preprocessing.
//!
//! A *cutout* is a square patch extracted from a stained-tissue image; a
//! *case* is one patient specimen owning one or more cutouts that all share
//! the case's diagnosis. Preprocessing converts RGB to grayscale, rescales
//! each cutout to the unit interval with per-cutout min-max normalization,
//! and (for training data only) augments with the three 90° rotations.
//!
//! The preprocessing order is normalize-then-rotate; for rotations by
//! multiples of 90° the order does not change the result.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ground-truth class of a cutout or case. `Dysplastic` is the positive
/// class throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Dysplastic,
    NonDysplastic,
}

impl Label {
    /// One-hot target for the two-output network: dysplastic is index 0.
    pub fn one_hot(self) -> [f64; 2] {
        match self {
            Label::Dysplastic => [1.0, 0.0],
            Label::NonDysplastic => [0.0, 1.0],
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Dysplastic => write!(f, "dysplastic"),
            Label::NonDysplastic => write!(f, "non_dysplastic"),
        }
    }
}

/// Rotation applied to a cutout during augmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg = match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        };
        write!(f, "r{deg}")
    }
}

/// A raw square RGB cutout as decoded from disk, before preprocessing.
#[derive(Clone, Debug)]
pub struct RawCutout {
    /// Row-major RGB triples, `width * height` entries.
    pub pixels: Vec<[u8; 3]>,
    pub width: usize,
    pub height: usize,
    pub case_id: String,
    pub label: Label,
}

impl RawCutout {
    pub fn new(
        pixels: Vec<[u8; 3]>,
        width: usize,
        height: usize,
        case_id: impl Into<String>,
        label: Label,
    ) -> Result<Self, DatasetError> {
        if width != height {
            return Err(DatasetError::NotSquare { width, height });
        }
        if pixels.len() != width * height {
            return Err(DatasetError::PixelCount {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(RawCutout {
            pixels,
            width,
            height,
            case_id: case_id.into(),
            label,
        })
    }
}

/// A preprocessed cutout: unit-interval intensities, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutout {
    pub pixels: Vec<f64>,
    pub side: usize,
    pub case_id: String,
    pub label: Label,
    pub rotation: Rotation,
}

impl Cutout {
    /// Row-major input vector of length `side * side`. This ordering is
    /// fixed: serialized models index inputs by it.
    pub fn flatten(&self) -> &[f64] {
        &self.pixels
    }

    /// Number of classifier inputs this cutout produces.
    pub fn input_width(&self) -> usize {
        self.side * self.side
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }
}

/// One patient specimen: a diagnosis plus its cutouts.
#[derive(Clone, Debug)]
pub struct Case {
    pub case_id: String,
    pub label: Label,
    pub cutouts: Vec<Cutout>,
}

/// An immutable collection of cases with unique ids.
#[derive(Clone, Debug, Default)]
pub struct CaseSet {
    cases: Vec<Case>,
}

impl CaseSet {
    /// Builds a case set, enforcing unique case ids, at least one cutout
    /// per case, and label agreement between each case and its cutouts.
    pub fn new(cases: Vec<Case>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for case in &cases {
            if !seen.insert(case.case_id.clone()) {
                return Err(DatasetError::DuplicateCase {
                    case_id: case.case_id.clone(),
                });
            }
            if case.cutouts.is_empty() {
                return Err(DatasetError::EmptyCase {
                    case_id: case.case_id.clone(),
                });
            }
            for c in &case.cutouts {
                if c.label != case.label || c.case_id != case.case_id {
                    return Err(DatasetError::CutoutMismatch {
                        case_id: case.case_id.clone(),
                    });
                }
            }
        }
        Ok(CaseSet { cases })
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn total_cutouts(&self) -> usize {
        self.cases.iter().map(|c| c.cutouts.len()).sum()
    }

    /// All cutouts across cases, in case order.
    pub fn all_cutouts(&self) -> impl Iterator<Item = &Cutout> {
        self.cases.iter().flat_map(|c| c.cutouts.iter())
    }

    pub fn case_ids(&self) -> impl Iterator<Item = &str> {
        self.cases.iter().map(|c| c.case_id.as_str())
    }

    /// Case set containing every case except the one at `index`.
    pub fn without_case(&self, index: usize) -> CaseSet {
        let cases = self
            .cases
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != index)
            .map(|(_, c)| c.clone())
            .collect();
        CaseSet { cases }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("manifest {path}: {source}")]
    ManifestIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: malformed JSON: {source}")]
    ManifestParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate case id `{case_id}`")]
    DuplicateCase { case_id: String },
    #[error("case `{case_id}` has no cutouts")]
    EmptyCase { case_id: String },
    #[error("case `{case_id}` has cutouts with mismatched label or id")]
    CutoutMismatch { case_id: String },
    #[error("image {path} (case `{case_id}`): {source}")]
    ImageLoad {
        case_id: String,
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(
        "image {path} (case `{case_id}`) is {width}x{height}, expected {side}x{side}"
    )]
    DimensionMismatch {
        case_id: String,
        path: PathBuf,
        width: usize,
        height: usize,
        side: usize,
    },
    #[error("cutout is {width}x{height}, expected a square image")]
    NotSquare { width: usize, height: usize },
    #[error("pixel buffer holds {got} pixels, expected {expected}")]
    PixelCount { expected: usize, got: usize },
}

impl DatasetError {
    /// True when the underlying cause is a file missing on disk, as
    /// opposed to malformed content.
    pub fn is_missing_file(&self) -> bool {
        match self {
            DatasetError::ManifestIo { source, .. } => {
                source.kind() == std::io::ErrorKind::NotFound
            }
            DatasetError::ImageLoad { source, .. } => matches!(
                source,
                image::ImageError::IoError(io) if io.kind() == std::io::ErrorKind::NotFound
            ),
            _ => false,
        }
    }
}

/// One entry of the JSON manifest.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestCase {
    pub case_id: String,
    pub label: Label,
    pub cutouts: Vec<PathBuf>,
}

/// Loads a manifest and its referenced images, preprocessing every cutout
/// (grayscale then unit-range normalization, no augmentation).
///
/// The manifest is a UTF-8 JSON list of
/// `{ "case_id", "label": "dysplastic"|"non_dysplastic", "cutouts": [...] }`
/// with image paths relative to the manifest file. PNG and binary PGM/PPM
/// images are accepted; every image must be `side`x`side`.
pub fn load_manifest(path: &Path, side: usize) -> Result<CaseSet, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::ManifestIo {
        path: path.to_path_buf(),
        source,
    })?;
    let entries: Vec<ManifestCase> =
        serde_json::from_str(&text).map_err(|source| DatasetError::ManifestParse {
            path: path.to_path_buf(),
            source,
        })?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut cases = Vec::with_capacity(entries.len());
    for entry in &entries {
        let mut cutouts = Vec::with_capacity(entry.cutouts.len());
        for rel in &entry.cutouts {
            let img_path = base.join(rel);
            let raw = load_image(&img_path, &entry.case_id, entry.label, side)?;
            cutouts.push(preprocess(&raw));
        }
        cases.push(Case {
            case_id: entry.case_id.clone(),
            label: entry.label,
            cutouts,
        });
    }
    CaseSet::new(cases)
}

fn load_image(
    path: &Path,
    case_id: &str,
    label: Label,
    side: usize,
) -> Result<RawCutout, DatasetError> {
    let img = image::open(path).map_err(|source| DatasetError::ImageLoad {
        case_id: case_id.to_string(),
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = img.to_rgb8();
    let (width, height) = (rgb.width() as usize, rgb.height() as usize);
    if width != side || height != side {
        return Err(DatasetError::DimensionMismatch {
            case_id: case_id.to_string(),
            path: path.to_path_buf(),
            width,
            height,
            side,
        });
    }
    let pixels = rgb.pixels().map(|p| [p[0], p[1], p[2]]).collect();
    RawCutout::new(pixels, width, height, case_id, label)
}

/// Loads and preprocesses a single standalone image into a classifier
/// input vector (row-major, length `side * side`).
pub fn load_input_vector(path: &Path, side: usize) -> Result<Vec<f64>, DatasetError> {
    let raw = load_image(path, "<standalone>", Label::NonDysplastic, side)?;
    Ok(preprocess(&raw).pixels)
}

/// Grayscale then normalize; rotation stays `R0`.
pub fn preprocess(raw: &RawCutout) -> Cutout {
    let gray = to_grayscale(raw);
    Cutout {
        pixels: normalize(&gray),
        side: raw.width,
        case_id: raw.case_id.clone(),
        label: raw.label,
        rotation: Rotation::R0,
    }
}

/// Per-pixel Rec. 601 luma: `round(0.299 R + 0.587 G + 0.114 B)`,
/// rounded half away from zero. Channel-equal pixels map to themselves.
pub fn to_grayscale(raw: &RawCutout) -> Vec<u8> {
    raw.pixels
        .iter()
        .map(|&[r, g, b]| {
            let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
            y.round() as u8
        })
        .collect()
}

/// Per-cutout min-max scaling to `[0, 1]`. A constant image maps to all
/// zeros rather than dividing by zero.
pub fn normalize(gray: &[u8]) -> Vec<f64> {
    let min = gray.iter().copied().min().unwrap_or(0);
    let max = gray.iter().copied().max().unwrap_or(0);
    if max == min {
        return vec![0.0; gray.len()];
    }
    let span = f64::from(max) - f64::from(min);
    gray.iter()
        .map(|&v| (f64::from(v) - f64::from(min)) / span)
        .collect()
}

/// The four rotation variants of a cutout, in order R0, R90, R180, R270.
///
/// R90 maps pixel `(r, c)` to `(c, side - 1 - r)`; labels and case id are
/// preserved.
pub fn augment_rotations(c: &Cutout) -> Vec<Cutout> {
    Rotation::ALL.iter().map(|&rot| rotate(c, rot)).collect()
}

/// Rotates a cutout by the given multiple of 90°.
pub fn rotate(c: &Cutout, rotation: Rotation) -> Cutout {
    let n = c.side;
    let mut pixels = vec![0.0; n * n];
    for r in 0..n {
        for col in 0..n {
            let v = c.at(r, col);
            let (nr, nc) = match rotation {
                Rotation::R0 => (r, col),
                Rotation::R90 => (col, n - 1 - r),
                Rotation::R180 => (n - 1 - r, n - 1 - col),
                Rotation::R270 => (n - 1 - col, r),
            };
            pixels[nr * n + nc] = v;
        }
    }
    Cutout {
        pixels,
        side: n,
        case_id: c.case_id.clone(),
        label: c.label,
        rotation,
    }
}
