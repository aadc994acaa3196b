//! Shared fixtures for the criterion benchmarks.

use epiclass::dataset::{Cutout, Label, Rotation};
use epiclass::nnet::{CostKind, MlpModel, MlpStructure, TrainingSet};

/// Deterministic pseudo-random pixel fill, cheap enough for setup code.
pub fn noise_pixels(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

pub fn synthetic_cutout(side: usize, seed: u64) -> Cutout {
    Cutout {
        pixels: noise_pixels(side * side, seed),
        side,
        case_id: format!("bench-{seed}"),
        label: if seed % 2 == 0 { Label::Dysplastic } else { Label::NonDysplastic },
        rotation: Rotation::R0,
    }
}

pub fn bench_model(input_width: usize, hidden: Vec<usize>) -> MlpModel {
    let structure = MlpStructure::new(input_width, hidden, CostKind::CrossEntropy)
        .expect("valid bench structure");
    MlpModel::init(structure, 7).expect("init succeeds")
}

pub fn bench_batch(input_width: usize, n: usize) -> TrainingSet {
    let side = (input_width as f64).sqrt() as usize;
    let cutouts: Vec<Cutout> = (0..n as u64).map(|i| synthetic_cutout(side, i)).collect();
    TrainingSet::from_cutouts(&cutouts).expect("nonempty batch")
}
