//! FLOP estimates for MLP structures.
//!
//! The model is one multiply and one add per weight plus one add per bias;
//! activation functions are excluded. Published reference costs carry a
//! small unexplained surplus (about 0.2–0.3%), so comparisons use a ±0.5%
//! tolerance.

use serde::{Deserialize, Serialize};

use crate::nnet::MlpStructure;

/// Inference cost of one forward pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub flops: u64,
    pub weights: u64,
    pub biases: u64,
}

/// Counts weights and biases along the layer chain and prices a forward
/// pass at `2 * weights + biases` FLOPs.
pub fn estimate_flops(structure: &MlpStructure) -> CostEstimate {
    let widths = structure.widths();
    let weights: u64 = widths
        .windows(2)
        .map(|pair| (pair[0] * pair[1]) as u64)
        .sum();
    let biases: u64 = widths.iter().skip(1).map(|&w| w as u64).sum();
    CostEstimate {
        flops: 2 * weights + biases,
        weights,
        biases,
    }
}

/// Human-readable FLOP count with an engineering suffix, e.g. `6.56 M`.
pub fn format_flops(flops: u64) -> String {
    let f = flops as f64;
    if f >= 1e9 {
        format!("{:.2} G", f / 1e9)
    } else if f >= 1e6 {
        format!("{:.2} M", f / 1e6)
    } else if f >= 1e3 {
        format!("{:.2} k", f / 1e3)
    } else {
        format!("{flops}")
    }
}
