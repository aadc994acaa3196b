//! Feed-forward MLP with tanh hidden layers and a softmax output pair.
//!
//! The network always has two outputs (dysplastic, non-dysplastic). All
//! arithmetic is in `f64`; the gradient is the exact derivative of the
//! selected cost, which lets the trainer use tight tolerances.
//!
//! Parameters flatten to a single vector in a fixed order — for each layer
//! from input to output: weight matrix in row-major order, then biases.
//! The serialized model format and the trainer's vector arithmetic both
//! rely on this ordering.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Cutout, Label};

/// Outputs are clamped to `[CE_CLAMP, 1]` before the cross-entropy log.
const CE_CLAMP: f64 = 1e-12;

/// Cost function minimized during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Mse,
    CrossEntropy,
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostKind::Mse => write!(f, "MSE"),
            CostKind::CrossEntropy => write!(f, "Cross-Entropy"),
        }
    }
}

/// Network shape: input width, hidden layer widths, and cost function.
/// The output layer is always two neurons wide.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpStructure {
    pub input_width: usize,
    pub hidden_layers: Vec<usize>,
    pub cost: CostKind,
}

/// Number of output classes; fixed by the binary diagnosis task.
pub const OUTPUT_WIDTH: usize = 2;

impl MlpStructure {
    pub fn new(
        input_width: usize,
        hidden_layers: Vec<usize>,
        cost: CostKind,
    ) -> Result<Self, NnetError> {
        let s = MlpStructure {
            input_width,
            hidden_layers,
            cost,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), NnetError> {
        if self.input_width == 0 {
            return Err(NnetError::InvalidStructure("input width must be >= 1"));
        }
        if self.hidden_layers.is_empty() {
            return Err(NnetError::InvalidStructure(
                "at least one hidden layer is required",
            ));
        }
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return Err(NnetError::InvalidStructure(
                "every hidden layer needs >= 1 neurons",
            ));
        }
        Ok(())
    }

    /// Layer widths from input through hidden to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_layers.len() + 2);
        w.push(self.input_width);
        w.extend_from_slice(&self.hidden_layers);
        w.push(OUTPUT_WIDTH);
        w
    }

    /// Total number of weights and biases.
    pub fn param_count(&self) -> usize {
        let widths = self.widths();
        widths
            .windows(2)
            .map(|pair| pair[0] * pair[1] + pair[1])
            .sum()
    }

    /// Compact descriptor, e.g. `(2/150/Cross-Entropy)` for two hidden
    /// layers of 150 neurons trained on cross-entropy.
    pub fn descriptor(&self) -> String {
        let widths: Vec<String> = self.hidden_layers.iter().map(|w| w.to_string()).collect();
        let nnphl = if widths.windows(2).all(|p| p[0] == p[1]) {
            widths[0].clone()
        } else {
            widths.join("-")
        };
        format!("({}/{}/{})", self.hidden_layers.len(), nnphl, self.cost)
    }
}

/// Class posterior estimated by the network. Components are non-negative
/// and sum to one within 1e-12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Posterior {
    p: [f64; 2],
}

impl Posterior {
    pub fn new(dysplastic: f64, non_dysplastic: f64) -> Result<Self, NnetError> {
        let ok = (0.0..=1.0).contains(&dysplastic)
            && (0.0..=1.0).contains(&non_dysplastic)
            && (dysplastic + non_dysplastic - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(NnetError::InvalidPosterior {
                dysplastic,
                non_dysplastic,
            });
        }
        Ok(Posterior {
            p: [dysplastic, non_dysplastic],
        })
    }

    /// P(dysplastic | x)
    pub fn dysplastic(&self) -> f64 {
        self.p[0]
    }

    /// P(non-dysplastic | x)
    pub fn non_dysplastic(&self) -> f64 {
        self.p[1]
    }
}

/// A batch of training vectors: inputs as columns, one-hot targets.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    /// `input_width x n`
    inputs: Array2<f64>,
    /// `2 x n`
    targets: Array2<f64>,
}

impl TrainingSet {
    pub fn from_pairs(pairs: &[(Vec<f64>, [f64; 2])]) -> Result<Self, NnetError> {
        if pairs.is_empty() {
            return Err(NnetError::EmptyBatch);
        }
        let width = pairs[0].0.len();
        if pairs.iter().any(|(x, _)| x.len() != width) {
            return Err(NnetError::DimensionMismatch {
                expected: width,
                got: pairs.iter().map(|(x, _)| x.len()).find(|&l| l != width).unwrap(),
            });
        }
        let n = pairs.len();
        let mut inputs = Array2::zeros((width, n));
        let mut targets = Array2::zeros((2, n));
        for (j, (x, t)) in pairs.iter().enumerate() {
            for (i, &v) in x.iter().enumerate() {
                inputs[(i, j)] = v;
            }
            targets[(0, j)] = t[0];
            targets[(1, j)] = t[1];
        }
        Ok(TrainingSet { inputs, targets })
    }

    /// Builds a batch from preprocessed cutouts, one-hot encoding each
    /// cutout's label.
    pub fn from_cutouts<'a, I>(cutouts: I) -> Result<Self, NnetError>
    where
        I: IntoIterator<Item = &'a Cutout>,
    {
        let cutouts: Vec<&Cutout> = cutouts.into_iter().collect();
        if cutouts.is_empty() {
            return Err(NnetError::EmptyBatch);
        }
        let width = cutouts[0].input_width();
        let n = cutouts.len();
        let mut inputs = Array2::zeros((width, n));
        let mut targets = Array2::zeros((2, n));
        for (j, c) in cutouts.iter().enumerate() {
            if c.input_width() != width {
                return Err(NnetError::DimensionMismatch {
                    expected: width,
                    got: c.input_width(),
                });
            }
            for (i, &v) in c.flatten().iter().enumerate() {
                inputs[(i, j)] = v;
            }
            let t = c.label.one_hot();
            targets[(0, j)] = t[0];
            targets[(1, j)] = t[1];
        }
        Ok(TrainingSet { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_width(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn labels(&self) -> Vec<Label> {
        (0..self.len())
            .map(|j| {
                if self.targets[(0, j)] >= self.targets[(1, j)] {
                    Label::Dysplastic
                } else {
                    Label::NonDysplastic
                }
            })
            .collect()
    }
}

/// The classifier: structure plus per-layer weights and biases.
#[derive(Clone, Debug)]
pub struct MlpModel {
    structure: MlpStructure,
    /// One `fan_out x fan_in` matrix per layer, input side first.
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    seed: u64,
}

#[derive(Debug, Error)]
pub enum NnetError {
    #[error("invalid structure: {0}")]
    InvalidStructure(&'static str),
    #[error("input has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("posterior ({dysplastic}, {non_dysplastic}) is not a probability pair")]
    InvalidPosterior { dysplastic: f64, non_dysplastic: f64 },
    #[error("parameter vector has {got} entries, expected {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("model file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u16),
    #[error("model file is corrupt: {0}")]
    Corrupt(&'static str),
    #[error("non-finite parameter encountered")]
    NonFinite,
}

impl MlpModel {
    /// Initializes weights uniformly on `[-r, r]` with
    /// `r = sqrt(6 / (fan_in + fan_out))` per layer and zero biases.
    /// Deterministic: the same `(structure, seed)` yields bit-identical
    /// models.
    pub fn init(structure: MlpStructure, seed: u64) -> Result<Self, NnetError> {
        structure.validate()?;
        let mut rng = crate::seed::rng_for(seed, &[]);
        let widths = structure.widths();
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = rand::distr::Uniform::new_inclusive(-r, r)
                .expect("uniform bounds are finite");
            let data: Vec<f64> = (0..fan_out * fan_in)
                .map(|_| rand::Rng::sample(&mut rng, dist))
                .collect();
            weights.push(
                Array2::from_shape_vec((fan_out, fan_in), data).expect("shape matches data"),
            );
            biases.push(Array1::zeros(fan_out));
        }
        Ok(MlpModel {
            structure,
            weights,
            biases,
            seed,
        })
    }

    pub fn structure(&self) -> &MlpStructure {
        &self.structure
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.structure.param_count()
    }

    /// Flattened parameters: per layer, row-major weights then biases.
    pub fn params(&self) -> Array1<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        Array1::from_vec(out)
    }

    /// Replaces all parameters from a flat vector in the documented order.
    pub fn set_params(&mut self, params: ArrayView1<f64>) -> Result<(), NnetError> {
        if params.len() != self.param_count() {
            return Err(NnetError::ParamCount {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = params[offset];
                offset += 1;
            }
            for v in b.iter_mut() {
                *v = params[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    /// Posterior for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Posterior, NnetError> {
        if x.len() != self.structure.input_width {
            return Err(NnetError::DimensionMismatch {
                expected: self.structure.input_width,
                got: x.len(),
            });
        }
        let input = Array2::from_shape_vec((x.len(), 1), x.to_vec()).expect("column vector");
        let p = self.forward_batch(&input);
        Ok(Posterior {
            p: [p[(0, 0)], p[(1, 0)]],
        })
    }

    /// Posteriors for a whole batch (columns are samples); `2 x n`.
    pub fn posteriors(&self, set: &TrainingSet) -> Result<Array2<f64>, NnetError> {
        self.check_width(set)?;
        Ok(self.forward_batch(&set.inputs))
    }

    fn check_width(&self, set: &TrainingSet) -> Result<(), NnetError> {
        if set.input_width() != self.structure.input_width {
            return Err(NnetError::DimensionMismatch {
                expected: self.structure.input_width,
                got: set.input_width(),
            });
        }
        Ok(())
    }

    fn forward_batch(&self, inputs: &Array2<f64>) -> Array2<f64> {
        let mut a = inputs.clone();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.dot(&a);
            z += &b.view().insert_axis(Axis(1));
            a = if l == last { softmax_columns(&z) } else { z.mapv(f64::tanh) };
        }
        a
    }

    /// Forward pass retaining every layer's activations (for backprop).
    /// `activations[0]` is the input; the last entry is the posterior
    /// matrix.
    fn forward_trace(&self, inputs: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(inputs.clone());
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.dot(activations.last().expect("nonempty"));
            z += &b.view().insert_axis(Axis(1));
            let a = if l == last { softmax_columns(&z) } else { z.mapv(f64::tanh) };
            activations.push(a);
        }
        activations
    }

    /// Mean cost of the batch under the structure's cost function.
    ///
    /// MSE averages squared residuals over batch *and* outputs;
    /// cross-entropy averages `-Σ t ln p` over the batch with `p` clamped
    /// to `[1e-12, 1]` before the log.
    pub fn cost(&self, set: &TrainingSet) -> Result<f64, NnetError> {
        self.check_width(set)?;
        let p = self.forward_batch(&set.inputs);
        let n = set.len() as f64;
        let value = match self.structure.cost {
            CostKind::Mse => {
                let diff = &p - &set.targets;
                diff.mapv(|d| d * d).sum() / (n * OUTPUT_WIDTH as f64)
            }
            CostKind::CrossEntropy => {
                let mut total = 0.0;
                for (pv, tv) in p.iter().zip(set.targets.iter()) {
                    if *tv != 0.0 {
                        total -= tv * pv.clamp(CE_CLAMP, 1.0).ln();
                    }
                }
                total / n
            }
        };
        Ok(value)
    }

    /// Exact gradient of [`MlpModel::cost`] with respect to every
    /// parameter, flattened in the documented order.
    pub fn gradient(&self, set: &TrainingSet) -> Result<Array1<f64>, NnetError> {
        self.check_width(set)?;
        let activations = self.forward_trace(&set.inputs);
        let n = set.len() as f64;
        let p = activations.last().expect("output activations");

        // Cost derivative w.r.t. the softmax outputs.
        let grad_p = match self.structure.cost {
            CostKind::Mse => (p - &set.targets).mapv(|d| d / n),
            CostKind::CrossEntropy => {
                let mut g = Array2::zeros(p.raw_dim());
                for ((idx, pv), tv) in p.indexed_iter().zip(set.targets.iter()) {
                    // Clamped outputs contribute a constant to the cost.
                    if *tv != 0.0 && *pv >= CE_CLAMP {
                        g[idx] = -tv / (pv * n);
                    }
                }
                g
            }
        };

        // Pull back through the softmax Jacobian, column by column:
        // dJ/dz_j = p_j * (dJ/dp_j - Σ_k dJ/dp_k p_k)
        let weighted = (&grad_p * p).sum_axis(Axis(0));
        let mut delta = grad_p;
        for (mut col, (pcol, s)) in delta
            .axis_iter_mut(Axis(1))
            .zip(p.axis_iter(Axis(1)).zip(weighted.iter()))
        {
            for (d, pv) in col.iter_mut().zip(pcol.iter()) {
                *d = pv * (*d - s);
            }
        }

        // Walk the layers backwards accumulating flat gradients.
        let mut grads_w: Vec<Array2<f64>> = Vec::with_capacity(self.weights.len());
        let mut grads_b: Vec<Array1<f64>> = Vec::with_capacity(self.weights.len());
        for l in (0..self.weights.len()).rev() {
            grads_w.push(delta.dot(&activations[l].t()));
            grads_b.push(delta.sum_axis(Axis(1)));
            if l > 0 {
                let back = self.weights[l].t().dot(&delta);
                delta = back * &activations[l].mapv(|a| 1.0 - a * a);
            }
        }
        grads_w.reverse();
        grads_b.reverse();

        let mut flat = Vec::with_capacity(self.param_count());
        for (gw, gb) in grads_w.iter().zip(&grads_b) {
            flat.extend(gw.iter().copied());
            flat.extend(gb.iter().copied());
        }
        Ok(Array1::from_vec(flat))
    }

    pub fn save(&self, path: &Path) -> Result<(), NnetError> {
        let file = std::fs::File::create(path)?;
        self.write_to(&mut std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self, NnetError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(&mut std::io::BufReader::new(file))
    }

    /// Serializes as a versioned little-endian binary stream: magic,
    /// version, structure descriptor, seed, then all parameters as 64-bit
    /// floats in the flat order. Round-trips are bit-exact.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), NnetError> {
        w.write_all(MODEL_MAGIC)?;
        w.write_u16::<LittleEndian>(MODEL_VERSION)?;
        w.write_u8(match self.structure.cost {
            CostKind::Mse => 0,
            CostKind::CrossEntropy => 1,
        })?;
        w.write_u64::<LittleEndian>(self.structure.input_width as u64)?;
        w.write_u16::<LittleEndian>(self.structure.hidden_layers.len() as u16)?;
        for &h in &self.structure.hidden_layers {
            w.write_u64::<LittleEndian>(h as u64)?;
        }
        w.write_u64::<LittleEndian>(OUTPUT_WIDTH as u64)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        w.write_u64::<LittleEndian>(self.param_count() as u64)?;
        for (weights, biases) in self.weights.iter().zip(&self.biases) {
            for &v in weights.iter() {
                w.write_f64::<LittleEndian>(v)?;
            }
            for &v in biases.iter() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, NnetError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(NnetError::BadMagic);
        }
        let version = r.read_u16::<LittleEndian>()?;
        if version != MODEL_VERSION {
            return Err(NnetError::UnsupportedVersion(version));
        }
        let cost = match r.read_u8()? {
            0 => CostKind::Mse,
            1 => CostKind::CrossEntropy,
            _ => return Err(NnetError::Corrupt("unknown cost function tag")),
        };
        let input_width = r.read_u64::<LittleEndian>()? as usize;
        let n_hidden = r.read_u16::<LittleEndian>()? as usize;
        let mut hidden_layers = Vec::with_capacity(n_hidden);
        for _ in 0..n_hidden {
            hidden_layers.push(r.read_u64::<LittleEndian>()? as usize);
        }
        if r.read_u64::<LittleEndian>()? as usize != OUTPUT_WIDTH {
            return Err(NnetError::Corrupt("unexpected output width"));
        }
        let seed = r.read_u64::<LittleEndian>()?;
        let structure = MlpStructure::new(input_width, hidden_layers, cost)?;
        let declared = r.read_u64::<LittleEndian>()? as usize;
        if declared != structure.param_count() {
            return Err(NnetError::Corrupt("parameter count does not match shape"));
        }
        let widths = structure.widths();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let mut wdata = vec![0.0; fan_out * fan_in];
            r.read_f64_into::<LittleEndian>(&mut wdata)?;
            let mut bdata = vec![0.0; fan_out];
            r.read_f64_into::<LittleEndian>(&mut bdata)?;
            if wdata.iter().chain(&bdata).any(|v| !v.is_finite()) {
                return Err(NnetError::NonFinite);
            }
            weights
                .push(Array2::from_shape_vec((fan_out, fan_in), wdata).expect("shape matches"));
            biases.push(Array1::from_vec(bdata));
        }
        Ok(MlpModel {
            structure,
            weights,
            biases,
            seed,
        })
    }
}

const MODEL_MAGIC: &[u8; 4] = b"EMLP";
const MODEL_VERSION: u16 = 1;

/// Column-wise stabilized softmax: the max logit is subtracted before
/// exponentiation so magnitudes up to several hundred stay finite.
fn softmax_columns(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let m = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in col.iter_mut() {
            *v = (*v - m).exp();
            sum += *v;
        }
        for v in col.iter_mut() {
            *v /= sum;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy_structure(cost: CostKind) -> MlpStructure {
        MlpStructure::new(2, vec![2], cost).unwrap()
    }

    /// Hand-set two-layer toy net used by the forward oracle test.
    fn toy_model(cost: CostKind) -> MlpModel {
        let mut m = MlpModel::init(toy_structure(cost), 0).unwrap();
        #[rustfmt::skip]
        let params = [
            0.3, -0.2,   // W1 row 0
            0.1,  0.4,   // W1 row 1
            0.05, -0.1,  // b1
            0.7, -0.3,   // W2 row 0
            -0.5, 0.6,   // W2 row 1
            0.2, -0.2,   // b2
        ];
        m.set_params(Array1::from_vec(params.to_vec()).view()).unwrap();
        m
    }

    #[test]
    fn init_is_deterministic() {
        let s = MlpStructure::new(5, vec![4, 3], CostKind::Mse).unwrap();
        let a = MlpModel::init(s.clone(), 99).unwrap();
        let b = MlpModel::init(s, 99).unwrap();
        let pa = a.params();
        let pb = b.params();
        assert!(pa.iter().zip(pb.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn init_shapes_chain() {
        let s = MlpStructure::new(65536, vec![50, 50], CostKind::CrossEntropy).unwrap();
        let m = MlpModel::init(s, 1).unwrap();
        assert_eq!(m.weights[0].dim(), (50, 65536));
        assert_eq!(m.weights[1].dim(), (50, 50));
        assert_eq!(m.weights[2].dim(), (2, 50));
        assert_eq!(m.param_count(), 65536 * 50 + 50 + 50 * 50 + 50 + 50 * 2 + 2);
    }

    #[test]
    fn init_weights_close_to_zero_mean() {
        // 100x100 layer: r = sqrt(6/200), sd = r/sqrt(3), standard error
        // of the mean over 10_000 draws is sd/100.
        let s = MlpStructure::new(100, vec![100], CostKind::Mse).unwrap();
        let m = MlpModel::init(s, 7).unwrap();
        let w = &m.weights[0];
        let mean = w.sum() / w.len() as f64;
        let r = (6.0f64 / 200.0).sqrt();
        let se = r / 3.0f64.sqrt() / 100.0;
        assert!(mean.abs() < 3.0 * se, "mean {mean} exceeds 3 SE {se}");
    }

    #[test]
    fn forward_zero_weights_gives_even_posterior() {
        let s = toy_structure(CostKind::Mse);
        let mut m = MlpModel::init(s, 3).unwrap();
        m.set_params(Array1::zeros(m.param_count()).view()).unwrap();
        let p = m.forward(&[0.4, -0.9]).unwrap();
        assert_eq!(p.dysplastic(), 0.5);
        assert_eq!(p.non_dysplastic(), 0.5);
    }

    #[test]
    fn forward_single_neuron_zero_activation() {
        // 1 input, 1 hidden neuron (w=1, b=0), output weights (1, -1):
        // x=0 gives tanh(0)=0, logits (0,0), posterior (0.5, 0.5).
        let s = MlpStructure::new(1, vec![1], CostKind::Mse).unwrap();
        let mut m = MlpModel::init(s, 0).unwrap();
        m.set_params(Array1::from_vec(vec![1.0, 0.0, 1.0, -1.0, 0.0, 0.0]).view())
            .unwrap();
        let p = m.forward(&[0.0]).unwrap();
        assert_eq!(p.dysplastic(), 0.5);
    }

    #[test]
    fn forward_matches_hand_computed_oracle() {
        // Expected values computed independently with IEEE-754 doubles:
        // a1 = tanh([0.25, -0.15]), z2 = W2 a1 + b2, p = softmax(z2).
        let m = toy_model(CostKind::Mse);
        let p = m.forward(&[0.5, -0.25]).unwrap();
        assert_abs_diff_eq!(p.dysplastic(), 0.69591048539937406, epsilon = 1e-12);
        assert_abs_diff_eq!(p.non_dysplastic(), 0.30408951460062594, epsilon = 1e-12);
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let m = toy_model(CostKind::Mse);
        assert!(matches!(
            m.forward(&[1.0]),
            Err(NnetError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn cost_examples() {
        // Even posterior (zero weights) against a one-hot target:
        // CE = ln 2, MSE = ((0.5)^2 + (0.5)^2) / 2 = 0.25.
        let set = TrainingSet::from_pairs(&[(vec![0.1, 0.2], [1.0, 0.0])]).unwrap();
        for (cost, expected) in [
            (CostKind::CrossEntropy, std::f64::consts::LN_2),
            (CostKind::Mse, 0.25),
        ] {
            let mut m = MlpModel::init(toy_structure(cost), 0).unwrap();
            m.set_params(Array1::zeros(m.param_count()).view()).unwrap();
            assert_abs_diff_eq!(m.cost(&set).unwrap(), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn cost_zero_for_perfect_predictions_mse() {
        // Drive the hidden activation to saturation and use huge output
        // weights so the posterior is numerically exactly (1, 0).
        let s = MlpStructure::new(1, vec![1], CostKind::Mse).unwrap();
        let mut m = MlpModel::init(s, 0).unwrap();
        m.set_params(Array1::from_vec(vec![1.0, 5.0, 400.0, -400.0, 0.0, 0.0]).view())
            .unwrap();
        let set = TrainingSet::from_pairs(&[(vec![1.0], [1.0, 0.0])]).unwrap();
        assert_eq!(m.cost(&set).unwrap(), 0.0);
    }

    #[test]
    fn gradient_zero_at_symmetric_stationary_point() {
        // All-zero parameters with a label-balanced batch on one input is a
        // stationary point for both costs.
        let set = TrainingSet::from_pairs(&[
            (vec![0.3, -0.7], [1.0, 0.0]),
            (vec![0.3, -0.7], [0.0, 1.0]),
        ])
        .unwrap();
        for cost in [CostKind::Mse, CostKind::CrossEntropy] {
            let mut m = MlpModel::init(toy_structure(cost), 0).unwrap();
            m.set_params(Array1::zeros(m.param_count()).view()).unwrap();
            let g = m.gradient(&set).unwrap();
            let norm = g.dot(&g).sqrt();
            assert!(norm < 1e-8, "gradient norm {norm}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_toy() {
        for cost in [CostKind::Mse, CostKind::CrossEntropy] {
            let s = MlpStructure::new(3, vec![4, 3], cost).unwrap();
            let m = MlpModel::init(s, 11).unwrap();
            let set = TrainingSet::from_pairs(&[
                (vec![0.2, -0.4, 0.9], [1.0, 0.0]),
                (vec![-0.5, 0.3, 0.1], [0.0, 1.0]),
                (vec![0.8, 0.8, -0.2], [1.0, 0.0]),
            ])
            .unwrap();
            let analytic = m.gradient(&set).unwrap();
            let numeric = finite_difference_gradient(&m, &set, 1e-5);
            let max_rel = analytic
                .iter()
                .zip(numeric.iter())
                .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-8))
                .fold(0.0, f64::max);
            assert!(max_rel < 1e-6, "{cost:?}: max relative error {max_rel}");
        }
    }

    /// Central finite differences over the flat parameter vector; the
    /// independent oracle for gradient checks.
    pub(crate) fn finite_difference_gradient(
        model: &MlpModel,
        set: &TrainingSet,
        h: f64,
    ) -> Array1<f64> {
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

    #[test]
    fn gradient_mean_semantics_under_duplication() {
        let m = toy_model(CostKind::CrossEntropy);
        let single = TrainingSet::from_pairs(&[(vec![0.5, -0.25], [1.0, 0.0])]).unwrap();
        let doubled = TrainingSet::from_pairs(&[
            (vec![0.5, -0.25], [1.0, 0.0]),
            (vec![0.5, -0.25], [1.0, 0.0]),
        ])
        .unwrap();
        let g1 = m.gradient(&single).unwrap();
        let g2 = m.gradient(&doubled).unwrap();
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn gradient_partition_recombines() {
        let m = toy_model(CostKind::Mse);
        let all = TrainingSet::from_pairs(&[
            (vec![0.5, -0.25], [1.0, 0.0]),
            (vec![-0.1, 0.9], [0.0, 1.0]),
            (vec![0.7, 0.7], [1.0, 0.0]),
        ])
        .unwrap();
        let part_a = TrainingSet::from_pairs(&[
            (vec![0.5, -0.25], [1.0, 0.0]),
            (vec![-0.1, 0.9], [0.0, 1.0]),
        ])
        .unwrap();
        let part_b = TrainingSet::from_pairs(&[(vec![0.7, 0.7], [1.0, 0.0])]).unwrap();
        let g = m.gradient(&all).unwrap();
        let ga = m.gradient(&part_a).unwrap();
        let gb = m.gradient(&part_b).unwrap();
        let combined = (ga * 2.0 + gb) / 3.0;
        for (a, b) in g.iter().zip(combined.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn cost_is_nonnegative_for_random_models() {
        let set = TrainingSet::from_pairs(&[
            (vec![0.9, -0.3], [1.0, 0.0]),
            (vec![-0.7, 0.2], [0.0, 1.0]),
            (vec![0.1, 0.8], [1.0, 0.0]),
        ])
        .unwrap();
        for seed in 0..50 {
            for cost in [CostKind::Mse, CostKind::CrossEntropy] {
                let m = MlpModel::init(toy_structure(cost), seed).unwrap();
                assert!(m.cost(&set).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn softmax_extreme_logits_stay_normalized() {
        let z = Array2::from_shape_vec((2, 3), vec![500.0, -500.0, 0.0, -499.0, 499.5, 0.0])
            .unwrap();
        let p = softmax_columns(&z);
        for col in p.axis_iter(Axis(1)) {
            let sum: f64 = col.sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(col.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn serialization_round_trip_is_bit_exact() {
        let s = MlpStructure::new(6, vec![5, 4, 3], CostKind::CrossEntropy).unwrap();
        let m = MlpModel::init(s, 1234).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let restored = MlpModel::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(restored.structure(), m.structure());
        assert_eq!(restored.seed(), m.seed());
        let (a, b) = (m.params(), restored.params());
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn deserialization_rejects_garbage() {
        let garbage = b"not a model".to_vec();
        assert!(matches!(
            MlpModel::read_from(&mut garbage.as_slice()),
            Err(NnetError::BadMagic)
        ));
    }

    #[test]
    fn structure_descriptor_format() {
        let s = MlpStructure::new(65536, vec![150, 150, 150], CostKind::CrossEntropy).unwrap();
        assert_eq!(s.descriptor(), "(3/150/Cross-Entropy)");
        let s = MlpStructure::new(65536, vec![100, 100, 100, 100], CostKind::Mse).unwrap();
        assert_eq!(s.descriptor(), "(4/100/MSE)");
    }
}
