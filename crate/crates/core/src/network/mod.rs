//! Feed-forward network model and plain forward evaluation.

mod nnet;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nnet::{parse_nnet, to_nnet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.nrows() {
            return Err(Error::DimensionMismatch {
                context: "layer bias",
                expected: weights.nrows(),
                found: bias.len(),
            });
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::InvalidNetwork("empty weight matrix".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_width(&self) -> usize {
        self.weights.ncols()
    }

    pub fn width(&self) -> usize {
        self.weights.nrows()
    }
}

/// NNet normalization constants. `means` and `ranges` carry one extra entry
/// at the end that applies to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_mins: Vec<f64>,
    pub input_maxes: Vec<f64>,
    pub means: Vec<f64>,
    pub ranges: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    normalization: Option<Normalization>,
}

impl Network {
    pub fn new(layers: Vec<Layer>, normalization: Option<Normalization>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        };
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].input_width() != pair[0].width() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {} expects {} inputs but layer {} has {} outputs",
                    k + 1,
                    pair[1].input_width(),
                    k,
                    pair[0].width()
                )));
            }
        }
        if let Some(norm) = &normalization {
            let n = first.input_width();
            if norm.input_mins.len() != n || norm.input_maxes.len() != n {
                return Err(Error::InvalidNetwork("normalization bounds length".into()));
            }
            if norm.means.len() != n + 1 || norm.ranges.len() != n + 1 {
                return Err(Error::InvalidNetwork(
                    "normalization means/ranges need input_dim + 1 entries".into(),
                ));
            }
            if norm.ranges.iter().any(|r| r.is_nan() || *r <= 0.0) {
                return Err(Error::InvalidNetwork("normalization ranges must be positive".into()));
            }
        }
        Ok(Self { layers, normalization })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].width()
    }

    pub fn relu_neurons(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.activation == Activation::Relu)
            .map(Layer::width)
            .sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let mut h = DVector::from_column_slice(x);
        for layer in &self.layers {
            h = &layer.weights * h + &layer.bias;
            if layer.activation == Activation::Relu {
                h.apply(|v| *v = v.max(0.0));
            }
        }
        Ok(h.as_slice().to_vec())
    }

    /// Pre-activation values of every ReLU layer, in order.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let mut out = Vec::new();
        let mut h = DVector::from_column_slice(x);
        for layer in &self.layers {
            h = &layer.weights * h + &layer.bias;
            if layer.activation == Activation::Relu {
                out.push(h.as_slice().to_vec());
                h.apply(|v| *v = v.max(0.0));
            }
        }
        Ok(out)
    }

    /// Clamps to the input bounds, subtracts the mean and divides by the
    /// range. Identity without normalization constants.
    pub fn normalize_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let Some(norm) = &self.normalization else {
            return Ok(x.to_vec());
        };
        Ok(x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let clamped = v.max(norm.input_mins[i]).min(norm.input_maxes[i]);
                (clamped - norm.means[i]) / norm.ranges[i]
            })
            .collect())
    }

    /// Inverse of the mean/range step of [`Network::normalize_input`]
    /// (clamping is not undone).
    pub fn denormalize_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let Some(norm) = &self.normalization else {
            return Ok(x.to_vec());
        };
        Ok(x.iter()
            .enumerate()
            .map(|(i, &v)| v * norm.ranges[i] + norm.means[i])
            .collect())
    }

    /// Scales every output by the last range and shifts it by the last mean.
    pub fn denormalize_output(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "network output",
                expected: self.output_dim(),
                found: y.len(),
            });
        }
        let Some(norm) = &self.normalization else {
            return Ok(y.to_vec());
        };
        let (mean, range) = (norm.means[self.input_dim()], norm.ranges[self.input_dim()]);
        Ok(y.iter().map(|v| v * range + mean).collect())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Loads `.nnet` files as NNet text and anything else as JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Ok(parse_nnet(&text)?)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: NetworkJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkJson::from(self))?)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    layers: Vec<LayerJson>,
    #[serde(default)]
    normalization: Option<Normalization>,
}

impl From<&Network> for NetworkJson {
    fn from(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerJson {
                    weights: l.weights.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    bias: l.bias.iter().copied().collect(),
                    activation: l.activation,
                })
                .collect(),
            normalization: net.normalization.clone(),
        }
    }
}

impl TryFrom<NetworkJson> for Network {
    type Error = Error;

    fn try_from(raw: NetworkJson) -> Result<Self> {
        let layers = raw
            .layers
            .into_iter()
            .map(|l| {
                let cols = l.weights.first().map_or(0, Vec::len);
                if l.weights.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidNetwork("ragged weight matrix".into()));
                }
                let flat: Vec<f64> = l.weights.iter().flatten().copied().collect();
                Layer::new(
                    DMatrix::from_row_slice(l.weights.len(), cols, &flat),
                    DVector::from_vec(l.bias),
                    l.activation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(layers, raw.normalization)
    }
}
