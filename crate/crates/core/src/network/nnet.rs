//! The NNet text format used by the ACAS Xu network release.
//!
//! ```text
//! // comment lines
//! numLayers,inputSize,outputSize,maxLayerSize,
//! size_0,size_1,...,size_numLayers,
//! 0,
//! min_0,...,            (inputSize values)
//! max_0,...,            (inputSize values)
//! mean_0,...,           (inputSize + 1 values, the last one for outputs)
//! range_0,...,          (inputSize + 1 values)
//! then per layer: one line per weight row, then one line per bias
//! ```
//!
//! Hidden layers use ReLU and the last layer is linear.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{Activation, Layer, Network, Normalization};
use crate::error::ParseError;

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut inner = text.lines().enumerate().peekable();
        while inner
            .peek()
            .is_some_and(|(_, l)| l.trim_start().starts_with("//") || l.trim().is_empty())
        {
            inner.next();
        }
        Self { inner, last: 0 }
    }

    /// Next non-blank line as (1-based line number, tokens).
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let tokens: Vec<&str> = line.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
            if !tokens.is_empty() {
                return Ok((i + 1, tokens));
            }
        }
        Err(ParseError::UnexpectedEof {
            line: self.last + 1,
            what: what.to_string(),
        })
    }

    fn floats(&mut self, expected: usize, what: &str) -> Result<Vec<f64>, ParseError> {
        let (line, tokens) = self.next(what)?;
        if tokens.len() != expected {
            return Err(ParseError::SizeMismatch {
                line,
                expected,
                found: tokens.len(),
            });
        }
        tokens
            .iter()
            .map(|t| {
                t.parse::<f64>().map_err(|_| ParseError::NonNumeric {
                    line,
                    token: t.to_string(),
                })
            })
            .collect()
    }

    fn integers(&mut self, what: &str) -> Result<(usize, Vec<usize>), ParseError> {
        let (line, tokens) = self.next(what)?;
        let values = tokens
            .iter()
            .map(|t| {
                t.parse::<usize>().map_err(|_| ParseError::NonNumeric {
                    line,
                    token: t.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok((line, values))
    }
}

pub fn parse_nnet(text: &str) -> Result<Network, ParseError> {
    let mut lines = Lines::new(text);

    let (line, header) = lines.integers("header")?;
    if header.len() < 4 {
        return Err(ParseError::MalformedHeader {
            line,
            reason: format!("expected 4 header values, found {}", header.len()),
        });
    }
    let (num_layers, input_size, output_size) = (header[0], header[1], header[2]);
    if num_layers == 0 {
        return Err(ParseError::MalformedHeader {
            line,
            reason: "zero layers".into(),
        });
    }

    let (line, sizes) = lines.integers("layer sizes")?;
    if sizes.len() != num_layers + 1 {
        return Err(ParseError::SizeMismatch {
            line,
            expected: num_layers + 1,
            found: sizes.len(),
        });
    }
    if sizes[0] != input_size || sizes[num_layers] != output_size || sizes.contains(&0) {
        return Err(ParseError::MalformedHeader {
            line,
            reason: format!("layer sizes {sizes:?} disagree with input {input_size} / output {output_size}"),
        });
    }

    lines.next("symmetric flag")?;
    let input_mins = lines.floats(input_size, "input minima")?;
    let input_maxes = lines.floats(input_size, "input maxima")?;
    let means = lines.floats(input_size + 1, "means")?;
    let ranges = lines.floats(input_size + 1, "ranges")?;
    let range_line = lines.last;
    if ranges.iter().any(|r| r.is_nan() || *r <= 0.0) {
        return Err(ParseError::MalformedHeader {
            line: range_line,
            reason: "ranges must be positive".into(),
        });
    }

    let mut layers = Vec::with_capacity(num_layers);
    for k in 0..num_layers {
        let (rows, cols) = (sizes[k + 1], sizes[k]);
        let mut flat = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            flat.extend(lines.floats(cols, "weights")?);
        }
        let mut bias = Vec::with_capacity(rows);
        for _ in 0..rows {
            bias.extend(lines.floats(1, "biases")?);
        }
        let activation = if k + 1 == num_layers {
            Activation::Linear
        } else {
            Activation::Relu
        };
        layers.push(Layer {
            weights: DMatrix::from_row_slice(rows, cols, &flat),
            bias: DVector::from_vec(bias),
            activation,
        });
    }

    Ok(Network {
        layers,
        normalization: Some(Normalization {
            input_mins,
            input_maxes,
            means,
            ranges,
        }),
    })
}

/// Writes a network in NNet form with round-trip exact numbers. Networks
/// without normalization get unbounded clamps, zero means and unit ranges.
/// Per-layer activations are not representable; the reader assumes ReLU
/// everywhere but the last layer.
pub fn to_nnet(net: &Network) -> String {
    let n = net.input_dim();
    let default_norm = Normalization {
        input_mins: vec![f64::MIN; n],
        input_maxes: vec![f64::MAX; n],
        means: vec![0.0; n + 1],
        ranges: vec![1.0; n + 1],
    };
    let norm = net.normalization.as_ref().unwrap_or(&default_norm);
    let mut out = String::new();
    let sizes: Vec<usize> = std::iter::once(n).chain(net.layers.iter().map(Layer::width)).collect();
    let row = |values: &mut dyn Iterator<Item = String>| {
        let mut s = values.collect::<Vec<_>>().join(",");
        s.push_str(",\n");
        s
    };
    out.push_str("// written by lattice-reach\n");
    out.push_str(&row(&mut [
        net.layers.len(),
        n,
        net.output_dim(),
        sizes.iter().copied().max().unwrap_or(0),
    ]
    .iter()
    .map(ToString::to_string)));
    out.push_str(&row(&mut sizes.iter().map(ToString::to_string)));
    out.push_str("0,\n");
    for values in [&norm.input_mins, &norm.input_maxes, &norm.means, &norm.ranges] {
        out.push_str(&row(&mut values.iter().map(ToString::to_string)));
    }
    for layer in &net.layers {
        for r in layer.weights.row_iter() {
            out.push_str(&row(&mut r.iter().map(ToString::to_string)));
        }
        for b in layer.bias.iter() {
            let _ = writeln!(out, "{b},");
        }
    }
    out
}
