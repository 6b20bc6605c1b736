//! Brute-force references for checking the geometry engine on small inputs.
//!
//! [`enumerate_regions_lp`] walks activation patterns depth first and keeps
//! the ones whose sign constraints leave a full-dimensional piece of the box.
//! [`sample_check`] evaluates the network at random inputs and compares with
//! the affine map of the region containing each input.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::face_lattice::DEFAULT_EPS;
use crate::lp::{interior_depth, Inequality};
use crate::network::{Activation, Layer, Network};
use crate::reach::ReachResult;

/// Interior depth a pattern needs to count as full-dimensional.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// One bit vector per ReLU layer, `true` for an active neuron.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationPattern {
    pub layers: Vec<Vec<bool>>,
}

impl ActivationPattern {
    /// Same format as [`crate::reach::lineage_key`].
    pub fn key(&self) -> String {
        self.layers
            .iter()
            .map(|bits| bits.iter().map(|&b| if b { '+' } else { '-' }).collect::<String>())
            .collect::<Vec<_>>()
            .join("|")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRegion {
    pub pattern: ActivationPattern,
    pub map: DMatrix<f64>,
    pub shift: DVector<f64>,
    /// A point at depth at least [`FEASIBILITY_SLACK`] inside the region.
    pub interior_point: Vec<f64>,
}

struct Search<'a> {
    layers: &'a [Layer],
    lower: &'a [f64],
    upper: &'a [f64],
    cap: usize,
    out: Vec<OracleRegion>,
}

/// All activation patterns of `net` with a full-dimensional region inside the
/// box, with the composed affine map of each. A neuron whose pre-activation
/// is constant zero on the region counts as active. Fails with
/// [`Error::RegionCapExceeded`] past `cap` patterns.
pub fn enumerate_regions_lp(net: &Network, lower: &[f64], upper: &[f64], cap: usize) -> Result<Vec<OracleRegion>> {
    let n = net.input_dim();
    if lower.len() != n || upper.len() != n {
        return Err(Error::DimensionMismatch {
            context: "oracle box",
            expected: n,
            found: lower.len().max(upper.len()),
        });
    }
    if lower.iter().zip(upper).any(|(l, u)| l >= u || l.is_nan() || u.is_nan()) {
        return Err(Error::InvalidBox("oracle box must be full-dimensional".into()));
    }
    let mut search = Search {
        layers: net.layers(),
        lower,
        upper,
        cap,
        out: Vec::new(),
    };
    let (_, start) = interior_depth(&[], lower, upper)?;
    search.layer(
        0,
        DMatrix::identity(n, n),
        DVector::zeros(n),
        Vec::new(),
        Vec::new(),
        start,
    )?;
    Ok(search.out)
}

impl Search<'_> {
    fn layer(
        &mut self,
        k: usize,
        map: DMatrix<f64>,
        shift: DVector<f64>,
        constraints: Vec<Inequality>,
        pattern: Vec<Vec<bool>>,
        point: Vec<f64>,
    ) -> Result<()> {
        let Some(layer) = self.layers.get(k) else {
            if self.out.len() >= self.cap {
                return Err(Error::RegionCapExceeded { cap: self.cap });
            }
            self.out.push(OracleRegion {
                pattern: ActivationPattern { layers: pattern },
                map,
                shift,
                interior_point: point,
            });
            return Ok(());
        };
        let pre_map = layer.weights() * &map;
        let pre_shift = layer.weights() * &shift + layer.bias();
        if layer.activation() == Activation::Linear {
            return self.layer(k + 1, pre_map, pre_shift, constraints, pattern, point);
        }
        let mut bits = Vec::with_capacity(layer.width());
        self.neuron(k, 0, &pre_map, &pre_shift, constraints, pattern, &mut bits, point)
    }

    #[allow(clippy::too_many_arguments)]
    fn neuron(
        &mut self,
        k: usize,
        i: usize,
        pre_map: &DMatrix<f64>,
        pre_shift: &DVector<f64>,
        constraints: Vec<Inequality>,
        pattern: Vec<Vec<bool>>,
        bits: &mut Vec<bool>,
        point: Vec<f64>,
    ) -> Result<()> {
        if i == pre_map.nrows() {
            let mut map = pre_map.clone();
            let mut shift = pre_shift.clone();
            for (r, &on) in bits.iter().enumerate() {
                if !on {
                    map.row_mut(r).fill(0.0);
                    shift[r] = 0.0;
                }
            }
            let mut pattern = pattern;
            pattern.push(bits.clone());
            return self.layer(k + 1, map, shift, constraints, pattern, point);
        }
        let normal: Vec<f64> = pre_map.row(i).iter().copied().collect();
        let offset = pre_shift[i];
        if normal.iter().all(|a| *a == 0.0) {
            bits.push(offset >= -DEFAULT_EPS * offset.abs().max(1.0));
            let r = self.neuron(k, i + 1, pre_map, pre_shift, constraints, pattern, bits, point);
            bits.pop();
            return r;
        }
        for active in [true, false] {
            let sign = if active { 1.0 } else { -1.0 };
            let mut next = constraints.clone();
            next.push(Inequality {
                normal: normal.iter().map(|a| sign * a).collect(),
                offset: sign * offset,
            });
            let (depth, x) = interior_depth(&next, self.lower, self.upper)?;
            if depth > FEASIBILITY_SLACK {
                bits.push(active);
                let r = self.neuron(k, i + 1, pre_map, pre_shift, next, pattern.clone(), bits, x);
                bits.pop();
                r?;
            }
        }
        Ok(())
    }
}

/// Dense feed-forward net with `N(0, 1)` weights and biases: ReLU on every
/// listed hidden width, then a linear output layer of width `outputs` when
/// `outputs > 0`.
pub fn random_network(inputs: usize, hidden: &[usize], outputs: usize, seed: u64) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    let mut width = inputs;
    let widths = hidden
        .iter()
        .map(|&w| (w, Activation::Relu))
        .chain((outputs > 0).then_some((outputs, Activation::Linear)));
    for (w, activation) in widths {
        let weights = DMatrix::from_fn(w, width, |_, _| rng.sample(StandardNormal));
        let bias = DVector::from_fn(w, |_, _| rng.sample(StandardNormal));
        layers.push(Layer::new(weights, bias, activation)?);
        width = w;
    }
    Network::new(layers, None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFailure {
    pub sample: usize,
    pub input: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub samples: usize,
    pub covered: usize,
    pub uncovered: usize,
    /// Samples away from every neuron boundary found in more than one region.
    pub multi_covered_interior: usize,
    /// Largest `|forward(x) - (M x + d)|` over covered samples.
    pub max_abs_deviation: f64,
    /// Same, divided by `max(1, |forward(x)|)` per component.
    pub max_rel_deviation: f64,
    pub tol: f64,
    pub failures: Vec<SampleFailure>,
}

impl SampleReport {
    pub fn passed(&self) -> bool {
        self.uncovered == 0 && self.multi_covered_interior == 0 && self.max_rel_deviation <= self.tol
    }
}

/// Checks `n` uniform samples from the bounding box of `result`'s regions.
/// Each sample must lie in a region (infinity-norm membership residual at
/// most `tol`) whose affine map reproduces the forward pass within `tol`
/// relative.
pub fn sample_check(net: &Network, result: &ReachResult, n: usize, seed: u64, tol: f64) -> Result<SampleReport> {
    let mut report = SampleReport {
        samples: n,
        covered: 0,
        uncovered: 0,
        multi_covered_interior: 0,
        max_abs_deviation: 0.0,
        max_rel_deviation: 0.0,
        tol,
        failures: Vec::new(),
    };
    if n == 0 || result.tuples.is_empty() {
        report.uncovered = if result.tuples.is_empty() { n } else { 0 };
        return Ok(report);
    }
    let dim = net.input_dim();
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    let mut boxes = Vec::with_capacity(result.tuples.len());
    for t in &result.tuples {
        let (lo, hi) = t.region.bounds();
        for j in 0..dim {
            lower[j] = lower[j].min(lo[j]);
            upper[j] = upper[j].max(hi[j]);
        }
        boxes.push((lo, hi));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            lower
                .iter()
                .zip(&upper)
                .map(|(&l, &u)| if l < u { rng.random_range(l..=u) } else { l })
                .collect()
        })
        .collect();
    let by_key: HashMap<String, usize> = result
        .tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (t.lineage_key(), i))
        .collect();

    let outcomes = points
        .par_iter()
        .map(|x| check_one(net, result, &boxes, &by_key, x, tol))
        .collect::<Result<Vec<_>>>()?;

    for (s, (x, outcome)) in points.into_iter().zip(outcomes).enumerate() {
        match outcome {
            None => {
                report.uncovered += 1;
                report.failures.push(SampleFailure {
                    sample: s,
                    input: x,
                    reason: "not inside any region".into(),
                });
            }
            Some(o) => {
                report.covered += 1;
                report.max_abs_deviation = report.max_abs_deviation.max(o.abs_dev);
                report.max_rel_deviation = report.max_rel_deviation.max(o.rel_dev);
                if o.rel_dev > tol {
                    report.failures.push(SampleFailure {
                        sample: s,
                        input: x.clone(),
                        reason: format!("affine image deviates by {:e} relative", o.rel_dev),
                    });
                }
                if o.multi_interior {
                    report.multi_covered_interior += 1;
                    report.failures.push(SampleFailure {
                        sample: s,
                        input: x,
                        reason: "interior sample in more than one region".into(),
                    });
                }
            }
        }
    }
    Ok(report)
}

struct Outcome {
    abs_dev: f64,
    rel_dev: f64,
    multi_interior: bool,
}

fn check_one(
    net: &Network,
    result: &ReachResult,
    boxes: &[(Vec<f64>, Vec<f64>)],
    by_key: &HashMap<String, usize>,
    x: &[f64],
    tol: f64,
) -> Result<Option<Outcome>> {
    let y = net.forward(x)?;
    let pre = net.pre_activations(x)?;
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let member_tol = tol * scale;
    let key = pre
        .iter()
        .map(|l| l.iter().map(|&v| if v >= 0.0 { '+' } else { '-' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("|");
    // A sample clearly away from every neuron boundary has one region only.
    let interior = pre.iter().flatten().all(|v| v.abs() > 1e-6);

    let mut containing = Vec::new();
    if let Some(&i) = by_key.get(&key) {
        if result.tuples[i].region.contains_point(x, member_tol)? {
            containing.push(i);
        }
    }
    if containing.is_empty() || interior {
        for (i, (lo, hi)) in boxes.iter().enumerate() {
            if containing.first() == Some(&i) {
                continue;
            }
            let in_box = x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - member_tol && *v <= h + member_tol);
            if in_box && result.tuples[i].region.contains_point(x, member_tol)? {
                containing.push(i);
                if !interior {
                    break;
                }
            }
        }
    }
    let Some(&first) = containing.first() else {
        return Ok(None);
    };
    let image = result.tuples[first].apply(x);
    let (mut abs_dev, mut rel_dev) = (0.0f64, 0.0f64);
    for (a, b) in y.iter().zip(&image) {
        let diff = (a - b).abs();
        abs_dev = abs_dev.max(diff);
        rel_dev = rel_dev.max(diff / a.abs().max(1.0));
    }
    Ok(Some(Outcome {
        abs_dev,
        rel_dev,
        multi_interior: interior && containing.len() > 1,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face_lattice::box_lattice;
    use crate::reach::{reach, ReachConfig};

    fn relu_identity(n: usize) -> Network {
        Network::new(
            vec![Layer::new(DMatrix::identity(n, n), DVector::zeros(n), Activation::Relu).unwrap()],
            None,
        )
        .unwrap()
    }

    #[test]
    fn quadrants() {
        let regions = enumerate_regions_lp(&relu_identity(2), &[-1.0, -1.0], &[1.0, 1.0], 100).unwrap();
        assert_eq!(regions.len(), 4);
        let keys: Vec<String> = regions.iter().map(|r| r.pattern.key()).collect();
        assert_eq!(keys, vec!["++", "+-", "-+", "--"]);
        for r in &regions {
            let depth_ok = r.interior_point.iter().all(|v| v.abs() > 0.0 && v.abs() < 1.0);
            assert!(depth_ok, "{:?}", r.interior_point);
        }
    }

    #[test]
    fn all_active_box() {
        let regions = enumerate_regions_lp(&relu_identity(2), &[1.0, 1.0], &[2.0, 2.0], 100).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].map, DMatrix::identity(2, 2));
    }

    #[test]
    fn cap_and_box_errors() {
        assert!(matches!(
            enumerate_regions_lp(&relu_identity(2), &[-1.0, -1.0], &[1.0, 1.0], 3),
            Err(Error::RegionCapExceeded { cap: 3 })
        ));
        assert!(enumerate_regions_lp(&relu_identity(2), &[0.0, 0.0], &[0.0, 1.0], 10).is_err());
    }

    #[test]
    fn random_network_shape() {
        let net = random_network(2, &[3, 3], 0, 7).unwrap();
        assert_eq!(net.layers().len(), 2);
        assert_eq!(net.output_dim(), 3);
        assert_eq!(net, random_network(2, &[3, 3], 0, 7).unwrap());
        let with_head = random_network(2, &[4], 2, 1).unwrap();
        assert_eq!(with_head.layers()[1].activation(), Activation::Linear);
    }

    #[test]
    fn sample_check_linear_net() {
        let net = Network::new(
            vec![Layer::new(
                DMatrix::from_row_slice(1, 2, &[2.0, -3.0]),
                DVector::from_element(1, 0.5),
                Activation::Linear,
            )
            .unwrap()],
            None,
        )
        .unwrap();
        let input = box_lattice(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let result = reach(&net, &input, &ReachConfig::default()).unwrap();
        let report = sample_check(&net, &result, 200, 3, 1e-7).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.covered, 200);
        assert!(report.max_abs_deviation <= 1e-12);

        let empty = sample_check(&net, &result, 0, 3, 1e-7).unwrap();
        assert!(empty.passed());
        assert_eq!(empty.samples, 0);
    }

    #[test]
    fn sample_check_relu_net() {
        let net = random_network(2, &[4, 4], 2, 11).unwrap();
        let input = box_lattice(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let result = reach(&net, &input, &ReachConfig::default()).unwrap();
        let report = sample_check(&net, &result, 300, 5, 1e-7).unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
