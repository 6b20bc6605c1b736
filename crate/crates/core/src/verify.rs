//! Safety properties over network outputs and extraction of the inputs that
//! violate them.
//!
//! An unsafe set is a union of conjunctions of output halfspaces
//! `a·y + c <= 0`. For each region of a [`ReachResult`] every halfspace is
//! pulled back through the region's affine map and the region is cut down to
//! its part inside; whatever survives of some conjunction is unsafe input.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::face_lattice::{box_lattice, FaceLattice, SplitOutcome};
use crate::network::Network;
use crate::reach::{ReachResult, TransformTuple};

/// `normal·y + offset <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    #[serde(rename = "a")]
    pub normal: Vec<f64>,
    #[serde(rename = "c")]
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.normal.iter().zip(y).map(|(a, v)| a * v).sum::<f64>() + self.offset
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.value(y) <= tol
    }
}

/// Union (outer list) of conjunctions (inner lists) of halfspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnsafeSet {
    pub disjuncts: Vec<Vec<Halfspace>>,
}

impl UnsafeSet {
    pub fn new(disjuncts: Vec<Vec<Halfspace>>) -> Result<Self> {
        let set = Self { disjuncts };
        set.check_width(None)?;
        Ok(set)
    }

    fn check_width(&self, expected: Option<usize>) -> Result<usize> {
        let Some(first) = self.disjuncts.iter().flatten().next() else {
            return Err(Error::InvalidProperty("unsafe set has no halfspaces".into()));
        };
        let width = expected.unwrap_or(first.normal.len());
        if self.disjuncts.iter().any(Vec::is_empty) {
            return Err(Error::InvalidProperty("empty conjunction in unsafe set".into()));
        }
        for h in self.disjuncts.iter().flatten() {
            if h.normal.len() != width {
                return Err(Error::DimensionMismatch {
                    context: "unsafe halfspace",
                    expected: width,
                    found: h.normal.len(),
                });
            }
        }
        Ok(width)
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.disjuncts
            .iter()
            .any(|conj| conj.iter().all(|h| h.contains(y, tol)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property {
    pub name: String,
    pub input_lower: Vec<f64>,
    pub input_upper: Vec<f64>,
    #[serde(rename = "unsafe")]
    pub unsafe_set: UnsafeSet,
    /// Bounds and constraints are already in the network's own units.
    #[serde(default)]
    pub normalized: bool,
}

impl Property {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.unsafe_set.check_width(None)?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        for (context, v) in [
            ("property lower bound", &self.input_lower),
            ("property upper bound", &self.input_upper),
        ] {
            if v.len() != net.input_dim() {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: net.input_dim(),
                    found: v.len(),
                });
            }
        }
        self.unsafe_set.check_width(Some(net.output_dim()))?;
        Ok(())
    }

    /// Rewrites a property given in raw units into the units the network
    /// computes in: the box is clamped and normalized, and each halfspace is
    /// composed with the output scaling. Properties already flagged as
    /// normalized, and networks without constants, come back unchanged.
    pub fn to_network_space(&self, net: &Network) -> Result<Self> {
        self.validate(net)?;
        let Some(norm) = net.normalization() else {
            return Ok(self.clone());
        };
        if self.normalized {
            return Ok(self.clone());
        }
        let n = net.input_dim();
        let (mean, range) = (norm.means[n], norm.ranges[n]);
        let disjuncts = self
            .unsafe_set
            .disjuncts
            .iter()
            .map(|conj| {
                conj.iter()
                    .map(|h| Halfspace {
                        normal: h.normal.iter().map(|a| a * range).collect(),
                        offset: h.offset + mean * h.normal.iter().sum::<f64>(),
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            name: self.name.clone(),
            input_lower: net.normalize_input(&self.input_lower)?,
            input_upper: net.normalize_input(&self.input_upper)?,
            unsafe_set: UnsafeSet { disjuncts },
            normalized: true,
        })
    }

    pub fn input_lattice(&self) -> Result<FaceLattice> {
        box_lattice(&self.input_lower, &self.input_upper)
    }
}

const ACAS_RHO_MAX: f64 = 60760.0;
const ACAS_V_MAX: f64 = 1200.0;

/// Output constraints `y_j - y_0 <= 0` for every `j != 0`: output 0 is maximal.
fn first_maximal(outputs: usize) -> UnsafeSet {
    pairwise(outputs, 1.0)
}

/// `y_0 - y_j <= 0` for every `j != 0`: output 0 is minimal.
fn first_minimal(outputs: usize) -> UnsafeSet {
    pairwise(outputs, -1.0)
}

fn pairwise(outputs: usize, sign: f64) -> UnsafeSet {
    let conj = (1..outputs)
        .map(|j| {
            let mut a = vec![0.0; outputs];
            a[j] = sign;
            a[0] = -sign;
            Halfspace::new(a, 0.0)
        })
        .collect();
    UnsafeSet { disjuncts: vec![conj] }
}

/// ACAS Xu properties in raw units. `phi1`..`phi4` follow the usual
/// definitions; `phi4b` is the narrower five-dimensional box
/// `[1500, -0.06, 3.1, 1000, 700]`..`[1800, 0.06, 3.14, 1200, 800]` with the
/// `phi4` output condition.
#[allow(clippy::approx_constant)]
pub fn builtin_property(name: &str) -> Result<Property> {
    let (lower, upper, unsafe_set) = match name {
        "phi1" | "phi2" => {
            let unsafe_set = if name == "phi1" {
                UnsafeSet {
                    disjuncts: vec![vec![Halfspace::new(vec![-1.0, 0.0, 0.0, 0.0, 0.0], 1500.0)]],
                }
            } else {
                first_maximal(5)
            };
            (
                vec![55947.691, -PI, -PI, 1145.0, 0.0],
                vec![ACAS_RHO_MAX, PI, PI, ACAS_V_MAX, 60.0],
                unsafe_set,
            )
        }
        "phi3" => (
            vec![1500.0, -0.06, 3.10, 980.0, 960.0],
            vec![1800.0, 0.06, PI, ACAS_V_MAX, ACAS_V_MAX],
            first_minimal(5),
        ),
        "phi4" => (
            vec![1500.0, -0.06, 0.0, 1000.0, 700.0],
            vec![1800.0, 0.06, 0.0, ACAS_V_MAX, 800.0],
            first_minimal(5),
        ),
        "phi4b" => (
            vec![1500.0, -0.06, 3.1, 1000.0, 700.0],
            vec![1800.0, 0.06, 3.14, 1200.0, 800.0],
            first_minimal(5),
        ),
        _ => return Err(Error::UnknownProperty(name.to_string())),
    };
    Ok(Property {
        name: name.to_string(),
        input_lower: lower,
        input_upper: upper,
        unsafe_set,
        normalized: false,
    })
}

pub const BUILTIN_PROPERTIES: [&str; 5] = ["phi1", "phi2", "phi3", "phi4", "phi4b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sat => "SAT",
            Self::Unsat => "UNSAT",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    /// First vertex of the first unsafe region, in network units.
    pub witness: Option<Vec<f64>>,
    pub witness_output: Option<Vec<f64>>,
    /// Every surviving input polytope, in tuple order.
    pub unsafe_regions: Vec<FaceLattice>,
    /// Index into `result.tuples` of the region each unsafe polytope came from.
    pub unsafe_sources: Vec<usize>,
}

/// `a·(M x + d) + c <= 0` rewritten as a halfspace over the tuple's inputs.
pub fn map_back_halfspace(t: &TransformTuple, h: &Halfspace) -> Result<Halfspace> {
    if h.normal.len() != t.map.nrows() {
        return Err(Error::DimensionMismatch {
            context: "halfspace normal",
            expected: t.map.nrows(),
            found: h.normal.len(),
        });
    }
    let a = DVector::from_column_slice(&h.normal);
    let normal = t.map.tr_mul(&a);
    Ok(Halfspace {
        normal: normal.iter().copied().collect(),
        offset: a.dot(&t.shift) + h.offset,
    })
}

/// Part of `region` inside every halfspace, or `None` if it is empty or only
/// touches the boundary.
fn intersect(region: &FaceLattice, halfspaces: &[Halfspace], eps: f64) -> Result<Option<FaceLattice>> {
    let mut current: Option<FaceLattice> = None;
    for h in halfspaces {
        let r = current.as_ref().unwrap_or(region);
        let values: Vec<f64> = r.vertices().map(|v| h.value(v)).collect();
        match r.split_by_values(&values, eps) {
            Ok(SplitOutcome::Positive) => return Ok(None),
            Ok(SplitOutcome::Negative) | Err(Error::DegenerateSplit) => {}
            Ok(SplitOutcome::Divided { negative, .. }) => current = Some(negative),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(current.unwrap_or_else(|| region.clone())))
}

fn unsafe_parts(t: &TransformTuple, unsafe_set: &UnsafeSet, eps: f64) -> Result<Vec<FaceLattice>> {
    let mut parts = Vec::new();
    for conj in &unsafe_set.disjuncts {
        let mapped = conj
            .iter()
            .map(|h| map_back_halfspace(t, h))
            .collect::<Result<Vec<_>>>()?;
        if let Some(r) = intersect(&t.region, &mapped, eps)? {
            parts.push(r);
        }
    }
    Ok(parts)
}

/// Decides whether any output of `result` meets `unsafe_set`, collecting the
/// full set of violating inputs. Everything is in network units.
pub fn check_property(net: &Network, result: &ReachResult, unsafe_set: &UnsafeSet, eps: f64) -> Result<Verdict> {
    unsafe_set.check_width(Some(net.output_dim()))?;
    let per_tuple = result
        .tuples
        .par_iter()
        .map(|t| unsafe_parts(t, unsafe_set, eps))
        .collect::<Result<Vec<_>>>()?;
    let mut unsafe_regions = Vec::new();
    let mut unsafe_sources = Vec::new();
    for (i, parts) in per_tuple.into_iter().enumerate() {
        unsafe_sources.extend(std::iter::repeat_n(i, parts.len()));
        unsafe_regions.extend(parts);
    }
    let witness = unsafe_regions.first().map(|r| r.vertex(0).to_vec());
    let witness_output = witness.as_deref().map(|x| net.forward(x)).transpose()?;
    Ok(Verdict {
        status: if witness.is_some() { Status::Sat } else { Status::Unsat },
        witness,
        witness_output,
        unsafe_regions,
        unsafe_sources,
    })
}

/// Every input polytope whose image meets the unsafe set. Empty when safe.
pub fn extract_unsafe_inputs(
    net: &Network,
    result: &ReachResult,
    unsafe_set: &UnsafeSet,
    eps: f64,
) -> Result<Vec<FaceLattice>> {
    Ok(check_property(net, result, unsafe_set, eps)?.unsafe_regions)
}
