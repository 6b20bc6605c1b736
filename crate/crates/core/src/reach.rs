//! Propagation of transformation tuples through a network.
//!
//! A [`TransformTuple`] pairs an input-space region with the affine map
//! `x -> map·x + shift` that sends it to the current layer. Each layer applies
//! its affine part to the map, then handles its neurons in ascending order:
//! the neuron's hyperplane is pulled back into input space, the region is
//! split by it, and on the negative side the neuron's output row is zeroed.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::face_lattice::{FaceLattice, Hyperplane, SplitOutcome, DEFAULT_EPS};
use crate::network::{Activation, Layer, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

/// One activation decision: neuron `neuron` of network layer `layer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decision {
    pub layer: u32,
    pub neuron: u32,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformTuple {
    pub region: FaceLattice,
    pub map: DMatrix<f64>,
    pub shift: DVector<f64>,
    pub lineage: Vec<Decision>,
    /// Number of network layers whose affine part has been applied.
    depth: usize,
}

impl TransformTuple {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `map·x + shift`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y = &self.map * DVector::from_column_slice(x) + &self.shift;
        y.as_slice().to_vec()
    }

    /// Compact activation pattern: one `+`/`-` per ReLU neuron, layers
    /// separated by `|`.
    pub fn lineage_key(&self) -> String {
        lineage_key(&self.lineage)
    }
}

pub fn lineage_key(lineage: &[Decision]) -> String {
    let mut s = String::with_capacity(lineage.len() + 8);
    let mut current = None;
    for d in lineage {
        if current.is_some_and(|l| l != d.layer) {
            s.push('|');
        }
        current = Some(d.layer);
        s.push(match d.sign {
            Sign::Positive => '+',
            Sign::Negative => '-',
        });
    }
    s
}

/// Identity map over the region's ambient space.
pub fn init_tuple(region: FaceLattice) -> TransformTuple {
    let n = region.ambient_dim();
    TransformTuple {
        region,
        map: DMatrix::identity(n, n),
        shift: DVector::zeros(n),
        lineage: Vec::new(),
        depth: 0,
    }
}

/// `map <- W·map`, `shift <- W·shift + b`. The region is untouched.
pub fn affine_step(mut t: TransformTuple, layer: &Layer) -> Result<TransformTuple> {
    if layer.input_width() != t.map.nrows() {
        return Err(Error::DimensionMismatch {
            context: "affine step",
            expected: t.map.nrows(),
            found: layer.input_width(),
        });
    }
    t.map = layer.weights() * &t.map;
    t.shift = layer.weights() * &t.shift + layer.bias();
    t.depth += 1;
    Ok(t)
}

/// Input-space hyperplane of neuron `i`: `map[i]·x + shift[i] = 0`.
pub fn map_back_hyperplane(t: &TransformTuple, i: usize) -> Result<Hyperplane> {
    check_neuron(t, i)?;
    Hyperplane::new(t.map.row(i).iter().copied().collect(), t.shift[i])
}

/// Zeroes row `i` of the map and entry `i` of the shift.
pub fn project_negative(mut t: TransformTuple, i: usize) -> Result<TransformTuple> {
    check_neuron(&t, i)?;
    t.map.row_mut(i).fill(0.0);
    t.shift[i] = 0.0;
    t.lineage.push(decision(&t, i, Sign::Negative));
    Ok(t)
}

fn check_neuron(t: &TransformTuple, i: usize) -> Result<()> {
    if i >= t.map.nrows() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: t.map.nrows(),
        });
    }
    Ok(())
}

fn decision(t: &TransformTuple, neuron: usize, sign: Sign) -> Decision {
    Decision {
        layer: t.depth.saturating_sub(1) as u32,
        neuron: neuron as u32,
        sign,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counters {
    splits: u64,
    degenerate: u64,
}

impl std::ops::AddAssign for Counters {
    fn add_assign(&mut self, rhs: Self) {
        self.splits += rhs.splits;
        self.degenerate += rhs.degenerate;
    }
}

/// ReLU of neuron `i` on one tuple: one or two tuples come out.
///
/// A region lying entirely on the neuron's hyperplane goes to the positive
/// branch; both branches agree there.
pub fn neuron_step(t: TransformTuple, i: usize, eps: f64) -> Result<Vec<TransformTuple>> {
    let mut out = Vec::with_capacity(2);
    neuron_step_into(t, i, eps, &mut out, &mut Counters::default())?;
    Ok(out)
}

fn neuron_step_into(
    mut t: TransformTuple,
    i: usize,
    eps: f64,
    out: &mut Vec<TransformTuple>,
    counters: &mut Counters,
) -> Result<()> {
    check_neuron(&t, i)?;
    let row = t.map.row(i);
    let offset = t.shift[i];
    let values: Vec<f64> = t
        .region
        .vertices()
        .map(|v| row.iter().zip(v).map(|(a, x)| a * x).sum::<f64>() + offset)
        .collect();
    match t.region.split_by_values(&values, eps) {
        Ok(SplitOutcome::Positive) => {
            t.lineage.push(decision(&t, i, Sign::Positive));
            out.push(t);
        }
        Ok(SplitOutcome::Negative) => out.push(project_negative(t, i)?),
        Ok(SplitOutcome::Divided { positive, negative }) => {
            counters.splits += 1;
            let neg = TransformTuple {
                region: negative,
                map: t.map.clone(),
                shift: t.shift.clone(),
                lineage: t.lineage.clone(),
                depth: t.depth,
            };
            t.region = positive;
            t.lineage.push(decision(&t, i, Sign::Positive));
            out.push(t);
            out.push(project_negative(neg, i)?);
        }
        Err(Error::DegenerateSplit) => {
            counters.degenerate += 1;
            t.lineage.push(decision(&t, i, Sign::Positive));
            out.push(t);
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

/// One layer for a list of tuples, sequentially. Linear layers only apply
/// the affine step.
pub fn layer_step(tuples: Vec<TransformTuple>, layer: &Layer, eps: f64) -> Result<Vec<TransformTuple>> {
    let mut out = Vec::new();
    for t in tuples {
        out.extend(single_layer(t, layer, eps, usize::MAX, &mut Counters::default())?);
    }
    Ok(out)
}

fn single_layer(
    t: TransformTuple,
    layer: &Layer,
    eps: f64,
    cap: usize,
    counters: &mut Counters,
) -> Result<Vec<TransformTuple>> {
    let mut current = vec![affine_step(t, layer)?];
    if layer.activation() == Activation::Linear {
        return Ok(current);
    }
    for i in 0..layer.width() {
        let mut next = Vec::with_capacity(current.len() + current.len() / 2);
        for t in current {
            neuron_step_into(t, i, eps, &mut next, counters)?;
        }
        if next.len() > cap {
            return Err(Error::RegionCapExceeded { cap });
        }
        current = next;
    }
    Ok(current)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Parallel over the tuple list, one layer at a time.
    PerLayer,
    /// Per-layer up to (and including) layer `j`, then every tuple runs the
    /// remaining layers on its own.
    SplitAt(usize),
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "per-layer" {
            return Ok(Self::PerLayer);
        }
        s.strip_prefix("split-at:")
            .and_then(|j| j.parse().ok())
            .map(Self::SplitAt)
            .ok_or_else(|| format!("unknown strategy `{s}` (per-layer | split-at:N)"))
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::PerLayer => f.write_str("per-layer"),
            Self::SplitAt(j) => write!(f, "split-at:{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachConfig {
    pub eps: f64,
    pub workers: usize,
    pub strategy: Strategy,
    pub region_cap: usize,
}

impl Default for ReachConfig {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            strategy: Strategy::SplitAt(1),
            region_cap: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachStats {
    pub region_count: usize,
    pub splits_performed: u64,
    /// Regions found lying entirely on a neuron hyperplane.
    pub degenerate_splits: u64,
    /// Tuple count after each layer.
    pub per_layer_counts: Vec<usize>,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub tuples: Vec<TransformTuple>,
    pub stats: ReachStats,
}

/// Exact partition of `input` into linear regions of `net`, each with its
/// affine output map. Output order follows the activation pattern with `+`
/// before `-`, independent of strategy and worker count.
pub fn reach(net: &Network, input: &FaceLattice, cfg: &ReachConfig) -> Result<ReachResult> {
    if input.ambient_dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "reach input",
            expected: net.input_dim(),
            found: input.ambient_dim(),
        });
    }
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidNetwork(format!("thread pool: {e}")))?;
    let layers = net.layers();
    let seed = vec![init_tuple(input.clone())];

    let (tuples, counters, per_layer_counts) = pool.install(|| match cfg.strategy {
        Strategy::PerLayer => per_layer(seed, layers, 0, cfg),
        Strategy::SplitAt(j) => {
            let j = j.min(layers.len());
            let (front, mut counters, mut counts) = per_layer(seed, &layers[..j], 0, cfg)?;
            let parts = front
                .into_par_iter()
                .map(|t| sequential(t, &layers[j..], cfg))
                .collect::<Result<Vec<_>>>()?;
            let mut tail_counts = vec![0usize; layers.len() - j];
            let mut tuples = Vec::new();
            for (part, c, part_counts) in parts {
                counters += c;
                for (acc, n) in tail_counts.iter_mut().zip(part_counts) {
                    *acc += n;
                }
                tuples.extend(part);
                if tuples.len() > cfg.region_cap {
                    return Err(Error::RegionCapExceeded { cap: cfg.region_cap });
                }
            }
            counts.extend(tail_counts);
            Ok((tuples, counters, counts))
        }
    })?;

    Ok(ReachResult {
        stats: ReachStats {
            region_count: tuples.len(),
            splits_performed: counters.splits,
            degenerate_splits: counters.degenerate,
            per_layer_counts,
            wall_time: start.elapsed(),
        },
        tuples,
    })
}

type Partial = (Vec<TransformTuple>, Counters, Vec<usize>);

fn per_layer(mut tuples: Vec<TransformTuple>, layers: &[Layer], _from: usize, cfg: &ReachConfig) -> Result<Partial> {
    let mut counters = Counters::default();
    let mut counts = Vec::with_capacity(layers.len());
    for layer in layers {
        let parts = tuples
            .into_par_iter()
            .map(|t| {
                let mut c = Counters::default();
                single_layer(t, layer, cfg.eps, cfg.region_cap, &mut c).map(|out| (out, c))
            })
            .collect::<Result<Vec<_>>>()?;
        tuples = Vec::with_capacity(parts.iter().map(|(p, _)| p.len()).sum());
        for (part, c) in parts {
            counters += c;
            tuples.extend(part);
        }
        if tuples.len() > cfg.region_cap {
            return Err(Error::RegionCapExceeded { cap: cfg.region_cap });
        }
        counts.push(tuples.len());
    }
    Ok((tuples, counters, counts))
}

fn sequential(t: TransformTuple, layers: &[Layer], cfg: &ReachConfig) -> Result<Partial> {
    let mut counters = Counters::default();
    let mut counts = Vec::with_capacity(layers.len());
    let mut tuples = vec![t];
    for layer in layers {
        let mut next = Vec::with_capacity(tuples.len());
        for t in tuples {
            next.extend(single_layer(t, layer, cfg.eps, cfg.region_cap, &mut counters)?);
            if next.len() > cfg.region_cap {
                return Err(Error::RegionCapExceeded { cap: cfg.region_cap });
            }
        }
        tuples = next;
        counts.push(tuples.len());
    }
    Ok((tuples, counters, counts))
}

/// `map·v + shift` for every region vertex, in vertex order.
pub fn output_vertices(t: &TransformTuple) -> Vec<Vec<f64>> {
    t.region.vertices().map(|v| t.apply(v)).collect()
}

#[derive(Serialize)]
struct RegionJson {
    lineage: String,
    input_vertices: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    map: Vec<Vec<f64>>,
    d: Vec<f64>,
    output_vertices: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ReachJson<'a> {
    regions: Vec<RegionJson>,
    stats: &'a ReachStats,
}

impl ReachResult {
    /// `{ "regions": [{lineage, input_vertices, M, d, output_vertices}], "stats": {...} }`.
    /// Wall time is left out so identical runs serialize identically.
    pub fn to_json(&self) -> Result<String> {
        let regions = self
            .tuples
            .iter()
            .map(|t| RegionJson {
                lineage: t.lineage_key(),
                input_vertices: t.region.vertices().map(<[f64]>::to_vec).collect(),
                map: t.map.row_iter().map(|r| r.iter().copied().collect()).collect(),
                d: t.shift.iter().copied().collect(),
                output_vertices: output_vertices(t),
            })
            .collect();
        Ok(serde_json::to_string(&ReachJson {
            regions,
            stats: &self.stats,
        })?)
    }

    /// One CSV row per output vertex: region index, then either every output
    /// coordinate or just the two `plot_dims`.
    pub fn write_vertex_csv(&self, mut w: impl Write, plot_dims: Option<(usize, usize)>) -> Result<()> {
        let Some(first) = self.tuples.first() else {
            writeln!(w, "region")?;
            return Ok(());
        };
        let width = first.map.nrows();
        let dims: Vec<usize> = match plot_dims {
            Some((i, j)) => {
                for k in [i, j] {
                    if k >= width {
                        return Err(Error::IndexOutOfRange { index: k, len: width });
                    }
                }
                vec![i, j]
            }
            None => (0..width).collect(),
        };
        let header: Vec<String> = dims.iter().map(|k| format!("y{k}")).collect();
        writeln!(w, "region,{}", header.join(","))?;
        for (r, t) in self.tuples.iter().enumerate() {
            for y in output_vertices(t) {
                let cols: Vec<String> = dims.iter().map(|&k| y[k].to_string()).collect();
                writeln!(w, "{r},{}", cols.join(","))?;
            }
        }
        Ok(())
    }
}
