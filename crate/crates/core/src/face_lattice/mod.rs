//! Face-lattice representation of convex polytopes.
//!
//! A lattice stores the vertex coordinates together with every face of the
//! polytope, level by level. Level 0 holds the vertices, level `d` holds the
//! single top face (the polytope itself). Each face records its children one
//! level down and its parents one level up. The empty face is not stored.

mod hyperplane;
mod level;
mod split;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;

pub use hyperplane::Hyperplane;
pub use level::Level;
pub use split::{SplitOutcome, SplitResult};

/// Default sign-classification threshold.
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FaceLattice {
    ambient_dim: usize,
    /// Row-major vertex coordinates, `ambient_dim` values per vertex.
    coords: Vec<f64>,
    /// `levels[0]` are the vertices, `levels[d]` the top face.
    levels: Vec<Level>,
}

/// Partition of the vertex ids by the sign of `normal·v + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexClassification {
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
    pub zero: Vec<usize>,
    pub values: Vec<f64>,
}

impl FaceLattice {
    /// Assembles a lattice from vertex coordinates and per-level child lists
    /// (`children[k - 1]` lists the faces at level `k`). Parent links are
    /// derived. The result is checked with [`FaceLattice::validate`].
    pub fn from_parts(ambient_dim: usize, vertices: Vec<Vec<f64>>, children: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        let mut coords = Vec::with_capacity(vertices.len() * ambient_dim);
        for v in &vertices {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    context: "lattice vertex",
                    expected: ambient_dim,
                    found: v.len(),
                });
            }
            coords.extend_from_slice(v);
        }
        let mut levels = vec![Level::leaves(vertices.len())];
        for faces in children {
            let links = faces.iter().map(Vec::len).sum();
            let mut level = Level::with_capacity(faces.len(), links);
            for face in faces {
                level.push_face(face);
            }
            levels.push(level);
        }
        for k in 1..levels.len() {
            let below = levels[k - 1].len();
            if let Some(c) = levels[k].max_child().filter(|&c| c as usize >= below) {
                return Err(Error::InvalidLattice(format!("child id {c} out of range at level {k}")));
            }
        }
        let lattice = Self::assemble(ambient_dim, coords, levels);
        lattice.validate()?;
        Ok(lattice)
    }

    /// Fills parent links from the child lists. Children are expected to be
    /// in range; parent lists come out sorted.
    pub(crate) fn assemble(ambient_dim: usize, coords: Vec<f64>, mut levels: Vec<Level>) -> Self {
        for k in 0..levels.len() {
            let (lower, upper) = levels.split_at_mut(k + 1);
            lower[k].set_parents(upper.first());
        }
        Self {
            ambient_dim,
            coords,
            levels,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension of the polytope itself.
    pub fn dim(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn num_vertices(&self) -> usize {
        self.levels[0].len()
    }

    pub fn vertex(&self, id: usize) -> &[f64] {
        &self.coords[id * self.ambient_dim..(id + 1) * self.ambient_dim]
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact would yield nothing for ambient_dim == 0.
        (0..self.num_vertices()).map(move |i| self.vertex(i))
    }

    /// Faces at level `k` (level 0 = vertices).
    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k]
    }

    /// Number of faces per level, vertices first.
    pub fn face_counts(&self) -> Vec<usize> {
        self.levels.iter().map(Level::len).collect()
    }

    /// Vertex ids contained (transitively) in face `id` at level `k`, sorted.
    pub fn face_vertices(&self, k: usize, id: usize) -> Vec<usize> {
        if k == 0 {
            return vec![id];
        }
        let mut current: Vec<u32> = self.levels[k].children(id).to_vec();
        for level in (1..k).rev() {
            let mut next: Vec<u32> = current
                .iter()
                .flat_map(|&c| self.levels[level].children(c as usize).iter().copied())
                .collect();
            next.sort_unstable();
            next.dedup();
            current = next;
        }
        current.sort_unstable();
        current.dedup();
        current.into_iter().map(|v| v as usize).collect()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.ambient_dim];
        for v in self.vertices() {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi;
            }
        }
        let n = self.num_vertices().max(1) as f64;
        c.iter_mut().for_each(|ci| *ci /= n);
        c
    }

    /// Axis-aligned bounding box of the vertices.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.ambient_dim];
        let mut hi = vec![f64::NEG_INFINITY; self.ambient_dim];
        for v in self.vertices() {
            for i in 0..self.ambient_dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// Values of `h` at every vertex.
    pub fn evaluate(&self, h: &Hyperplane) -> Result<Vec<f64>> {
        self.check_dim(h.normal().len(), "hyperplane")?;
        Ok(self.vertices().map(|v| h.eval(v)).collect())
    }

    pub fn classify_vertices(&self, h: &Hyperplane, eps: f64) -> Result<VertexClassification> {
        let values = self.evaluate(h)?;
        let mut cls = VertexClassification {
            positive: Vec::new(),
            negative: Vec::new(),
            zero: Vec::new(),
            values: Vec::new(),
        };
        for (i, &value) in values.iter().enumerate() {
            if value > eps {
                cls.positive.push(i);
            } else if value < -eps {
                cls.negative.push(i);
            } else {
                cls.zero.push(i);
            }
        }
        cls.values = values;
        Ok(cls)
    }

    /// Maps every vertex through `x -> m x + d`. The combinatorial structure
    /// is kept as is, even when the map collapses the polytope.
    pub fn affine_map_vertices(&self, m: &DMatrix<f64>, d: &DVector<f64>) -> Result<Self> {
        self.check_dim(m.ncols(), "affine map columns")?;
        if d.len() != m.nrows() {
            return Err(Error::DimensionMismatch {
                context: "affine map shift",
                expected: m.nrows(),
                found: d.len(),
            });
        }
        let rows = m.nrows();
        let mut coords = Vec::with_capacity(self.num_vertices() * rows);
        for v in self.vertices() {
            for r in 0..rows {
                let mut acc = d[r];
                for (c, vc) in v.iter().enumerate() {
                    acc += m[(r, c)] * vc;
                }
                coords.push(acc);
            }
        }
        Ok(Self {
            ambient_dim: rows,
            coords,
            levels: self.levels.clone(),
        })
    }

    /// Whether `x` is a convex combination of the vertices, allowing an
    /// infinity-norm residual of at most `tol`.
    pub fn contains_point(&self, x: &[f64], tol: f64) -> Result<bool> {
        self.check_dim(x.len(), "point")?;
        let (lo, hi) = self.bounds();
        if x.iter()
            .zip(lo.iter().zip(&hi))
            .any(|(xi, (l, h))| *xi < l - tol || *xi > h + tol)
        {
            return Ok(false);
        }
        let residual = lp::convex_combination_residual(self.vertices(), x)?;
        Ok(residual <= tol)
    }

    fn check_dim(&self, found: usize, context: &'static str) -> Result<()> {
        if found != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.ambient_dim,
                found,
            });
        }
        Ok(())
    }

    /// Checks the structural invariants: reciprocal links between adjacent
    /// levels only, a single top face, two vertices per edge, a parent for
    /// every non-top face, the diamond property, and at least `k + 1`
    /// vertices below every `k`-face.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidLattice(msg));
        if self.coords.len() != self.num_vertices() * self.ambient_dim {
            return fail("coordinate table size".into());
        }
        let d = self.dim();
        if self.levels[d].len() != 1 {
            return fail(format!("{} faces at top level {d}", self.levels[d].len()));
        }
        if d > self.ambient_dim {
            return fail(format!("dimension {d} exceeds ambient dimension"));
        }
        for (k, level) in self.levels.iter().enumerate() {
            for id in 0..level.len() {
                let (children, parents) = (level.children(id), level.parents(id));
                if k == 0 && !children.is_empty() {
                    return fail(format!("vertex {id} has children"));
                }
                if k == 1 && children.len() != 2 {
                    return fail(format!("edge {id} has {} vertices", children.len()));
                }
                if k < d && parents.is_empty() {
                    return fail(format!("face {id} at level {k} has no parent"));
                }
                if k == d && !parents.is_empty() {
                    return fail("top face has parents".into());
                }
                for &c in children {
                    let below = &self.levels[k - 1];
                    if (c as usize) >= below.len() || !below.parents(c as usize).contains(&(id as u32)) {
                        return fail(format!("link {k}:{id} -> {c} is not reciprocal"));
                    }
                }
                for &p in parents {
                    let above = self.levels.get(k + 1).filter(|l| (p as usize) < l.len());
                    if !above.is_some_and(|l| l.children(p as usize).contains(&(id as u32))) {
                        return fail(format!("link {k}:{id} <- {p} is not reciprocal"));
                    }
                }
                if k >= 1 && self.face_vertices(k, id).len() < k + 1 {
                    return fail(format!("face {id} at level {k} has too few vertices"));
                }
            }
        }
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for k in 0..d.saturating_sub(1) {
            for id in 0..self.levels[k].len() {
                counts.clear();
                for &p in self.levels[k].parents(id) {
                    for &g in self.levels[k + 1].parents(p as usize) {
                        *counts.entry(g).or_default() += 1;
                    }
                }
                if let Some((g, n)) = counts.iter().find(|(_, &n)| n != 2) {
                    return fail(format!(
                        "diamond property fails between {k}:{id} and {}:{g} ({n} intermediate faces)",
                        k + 2
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Full face lattice of the axis-aligned box `[lower, upper]`.
///
/// Coordinates with `lower[i] == upper[i]` stay in the vertex coordinates but
/// do not contribute a combinatorial dimension.
pub fn box_lattice(lower: &[f64], upper: &[f64]) -> Result<FaceLattice> {
    if lower.is_empty() {
        return Err(Error::InvalidBox("empty bounds".into()));
    }
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            context: "box bounds",
            expected: lower.len(),
            found: upper.len(),
        });
    }
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        if l > u || !l.is_finite() || !u.is_finite() {
            return Err(Error::InvalidBox(format!(
                "bound {i}: lower {l} must not exceed upper {u}"
            )));
        }
    }
    let free: Vec<usize> = (0..lower.len()).filter(|&i| lower[i] < upper[i]).collect();
    let dim = free.len();

    // Faces are words over {0, 1, *} indexed by free coordinate; the number
    // of stars is the level.
    const STAR: u8 = 2;
    let mut index: Vec<HashMap<Vec<u8>, u32>> = vec![HashMap::new(); dim + 1];
    let mut words: Vec<Vec<Vec<u8>>> = vec![Vec::new(); dim + 1];
    for k in 0..=dim {
        for stars in combinations(dim, k) {
            let fixed: Vec<usize> = (0..dim).filter(|i| !stars.contains(i)).collect();
            for bits in 0u64..(1u64 << fixed.len()) {
                let mut word = vec![STAR; dim];
                for (b, &pos) in fixed.iter().enumerate() {
                    // Most significant fixed coordinate first keeps vertices
                    // in lexicographic order.
                    word[pos] = ((bits >> (fixed.len() - 1 - b)) & 1) as u8;
                }
                index[k].insert(word.clone(), words[k].len() as u32);
                words[k].push(word);
            }
        }
    }

    let mut coords = Vec::with_capacity(words[0].len() * lower.len());
    for word in &words[0] {
        let mut v = lower.to_vec();
        for (b, &coord) in free.iter().enumerate() {
            if word[b] == 1 {
                v[coord] = upper[coord];
            }
        }
        coords.extend_from_slice(&v);
    }

    let mut levels = vec![Level::leaves(words[0].len())];
    for k in 1..=dim {
        let mut level = Level::with_capacity(words[k].len(), words[k].len() * 2 * k);
        for word in &words[k] {
            let mut children = Vec::with_capacity(2 * k);
            for pos in (0..dim).filter(|&p| word[p] == STAR) {
                for bit in 0..2u8 {
                    let mut child = word.clone();
                    child[pos] = bit;
                    children.push(index[k - 1][&child]);
                }
            }
            children.sort_unstable();
            level.push_face(children);
        }
        levels.push(level);
    }
    Ok(FaceLattice::assemble(lower.len(), coords, levels))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    ambient_dim: usize,
    vertices: Vec<Vec<f64>>,
    faces: Vec<Vec<FaceJson>>,
}

#[derive(Serialize, Deserialize)]
struct FaceJson {
    id: u32,
    children: Vec<u32>,
}

impl Serialize for FaceLattice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeJson {
            ambient_dim: self.ambient_dim,
            vertices: self.vertices().map(<[f64]>::to_vec).collect(),
            faces: self.levels[1..]
                .iter()
                .map(|level| {
                    level
                        .faces()
                        .enumerate()
                        .map(|(id, children)| FaceJson {
                            id: id as u32,
                            children: children.to_vec(),
                        })
                        .collect()
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FaceLattice {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = LatticeJson::deserialize(deserializer)?;
        let children = raw
            .faces
            .into_iter()
            .map(|mut level| {
                level.sort_by_key(|f| f.id);
                level.into_iter().map(|f| f.children).collect()
            })
            .collect();
        FaceLattice::from_parts(raw.ambient_dim, raw.vertices, children).map_err(serde::de::Error::custom)
    }
}
