//! Intersection and division of a face lattice by a hyperplane.
//!
//! A face is *cut* when it has vertices strictly on both sides of the
//! hyperplane. Every cut face `F` of dimension `k` produces one new face
//! `F ∩ H` of dimension `k - 1`; cut faces are closed upward (a face above a
//! cut face is cut), and containment among the new faces follows containment
//! among the cut faces they come from. The positive part keeps every face
//! without a negative vertex, the positive half of every cut face, and all the
//! new faces; the negative part is symmetric.

use super::{FaceLattice, Hyperplane, Level};
use crate::error::{Error, Result};

const POS: u8 = 1;
const NEG: u8 = 2;
const CUT: u8 = POS | NEG;
const NONE: u32 = u32::MAX;

/// Result of splitting a lattice, carrying the lattices themselves.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitResult {
    /// No vertex is strictly negative.
    PositiveOnly(FaceLattice),
    /// No vertex is strictly positive.
    NegativeOnly(FaceLattice),
    Split {
        positive: FaceLattice,
        negative: FaceLattice,
    },
}

/// Like [`SplitResult`], but the one-sided cases refer back to the input
/// instead of copying it.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitOutcome {
    Positive,
    Negative,
    Divided {
        positive: FaceLattice,
        negative: FaceLattice,
    },
}

/// The face `F ∩ H` for a cut face `F`.
struct NewFace {
    /// Indices (among new faces one level down) of `C ∩ H` for cut children `C`.
    from_cut: Vec<u32>,
    /// Old faces two levels below `F` whose vertices all lie on `H`.
    on_plane: Vec<u32>,
}

impl FaceLattice {
    /// Splits by `h`. Clones the input for the one-sided cases; see
    /// [`FaceLattice::split_outcome`] to avoid that.
    pub fn split(&self, h: &Hyperplane, eps: f64) -> Result<SplitResult> {
        Ok(match self.split_outcome(h, eps)? {
            SplitOutcome::Positive => SplitResult::PositiveOnly(self.clone()),
            SplitOutcome::Negative => SplitResult::NegativeOnly(self.clone()),
            SplitOutcome::Divided { positive, negative } => SplitResult::Split { positive, negative },
        })
    }

    /// Splits by `h`.
    ///
    /// A vertex counts as on the hyperplane when `|h(v)| <= eps * s`, where
    /// `s = max(1, max_v |h(v)|)`. Returns [`Error::DegenerateSplit`] when
    /// every vertex is on the hyperplane.
    pub fn split_outcome(&self, h: &Hyperplane, eps: f64) -> Result<SplitOutcome> {
        let values = self.evaluate(h)?;
        self.split_by_values(&values, eps)
    }

    /// Splits by the affine functional whose value at vertex `i` is
    /// `values[i]`.
    pub fn split_by_values(&self, values: &[f64], eps: f64) -> Result<SplitOutcome> {
        if values.len() != self.num_vertices() {
            return Err(Error::DimensionMismatch {
                context: "vertex values",
                expected: self.num_vertices(),
                found: values.len(),
            });
        }
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = eps * scale;
        let signs: Vec<u8> = values
            .iter()
            .map(|&v| {
                if v > tol {
                    POS
                } else if v < -tol {
                    NEG
                } else {
                    0
                }
            })
            .collect();
        match signs.iter().fold(0, |acc, s| acc | s) {
            0 => return Err(Error::DegenerateSplit),
            POS => return Ok(SplitOutcome::Positive),
            NEG => return Ok(SplitOutcome::Negative),
            _ => {}
        }
        let has_zero = signs.contains(&0);

        let d = self.dim();
        let mut flags: Vec<Vec<u8>> = Vec::with_capacity(d + 1);
        flags.push(signs);
        for k in 1..=d {
            let level = self.levels[k]
                .faces()
                .map(|children| children.iter().fold(0u8, |acc, &c| acc | flags[k - 1][c as usize]))
                .collect();
            flags.push(level);
        }

        // cut_ids[k]: cut faces at level k in id order; new_index[k][f] is the
        // position of face f in cut_ids[k] (and of F ∩ H among the new faces
        // at level k - 1).
        let mut cut_ids: Vec<Vec<u32>> = vec![Vec::new(); d + 2];
        let mut new_index: Vec<Vec<u32>> = Vec::with_capacity(d + 1);
        for (k, level_flags) in flags.iter().enumerate() {
            let mut idx = vec![NONE; level_flags.len()];
            for (f, &fl) in level_flags.iter().enumerate() {
                if fl == CUT {
                    idx[f] = cut_ids[k].len() as u32;
                    cut_ids[k].push(f as u32);
                }
            }
            new_index.push(idx);
        }

        let n = self.ambient_dim;
        let mut new_coords = Vec::with_capacity(cut_ids[1].len() * n);
        for &e in &cut_ids[1] {
            let ends = self.levels[1].children(e as usize);
            let (a, b) = (ends[0] as usize, ends[1] as usize);
            let (p, q) = if flags[0][a] == POS { (a, b) } else { (b, a) };
            let t = values[p] / (values[p] - values[q]);
            let (vp, vq) = (self.vertex(p), self.vertex(q));
            new_coords.extend(vp.iter().zip(vq).map(|(x, y)| x + t * (y - x)));
        }

        // new_faces[j]: the new faces at level j >= 1, built from cut faces at level j + 1.
        let mut new_faces: Vec<Vec<NewFace>> = (0..=d).map(|_| Vec::new()).collect();
        for k in 2..=d {
            for &f in &cut_ids[k] {
                let children = self.levels[k].children(f as usize);
                let mut from_cut: Vec<u32> = children
                    .iter()
                    .filter(|&&c| flags[k - 1][c as usize] == CUT)
                    .map(|&c| new_index[k - 1][c as usize])
                    .collect();
                from_cut.sort_unstable();
                let mut on_plane = Vec::new();
                if has_zero {
                    for &c in children {
                        for &g in self.levels[k - 1].children(c as usize) {
                            if flags[k - 2][g as usize] == 0 {
                                on_plane.push(g);
                            }
                        }
                    }
                    on_plane.sort_unstable();
                    on_plane.dedup();
                }
                new_faces[k - 1].push(NewFace { from_cut, on_plane });
            }
        }

        let positive = self.build_side(POS, &flags, &cut_ids, &new_index, &new_faces, &new_coords);
        let negative = self.build_side(NEG, &flags, &cut_ids, &new_index, &new_faces, &new_coords);
        Ok(SplitOutcome::Divided { positive, negative })
    }

    fn build_side(
        &self,
        own: u8,
        flags: &[Vec<u8>],
        cut_ids: &[Vec<u32>],
        new_index: &[Vec<u32>],
        new_faces: &[Vec<NewFace>],
        new_coords: &[f64],
    ) -> FaceLattice {
        let opp = CUT ^ own;
        let d = self.dim();
        let n = self.ambient_dim;

        let mut old_map: Vec<Vec<u32>> = Vec::with_capacity(d + 1);
        let mut old_count: Vec<u32> = Vec::with_capacity(d + 1);
        for level_flags in flags {
            let mut next = 0u32;
            let map = level_flags
                .iter()
                .map(|&fl| {
                    if fl & opp == 0 || fl == CUT {
                        next += 1;
                        next - 1
                    } else {
                        NONE
                    }
                })
                .collect();
            old_map.push(map);
            old_count.push(next);
        }

        let mut coords = Vec::with_capacity((old_count[0] as usize + cut_ids[1].len()) * n);
        for (v, &m) in old_map[0].iter().enumerate() {
            if m != NONE {
                coords.extend_from_slice(self.vertex(v));
            }
        }
        coords.extend_from_slice(new_coords);

        let mut levels: Vec<Level> = Vec::with_capacity(d + 1);
        levels.push(Level::leaves(old_count[0] as usize + cut_ids[1].len()));
        let mut scratch: Vec<u32> = Vec::new();
        for j in 1..=d {
            let old = &self.levels[j];
            let faces = old_count[j] as usize + new_faces[j].len();
            let mut level = Level::with_capacity(faces, old.faces().map(<[u32]>::len).sum::<usize>() + faces);
            for f in 0..old.len() {
                if old_map[j][f] == NONE {
                    continue;
                }
                let below = &old_map[j - 1];
                if flags[j][f] == CUT {
                    level.push_face(
                        old.children(f)
                            .iter()
                            .filter(|&&c| flags[j - 1][c as usize] & own != 0)
                            .map(|&c| below[c as usize]),
                    );
                    level.extend_last([old_count[j - 1] + new_index[j][f]]);
                } else {
                    level.push_face(old.children(f).iter().map(|&c| below[c as usize]));
                }
            }
            for nf in &new_faces[j] {
                scratch.clear();
                scratch.extend(nf.from_cut.iter().map(|&i| old_count[j - 1] + i));
                scratch.extend(nf.on_plane.iter().map(|&z| old_map[j - 1][z as usize]));
                scratch.sort_unstable();
                level.push_face(scratch.iter().copied());
            }
            levels.push(level);
        }
        FaceLattice::assemble(n, coords, levels)
    }
}
