//! Test-only helpers: random polytopes built by cutting boxes, and convex hull
//! volumes computed straight from vertex coordinates.
#![allow(dead_code)]

use lattice_reach::{box_lattice, FaceLattice, Hyperplane, SplitOutcome};
use rand::Rng;

/// Area of the convex hull of planar points (angular sort + shoelace).
pub fn hull_area_2d(points: &[Vec<f64>]) -> f64 {
    let hull = convex_hull_2d(points.iter().map(|p| [p[0], p[1]]).collect());
    let n = hull.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        twice += a[0] * b[1] - a[1] * b[0];
    }
    twice.abs() / 2.0
}

/// Monotone chain.
fn convex_hull_2d(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn sub(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Volume of the convex hull of points in R^3 by brute force: every plane
/// through three points with all points on one side is a facet plane; each
/// facet polygon is fanned into tetrahedra with the centroid.
pub fn hull_volume_3d(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let scale = points.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let side_tol = 1e-9 * scale;
    let centroid: Vec<f64> = (0..3)
        .map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n as f64)
        .collect();
    let mut planes: Vec<([f64; 3], f64)> = Vec::new();
    let mut volume = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut normal = cross3(sub(&points[j], &points[i]), sub(&points[k], &points[i]));
                let len = dot3(normal, normal).sqrt();
                if len <= 1e-12 * scale * scale {
                    continue;
                }
                normal = normal.map(|c| c / len);
                let offset = dot3(normal, [points[i][0], points[i][1], points[i][2]]);
                let side = |p: &Vec<f64>| dot3(normal, [p[0], p[1], p[2]]) - offset;
                let (mut above, mut below) = (false, false);
                for p in points {
                    let s = side(p);
                    above |= s > side_tol;
                    below |= s < -side_tol;
                }
                if above && below {
                    continue;
                }
                let (normal, offset) = if above {
                    (normal.map(|c| -c), -offset)
                } else {
                    (normal, offset)
                };
                if planes
                    .iter()
                    .any(|(m, o)| dot3(*m, normal) > 1.0 - 1e-9 && (o - offset).abs() < side_tol)
                {
                    continue;
                }
                planes.push((normal, offset));
                let on: Vec<&Vec<f64>> = points
                    .iter()
                    .filter(|p| (dot3(normal, [p[0], p[1], p[2]]) - offset).abs() < side_tol)
                    .collect();
                volume += facet_pyramid(&on, normal, &centroid);
            }
        }
    }
    volume
}

fn facet_pyramid(on: &[&Vec<f64>], normal: [f64; 3], apex: &[f64]) -> f64 {
    let m = on.len() as f64;
    let c: Vec<f64> = (0..3).map(|k| on.iter().map(|p| p[k]).sum::<f64>() / m).collect();
    let u = {
        let mut best = sub(on[0], &c);
        for p in on {
            let d = sub(p, &c);
            if dot3(d, d) > dot3(best, best) {
                best = d;
            }
        }
        let l = dot3(best, best).sqrt();
        best.map(|x| x / l)
    };
    let w = cross3(normal, u);
    let mut ordered: Vec<(f64, &Vec<f64>)> = on
        .iter()
        .map(|p| {
            let d = sub(p, &c);
            (dot3(d, w).atan2(dot3(d, u)), *p)
        })
        .collect();
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut area = 0.0;
    for i in 0..ordered.len() {
        let (a, b) = (ordered[i].1, ordered[(i + 1) % ordered.len()].1);
        area += dot3(cross3(sub(a, &c), sub(b, &c)), normal) / 2.0;
    }
    let height = dot3(normal, sub(&c, apex)).abs();
    area.abs() * height / 3.0
}

/// Hull volume for dimension 2 or 3.
pub fn hull_measure(points: &[Vec<f64>]) -> f64 {
    match points[0].len() {
        2 => hull_area_2d(points),
        3 => hull_volume_3d(points),
        d => panic!("no volume oracle for dimension {d}"),
    }
}

pub fn vertices_of(p: &FaceLattice) -> Vec<Vec<f64>> {
    p.vertices().map(<[f64]>::to_vec).collect()
}

/// Random hyperplane through a random interior point of `p`.
pub fn random_cut(rng: &mut impl Rng, p: &FaceLattice) -> Hyperplane {
    let n = p.ambient_dim();
    loop {
        let normal: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if normal.iter().map(|a| a * a).sum::<f64>() < 1e-4 {
            continue;
        }
        let mut weights: Vec<f64> = (0..p.num_vertices()).map(|_| rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let point: Vec<f64> = (0..n)
            .map(|k| p.vertices().zip(&weights).map(|(v, w)| v[k] * w).sum())
            .collect();
        let offset = -normal.iter().zip(&point).map(|(a, x)| a * x).sum::<f64>();
        return Hyperplane::new(normal, offset).unwrap();
    }
}

/// A random box in R^dim cut `cuts` times, keeping a random side each time.
pub fn random_polytope(rng: &mut impl Rng, dim: usize, cuts: usize) -> FaceLattice {
    let lower: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.5..3.0)).collect();
    let mut p = box_lattice(&lower, &upper).unwrap();
    for _ in 0..cuts {
        let h = random_cut(rng, &p);
        if let Ok(SplitOutcome::Divided { positive, negative }) = p.split_outcome(&h, 1e-9) {
            p = if rng.random::<bool>() { positive } else { negative };
        }
    }
    p
}

/// Tolerance for new vertices lying on the cutting hyperplane.
pub fn new_vertex_tol(eps: f64, h: &Hyperplane, p: &FaceLattice) -> f64 {
    let norm = h.normal().iter().map(|a| a * a).sum::<f64>().sqrt();
    let max_vertex = p
        .vertices()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    eps * (1.0 + norm * max_vertex)
}

/// Checks one split and returns a description of the first problem found.
pub fn check_split(p: &FaceLattice, h: &Hyperplane, eps: f64) -> Result<(), String> {
    let outcome = p.split_outcome(h, eps).map_err(|e| e.to_string())?;
    let SplitOutcome::Divided { positive, negative } = outcome else {
        return Ok(());
    };
    for (name, part) in [("positive", &positive), ("negative", &negative)] {
        part.validate().map_err(|e| format!("{name}: {e}"))?;
        if part.dim() != p.dim() {
            return Err(format!("{name} lost dimension"));
        }
    }
    let tol = new_vertex_tol(eps, h, p);
    let old: Vec<&[f64]> = p.vertices().collect();
    for part in [&positive, &negative] {
        for v in part.vertices() {
            if !old.contains(&v) && h.eval(v).abs() > tol {
                return Err(format!("new vertex {v:?} off plane by {}", h.eval(v)));
            }
        }
    }
    for v in positive.vertices() {
        if h.eval(v) < -tol {
            return Err(format!("positive part has vertex {v:?} below the plane"));
        }
    }
    for v in negative.vertices() {
        if h.eval(v) > tol {
            return Err(format!("negative part has vertex {v:?} above the plane"));
        }
    }
    if p.ambient_dim() <= 3 {
        let whole = hull_measure(&vertices_of(p));
        let parts = hull_measure(&vertices_of(&positive)) + hull_measure(&vertices_of(&negative));
        let rel = (whole - parts).abs() / whole;
        if rel > 1e-8 {
            return Err(format!("volume {whole} split into {parts} (relative error {rel:e})"));
        }
    }
    Ok(())
}
