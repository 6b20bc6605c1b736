//! Small linear programs used for membership tests and the region oracle.
//! Backed by `microlp`.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome, Variable};

use crate::error::{Error, Result};

fn solve(problem: &Problem) -> Result<microlp::Solution> {
    match problem.solve() {
        Ok(SolveOutcome::Solution(s)) => Ok(s),
        Ok(SolveOutcome::Interrupted(_)) => Err(Error::Lp("solve interrupted".into())),
        Err(e) => Err(Error::Lp(e.to_string())),
    }
}

fn expr(terms: impl IntoIterator<Item = (Variable, f64)>) -> LinearExpr {
    terms.into_iter().filter(|(_, c)| *c != 0.0).collect()
}

/// Smallest `s` such that some convex combination of `vertices` is within
/// infinity-norm distance `s` of `x`.
pub fn convex_combination_residual<'a>(vertices: impl ExactSizeIterator<Item = &'a [f64]>, x: &[f64]) -> Result<f64> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let slack = problem.add_var(1.0, (0.0, f64::INFINITY));
    let mut weights = Vec::with_capacity(vertices.len());
    let mut columns: Vec<&[f64]> = Vec::with_capacity(vertices.len());
    for v in vertices {
        weights.push(problem.add_var(0.0, (0.0, f64::INFINITY)));
        columns.push(v);
    }
    problem.add_constraint(expr(weights.iter().map(|&w| (w, 1.0))), ComparisonOp::Eq, 1.0);
    for (j, &xj) in x.iter().enumerate() {
        let row: Vec<(Variable, f64)> = weights.iter().zip(&columns).map(|(&w, v)| (w, v[j])).collect();
        problem.add_constraint(expr(row.iter().copied().chain([(slack, -1.0)])), ComparisonOp::Le, xj);
        problem.add_constraint(expr(row.into_iter().chain([(slack, 1.0)])), ComparisonOp::Ge, xj);
    }
    Ok(solve(&problem)?.objective())
}

/// A linear inequality `normal·x + offset >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Chebyshev-style depth of `{x in box : every inequality holds}`.
///
/// Maximizes `t <= 1` subject to `normal·x + offset >= t·|normal|` for each
/// inequality and `lower_i + t <= x_i <= upper_i - t` on every coordinate
/// where `lower_i < upper_i`. A positive optimum means the set has interior.
/// Inequalities with a zero normal must be handled by the caller.
pub fn interior_depth(inequalities: &[Inequality], lower: &[f64], upper: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let depth = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let xs: Vec<Variable> = lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| problem.add_var(0.0, (l, u)))
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        if lower[i] < upper[i] {
            problem.add_constraint(expr([(x, 1.0), (depth, -1.0)]), ComparisonOp::Ge, lower[i]);
            problem.add_constraint(expr([(x, 1.0), (depth, 1.0)]), ComparisonOp::Le, upper[i]);
        }
    }
    for ineq in inequalities {
        let norm = ineq.normal.iter().map(|a| a * a).sum::<f64>().sqrt();
        let terms = xs
            .iter()
            .zip(&ineq.normal)
            .map(|(&x, &a)| (x, a))
            .chain([(depth, -norm)]);
        problem.add_constraint(expr(terms), ComparisonOp::Ge, -ineq.offset);
    }
    let solution = solve(&problem)?;
    let point = xs.iter().map(|&x| solution.var_value(x)).collect();
    Ok((solution.objective(), point))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_inside_and_outside() {
        let square = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let verts = || square.iter().map(|v| v.as_slice());
        assert!(convex_combination_residual(verts(), &[0.3, 0.9]).unwrap() < 1e-12);
        let r = convex_combination_residual(verts(), &[1.5, 0.5]).unwrap();
        assert!((r - 0.5).abs() < 1e-9, "{r}");
    }

    #[test]
    fn depth_of_unit_box_halves() {
        // x0 >= 0.5 inside [0, 1]^2: the largest inscribed ball has radius 0.25.
        let ineq = Inequality {
            normal: vec![1.0, 0.0],
            offset: -0.5,
        };
        let (t, x) = interior_depth(&[ineq], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((t - 0.25).abs() < 1e-9, "{t}");
        assert!(x[0] >= 0.5 - 1e-9);

        let outside = Inequality {
            normal: vec![1.0, 1.0],
            offset: -3.0,
        };
        let (t, _) = interior_depth(&[outside], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(t < 0.0);
    }
}
