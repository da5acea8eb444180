//! Self-contained linear-programming solver.
//!
//! Problems are `min c^T z` subject to `A_eq z = b_eq`, `A_ub z <= b_ub` and
//! per-variable bounds `lower <= z <= upper` (either side may be infinite).
//! Constraint rows are stored sparsely; the solver itself is a dense revised
//! simplex, see [`simplex`].

mod mps;
pub mod simplex;

use std::time::Duration;

use crate::error::{invalid, Result};
use crate::exec::Strategy;

pub use mps::write_mps;
pub use simplex::DenseSimplex;

/// One sparse constraint row: `(variable, coefficient)` pairs.
pub type Row = Vec<(usize, f64)>;

#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    eq_rows: Vec<Row>,
    eq_rhs: Vec<f64>,
    ub_rows: Vec<Row>,
    ub_rhs: Vec<f64>,
}

/// Identifies a constraint row of an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowRef {
    Eq(usize),
    Ub(usize),
}

impl LpProblem {
    /// `num_vars` variables, zero objective, all bounds `[0, +inf)`.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn num_ub(&self) -> usize {
        self.ub_rows.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_free(&mut self, var: usize) {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
    }

    /// Add `sum coeff * z[var] = rhs` and return its index among equalities.
    pub fn add_eq(&mut self, row: Row, rhs: f64) -> usize {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self.eq_rows.len() - 1
    }

    /// Add `sum coeff * z[var] <= rhs` and return its index among inequalities.
    pub fn add_le(&mut self, row: Row, rhs: f64) -> usize {
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
        self.ub_rows.len() - 1
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn eq_rows(&self) -> &[Row] {
        &self.eq_rows
    }

    pub fn eq_rhs(&self) -> &[f64] {
        &self.eq_rhs
    }

    pub fn ub_rows(&self) -> &[Row] {
        &self.ub_rows
    }

    pub fn ub_rhs(&self) -> &[f64] {
        &self.ub_rhs
    }

    /// Total number of stored non-zero constraint coefficients.
    pub fn nnz(&self) -> usize {
        self.eq_rows
            .iter()
            .chain(&self.ub_rows)
            .map(|r| r.len())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(invalid("objective coefficients must be finite"));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(invalid(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
            if lo > hi {
                return Err(invalid(format!(
                    "variable {j} has lower bound {lo} above upper bound {hi}"
                )));
            }
        }
        let rows = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .chain(self.ub_rows.iter().zip(&self.ub_rhs));
        for (row, rhs) in rows {
            if !rhs.is_finite() {
                return Err(invalid("right-hand sides must be finite"));
            }
            for &(var, coeff) in row {
                if var >= n {
                    return Err(invalid(format!(
                        "row references variable {var} but only {n} exist"
                    )));
                }
                if !coeff.is_finite() {
                    return Err(invalid("constraint coefficients must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate_objective(&self, z: &[f64]) -> f64 {
        self.objective.iter().zip(z).map(|(c, x)| c * x).sum()
    }

    /// Largest absolute violation of any constraint or bound at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let dot = |row: &Row| row.iter().map(|&(j, a)| a * z[j]).sum::<f64>();
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r) - b).abs());
        let ub = self
            .ub_rows
            .iter()
            .zip(&self.ub_rhs)
            .map(|(r, b)| (dot(r) - b).max(0.0));
        let bounds =
            (0..self.num_vars()).map(|j| (self.lower[j] - z[j]).max(z[j] - self.upper[j]).max(0.0));
        eq.chain(ub).chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub max_violation: f64,
    /// Shadow prices, equality rows first, then inequality rows. With
    /// `d = c - A^T duals`, an optimal point has `d_j >= 0` at a lower bound
    /// and `d_j <= 0` at an upper bound.
    pub row_duals: Vec<f64>,
    /// Rows whose phase-1 artificial stayed positive when infeasible.
    pub infeasible_rows: Vec<RowRef>,
    pub runtime: Duration,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Primal feasibility tolerance (on row-scaled constraints).
    pub tol_feas: f64,
    /// Relative reduced-cost tolerance.
    pub tol_opt: f64,
    pub max_iter: usize,
    /// Pivots between refactorizations of the basis inverse.
    pub refactor_every: usize,
    /// How pricing is spread over columns.
    pub strategy: Strategy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-9,
            tol_opt: 1e-11,
            max_iter: 200_000,
            refactor_every: 100,
            strategy: Strategy::default(),
        }
    }
}

/// Anything that can solve an [`LpProblem`] under the status contract of
/// [`LpSolution`]. [`DenseSimplex`] is the in-tree implementation.
pub trait LpSolver: Sync {
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution>;
}

/// Solve with the in-tree dense simplex.
pub fn solve_lp(problem: &LpProblem, options: SolverOptions) -> Result<LpSolution> {
    DenseSimplex::new(options).solve(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_bad_input() {
        let mut lp = LpProblem::new(2);
        lp.set_objective(0, f64::NAN);
        assert!(lp.validate().is_err());
        let mut lp = LpProblem::new(2);
        lp.add_le(vec![(0, 1.0)], f64::INFINITY);
        assert!(lp.validate().is_err());
        let mut lp = LpProblem::new(1);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(lp.validate().is_err());
        let mut lp = LpProblem::new(1);
        lp.add_eq(vec![(3, 1.0)], 0.0);
        assert!(lp.validate().is_err());
    }

    #[test]
    fn violation_measure() {
        let mut lp = LpProblem::new(2);
        lp.add_eq(vec![(0, 1.0), (1, 1.0)], 1.0);
        lp.add_le(vec![(0, 1.0)], 0.25);
        assert_eq!(lp.max_violation(&[0.5, 0.5]), 0.25);
        assert_eq!(lp.max_violation(&[0.25, 0.75]), 0.0);
        assert_eq!(lp.max_violation(&[-0.5, 1.5]), 0.5);
    }
}
