//! Exact minimum time from a state-space model by scanning arrival times.
//!
//! For each candidate `t` a condensed feasibility LP asks whether bounded
//! inputs `u(0..t)` can steer `x_i` to `x_f` in exactly `t` steps. The first
//! feasible `t` is the minimum time. Independent candidates may be solved
//! concurrently; the smallest feasible one wins regardless of completion
//! order.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::exec::Strategy;
use crate::lpsolve::{LpProblem, LpSolver, LpStatus};
use crate::statespace::{StateSpaceModel, Trajectory};

/// Big-M constant of the literal mixed-integer formulation.
pub const BIG_M: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct BaselineSpec {
    pub model: StateSpaceModel,
    pub x_i: DVector<f64>,
    pub x_f: DVector<f64>,
    pub u_lower: DVector<f64>,
    pub u_upper: DVector<f64>,
    pub t0: usize,
    pub t1: usize,
}

impl BaselineSpec {
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.model.n(), self.model.m());
        if self.x_i.len() != n || self.x_f.len() != n {
            return Err(invalid(format!("x_i and x_f must have {n} entries")));
        }
        if self.u_lower.len() != m || self.u_upper.len() != m {
            return Err(invalid(format!("input bounds must have {m} entries")));
        }
        if self
            .u_lower
            .iter()
            .zip(self.u_upper.iter())
            .any(|(l, u)| !(l <= u))
        {
            return Err(invalid("input lower bound exceeds upper bound"));
        }
        if self.t0 > self.t1 {
            return Err(invalid(format!(
                "T0 = {} exceeds T1 = {}",
                self.t0, self.t1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineSolution {
    pub t_star: Option<usize>,
    /// Witness inputs `u(0..t_star)`.
    pub inputs: Vec<DVector<f64>>,
    /// Witness states `x(0..=t_star)`.
    pub states: Vec<DVector<f64>>,
    /// Number of feasibility LPs solved.
    pub lps_solved: usize,
}

impl BaselineSolution {
    /// Outputs along the witness, `y(0..t_star)`.
    pub fn output_trajectory(&self, model: &StateSpaceModel) -> Result<Trajectory> {
        let x0 = self
            .states
            .first()
            .ok_or_else(|| invalid("empty witness"))?;
        model.simulate_pair(x0, self.inputs.clone(), 0)
    }
}

/// Feasibility LP for arrival at exactly `t`: inputs `u(0..t)` with
/// `A^t x_i + sum A^{t-1-tau} B u(tau) = x_f`.
pub fn arrival_lp(spec: &BaselineSpec, t: usize) -> LpProblem {
    let (n, m) = (spec.model.n(), spec.model.m());
    let a = spec.model.a();
    let mut lp = LpProblem::new(m * t);
    for tau in 0..t {
        for c in 0..m {
            lp.set_bounds(tau * m + c, spec.u_lower[c], spec.u_upper[c]);
        }
    }
    // Columns of [A^{t-1}B, ..., B], built from the right.
    let mut reach = DMatrix::zeros(n, m * t);
    let mut block = spec.model.b().clone();
    for tau in (0..t).rev() {
        reach.view_mut((0, tau * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    let rhs = &spec.x_f - a.pow(t as u32) * &spec.x_i;
    for i in 0..n {
        let row = (0..m * t)
            .filter(|&j| reach[(i, j)] != 0.0)
            .map(|j| (j, reach[(i, j)]))
            .collect();
        lp.add_eq(row, rhs[i]);
    }
    lp
}

/// Witness inputs for arrival at `t`, or `None` if infeasible.
pub fn feasible_at(
    spec: &BaselineSpec,
    t: usize,
    solver: &dyn LpSolver,
) -> Result<Option<Vec<DVector<f64>>>> {
    let lp = arrival_lp(spec, t);
    let sol = solver.solve(&lp)?;
    let m = spec.model.m();
    match sol.status {
        LpStatus::Optimal => Ok(Some(
            sol.z
                .chunks(m.max(1))
                .take(t)
                .map(DVector::from_column_slice)
                .collect(),
        )),
        LpStatus::Infeasible => Ok(None),
        status => Err(Error::SolveFailed { status }),
    }
}

/// Ascending scan over `[T0, T1]`; with a parallel strategy, candidates are
/// solved in batches of the pool width.
pub fn solve_min_time_exact(
    spec: &BaselineSpec,
    solver: &dyn LpSolver,
    strategy: Strategy,
) -> Result<BaselineSolution> {
    spec.validate()?;
    let batch = strategy.batch_width();
    let mut lps_solved = 0;
    let mut t = spec.t0;
    while t <= spec.t1 {
        let ts: Vec<usize> = (t..=spec.t1.min(t + batch - 1)).collect();
        let results = strategy.map_slice(&ts, |&t| feasible_at(spec, t, solver));
        lps_solved += ts.len();
        for (&t, res) in ts.iter().zip(results) {
            if let Some(inputs) = res? {
                let states = spec.model.simulate(&spec.x_i, &inputs)?.states;
                log::info!("baseline: arrival feasible at t = {t} after {lps_solved} LPs");
                return Ok(BaselineSolution {
                    t_star: Some(t),
                    inputs,
                    states,
                    lps_solved,
                });
            }
        }
        t += ts.len();
    }
    Ok(BaselineSolution {
        t_star: None,
        inputs: Vec::new(),
        states: Vec::new(),
        lps_solved,
    })
}

/// The mixed-integer formulation with states as variables and big-M
/// terminal rows, solved by enumerating every one-hot indicator assignment.
/// Returns the smallest cost `t` over the feasible assignments.
pub fn solve_min_time_big_m(
    spec: &BaselineSpec,
    w: f64,
    solver: &dyn LpSolver,
) -> Result<Option<usize>> {
    spec.validate()?;
    let mut best = None;
    for active in spec.t0..=spec.t1 {
        let lp = big_m_lp(spec, w, active);
        match solver.solve(&lp)?.status {
            LpStatus::Optimal => best = Some(best.map_or(active, |b: usize| b.min(active))),
            LpStatus::Infeasible => {}
            status => return Err(Error::SolveFailed { status }),
        }
    }
    Ok(best)
}

/// Variables `x(0..=T1)` then `u(0..T1)`; `delta(active) = 1`, all others 0.
fn big_m_lp(spec: &BaselineSpec, w: f64, active: usize) -> LpProblem {
    let (n, m, t1) = (spec.model.n(), spec.model.m(), spec.t1);
    let x = |t: usize, i: usize| t * n + i;
    let u = |t: usize, c: usize| (t1 + 1) * n + t * m + c;
    let mut lp = LpProblem::new((t1 + 1) * n + t1 * m);
    for t in 0..=t1 {
        for i in 0..n {
            lp.set_free(x(t, i));
        }
    }
    for t in 0..t1 {
        for c in 0..m {
            lp.set_bounds(u(t, c), spec.u_lower[c], spec.u_upper[c]);
        }
    }
    let (a, b) = (spec.model.a(), spec.model.b());
    for t in 0..t1 {
        for i in 0..n {
            let mut row = vec![(x(t + 1, i), 1.0)];
            row.extend(
                (0..n)
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| (x(t, j), -a[(i, j)])),
            );
            row.extend(
                (0..m)
                    .filter(|&c| b[(i, c)] != 0.0)
                    .map(|c| (u(t, c), -b[(i, c)])),
            );
            lp.add_eq(row, 0.0);
        }
    }
    for i in 0..n {
        lp.add_eq(vec![(x(0, i), 1.0)], spec.x_i[i]);
    }
    for t in spec.t0..=t1 {
        let slack = if t == active { 0.0 } else { w };
        for i in 0..n {
            lp.add_le(vec![(x(t, i), 1.0)], spec.x_f[i] + slack);
            lp.add_le(vec![(x(t, i), -1.0)], -spec.x_f[i] + slack);
        }
    }
    lp
}
