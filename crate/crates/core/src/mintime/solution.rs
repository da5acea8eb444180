use std::collections::BTreeMap;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::HankelModel;
use crate::linalg;
use crate::lpsolve::{LpSolution, LpSolver, LpStatus, RowRef};
use crate::statespace::Trajectory;

use super::assemble::check_model;
use super::{assemble_lp, AssembledLp, ConstraintFamily, MinTimeSpec, ModelForm};

#[derive(Debug, Clone, PartialEq)]
pub struct SlackEntry {
    pub t: usize,
    pub eps: Vec<f64>,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub status: LpStatus,
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub runtime: Duration,
    pub num_vars: usize,
    pub num_eq: usize,
    pub num_ub: usize,
    pub nnz: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct MinTimeSolution {
    /// Stitched trajectory over `t = -K_i .. N-1`.
    pub trajectory: Trajectory,
    pub eps_schedule: Vec<SlackEntry>,
    /// First `t` whose slack is below the arrival tolerance.
    pub t_star: Option<usize>,
    pub objective: f64,
    pub stats: SolverStats,
}

impl MinTimeSolution {
    fn offset(&self, t: i64) -> usize {
        (t - self.trajectory.start_index) as usize
    }

    pub fn input(&self, t: i64) -> &DVector<f64> {
        &self.trajectory.inputs[self.offset(t)]
    }

    pub fn output(&self, t: i64) -> &DVector<f64> {
        &self.trajectory.outputs[self.offset(t)]
    }

    /// Planned inputs `u(0), .., u(len-1)`.
    pub fn planned_inputs(&self, len: usize) -> Vec<DVector<f64>> {
        (0..len as i64).map(|t| self.input(t).clone()).collect()
    }

    /// Largest deviation of the first `K_i` samples from the initial pair.
    pub fn initial_mismatch(&self, spec: &MinTimeSpec) -> f64 {
        let traj = &self.trajectory;
        let got = DVector::from_iterator(
            spec.u_i.len() + spec.y_i.len(),
            traj.inputs[..spec.k_i]
                .iter()
                .flat_map(|v| v.iter().copied())
                .chain(
                    traj.outputs[..spec.k_i]
                        .iter()
                        .flat_map(|v| v.iter().copied()),
                ),
        );
        let want =
            DVector::from_iterator(got.len(), spec.u_i.iter().chain(spec.y_i.iter()).copied());
        linalg::sup_norm((got - want).as_slice())
    }

    /// Largest path-constraint violation over the planned samples.
    pub fn path_violation(&self, spec: &MinTimeSpec) -> f64 {
        let n = self.trajectory.len() - spec.k_i;
        (0..n as i64).fold(0.0, |acc, t| {
            acc.max(spec.path.violation(self.input(t), self.output(t)))
        })
    }

    /// First `t` whose slack norm is at most `tol`. With `tol = 0` this is
    /// the exact arrival time.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.eps_schedule.iter().find(|e| e.l1 <= tol).map(|e| e.t)
    }

    /// Stacked outputs of the target window starting at `t`.
    pub fn target_window(&self, t: usize, k_f: usize) -> DVector<f64> {
        let p = self.trajectory.outputs[0].len();
        DVector::from_iterator(
            p * k_f,
            (t..t + k_f).flat_map(|s| self.output(s as i64).iter().copied().collect::<Vec<_>>()),
        )
    }
}

pub fn extract_solution(
    spec: &MinTimeSpec,
    assembled: &AssembledLp,
    lp: &LpSolution,
) -> Result<MinTimeSolution> {
    let layout = &assembled.layout;
    if lp.z.len() != layout.num_vars() {
        return Err(Error::Internal(format!(
            "LP solution has {} entries, layout expects {}",
            lp.z.len(),
            layout.num_vars()
        )));
    }
    let z = &lp.z;
    let k_i = layout.k_i as i64;
    let times = -k_i..layout.horizon as i64;
    let inputs = times
        .clone()
        .map(|t| DVector::from_iterator(layout.m, (0..layout.m).map(|c| z[layout.u_var(t, c)])))
        .collect();
    let outputs = times
        .map(|t| DVector::from_iterator(layout.p, (0..layout.p).map(|c| z[layout.y_var(t, c)])))
        .collect();
    let trajectory = Trajectory::new(inputs, outputs, -k_i)?;

    let eps_schedule: Vec<SlackEntry> = (spec.t0..=spec.t1)
        .map(|t| {
            let eps: Vec<f64> = layout.slack_range(t).map(|i| z[i].max(0.0)).collect();
            let l1 = eps.iter().sum();
            SlackEntry { t, eps, l1 }
        })
        .collect();
    let t_star = eps_schedule
        .iter()
        .find(|e| e.l1 < spec.eps_tol)
        .map(|e| e.t);
    let problem = &assembled.problem;
    Ok(MinTimeSolution {
        trajectory,
        eps_schedule,
        t_star,
        objective: lp.objective,
        stats: SolverStats {
            status: lp.status,
            iterations: lp.iterations,
            phase1_iterations: lp.phase1_iterations,
            runtime: lp.runtime,
            num_vars: problem.num_vars(),
            num_eq: problem.num_eq(),
            num_ub: problem.num_ub(),
            nnz: problem.nnz(),
            max_violation: lp.max_violation,
        },
    })
}

/// Assembles, solves and reads back the minimum-time LP.
pub fn solve_min_time(
    spec: &MinTimeSpec,
    model: &HankelModel,
    form: ModelForm,
    solver: &dyn LpSolver,
) -> Result<MinTimeSolution> {
    let assembled = assemble_lp(spec, model, form)?;
    let lp = solver.solve(&assembled.problem)?;
    log::info!(
        "min-time LP ({:?}): {:?} after {} iterations in {:.3?}",
        form,
        lp.status,
        lp.iterations,
        lp.runtime
    );
    match lp.status {
        LpStatus::Optimal => extract_solution(spec, &assembled, &lp),
        LpStatus::Infeasible => Err(Error::Infeasible(diagnose(spec, model, &assembled, &lp))),
        status => Err(Error::SolveFailed { status }),
    }
}

/// Best-effort description of why the LP has no feasible point.
fn diagnose(
    spec: &MinTimeSpec,
    model: &HankelModel,
    assembled: &AssembledLp,
    lp: &LpSolution,
) -> String {
    if check_model(spec, model).is_ok() {
        if let Some(res) = initial_extension_residual(spec, model) {
            if res
                > 1e-6
                    * (1.0
                        + linalg::sup_norm(spec.u_i.as_slice())
                            .max(linalg::sup_norm(spec.y_i.as_slice())))
            {
                return format!(
                    "{}: the initial pair is not the start of any trajectory in the data model (residual {res:.3e})",
                    ConstraintFamily::Initial
                );
            }
        }
    }
    let mut counts: BTreeMap<ConstraintFamily, (usize, usize, usize)> = BTreeMap::new();
    for r in &lp.infeasible_rows {
        let tag = match *r {
            RowRef::Eq(i) => assembled.eq_tags.get(i),
            RowRef::Ub(i) => assembled.ub_tags.get(i),
        };
        if let Some(&(fam, idx)) = tag {
            let e = counts.entry(fam).or_insert((0, usize::MAX, 0));
            e.0 += 1;
            e.1 = e.1.min(idx);
            e.2 = e.2.max(idx);
        }
    }
    if counts.is_empty() {
        return "phase 1 could not drive the artificial variables to zero".into();
    }
    let parts: Vec<String> = counts
        .iter()
        .map(|(fam, (c, lo, hi))| {
            let what = if *fam == ConstraintFamily::Terminal || *fam == ConstraintFamily::Path {
                "t"
            } else {
                "segment"
            };
            format!("{fam} ({c} rows, {what} {lo}..={hi})")
        })
        .collect();
    format!("phase 1 residual remains in: {}", parts.join(", "))
}

/// Distance of the initial pair from the rows of `H` it occupies.
fn initial_extension_residual(spec: &MinTimeSpec, model: &HankelModel) -> Option<f64> {
    let (m, p, l, k_i) = (spec.m(), spec.p(), spec.window, spec.k_i);
    let h = model.stacked();
    let rows: Vec<usize> = (0..m * k_i)
        .chain((0..p * k_i).map(|r| m * l + r))
        .collect();
    let sub = DMatrix::from_fn(rows.len(), h.ncols(), |i, j| h[(rows[i], j)]);
    let v = DVector::from_iterator(rows.len(), spec.u_i.iter().chain(spec.y_i.iter()).copied());
    let q = linalg::column_basis(&sub);
    Some(linalg::projection_residual_sup(&q, &v))
}
