//! Two-phase bounded-variable revised simplex with an explicit dense basis
//! inverse.
//!
//! Internally every inequality row gets a slack (`a z + s = b`, `s >= 0`) and
//! every row an artificial column. Rows are scaled so their largest
//! coefficient is one, then structural columns are equilibrated. Phase 1
//! minimizes the sum of artificials; phase 2 fixes them at zero and minimizes
//! the true objective.
//!
//! Before phase 1 a crash pass puts a maximal well-conditioned set of free
//! columns into the basis. Free basics never leave, and the other free columns
//! are only priced once nothing else improves.
//!
//! Pricing is Dantzig's rule over cyclic partial windows. After a run of
//! degenerate pivots the solver falls back to Bland's smallest-index rule for
//! both the entering and leaving choice, which rules out cycling; one
//! non-degenerate pivot switches Dantzig back on. The ratio test is Harris's
//! two-pass rule. The basis inverse is updated in product form and recomputed
//! by Gauss-Jordan elimination every `refactor_every` pivots and before
//! optimality is declared.

use std::time::Instant;

use crate::error::{Error, Result};

use super::{LpProblem, LpSolution, LpSolver, LpStatus, Row, RowRef, SolverOptions};

/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 25;
/// Smallest `|alpha|` accepted as a pivot on the row-scaled problem.
const PIVOT_TOL: f64 = 1e-7;
/// Relative residual below which a free column counts as dependent.
const CRASH_TOL: f64 = 1e-6;
const STALL_RTOL: f64 = 1e-13;
const MAX_STALLS: usize = 3;
const PRICING_CHUNK: usize = 4096;
/// Columns scanned per partial-pricing window (at least an eighth of all).
const PRICING_WINDOW: usize = 2048;

#[derive(Debug, Clone)]
pub struct DenseSimplex {
    options: SolverOptions,
}

impl DenseSimplex {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self::new(SolverOptions::default())
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution> {
        problem.validate()?;
        let start = Instant::now();
        let mut sol = match Tableau::build(problem, self.options) {
            Built::Ready(mut tab) => tab.run(problem)?,
            Built::TriviallyInfeasible(rows) => LpSolution {
                status: LpStatus::Infeasible,
                z: vec![0.0; problem.num_vars()],
                objective: 0.0,
                iterations: 0,
                phase1_iterations: 0,
                max_violation: f64::INFINITY,
                row_duals: vec![0.0; problem.num_eq() + problem.num_ub()],
                infeasible_rows: rows,
                runtime: Default::default(),
            },
        };
        sol.runtime = start.elapsed();
        Ok(sol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

enum Built {
    Ready(Box<Tableau>),
    TriviallyInfeasible(Vec<RowRef>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    opts: SolverOptions,
    m: usize,
    n_struct: usize,
    art_start: usize,
    n_total: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    row_ref: Vec<RowRef>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    binv: Vec<f64>,
    pi: Vec<f64>,
    alpha: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    excluded: Vec<bool>,
    excluded_list: Vec<usize>,
    /// Free columns left out by the crash; priced only at optimality.
    deferred: Vec<bool>,
    price_cursor: usize,
}

/// Merge duplicate entries and drop zeros.
fn normalize_row(row: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut r: Vec<(usize, f64)> = row.to_vec();
    r.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(r.len());
    for (j, a) in r {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

impl Tableau {
    fn build(problem: &LpProblem, opts: SolverOptions) -> Built {
        let n = problem.num_vars();
        let mut rows: Vec<(Row, f64, RowRef)> = Vec::new();
        let mut dead = Vec::new();
        let all = problem
            .eq_rows()
            .iter()
            .zip(problem.eq_rhs())
            .enumerate()
            .map(|(i, (r, b))| (r, *b, RowRef::Eq(i)))
            .chain(
                problem
                    .ub_rows()
                    .iter()
                    .zip(problem.ub_rhs())
                    .enumerate()
                    .map(|(i, (r, b))| (r, *b, RowRef::Ub(i))),
            );
        for (row, b, rref) in all {
            let row = normalize_row(row);
            if row.is_empty() {
                let violated = match rref {
                    RowRef::Eq(_) => b.abs() > opts.tol_feas,
                    RowRef::Ub(_) => b < -opts.tol_feas,
                };
                if violated {
                    dead.push(rref);
                }
                continue;
            }
            rows.push((row, b, rref));
        }
        if !dead.is_empty() {
            return Built::TriviallyInfeasible(dead);
        }

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| matches!(r.2, RowRef::Ub(_))).count();
        let art_start = n + n_slack;
        let n_total = art_start + m;

        let mut row_scale = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut row_ref = Vec::with_capacity(m);
        // Column counts for CSC.
        let mut counts = vec![0usize; n_total];
        for (i, (row, b, rref)) in rows.iter().enumerate() {
            let amax = row.iter().fold(0.0f64, |acc, e| acc.max(e.1.abs()));
            let s = 1.0 / amax;
            row_scale.push(s);
            rhs.push(b * s);
            row_ref.push(*rref);
            for &(j, _) in row {
                counts[j] += 1;
            }
            let _ = i;
        }
        let mut slack_of_row = vec![usize::MAX; m];
        let mut next_slack = n;
        for (i, (_, _, rref)) in rows.iter().enumerate() {
            if matches!(rref, RowRef::Ub(_)) {
                slack_of_row[i] = next_slack;
                counts[next_slack] += 1;
                next_slack += 1;
            }
            counts[art_start + i] += 1;
        }
        let mut col_ptr = vec![0usize; n_total + 1];
        for j in 0..n_total {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let nnz = col_ptr[n_total];
        let mut row_idx = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = col_ptr.clone();
        for (i, (row, _, _)) in rows.iter().enumerate() {
            for &(j, a) in row {
                row_idx[fill[j]] = i;
                vals[fill[j]] = a * row_scale[i];
                fill[j] += 1;
            }
        }
        drop(rows);

        // Equilibrate structural columns; the tableau works in x / col_scale.
        let mut col_scale = vec![1.0; n];
        for (j, cs) in col_scale.iter_mut().enumerate() {
            let span = col_ptr[j]..fill[j];
            let cmax = vals[span.clone()]
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()));
            if cmax > 0.0 {
                *cs = 1.0 / cmax;
                vals[span].iter_mut().for_each(|v| *v *= *cs);
            }
        }

        let mut lo = vec![0.0; n_total];
        let mut hi = vec![f64::INFINITY; n_total];
        for j in 0..n {
            lo[j] = problem.lower()[j] / col_scale[j];
            hi[j] = problem.upper()[j] / col_scale[j];
        }

        let mut x = vec![0.0; n_total];
        let mut state = vec![VarState::Lower; n_total];
        for j in 0..n {
            if lo[j].is_finite() {
                x[j] = lo[j];
                state[j] = VarState::Lower;
            } else if hi[j].is_finite() {
                x[j] = hi[j];
                state[j] = VarState::Upper;
            } else {
                x[j] = 0.0;
                state[j] = VarState::Zero;
            }
        }

        // Residual after placing structurals at their starting bounds.
        let mut resid = rhs.clone();
        for j in 0..n {
            if x[j] != 0.0 {
                for k in col_ptr[j]..col_ptr[j + 1] {
                    resid[row_idx[k]] -= vals[k] * x[j];
                }
            }
        }

        let mut head = vec![0usize; m];
        let mut binv = vec![0.0; m * m];
        let mut cost = vec![0.0; n_total];
        for i in 0..m {
            let art = art_start + i;
            let slack = slack_of_row[i];
            if slack != usize::MAX {
                row_idx[col_ptr[slack]] = i;
                vals[col_ptr[slack]] = 1.0;
            }
            let sign = if resid[i] < 0.0 { -1.0 } else { 1.0 };
            row_idx[col_ptr[art]] = i;
            vals[col_ptr[art]] = sign;
            if slack != usize::MAX && resid[i] >= 0.0 {
                head[i] = slack;
                state[slack] = VarState::Basic;
                x[slack] = resid[i];
                binv[i * m + i] = 1.0;
                hi[art] = 0.0;
            } else {
                head[i] = art;
                state[art] = VarState::Basic;
                x[art] = resid[i].abs();
                binv[i * m + i] = sign;
                cost[art] = 1.0;
            }
        }

        Built::Ready(Box::new(Tableau {
            opts,
            m,
            n_struct: n,
            art_start,
            n_total,
            col_ptr,
            row_idx,
            vals,
            rhs,
            row_scale,
            col_scale,
            row_ref,
            lo,
            hi,
            cost,
            x,
            state,
            head,
            binv,
            pi: vec![0.0; m],
            alpha: vec![0.0; m],
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            excluded: vec![false; n_total],
            excluded_list: Vec::new(),
            deferred: vec![false; n_total],
            price_cursor: 0,
        }))
    }

    fn run(&mut self, problem: &LpProblem) -> Result<LpSolution> {
        self.crash_free()?;
        let phase1 = self.optimize()?;
        let phase1_iterations = self.iterations;
        if phase1 == Outcome::IterationLimit {
            return Ok(self.finish(problem, LpStatus::IterationLimit, phase1_iterations));
        }
        let infeas: f64 = (self.art_start..self.n_total)
            .map(|j| self.x[j].max(0.0))
            .sum();
        let bscale = self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > self.opts.tol_feas * (1.0 + bscale) {
            return Ok(self.finish(problem, LpStatus::Infeasible, phase1_iterations));
        }
        for j in self.art_start..self.n_total {
            self.hi[j] = 0.0;
            if self.state[j] != VarState::Basic {
                self.x[j] = 0.0;
                self.state[j] = VarState::Lower;
            }
        }
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        for (j, c) in problem.objective().iter().enumerate() {
            self.cost[j] = c * self.col_scale[j];
        }
        self.degenerate_run = 0;
        let mut outcome = self.optimize()?;
        let vtol = self.opts.tol_feas * (1.0 + bscale);
        if outcome == Outcome::Optimal && self.scaled_violation() > vtol {
            self.refactor()?;
            outcome = self.optimize()?;
            let v = self.scaled_violation();
            if outcome == Outcome::Optimal && v > vtol {
                return Err(Error::Internal(format!(
                    "simplex lost feasibility (violation {v:.3e})"
                )));
            }
        }
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::IterationLimit => LpStatus::IterationLimit,
        };
        Ok(self.finish(problem, status, phase1_iterations))
    }

    fn finish(
        &mut self,
        problem: &LpProblem,
        status: LpStatus,
        phase1_iterations: usize,
    ) -> LpSolution {
        // Nonbasic values are read from the caller's bounds so they come back
        // bit-exact rather than through the column scale.
        let z: Vec<f64> = (0..self.n_struct)
            .map(|j| match self.state[j] {
                VarState::Lower if self.lo[j].is_finite() => problem.lower()[j],
                VarState::Upper if self.hi[j].is_finite() => problem.upper()[j],
                _ => self.x[j] * self.col_scale[j],
            })
            .collect();
        self.compute_pi();
        let mut row_duals = vec![0.0; problem.num_eq() + problem.num_ub()];
        for i in 0..self.m {
            let idx = match self.row_ref[i] {
                RowRef::Eq(k) => k,
                RowRef::Ub(k) => problem.num_eq() + k,
            };
            row_duals[idx] = self.pi[i] * self.row_scale[i];
        }
        let infeasible_rows = if status == LpStatus::Infeasible {
            (0..self.m)
                .filter(|&i| self.x[self.art_start + i] > self.opts.tol_feas)
                .map(|i| self.row_ref[i])
                .collect()
        } else {
            Vec::new()
        };
        LpSolution {
            status,
            objective: problem.evaluate_objective(&z),
            max_violation: self.scaled_violation(),
            z,
            iterations: self.iterations,
            phase1_iterations,
            row_duals,
            infeasible_rows,
            runtime: Default::default(),
        }
    }

    /// Largest violation of row-scaled constraints and structural bounds.
    fn scaled_violation(&self) -> f64 {
        let mut act = vec![0.0; self.m];
        for j in 0..self.art_start {
            let xj = self.x[j];
            if xj != 0.0 {
                for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                    act[self.row_idx[k]] += self.vals[k] * xj;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.m {
            worst = worst.max((act[i] - self.rhs[i]).abs());
        }
        for j in 0..self.art_start {
            worst = worst
                .max(self.lo[j] - self.x[j])
                .max(self.x[j] - self.hi[j]);
        }
        worst
    }

    fn compute_pi(&mut self) {
        let m = self.m;
        self.pi.iter_mut().for_each(|p| *p = 0.0);
        for i in 0..m {
            let cb = self.cost[self.head[i]];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (p, b) in self.pi.iter_mut().zip(row) {
                    *p += cb * b;
                }
            }
        }
    }

    /// Reduced cost of column `j` and the magnitude of the terms it cancels.
    fn reduced_cost(&self, j: usize) -> (f64, f64) {
        let mut d = self.cost[j];
        let mut scale = d.abs();
        for k in self.col_ptr[j]..self.col_ptr[j + 1] {
            let t = self.pi[self.row_idx[k]] * self.vals[k];
            d -= t;
            scale += t.abs();
        }
        (d, scale)
    }

    fn phase_objective(&self) -> f64 {
        self.cost
            .iter()
            .zip(&self.x)
            .map(|(c, x)| if *c == 0.0 { 0.0 } else { c * x })
            .sum()
    }

    /// Moves a well-conditioned maximal independent set of free structural
    /// columns into the starting basis. Free basics never leave, so every
    /// other free column stays in their span and is deferred.
    fn crash_free(&mut self) -> Result<()> {
        let m = self.m;
        let free: Vec<usize> = (0..self.n_struct)
            .filter(|&j| {
                self.lo[j] == f64::NEG_INFINITY
                    && self.hi[j] == f64::INFINITY
                    && self.col_ptr[j + 1] > self.col_ptr[j]
            })
            .collect();
        if free.is_empty() {
            return Ok(());
        }
        let (col_ptr, row_idx, vals) = (&self.col_ptr, &self.row_idx, &self.vals);
        let col = |j: usize| (col_ptr[j]..col_ptr[j + 1]).map(move |k| (row_idx[k], vals[k]));

        // Greedy column-pivoted Gram-Schmidt.
        let norm2: Vec<f64> = free
            .iter()
            .map(|&j| col(j).map(|(_, v)| v * v).sum())
            .collect();
        let cutoff2 = CRASH_TOL * CRASH_TOL * norm2.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut resid2 = norm2;
        let mut done = vec![false; free.len()];
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut chosen = Vec::new();
        while basis.len() < m {
            let Some(best) = (0..free.len())
                .filter(|&i| !done[i])
                .max_by(|&a, &b| resid2[a].total_cmp(&resid2[b]))
            else {
                break;
            };
            if resid2[best] <= cutoff2 {
                break;
            }
            let mut r = vec![0.0; m];
            for (i, v) in col(free[best]) {
                r[i] = v;
            }
            for _ in 0..2 {
                for q in &basis {
                    let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                    r.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
                }
            }
            let nr2: f64 = r.iter().map(|x| x * x).sum();
            if nr2 < 0.5 * resid2[best] {
                // Downdated estimate was stale.
                resid2[best] = nr2;
                done[best] = nr2 <= cutoff2;
                continue;
            }
            done[best] = true;
            let inv = 1.0 / nr2.sqrt();
            r.iter_mut().for_each(|x| *x *= inv);
            let dots = self.opts.strategy.map_range(free.len(), |i| {
                if done[i] {
                    0.0
                } else {
                    col(free[i]).map(|(k, v)| r[k] * v).sum::<f64>()
                }
            });
            resid2.iter_mut().zip(&dots).for_each(|(e, d)| *e -= d * d);
            basis.push(r);
            chosen.push(free[best]);
        }
        drop(basis);

        // A pivot row for each chosen column, by elimination on the columns.
        let k = chosen.len();
        let mut mat = vec![0.0; k * m];
        for (c, &j) in chosen.iter().enumerate() {
            for (i, v) in col(j) {
                mat[c * m + i] = v;
            }
        }
        let mut used = vec![false; m];
        let mut pivots = Vec::with_capacity(k);
        for c in 0..k {
            let (head, tail) = mat.split_at_mut((c + 1) * m);
            let piv = &head[c * m..];
            let Some((p, best)) = (0..m)
                .filter(|&i| !used[i])
                .map(|i| (i, piv[i].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
            else {
                break;
            };
            if best <= CRASH_TOL {
                continue;
            }
            used[p] = true;
            pivots.push((chosen[c], p));
            for later in tail.chunks_mut(m) {
                let f = later[p] / piv[p];
                if f != 0.0 {
                    for i in 0..m {
                        if !used[i] {
                            later[i] -= f * piv[i];
                        }
                    }
                    later[p] = 0.0;
                }
            }
        }
        drop(mat);

        for &(j, p) in &pivots {
            let old = self.head[p];
            self.state[old] = VarState::Lower;
            self.x[old] = 0.0;
            if old >= self.art_start {
                self.hi[old] = 0.0;
                self.cost[old] = 0.0;
            }
            self.head[p] = j;
            self.state[j] = VarState::Basic;
        }
        self.refactor()?;

        // Unit basics must start non-negative: swap a negative slack for
        // its artificial, or flip a negative artificial.
        let mut flipped = false;
        for i in 0..m {
            let c = self.head[i];
            if c < self.n_struct || self.x[c] >= 0.0 {
                continue;
            }
            let art = self.art_start + i;
            let sign = if c == art {
                -self.vals[self.col_ptr[art]]
            } else {
                -1.0
            };
            if c != art {
                self.state[c] = VarState::Lower;
                self.x[c] = 0.0;
                self.head[i] = art;
                self.state[art] = VarState::Basic;
            }
            self.vals[self.col_ptr[art]] = sign;
            self.hi[art] = f64::INFINITY;
            self.cost[art] = 1.0;
            flipped = true;
        }
        if flipped {
            self.refactor()?;
        }
        for &j in &free {
            self.deferred[j] = self.state[j] != VarState::Basic;
        }
        log::debug!(
            "crash: {} of {} free columns basic",
            pivots.len(),
            free.len()
        );
        Ok(())
    }

    /// A deferred column that can still improve the objective, with `alpha`
    /// left set for it.
    fn check_deferred(&mut self) -> Option<(usize, f64)> {
        for j in 0..self.n_struct {
            if !self.deferred[j] || self.state[j] == VarState::Basic {
                continue;
            }
            let (d, scale) = self.reduced_cost(j);
            if d.abs() <= self.opts.tol_opt * scale.max(1.0) {
                continue;
            }
            let dir = -d.signum();
            self.ftran(j);
            let blocks = (0..self.m).any(|i| {
                let c = self.head[i];
                self.alpha[i].abs() > PIVOT_TOL
                    && (self.lo[c].is_finite() || self.hi[c].is_finite())
            });
            if blocks || self.improving_ray(j, dir) {
                self.deferred[j] = false;
                return Some((j, dir));
            }
        }
        None
    }

    /// Whether moving `q` along `dir` (with `alpha` current) lowers the
    /// objective by more than rounding. Entries the ratio test treats as zero
    /// are zero here too.
    fn improving_ray(&self, q: usize, dir: f64) -> bool {
        let mut rate = self.cost[q];
        let mut scale = rate.abs();
        for i in 0..self.m {
            if self.alpha[i].abs() <= PIVOT_TOL {
                continue;
            }
            let t = self.cost[self.head[i]] * self.alpha[i];
            rate -= t;
            scale += t.abs();
        }
        dir * rate < -self.opts.tol_opt * scale.max(1.0)
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    /// Also returns where the next partial scan should start.
    fn price(&self, bland: bool, cursor: usize) -> (Option<(usize, f64)>, usize) {
        let tol_opt = self.opts.tol_opt;
        let scan = |range: std::ops::Range<usize>| -> Option<(usize, f64, f64)> {
            let mut best: Option<(usize, f64, f64)> = None;
            for j in range {
                let st = self.state[j];
                if st == VarState::Basic
                    || self.lo[j] == self.hi[j]
                    || self.excluded[j]
                    || self.deferred[j]
                {
                    continue;
                }
                let (d, scale) = self.reduced_cost(j);
                let tol = tol_opt * scale.max(1.0);
                let dir = match st {
                    VarState::Lower if d < -tol => 1.0,
                    VarState::Upper if d > tol => -1.0,
                    VarState::Zero if d.abs() > tol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    return Some((j, dir, d.abs()));
                }
                if best.is_none_or(|b| d.abs() > b.2) {
                    best = Some((j, dir, d.abs()));
                }
            }
            best
        };
        let pick = |a: Option<(usize, f64, f64)>, b: Option<(usize, f64, f64)>| match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                if bland {
                    if a.0 <= b.0 {
                        Some(a)
                    } else {
                        Some(b)
                    }
                } else if b.2 > a.2 {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        };
        let n = self.n_total;
        let strategy = self.opts.strategy;
        let over = |start: usize, len: usize| {
            strategy.fold_chunks(
                len,
                PRICING_CHUNK,
                None,
                |r| scan(start + r.start..start + r.end),
                pick,
            )
        };
        if bland {
            return (over(0, n).map(|(j, dir, _)| (j, dir)), cursor);
        }
        // Partial pricing: windows in cyclic order, first window with a
        // candidate wins; a full cycle without one means optimal.
        let window = n.min(PRICING_WINDOW.max(n / 8));
        let mut start = cursor % n.max(1);
        let mut scanned = 0;
        while scanned < n {
            let len = window.min(n - scanned).min(n - start);
            let found = over(start, len);
            scanned += len;
            start = (start + len) % n;
            if found.is_some() {
                return (found.map(|(j, dir, _)| (j, dir)), start);
            }
        }
        (None, start)
    }

    fn ftran(&mut self, q: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|a| *a = 0.0);
        for k in self.col_ptr[q]..self.col_ptr[q + 1] {
            let (r, v) = (self.row_idx[k], self.vals[k]);
            for i in 0..m {
                self.alpha[i] += self.binv[i * m + r] * v;
            }
        }
    }

    fn optimize(&mut self) -> Result<Outcome> {
        let mut verified = false;
        let mut last_check = f64::INFINITY;
        let mut stalls = 0;
        loop {
            if self.iterations >= self.opts.max_iter {
                return Ok(Outcome::IterationLimit);
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            self.compute_pi();
            let bland = self.degenerate_run >= DEGENERATE_RUN;
            let (priced, cursor) = self.price(bland, self.price_cursor);
            self.price_cursor = cursor;
            let found = match priced {
                Some(c) => {
                    self.ftran(c.0);
                    Some(c)
                }
                None if self.since_refactor > 0 && !verified => {
                    self.refactor()?;
                    verified = true;
                    // Candidates that reappear after every refactor without
                    // moving the objective are rounding noise.
                    let obj = self.phase_objective();
                    if obj > last_check - STALL_RTOL * (1.0 + obj.abs()) {
                        stalls += 1;
                        if stalls >= MAX_STALLS {
                            return Ok(Outcome::Optimal);
                        }
                    } else {
                        stalls = 0;
                    }
                    last_check = last_check.min(obj);
                    continue;
                }
                None => self.check_deferred(),
            };
            let Some((q, dir)) = found else {
                return Ok(Outcome::Optimal);
            };
            verified = false;
            if self.ratio_test_and_update(q, dir, bland).is_none() {
                if !self.improving_ray(q, dir) {
                    // Reduced cost was rounding noise along a null direction.
                    self.excluded[q] = true;
                    self.excluded_list.push(q);
                    continue;
                }
                if self.since_refactor > 0 && !verified {
                    self.refactor()?;
                    verified = true;
                    continue;
                }
                return Ok(Outcome::Unbounded);
            }
            for j in self.excluded_list.drain(..) {
                self.excluded[j] = false;
            }
            self.iterations += 1;
        }
    }

    /// Returns `None` when the direction is unbounded.
    fn ratio_test_and_update(&mut self, q: usize, dir: f64, bland: bool) -> Option<()> {
        let (best_t, leave) = self.ratio_test(q, dir, bland, PIVOT_TOL);
        if best_t.is_infinite() {
            return None;
        }
        self.apply_step(q, dir, best_t, leave);
        Some(())
    }

    /// Step length and leaving row (with the bound it reaches); no leaving row
    /// means a bound flip of the entering variable.
    fn ratio_test(
        &self,
        q: usize,
        dir: f64,
        bland: bool,
        piv_tol: f64,
    ) -> (f64, Option<(usize, bool)>) {
        let m = self.m;
        let own = self.hi[q] - self.lo[q];
        let own = if own.is_finite() { own } else { f64::INFINITY };
        // Distance to the blocking bound of basic `i` per unit step, if any.
        let ratio = |i: usize, slack: f64| -> Option<(f64, bool)> {
            let a = self.alpha[i];
            if a.abs() <= piv_tol {
                return None;
            }
            let col = self.head[i];
            let delta = -dir * a;
            if delta < 0.0 && self.lo[col].is_finite() {
                Some(((self.x[col] - self.lo[col] + slack) / -delta, false))
            } else if delta > 0.0 && self.hi[col].is_finite() {
                Some(((self.hi[col] - self.x[col] + slack) / delta, true))
            } else {
                None
            }
        };
        let mut best_t = own;
        let mut leave: Option<(usize, bool)> = None;
        if bland {
            for i in 0..m {
                let Some((t, to_upper)) = ratio(i, 0.0) else {
                    continue;
                };
                let t = t.max(0.0);
                let tie = 1e-12 * best_t.max(1.0);
                let better = t < best_t - tie
                    || (t <= best_t + tie
                        && leave.is_some_and(|(r, _)| self.head[i] < self.head[r]))
                    || (leave.is_none() && t < best_t);
                if better {
                    best_t = best_t.min(t);
                    leave = Some((i, to_upper));
                }
            }
        } else {
            // Harris: relax every bound by the feasibility tolerance, then
            // take the largest pivot among rows blocking within that step.
            let tol = self.opts.tol_feas;
            let relaxed = (0..m)
                .filter_map(|i| ratio(i, tol))
                .fold(f64::INFINITY, |a, (t, _)| a.min(t));
            if relaxed < own {
                let mut best_a = 0.0;
                for i in 0..m {
                    let Some((t, to_upper)) = ratio(i, 0.0) else {
                        continue;
                    };
                    if t <= relaxed && self.alpha[i].abs() > best_a {
                        best_a = self.alpha[i].abs();
                        best_t = t.max(0.0);
                        leave = Some((i, to_upper));
                    }
                }
            }
        }
        (best_t, leave)
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: f64, leave: Option<(usize, bool)>) {
        let m = self.m;
        self.degenerate_run = if step <= 1e-12 {
            self.degenerate_run + 1
        } else {
            0
        };

        if step != 0.0 {
            self.x[q] += dir * step;
            for i in 0..m {
                let a = self.alpha[i];
                if a != 0.0 {
                    let col = self.head[i];
                    self.x[col] -= dir * step * a;
                }
            }
        }

        match leave {
            None => {
                // Bound flip of the entering variable.
                if dir > 0.0 {
                    self.x[q] = self.hi[q];
                    self.state[q] = VarState::Upper;
                } else {
                    self.x[q] = self.lo[q];
                    self.state[q] = VarState::Lower;
                }
            }
            Some((r, to_upper)) => {
                let out = self.head[r];
                if to_upper {
                    self.x[out] = self.hi[out];
                    self.state[out] = if self.lo[out] == self.hi[out] {
                        VarState::Lower
                    } else {
                        VarState::Upper
                    };
                } else {
                    self.x[out] = self.lo[out];
                    self.state[out] = VarState::Lower;
                }
                self.head[r] = q;
                self.state[q] = VarState::Basic;
                self.pivot(r);
                self.since_refactor += 1;
            }
        }
    }

    /// Product-form update of the basis inverse for pivot row `r`.
    fn pivot(&mut self, r: usize) {
        let m = self.m;
        let ar = self.alpha[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        prow.iter_mut().for_each(|v| *v /= ar);
        for i in 0..m {
            if i == r {
                continue;
            }
            let a = self.alpha[i];
            if a == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut before[i * m..(i + 1) * m]
            } else {
                let off = (i - r - 1) * m;
                &mut after[off..off + m]
            };
            for (v, p) in row.iter_mut().zip(prow.iter()) {
                *v -= a * *p;
            }
        }
    }

    /// Recompute the basis inverse and basic values from scratch, replacing
    /// numerically dependent basic columns by artificials if needed.
    fn refactor(&mut self) -> Result<()> {
        self.since_refactor = 0;
        for attempt in 0..2 {
            match self.invert_basis() {
                Ok(()) => {
                    self.recompute_basics();
                    return Ok(());
                }
                Err(deficient) if attempt == 0 => self.repair(deficient),
                Err(_) => break,
            }
        }
        Err(Error::Internal("basis repair failed".into()))
    }

    fn repair(&mut self, deficient: Vec<(usize, usize)>) {
        for (pos, row) in deficient {
            let out = self.head[pos];
            let (lo, hi) = (self.lo[out], self.hi[out]);
            let v = self.x[out];
            self.state[out] =
                if lo.is_finite() && (!hi.is_finite() || (v - lo).abs() <= (hi - v).abs()) {
                    self.x[out] = lo;
                    VarState::Lower
                } else if hi.is_finite() {
                    self.x[out] = hi;
                    VarState::Upper
                } else {
                    self.x[out] = 0.0;
                    VarState::Zero
                };
            let art = self.art_start + row;
            self.head[pos] = art;
            self.state[art] = VarState::Basic;
        }
        log::debug!("simplex basis repaired");
    }

    /// Gauss-Jordan inversion. On failure returns `(basis position, free row)`
    /// pairs for the columns that had no usable pivot.
    fn invert_basis(&mut self) -> std::result::Result<(), Vec<(usize, usize)>> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (pos, &col) in self.head.iter().enumerate() {
            for k in self.col_ptr[col]..self.col_ptr[col + 1] {
                a[self.row_idx[k] * m + pos] = self.vals[k];
            }
        }
        let mut e = vec![0.0; m * m];
        for i in 0..m {
            e[i * m + i] = 1.0;
        }
        let mut used = vec![false; m];
        let mut piv_row = vec![usize::MAX; m];
        let mut deficient = Vec::new();
        let mut rowbuf_a = vec![0.0; m];
        let mut rowbuf_e = vec![0.0; m];
        for k in 0..m {
            let mut p = usize::MAX;
            let mut best = 0.0;
            for i in 0..m {
                if !used[i] {
                    let v = a[i * m + k].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
            }
            if best <= 1e-11 {
                deficient.push(k);
                continue;
            }
            used[p] = true;
            piv_row[k] = p;
            let inv = 1.0 / a[p * m + k];
            for j in k..m {
                a[p * m + j] *= inv;
            }
            for j in 0..m {
                e[p * m + j] *= inv;
            }
            rowbuf_a[k..].copy_from_slice(&a[p * m + k..(p + 1) * m]);
            rowbuf_e.copy_from_slice(&e[p * m..(p + 1) * m]);
            for i in 0..m {
                if i == p {
                    continue;
                }
                let f = a[i * m + k];
                if f == 0.0 {
                    continue;
                }
                for j in k..m {
                    a[i * m + j] -= f * rowbuf_a[j];
                }
                let erow = &mut e[i * m..(i + 1) * m];
                for (v, pv) in erow.iter_mut().zip(&rowbuf_e) {
                    if *pv != 0.0 {
                        *v -= f * pv;
                    }
                }
            }
        }
        if !deficient.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&i| !used[i]).collect();
            return Err(deficient.into_iter().zip(free_rows).collect());
        }
        for k in 0..m {
            let p = piv_row[k];
            self.binv[k * m..(k + 1) * m].copy_from_slice(&e[p * m..(p + 1) * m]);
        }
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut work = self.rhs.clone();
        for j in 0..self.n_total {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                    work[self.row_idx[k]] -= self.vals[k] * self.x[j];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&work).map(|(b, w)| b * w).sum();
            self.x[self.head[i]] = v;
        }
    }
}
