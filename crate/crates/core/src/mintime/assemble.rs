use crate::error::{Error, Result};
use crate::hankel::HankelModel;
use crate::lpsolve::{LpProblem, Row};

use super::{segment_layout, MinTimeSpec, SegmentLayout};

/// Largest weight ratio `theta^(T1-T0)` accepted without a warning.
pub const WEIGHT_SPREAD_WARN: f64 = 1e12;

/// How each segment is tied to the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelForm {
    /// `v_k = H zeta_k` with free coefficients `zeta_k`.
    Coefficients,
    /// `v_{k,2} = Gamma v_{k,1}` on the independent rows of `H`.
    #[default]
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintFamily {
    Initial,
    Dynamics,
    Matching,
    Path,
    Terminal,
}

impl std::fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Initial => "initial condition",
            Self::Dynamics => "data model",
            Self::Matching => "segment matching",
            Self::Path => "path constraint",
            Self::Terminal => "terminal set",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpWeights {
    /// Weight of `t = T0 + i`.
    pub weights: Vec<f64>,
    pub ill_conditioned: bool,
}

/// `theta^(t - T0)` for `t = T0..=T1`.
pub fn exp_weights(theta: f64, t0: usize, t1: usize) -> ExpWeights {
    let weights: Vec<f64> = (0..=t1.saturating_sub(t0))
        .map(|i| theta.powi(i as i32))
        .collect();
    let spread = weights.last().copied().unwrap_or(1.0);
    let ill_conditioned = !(spread <= WEIGHT_SPREAD_WARN);
    if ill_conditioned {
        log::warn!("slack weights span {spread:.3e}; the LP may be poorly scaled");
    }
    ExpWeights {
        weights,
        ill_conditioned,
    }
}

/// The minimum-time LP together with the bookkeeping needed to read it back.
#[derive(Debug, Clone)]
pub struct AssembledLp {
    pub problem: LpProblem,
    pub layout: SegmentLayout,
    pub form: ModelForm,
    pub weights: ExpWeights,
    /// Family and segment (or time) of every equality row.
    pub eq_tags: Vec<(ConstraintFamily, usize)>,
    pub ub_tags: Vec<(ConstraintFamily, usize)>,
    /// Path rows with a single coefficient, applied as variable bounds.
    pub path_bounds: usize,
}

pub fn assemble_lp(
    spec: &MinTimeSpec,
    model: &HankelModel,
    form: ModelForm,
) -> Result<AssembledLp> {
    spec.validate()?;
    check_model(spec, model)?;
    let width = match form {
        ModelForm::Coefficients => model.width(),
        ModelForm::Reduced => 0,
    };
    let layout = segment_layout(spec, width)?;
    let n = layout.num_vars();
    let (m, p, l, k_i) = (layout.m, layout.p, layout.window, layout.k_i);

    let mut lp = LpProblem::new(n);
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut eq_tags = Vec::new();
    let mut ub_tags = Vec::new();

    // Data model.
    let h = model.stacked();
    for k in 0..layout.segments {
        let base = layout.window_range(k).start;
        match form {
            ModelForm::Coefficients => {
                let coef = layout.coef_range(k).start;
                for rho in 0..h.nrows() {
                    let mut row: Row = Vec::with_capacity(h.ncols() + 1);
                    row.push((base + rho, 1.0));
                    for j in 0..h.ncols() {
                        let v = h[(rho, j)];
                        if v != 0.0 {
                            row.push((coef + j, -v));
                        }
                    }
                    lp.add_eq(row, 0.0);
                    eq_tags.push((ConstraintFamily::Dynamics, k));
                }
            }
            ModelForm::Reduced => {
                let red = model.reduce();
                for (ci, &rho) in red.complement_rows.iter().enumerate() {
                    let mut row: Row = Vec::with_capacity(red.rank() + 1);
                    row.push((base + rho, 1.0));
                    for (s, &sel) in red.row_selection.iter().enumerate() {
                        let g = red.gamma[(ci, s)];
                        if g != 0.0 {
                            row.push((base + sel, -g));
                        }
                    }
                    lp.add_eq(row, 0.0);
                    eq_tags.push((ConstraintFamily::Dynamics, k));
                }
            }
        }
    }

    // Overlap between consecutive segments.
    for k in 0..layout.segments.saturating_sub(1) {
        let (u0, u1) = (layout.u_range(k).start, layout.u_range(k + 1).start);
        let (y0, y1) = (layout.y_range(k).start, layout.y_range(k + 1).start);
        for j in 0..k_i {
            let src = l - k_i + j;
            for c in 0..m {
                lp.add_eq(vec![(u1 + j * m + c, 1.0), (u0 + src * m + c, -1.0)], 0.0);
                eq_tags.push((ConstraintFamily::Matching, k));
            }
            for c in 0..p {
                lp.add_eq(vec![(y1 + j * p + c, 1.0), (y0 + src * p + c, -1.0)], 0.0);
                eq_tags.push((ConstraintFamily::Matching, k));
            }
        }
    }

    // Initial window, fixed exactly.
    for j in 0..k_i {
        let t = j as i64 - k_i as i64;
        for c in 0..m {
            let v = layout.u_var(t, c);
            lower[v] = spec.u_i[j * m + c];
            upper[v] = spec.u_i[j * m + c];
        }
        for c in 0..p {
            let v = layout.y_var(t, c);
            lower[v] = spec.y_i[j * p + c];
            upper[v] = spec.y_i[j * p + c];
        }
    }

    // Path constraints on every planned sample.
    let path = &spec.path;
    let mut path_bounds = 0;
    for t in 0..layout.horizon {
        let ti = t as i64;
        for r in 0..path.rows() {
            let mut row: Row = Vec::new();
            for c in 0..m {
                let a = path.s_u[(r, c)];
                if a != 0.0 {
                    row.push((layout.u_var(ti, c), a));
                }
            }
            for c in 0..p {
                let a = path.s_y[(r, c)];
                if a != 0.0 {
                    row.push((layout.y_var(ti, c), a));
                }
            }
            let s = path.s[r];
            match row.as_slice() {
                [] => {
                    if s < 0.0 {
                        return Err(Error::Infeasible(format!(
                            "path constraint row {r} reads 0 <= {s}"
                        )));
                    }
                }
                &[(v, a)] => {
                    let bound = s / a;
                    if a > 0.0 {
                        upper[v] = upper[v].min(bound);
                    } else {
                        lower[v] = lower[v].max(bound);
                    }
                    path_bounds += 1;
                }
                _ => {
                    lp.add_le(row, s);
                    ub_tags.push((ConstraintFamily::Path, t));
                }
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| lower[v] > upper[v]) {
        return Err(Error::Infeasible(format!(
            "path constraints leave an empty interval [{}, {}] for variable {v}",
            lower[v], upper[v]
        )));
    }

    // Terminal set with slack.
    let mut weights = exp_weights(spec.theta, spec.t0, spec.t1);
    if spec.rescale_weights {
        let f = spec.theta.powf(-((spec.t1 - spec.t0) as f64) / 2.0);
        weights.weights.iter_mut().for_each(|w| *w *= f);
    }
    let target = &spec.target;
    let (q_g, q_h) = (target.q_g(), target.q_h());
    for t in spec.t0..=spec.t1 {
        let eps = layout.slack_range(t).start;
        let y_row = |mat: &nalgebra::DMatrix<f64>, q: usize, sign: f64| -> Row {
            let mut row: Row = Vec::new();
            for j in 0..spec.k_f {
                for c in 0..p {
                    let a = mat[(q, j * p + c)];
                    if a != 0.0 {
                        row.push((layout.y_var((t + j) as i64, c), sign * a));
                    }
                }
            }
            row
        };
        for q in 0..q_g {
            let mut row = y_row(&target.g_mat, q, 1.0);
            row.push((eps + q, -1.0));
            lp.add_le(row, target.g[q]);
            ub_tags.push((ConstraintFamily::Terminal, t));
        }
        for q in 0..q_h {
            for sign in [1.0, -1.0] {
                let mut row = y_row(&target.h_mat, q, sign);
                row.push((eps + q_g + q, -1.0));
                lp.add_le(row, sign * target.h[q]);
                ub_tags.push((ConstraintFamily::Terminal, t));
            }
        }
        let w = weights.weights[t - spec.t0];
        for i in layout.slack_range(t) {
            lower[i] = 0.0;
            lp.set_objective(i, w);
        }
    }

    for v in 0..n {
        lp.set_bounds(v, lower[v], upper[v]);
    }
    log::debug!(
        "assembled {:?} LP: {} vars, {} eq, {} ub, {} nnz",
        form,
        n,
        lp.num_eq(),
        lp.num_ub(),
        lp.nnz()
    );
    Ok(AssembledLp {
        problem: lp,
        layout,
        form,
        weights,
        eq_tags,
        ub_tags,
        path_bounds,
    })
}

pub(crate) fn check_model(spec: &MinTimeSpec, model: &HankelModel) -> Result<()> {
    if model.window() != spec.window || model.m() != spec.m() || model.p() != spec.p() {
        return Err(crate::error::invalid(format!(
            "data model has L = {}, m = {}, p = {} but the problem expects L = {}, m = {}, p = {}",
            model.window(),
            model.m(),
            model.p(),
            spec.window,
            spec.m(),
            spec.p()
        )));
    }
    Ok(())
}
