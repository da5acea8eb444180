use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::statespace::Trajectory;

/// Arrival is declared at the first `t` with `|eps_t|_1` below this.
pub const DEFAULT_EPS_TOL: f64 = 1e-3;

/// `{ y_f in R^{p K_f} : G y_f <= g, H y_f = h }`. Either block may have zero
/// rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralSet {
    pub g_mat: DMatrix<f64>,
    pub g: DVector<f64>,
    pub h_mat: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl PolyhedralSet {
    /// The single point `y_f` (stacked over the target window).
    pub fn point(y_f: DVector<f64>) -> Self {
        let dim = y_f.len();
        Self {
            g_mat: DMatrix::zeros(0, dim),
            g: DVector::zeros(0),
            h_mat: DMatrix::identity(dim, dim),
            h: y_f,
        }
    }

    pub fn dim(&self) -> usize {
        self.g_mat.ncols()
    }

    pub fn q_g(&self) -> usize {
        self.g_mat.nrows()
    }

    pub fn q_h(&self) -> usize {
        self.h_mat.nrows()
    }

    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> bool {
        let ineq = (&self.g_mat * y - &self.g).iter().all(|&v| v <= tol);
        let eq = (&self.h_mat * y - &self.h).iter().all(|v| v.abs() <= tol);
        ineq && eq
    }
}

/// `S_u u(t) + S_y y(t) <= s` at every planned sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PathConstraint {
    pub s_u: DMatrix<f64>,
    pub s_y: DMatrix<f64>,
    pub s: DVector<f64>,
}

impl PathConstraint {
    pub fn none(m: usize, p: usize) -> Self {
        Self {
            s_u: DMatrix::zeros(0, m),
            s_y: DMatrix::zeros(0, p),
            s: DVector::zeros(0),
        }
    }

    /// `lower <= u(t) <= upper`, componentwise.
    pub fn input_box(lower: &DVector<f64>, upper: &DVector<f64>, p: usize) -> Self {
        let m = lower.len();
        let mut s_u = DMatrix::zeros(2 * m, m);
        let mut s = DVector::zeros(2 * m);
        for i in 0..m {
            s_u[(i, i)] = 1.0;
            s[i] = upper[i];
            s_u[(m + i, i)] = -1.0;
            s[m + i] = -lower[i];
        }
        Self {
            s_u,
            s_y: DMatrix::zeros(2 * m, p),
            s,
        }
    }

    pub fn rows(&self) -> usize {
        self.s.len()
    }

    /// Largest violation `max(S_u u + S_y y - s)` at one sample, floored at 0.
    pub fn violation(&self, u: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.s_u * u + &self.s_y * y - &self.s)
            .iter()
            .fold(0.0, |a, &v| a.max(v))
    }
}

/// Everything that defines one minimum-time problem apart from the data.
#[derive(Debug, Clone)]
pub struct MinTimeSpec {
    /// Length of the initial window `[-K_i, -1]`.
    pub k_i: usize,
    /// Length of the target window.
    pub k_f: usize,
    /// Stacked initial inputs, `m K_i` entries.
    pub u_i: DVector<f64>,
    /// Stacked initial outputs, `p K_i` entries.
    pub y_i: DVector<f64>,
    pub target: PolyhedralSet,
    pub path: PathConstraint,
    pub t0: usize,
    pub t1: usize,
    /// Base of the exponential slack weights, `> 1`.
    pub theta: f64,
    /// Segment window length `L`; must match the data model.
    pub window: usize,
    pub eps_tol: f64,
    /// Multiply every weight by `theta^{-(T1-T0)/2}`. Leaves the minimizer unchanged.
    pub rescale_weights: bool,
}

impl MinTimeSpec {
    pub fn m(&self) -> usize {
        self.path.s_u.ncols()
    }

    pub fn p(&self) -> usize {
        self.path.s_y.ncols()
    }

    pub fn initial_pair(&self) -> Result<Trajectory> {
        Trajectory::from_stacked(
            self.u_i.as_slice(),
            self.y_i.as_slice(),
            self.m(),
            self.p(),
            -(self.k_i as i64),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (m, p) = (self.m(), self.p());
        if self.k_i == 0 || self.k_f == 0 {
            return Err(invalid("K_i and K_f must be >= 1"));
        }
        if self.window <= self.k_i {
            return Err(invalid(format!(
                "window L = {} must exceed K_i = {}",
                self.window, self.k_i
            )));
        }
        if !(self.theta > 1.0 && self.theta.is_finite()) {
            return Err(invalid(format!(
                "theta = {} must be a finite value > 1",
                self.theta
            )));
        }
        if self.t0 > self.t1 {
            return Err(invalid(format!(
                "T0 = {} exceeds T1 = {}",
                self.t0, self.t1
            )));
        }
        if !(self.eps_tol > 0.0) {
            return Err(invalid("eps_tol must be positive"));
        }
        if m == 0 || p == 0 {
            return Err(invalid(
                "path constraint matrices fix m and p and must have non-zero width",
            ));
        }
        if self.path.s_u.nrows() != self.path.s.len() || self.path.s_y.nrows() != self.path.s.len()
        {
            return Err(invalid("S_u, S_y and s must have the same number of rows"));
        }
        if self.u_i.len() != m * self.k_i || self.y_i.len() != p * self.k_i {
            return Err(invalid(format!(
                "initial pair must have {} inputs and {} outputs stacked, got {} and {}",
                m * self.k_i,
                p * self.k_i,
                self.u_i.len(),
                self.y_i.len()
            )));
        }
        let t = &self.target;
        let dim = p * self.k_f;
        if t.g_mat.ncols() != dim || t.h_mat.ncols() != dim {
            return Err(invalid(format!(
                "target matrices must have p K_f = {dim} columns"
            )));
        }
        if t.g_mat.nrows() != t.g.len() || t.h_mat.nrows() != t.h.len() {
            return Err(invalid("target matrices and vectors disagree in row count"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if ![
            self.u_i.as_slice(),
            self.y_i.as_slice(),
            t.g_mat.as_slice(),
            t.g.as_slice(),
            t.h_mat.as_slice(),
            t.h.as_slice(),
            self.path.s_u.as_slice(),
            self.path.s_y.as_slice(),
            self.path.s.as_slice(),
        ]
        .iter()
        .all(|v| finite(v))
        {
            return Err(invalid("problem data must be finite"));
        }
        Ok(())
    }
}
