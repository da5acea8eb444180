//! Non-parametric data model built from one recorded input-output
//! trajectory.
//!
//! Under persistent excitation of order `L + n`, the column space of the
//! stacked Hankel matrix `col(H_L(u), H_L(y))` is exactly the set of
//! admissible length-`L` input-output windows. [`HankelModel`] stores that
//! matrix; [`ReducedModel`] is its rank-factored form `H2 = Gamma H1`, which
//! lets an optimizer constrain windows without any coefficient variables.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::exec::Strategy;
use crate::linalg::{self, RANK_RTOL};
use crate::statespace::{stack, Trajectory};

/// A single recorded trajectory `(u^d, y^d)` of length `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTrajectory {
    inputs: Vec<DVector<f64>>,
    outputs: Vec<DVector<f64>>,
}

impl DataTrajectory {
    pub fn new(inputs: Vec<DVector<f64>>, outputs: Vec<DVector<f64>>) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(invalid(format!(
                "data needs equal non-zero lengths, got {} inputs and {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let m = inputs[0].len();
        let p = outputs[0].len();
        if m == 0
            || p == 0
            || inputs.iter().any(|u| u.len() != m)
            || outputs.iter().any(|y| y.len() != p)
        {
            return Err(invalid(
                "data samples must have constant non-zero dimensions",
            ));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[DVector<f64>] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn m(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn p(&self) -> usize {
        self.outputs[0].len()
    }

    /// A copy with every output multiplied by `factor`.
    pub fn with_scaled_outputs(&self, factor: f64) -> Self {
        Self {
            inputs: self.inputs.clone(),
            outputs: self.outputs.iter().map(|y| y * factor).collect(),
        }
    }
}

/// Depth-`window` block Hankel matrix: column `j` stacks
/// `signal[j], ..., signal[j + window - 1]`.
pub fn build_hankel(signal: &[DVector<f64>], window: usize) -> Result<DMatrix<f64>> {
    let len = signal.len();
    if window == 0 || window > len {
        return Err(invalid(format!(
            "Hankel depth {window} must be in 1..={len}"
        )));
    }
    let d = signal[0].len();
    if signal.iter().any(|s| s.len() != d) {
        return Err(invalid("signal samples must share one dimension"));
    }
    let cols = len - window + 1;
    let mut out = DMatrix::zeros(d * window, cols);
    for j in 0..cols {
        let mut col = out.column_mut(j);
        for i in 0..window {
            col.rows_mut(i * d, d).copy_from(&signal[i + j]);
        }
    }
    Ok(out)
}

/// Whether `inputs` is persistently exciting of order `order`, i.e. its
/// depth-`order` Hankel matrix has full row rank.
pub fn is_persistently_exciting(inputs: &[DVector<f64>], order: usize) -> Result<bool> {
    let h = build_hankel(inputs, order)?;
    Ok(linalg::rank(&h) == h.nrows())
}

/// Stacked Hankel matrices of one data trajectory for window length `L`.
#[derive(Debug)]
pub struct HankelModel {
    stacked: DMatrix<f64>,
    window: usize,
    m: usize,
    p: usize,
    data_len: usize,
    column_basis: OnceLock<DMatrix<f64>>,
    reduced: OnceLock<ReducedModel>,
}

impl Clone for HankelModel {
    fn clone(&self) -> Self {
        Self {
            stacked: self.stacked.clone(),
            window: self.window,
            m: self.m,
            p: self.p,
            data_len: self.data_len,
            column_basis: self.column_basis.clone(),
            reduced: self.reduced.clone(),
        }
    }
}

/// Rank-factored form of a [`HankelModel`]: the rows of `H` listed in
/// `row_selection` are independent and the others satisfy `H2 = Gamma H1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub row_selection: Vec<usize>,
    pub complement_rows: Vec<usize>,
    pub gamma: DMatrix<f64>,
    pub total_rows: usize,
}

impl HankelModel {
    pub fn new(data: &DataTrajectory, window: usize) -> Result<Self> {
        let hu = build_hankel(data.inputs(), window)?;
        let hy = build_hankel(data.outputs(), window)?;
        let (ru, rows_y) = (hu.nrows(), hy.nrows());
        let mut stacked = DMatrix::zeros(ru + rows_y, hu.ncols());
        stacked.rows_mut(0, ru).copy_from(&hu);
        stacked.rows_mut(ru, rows_y).copy_from(&hy);
        Ok(Self {
            stacked,
            window,
            m: data.m(),
            p: data.p(),
            data_len: data.len(),
            column_basis: OnceLock::new(),
            reduced: OnceLock::new(),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn data_len(&self) -> usize {
        self.data_len
    }

    /// Number of coefficient variables, `M - L + 1`.
    pub fn width(&self) -> usize {
        self.stacked.ncols()
    }

    /// `col(H_u, H_y)`, of shape `((m + p) L) x (M - L + 1)`.
    pub fn stacked(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    pub fn h_u(&self) -> DMatrix<f64> {
        self.stacked.rows(0, self.m * self.window).into_owned()
    }

    pub fn h_y(&self) -> DMatrix<f64> {
        self.stacked
            .rows(self.m * self.window, self.p * self.window)
            .into_owned()
    }

    fn basis(&self) -> &DMatrix<f64> {
        self.column_basis
            .get_or_init(|| linalg::column_basis(&self.stacked))
    }

    /// Sup-norm distance from `col(u, y)` to the column space of `H`.
    pub fn membership_residual(&self, pair: &Trajectory) -> Result<f64> {
        if pair.len() != self.window {
            return Err(invalid(format!(
                "pair length {} differs from window {}",
                pair.len(),
                self.window
            )));
        }
        if pair.inputs.iter().any(|u| u.len() != self.m)
            || pair.outputs.iter().any(|y| y.len() != self.p)
        {
            return Err(invalid("pair dimensions do not match the data model"));
        }
        Ok(linalg::projection_residual_sup(
            self.basis(),
            &pair.stacked(),
        ))
    }

    /// Whether some coefficient vector reproduces the pair to within `tol`.
    pub fn admissible_by_data(&self, pair: &Trajectory, tol: f64) -> bool {
        self.membership_residual(pair).is_ok_and(|r| r <= tol)
    }

    /// [`Self::admissible_by_data`] over many pairs.
    pub fn admissible_batch(
        &self,
        pairs: &[Trajectory],
        tol: f64,
        strategy: Strategy,
    ) -> Vec<bool> {
        self.basis();
        strategy.map_slice(pairs, |pair| self.admissible_by_data(pair, tol))
    }

    /// The window `(H_u zeta, H_y zeta)`.
    pub fn trajectory_from_coefficients(&self, zeta: &DVector<f64>) -> Result<Trajectory> {
        if zeta.len() != self.width() {
            return Err(invalid(format!(
                "coefficient vector has length {}, expected {}",
                zeta.len(),
                self.width()
            )));
        }
        let v = &self.stacked * zeta;
        let mu = self.m * self.window;
        Trajectory::from_stacked(&v.as_slice()[..mu], &v.as_slice()[mu..], self.m, self.p, 0)
    }

    /// The rank-factored model, computed once and cached.
    pub fn reduce(&self) -> &ReducedModel {
        self.reduced.get_or_init(|| reduce_rows(&self.stacked))
    }
}

/// Greedy first-independent-row selection via modified Gram-Schmidt with one
/// reorthogonalization pass, then `Gamma = C R^{-1}` from the factorization
/// `H1 = R Q`, `H2 = C Q`.
fn reduce_rows(h: &DMatrix<f64>) -> ReducedModel {
    let total = h.nrows();
    let width = h.ncols();
    let sv = linalg::singular_values(h);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = RANK_RTOL * smax;

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut r_rows: Vec<Vec<f64>> = Vec::new();
    let mut c_rows: Vec<Vec<f64>> = Vec::new();
    let mut selected = Vec::new();
    let mut complement = Vec::new();

    for i in 0..total {
        let mut w: Vec<f64> = h.row(i).iter().cloned().collect();
        let mut coeffs = vec![0.0; basis.len()];
        for _pass in 0..2 {
            for (j, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                coeffs[j] += c;
                axpy(-c, q, &mut w);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > cutoff && width > 0 {
            w.iter_mut().for_each(|x| *x /= norm);
            coeffs.push(norm);
            basis.push(w);
            r_rows.push(coeffs);
            selected.push(i);
        } else {
            c_rows.push(coeffs);
            complement.push(i);
        }
    }

    let r = selected.len();
    let r_mat = DMatrix::from_fn(r, r, |i, j| r_rows[i].get(j).copied().unwrap_or(0.0));
    let c_mat = DMatrix::from_fn(complement.len(), r, |i, j| {
        c_rows[i].get(j).copied().unwrap_or(0.0)
    });
    let gamma = if r == 0 || complement.is_empty() {
        DMatrix::zeros(complement.len(), r)
    } else {
        // Gamma R = C with R lower triangular, so R^T Gamma^T = C^T.
        r_mat
            .transpose()
            .solve_upper_triangular(&c_mat.transpose())
            .expect("selected rows have non-zero pivots")
            .transpose()
    };
    ReducedModel {
        row_selection: selected,
        complement_rows: complement,
        gamma,
        total_rows: total,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

impl ReducedModel {
    pub fn rank(&self) -> usize {
        self.row_selection.len()
    }

    /// `v2 = Gamma v1`.
    pub fn complement_values(&self, v1: &DVector<f64>) -> DVector<f64> {
        &self.gamma * v1
    }

    /// Assemble the full stacked window from its independent coordinates.
    pub fn expand(&self, v1: &DVector<f64>) -> DVector<f64> {
        let v2 = self.complement_values(v1);
        let mut v = DVector::zeros(self.total_rows);
        for (k, &row) in self.row_selection.iter().enumerate() {
            v[row] = v1[k];
        }
        for (k, &row) in self.complement_rows.iter().enumerate() {
            v[row] = v2[k];
        }
        v
    }

    /// Split a full stacked window into `(v1, v2)`.
    pub fn split(&self, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let v1 = DVector::from_iterator(self.rank(), self.row_selection.iter().map(|&i| v[i]));
        let v2 = DVector::from_iterator(
            self.complement_rows.len(),
            self.complement_rows.iter().map(|&i| v[i]),
        );
        (v1, v2)
    }
}

/// Stack a trajectory window as `col(u, y)`.
pub fn stack_pair(inputs: &[DVector<f64>], outputs: &[DVector<f64>]) -> DVector<f64> {
    let u = stack(inputs);
    let y = stack(outputs);
    DVector::from_iterator(u.len() + y.len(), u.iter().chain(y.iter()).cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::StateSpaceModel;

    fn scalars(xs: &[f64]) -> Vec<DVector<f64>> {
        xs.iter().map(|&x| DVector::from_element(1, x)).collect()
    }

    #[test]
    fn hankel_definition() {
        let h = build_hankel(&scalars(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(
            h,
            DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0])
        );
        let full = build_hankel(&scalars(&[1.0, 2.0, 3.0]), 3).unwrap();
        assert_eq!(full.shape(), (3, 1));
        assert_eq!(full.column(0).as_slice(), &[1.0, 2.0, 3.0]);
        let c = build_hankel(&scalars(&[2.5; 6]), 3).unwrap();
        assert_eq!(linalg::rank(&c), 1);
        assert!(build_hankel(&scalars(&[1.0, 2.0]), 3).is_err());
        assert!(build_hankel(&scalars(&[1.0, 2.0]), 0).is_err());
    }

    #[test]
    fn persistent_excitation_examples() {
        assert!(!is_persistently_exciting(&scalars(&[0.0; 8]), 2).unwrap());
        assert!(!is_persistently_exciting(&scalars(&[1.0, 0.0, 0.0, 0.0, 0.0]), 2).unwrap());
        assert!(is_persistently_exciting(&scalars(&[1.0, 0.0, 0.0, 1.0, 0.0]), 2).unwrap());
    }

    fn toy_model() -> (StateSpaceModel, DataTrajectory) {
        let sys = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.7]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let data = sys
            .generate_excitation_data(&DVector::zeros(2), 60, 1.0, 11)
            .unwrap();
        (sys, data)
    }

    #[test]
    fn one_column_model() {
        let (_, data) = toy_model();
        let short =
            DataTrajectory::new(data.inputs()[..4].to_vec(), data.outputs()[..4].to_vec()).unwrap();
        let model = HankelModel::new(&short, 4).unwrap();
        assert_eq!(model.width(), 1);
        assert_eq!(model.h_u().shape(), (4, 1));
    }

    #[test]
    fn membership_of_columns_and_scaled_outputs() {
        let (sys, data) = toy_model();
        let model = HankelModel::new(&data, 5).unwrap();
        let mut e = DVector::zeros(model.width());
        e[7] = 1.0;
        let col = model.trajectory_from_coefficients(&e).unwrap();
        assert!(model.admissible_by_data(&col, 1e-8));
        assert_eq!(col.inputs[0], data.inputs()[7]);

        let pair = sys
            .simulate_pair(
                &DVector::from_column_slice(&[3.0, -1.0]),
                scalars(&[0.1, -0.4, 0.2, 0.0, 1.0]),
                0,
            )
            .unwrap();
        assert!(model.admissible_by_data(&pair, 1e-6));
        let mut scaled = pair.clone();
        scaled.outputs.iter_mut().for_each(|y| *y *= 2.0);
        assert!(!model.admissible_by_data(&scaled, 1e-6));

        let zero = model
            .trajectory_from_coefficients(&DVector::zeros(model.width()))
            .unwrap();
        assert!(zero.stacked().iter().all(|&x| x == 0.0));
        assert!(model
            .trajectory_from_coefficients(&DVector::zeros(3))
            .is_err());
    }

    #[test]
    fn reduce_rank_deficient_toy() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        let red = reduce_rows(&h);
        assert_eq!(red.row_selection, vec![0]);
        assert_eq!(red.complement_rows, vec![1]);
        assert!((red.gamma[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reduce_full_row_rank() {
        let red = reduce_rows(&DMatrix::from_row_slice(
            2,
            3,
            &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0],
        ));
        assert_eq!(red.rank(), 2);
        assert_eq!(red.gamma.nrows(), 0);
    }

    #[test]
    fn reduced_rank_matches_behavioral_dimension() {
        let (_, data) = toy_model();
        let model = HankelModel::new(&data, 6).unwrap();
        let red = model.reduce();
        // m L + n for m = 1, n = 2.
        assert_eq!(red.rank(), 6 + 2);
        assert_eq!(red.gamma.shape(), (12 - 8, 8));
        // Cached: same allocation on a second call.
        assert!(std::ptr::eq(red, model.reduce()));
    }
}
