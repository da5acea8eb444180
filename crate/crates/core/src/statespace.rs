//! Discrete-time LTI state-space models.
//!
//! The model is the ground truth used to generate data, to decide
//! admissibility of input-output pairs, and to drive the model-based
//! minimum-time baseline.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::hankel::DataTrajectory;
use crate::linalg;

/// Default absolute sup-norm tolerance for admissibility checks.
pub const ADMISSIBILITY_TOL: f64 = 1e-6;

/// `x(t+1) = A x(t) + B u(t)`, `y(t) = C x(t) + D u(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

/// Output of [`StateSpaceModel::simulate`]. `states` has one more entry than
/// `outputs`: the state after the last input has been applied.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub outputs: Vec<DVector<f64>>,
    pub states: Vec<DVector<f64>>,
}

/// An input-output pair of equal-length sample sequences starting at
/// `start_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub inputs: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub start_index: i64,
}

impl Trajectory {
    pub fn new(
        inputs: Vec<DVector<f64>>,
        outputs: Vec<DVector<f64>>,
        start_index: i64,
    ) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(invalid(format!(
                "trajectory needs equal non-zero lengths, got {} inputs and {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            start_index,
        })
    }

    /// Build from stacked vectors `col(u(0), u(1), ...)` and `col(y(0), ...)`.
    pub fn from_stacked(
        u: &[f64],
        y: &[f64],
        m: usize,
        p: usize,
        start_index: i64,
    ) -> Result<Self> {
        if m == 0
            || p == 0
            || !u.len().is_multiple_of(m)
            || !y.len().is_multiple_of(p)
            || u.len() / m != y.len() / p
        {
            return Err(invalid(
                "stacked input/output lengths do not describe one trajectory",
            ));
        }
        let inputs = u.chunks(m).map(DVector::from_column_slice).collect();
        let outputs = y.chunks(p).map(DVector::from_column_slice).collect();
        Self::new(inputs, outputs, start_index)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn stacked_inputs(&self) -> DVector<f64> {
        stack(&self.inputs)
    }

    pub fn stacked_outputs(&self) -> DVector<f64> {
        stack(&self.outputs)
    }

    /// `col(u, y)`, the ordering used by the Hankel data model.
    pub fn stacked(&self) -> DVector<f64> {
        let u = self.stacked_inputs();
        let y = self.stacked_outputs();
        DVector::from_iterator(u.len() + y.len(), u.iter().chain(y.iter()).cloned())
    }

    /// Sub-trajectory of `len` samples beginning `offset` samples in.
    pub fn window(&self, offset: usize, len: usize) -> Result<Trajectory> {
        if len == 0 || offset + len > self.len() {
            return Err(invalid("window out of range"));
        }
        Trajectory::new(
            self.inputs[offset..offset + len].to_vec(),
            self.outputs[offset..offset + len].to_vec(),
            self.start_index + offset as i64,
        )
    }
}

pub(crate) fn stack(samples: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        samples.iter().map(|s| s.len()).sum(),
        samples.iter().flat_map(|s| s.iter().cloned()),
    )
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(invalid(format!(
                "A must be square and non-empty, got {:?}",
                a.shape()
            )));
        }
        let m = b.ncols();
        let p = c.nrows();
        if m == 0 || b.nrows() != n {
            return Err(invalid(format!(
                "B must be {n}xm with m >= 1, got {:?}",
                b.shape()
            )));
        }
        if p == 0 || c.ncols() != n {
            return Err(invalid(format!(
                "C must be px{n} with p >= 1, got {:?}",
                c.shape()
            )));
        }
        if d.shape() != (p, m) {
            return Err(invalid(format!("D must be {p}x{m}, got {:?}", d.shape())));
        }
        let finite = |mat: &DMatrix<f64>| mat.iter().all(|x| x.is_finite());
        if !(finite(&a) && finite(&b) && finite(&c) && finite(&d)) {
            return Err(invalid("model matrices must be finite"));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n() {
            return Err(invalid(format!(
                "state has dimension {}, expected {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }

    fn check_pair(&self, pair: &Trajectory) -> Result<()> {
        if pair.inputs.iter().any(|u| u.len() != self.m()) {
            return Err(invalid(format!(
                "every input must have dimension {}",
                self.m()
            )));
        }
        if pair.outputs.iter().any(|y| y.len() != self.p()) {
            return Err(invalid(format!(
                "every output must have dimension {}",
                self.p()
            )));
        }
        Ok(())
    }

    pub fn simulate(&self, x0: &DVector<f64>, inputs: &[DVector<f64>]) -> Result<Simulation> {
        self.check_state(x0)?;
        if let Some(u) = inputs.iter().find(|u| u.len() != self.m()) {
            return Err(invalid(format!(
                "input has dimension {}, expected {}",
                u.len(),
                self.m()
            )));
        }
        let mut states = Vec::with_capacity(inputs.len() + 1);
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut x = x0.clone();
        for u in inputs {
            outputs.push(&self.c * &x + &self.d * u);
            let next = &self.a * &x + &self.b * u;
            states.push(std::mem::replace(&mut x, next));
        }
        states.push(x);
        Ok(Simulation { outputs, states })
    }

    /// Simulate and package the result as a [`Trajectory`].
    pub fn simulate_pair(
        &self,
        x0: &DVector<f64>,
        inputs: Vec<DVector<f64>>,
        start_index: i64,
    ) -> Result<Trajectory> {
        let sim = self.simulate(x0, &inputs)?;
        Trajectory::new(inputs, sim.outputs, start_index)
    }

    /// Block rows `C, CA, ..., CA^{l-1}`.
    pub fn observability_matrix(&self, l: usize) -> Result<DMatrix<f64>> {
        if l == 0 {
            return Err(invalid("observability window must be >= 1"));
        }
        let (n, p) = (self.n(), self.p());
        let mut out = DMatrix::zeros(p * l, n);
        let mut block = self.c.clone();
        for i in 0..l {
            out.view_mut((i * p, 0), (p, n)).copy_from(&block);
            block = &block * &self.a;
        }
        Ok(out)
    }

    /// Lower block-triangular Toeplitz matrix of Markov parameters mapping a
    /// stacked length-`l` input to the forced part of the stacked output.
    pub fn toeplitz_matrix(&self, l: usize) -> Result<DMatrix<f64>> {
        if l == 0 {
            return Err(invalid("toeplitz window must be >= 1"));
        }
        let (m, p) = (self.m(), self.p());
        let mut markov = Vec::with_capacity(l);
        markov.push(self.d.clone());
        let mut ca = self.c.clone();
        for _ in 1..l {
            markov.push(&ca * &self.b);
            ca = &ca * &self.a;
        }
        let mut out = DMatrix::zeros(p * l, m * l);
        for i in 0..l {
            for j in 0..=i {
                out.view_mut((i * p, j * m), (p, m))
                    .copy_from(&markov[i - j]);
            }
        }
        Ok(out)
    }

    /// `[A^{l-1}B, ..., AB, B]`, the input-to-state map over `l` steps.
    pub fn reachability_matrix(&self, l: usize) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let mut out = DMatrix::zeros(n, m * l);
        let mut block = self.b.clone();
        for j in (0..l).rev() {
            out.view_mut((0, j * m), (n, m)).copy_from(&block);
            block = &self.a * &block;
        }
        out
    }

    /// Smallest `l` with `rank(O_l) = n`, using `rank_tol` as the relative
    /// singular-value cutoff.
    pub fn lag(&self, rank_tol: f64) -> Result<usize> {
        let n = self.n();
        let full = self.observability_matrix(n)?;
        let full_rank = linalg::rank_with_tol(&full, rank_tol);
        if full_rank < n {
            return Err(Error::NotObservable { rank: full_rank, n });
        }
        for l in 1..=n {
            let rows = l * self.p();
            if linalg::rank_with_tol(&full.rows(0, rows).into_owned(), rank_tol) == n {
                return Ok(l);
            }
        }
        unreachable!("full observability matrix has rank n")
    }

    pub fn is_controllable(&self) -> bool {
        linalg::rank(&self.reachability_matrix(self.n())) == self.n()
    }

    /// Least-squares fit of `x(0)` to the pair and the sup-norm residual.
    fn fit_initial_state(&self, pair: &Trajectory) -> Result<(DVector<f64>, f64)> {
        self.check_pair(pair)?;
        let l = pair.len();
        let obs = self.observability_matrix(l)?;
        let toe = self.toeplitz_matrix(l)?;
        let free = pair.stacked_outputs() - toe * pair.stacked_inputs();
        let x0 = linalg::pinv(&obs) * &free;
        let residual = linalg::sup_norm((&obs * &x0 - &free).as_slice());
        Ok((x0, residual))
    }

    /// Recover `x(0)` from an admissible pair of length `l >= lag`.
    pub fn initial_state_from_io(&self, pair: &Trajectory, tol: f64) -> Result<DVector<f64>> {
        let lag = self.lag(linalg::RANK_RTOL)?;
        if pair.len() < lag {
            return Err(invalid(format!(
                "pair of length {} is shorter than the lag {lag}; initial state is not unique",
                pair.len()
            )));
        }
        let (x0, residual) = self.fit_initial_state(pair)?;
        if residual > tol {
            return Err(Error::NotAdmissible { residual, tol });
        }
        Ok(x0)
    }

    /// State reached at the end of an initial window: the window's initial
    /// state propagated forward under the window's inputs.
    pub fn propagated_initial_state(
        &self,
        init_pair: &Trajectory,
        tol: f64,
    ) -> Result<DVector<f64>> {
        let x_start = self.initial_state_from_io(init_pair, tol)?;
        let k = init_pair.len();
        let ak = self.a.pow(k as u32);
        Ok(ak * x_start + self.reachability_matrix(k) * init_pair.stacked_inputs())
    }

    /// Whether some initial state explains the pair to within `tol`.
    pub fn is_admissible(&self, pair: &Trajectory, tol: f64) -> bool {
        match self.fit_initial_state(pair) {
            Ok((_, residual)) => residual <= tol,
            Err(_) => false,
        }
    }

    /// Uniform i.i.d. excitation on `[-bound, bound]^m` from a ChaCha8 stream
    /// seeded with `seed`, simulated from `x0`.
    pub fn generate_excitation_data(
        &self,
        x0: &DVector<f64>,
        len: usize,
        bound: f64,
        seed: u64,
    ) -> Result<DataTrajectory> {
        if len == 0 {
            return Err(invalid("data length must be >= 1"));
        }
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(invalid("excitation bound must be finite and non-negative"));
        }
        let inputs = uniform_inputs(self.m(), len, bound, seed);
        let sim = self.simulate(x0, &inputs)?;
        DataTrajectory::new(inputs, sim.outputs)
    }
}

/// `len` samples of uniform `[-bound, bound]^m` noise from ChaCha8.
///
/// Each coordinate consumes one `u64` from the stream; the top 53 bits give
/// a uniform double in `[0, 1)`, so the sequence is bit-identical across
/// platforms for a given seed.
pub fn uniform_inputs(m: usize, len: usize, bound: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            DVector::from_fn(m, |_, _| {
                let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                bound * (2.0 * unit - 1.0)
            })
        })
        .collect()
}

/// Parameters of the Clohessy-Wiltshire-Hill relative-motion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwhParams {
    /// Gravitational parameter, km^3/s^2.
    pub mu: f64,
    /// Target orbit radius, km.
    pub r_o: f64,
    /// Spacecraft mass, kg.
    pub m_s: f64,
    /// Maximum thrust, kN.
    pub t_max: f64,
    /// Sampling period, s.
    pub dt: f64,
}

impl CwhParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mu, self.r_o, self.m_s, self.t_max, self.dt];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(invalid(
                "CWH parameters must all be finite and strictly positive",
            ))
        }
    }

    /// Orbital rate `sqrt(mu / r_o^3)`, rad/s.
    pub fn omega(&self) -> f64 {
        (self.mu / self.r_o.powi(3)).sqrt()
    }
}

/// Forward-Euler discretization of the CWH equations with position output.
pub fn cwh_model(params: &CwhParams) -> Result<StateSpaceModel> {
    params.validate()?;
    let w = params.omega();
    #[rustfmt::skip]
    let ac = DMatrix::from_row_slice(6, 6, &[
        0.0,          0.0, 0.0,     1.0,      0.0,     0.0,
        0.0,          0.0, 0.0,     0.0,      1.0,     0.0,
        0.0,          0.0, 0.0,     0.0,      0.0,     1.0,
        3.0 * w * w,  0.0, 0.0,     0.0,      2.0 * w, 0.0,
        0.0,          0.0, 0.0,     -2.0 * w, 0.0,     0.0,
        0.0,          0.0, -w * w,  0.0,      0.0,     0.0,
    ]);
    let mut bc = DMatrix::zeros(6, 3);
    let accel = params.t_max / params.m_s;
    for i in 0..3 {
        bc[(3 + i, i)] = accel;
    }
    let a = DMatrix::identity(6, 6) + ac * params.dt;
    let b = bc * params.dt;
    let mut c = DMatrix::zeros(3, 6);
    for i in 0..3 {
        c[(i, i)] = 1.0;
    }
    StateSpaceModel::new(a, b, c, DMatrix::zeros(3, 3))
}
