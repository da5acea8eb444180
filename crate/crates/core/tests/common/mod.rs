#![allow(dead_code)]

use hankel_mintime::linalg;
use hankel_mintime::{StateSpaceModel, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn matrix(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| self.uniform(-1.0, 1.0))
    }

    pub fn vector(&mut self, n: usize, scale: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.uniform(-scale, scale))
    }

    pub fn inputs(&mut self, m: usize, len: usize, bound: f64) -> Vec<DVector<f64>> {
        (0..len).map(|_| self.vector(m, bound)).collect()
    }
}

/// Stable, controllable and observable with `D = 0`.
pub fn random_system(rng: &mut Rng, n: usize, m: usize, p: usize) -> StateSpaceModel {
    loop {
        let a = rng.matrix(n, n);
        let smax = linalg::singular_values(&a).max();
        let a = a * (rng.uniform(0.5, 0.95) / smax);
        let sys = StateSpaceModel::new(a, rng.matrix(n, m), rng.matrix(p, n), DMatrix::zeros(p, m))
            .unwrap();
        if sys.is_controllable() && sys.lag(linalg::RANK_RTOL).is_ok() {
            return sys;
        }
    }
}

/// SISO of relative degree `n`: a companion chain seen through a random change
/// of coordinates. Its first `n` outputs depend on the state alone.
pub fn chain_system(rng: &mut Rng, n: usize) -> StateSpaceModel {
    loop {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = rng.uniform(-0.6, 0.6);
        }
        let mut b = DMatrix::zeros(n, 1);
        b[(n - 1, 0)] = rng.uniform(0.5, 1.5);
        let mut c = DMatrix::zeros(1, n);
        c[(0, 0)] = 1.0;
        let t = DMatrix::identity(n, n) + rng.matrix(n, n) * 0.3;
        let Some(t_inv) = t.clone().try_inverse() else {
            continue;
        };
        let sys =
            StateSpaceModel::new(&t * a * &t_inv, &t * b, c * t_inv, DMatrix::zeros(1, 1)).unwrap();
        let unit_dc = (DMatrix::identity(n, n) - sys.a()).try_inverse().is_some();
        if unit_dc && sys.is_controllable() && sys.lag(linalg::RANK_RTOL).is_ok() {
            return sys;
        }
    }
}

/// Simulated pair of length `len` from a random state under random inputs.
pub fn random_pair(rng: &mut Rng, sys: &StateSpaceModel, len: usize) -> Trajectory {
    let x0 = rng.vector(sys.n(), 1.0);
    let u = rng.inputs(sys.m(), len, 1.0);
    sys.simulate_pair(&x0, u, 0).unwrap()
}

/// `pair` with every output shifted by a random vector of sup-norm `size`.
pub fn perturbed(rng: &mut Rng, pair: &Trajectory, size: f64) -> Trajectory {
    let mut out = pair.clone();
    let k = rng.below(out.outputs.len());
    for (i, y) in out.outputs.iter_mut().enumerate() {
        for (j, v) in y.iter_mut().enumerate() {
            *v += if i == k && j == 0 {
                size
            } else {
                rng.uniform(-size, size)
            };
        }
    }
    out
}
