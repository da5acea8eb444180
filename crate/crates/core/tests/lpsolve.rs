mod common;

use common::Rng;
use hankel_mintime::lpsolve::{
    solve_lp, DenseSimplex, LpProblem, LpSolution, LpSolver, LpStatus, SolverOptions,
};
use nalgebra::{DMatrix, DVector};

/// A random LP that is feasible (it has an interior point) and bounded
/// (every variable is boxed). Dense copies of the rows go alongside.
struct Random {
    lp: LpProblem,
    eq: Vec<(Vec<f64>, f64)>,
    ub: Vec<(Vec<f64>, f64)>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn random_lp(seed: u64) -> Random {
    let mut rng = Rng::new(seed);
    let n = 2 + rng.below(4);
    let n_ub = n + rng.below(4);
    let n_eq = rng.below(2.min(n - 1) + 1);
    let x0: Vec<f64> = (0..n).map(|_| rng.uniform(1.0, 4.0)).collect();
    let mut lp = LpProblem::new(n);
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|_| (rng.uniform(-1.0, 0.5), rng.uniform(5.0, 8.0)))
        .unzip();
    for j in 0..n {
        lp.set_bounds(j, lo[j], hi[j]);
        lp.set_objective(j, rng.uniform(-1.0, 1.0));
    }
    let dense = |rng: &mut Rng| -> Vec<f64> { (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect() };
    let dot = |a: &[f64], x: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    let mut ub = Vec::new();
    for _ in 0..n_ub {
        let a = dense(&mut rng);
        let b = dot(&a, &x0) + rng.uniform(0.1, 2.0);
        lp.add_le(a.iter().copied().enumerate().collect(), b);
        ub.push((a, b));
    }
    let mut eq = Vec::new();
    for _ in 0..n_eq {
        let a = dense(&mut rng);
        let b = dot(&a, &x0);
        lp.add_eq(a.iter().copied().enumerate().collect(), b);
        eq.push((a, b));
    }
    Random { lp, eq, ub, lo, hi }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Minimum over every vertex: equalities plus each choice of `n - n_eq`
/// active inequalities or bounds.
fn vertex_enumeration(r: &Random) -> f64 {
    let n = r.lo.len();
    let c = r.lp.objective();
    let mut faces: Vec<(Vec<f64>, f64)> = r.ub.clone();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        faces.push((e.clone(), r.hi[j]));
        e[j] = -1.0;
        faces.push((e, -r.lo[j]));
    }
    let need = n - r.eq.len();
    let mut best = f64::INFINITY;
    for pick in combinations(faces.len(), need) {
        let rows: Vec<&(Vec<f64>, f64)> =
            r.eq.iter().chain(pick.iter().map(|&i| &faces[i])).collect();
        let a = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
        let b = DVector::from_fn(n, |i, _| rows[i].1);
        let Some(x) = a.lu().solve(&b) else { continue };
        let feasible = faces
            .iter()
            .all(|(f, g)| f.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= g + 1e-9)
            && r.eq.iter().all(|(f, g)| {
                (f.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() - g).abs() <= 1e-9
            });
        if feasible {
            best = best.min(c.iter().zip(x.iter()).map(|(p, q)| p * q).sum());
        }
    }
    best
}

/// `b_eq^T y + b_ub^T w + sum_j (d_j > 0 ? d_j l_j : d_j u_j)` with
/// `d = c - A^T (y, w)`. A lower bound on the optimum whenever `w <= 0`.
fn dual_bound(lp: &LpProblem, sol: &LpSolution) -> f64 {
    let n = lp.num_vars();
    let mut d = lp.objective().to_vec();
    let mut bound = 0.0;
    let rows = lp
        .eq_rows()
        .iter()
        .zip(lp.eq_rhs())
        .chain(lp.ub_rows().iter().zip(lp.ub_rhs()));
    for ((row, rhs), &y) in rows.zip(&sol.row_duals) {
        bound += rhs * y;
        for &(j, a) in row {
            d[j] -= a * y;
        }
    }
    for j in 0..n {
        bound += if d[j] > 0.0 {
            d[j] * lp.lower()[j]
        } else {
            d[j] * lp.upper()[j]
        };
    }
    bound
}

#[test]
fn random_lps_match_vertex_enumeration() {
    for seed in 0..20 {
        let r = random_lp(seed);
        let sol = solve_lp(&r.lp, SolverOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}");
        let oracle = vertex_enumeration(&r);
        assert!(
            (sol.objective - oracle).abs() <= 1e-7 * (1.0 + oracle.abs()),
            "seed {seed}: {} vs {oracle}",
            sol.objective
        );
        assert!(sol.max_violation <= 1e-9);
        assert!(r.lp.max_violation(&sol.z) <= 1e-8);
    }
}

#[test]
fn dual_bound_closes_the_gap() {
    for seed in 100..130 {
        let r = random_lp(seed);
        let sol = solve_lp(&r.lp, SolverOptions::default()).unwrap();
        let n_eq = r.lp.num_eq();
        assert!(
            sol.row_duals[n_eq..].iter().all(|&w| w <= 1e-9),
            "seed {seed}: inequality duals must be <= 0"
        );
        let gap = (dual_bound(&r.lp, &sol) - sol.objective).abs();
        assert!(
            gap <= 1e-6 * (1.0 + sol.objective.abs()),
            "seed {seed}: gap {gap:e}"
        );
    }
}

#[test]
fn solves_are_deterministic() {
    for seed in 0..10 {
        let r = random_lp(seed);
        let a = solve_lp(&r.lp, SolverOptions::default()).unwrap();
        let b = DenseSimplex::default().solve(&r.lp).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.z, b.z);
    }
}

#[test]
fn scaling_the_objective_keeps_the_support() {
    for seed in 200..215 {
        let r = random_lp(seed);
        let mut scaled = r.lp.clone();
        for (j, &c) in r.lp.objective().iter().enumerate() {
            scaled.set_objective(j, 37.5 * c);
        }
        let a = solve_lp(&r.lp, SolverOptions::default()).unwrap();
        let b = solve_lp(&scaled, SolverOptions::default()).unwrap();
        let support = |z: &[f64]| z.iter().map(|v| v.abs() > 1e-9).collect::<Vec<_>>();
        assert_eq!(support(&a.z), support(&b.z), "seed {seed}");
        assert!((37.5 * a.objective - b.objective).abs() <= 1e-9 * (1.0 + b.objective.abs()));
    }
}

#[test]
fn textbook_examples() {
    let mut lp = LpProblem::new(1);
    lp.set_objective(0, 1.0);
    lp.set_bounds(0, 3.0, f64::INFINITY);
    let sol = solve_lp(&lp, SolverOptions::default()).unwrap();
    assert_eq!(
        (sol.status, sol.z[0], sol.objective),
        (LpStatus::Optimal, 3.0, 3.0)
    );

    let mut lp = LpProblem::new(2);
    lp.set_objective(0, -1.0);
    lp.set_objective(1, -1.0);
    lp.set_bounds(0, 0.0, f64::INFINITY);
    lp.set_bounds(1, 0.0, f64::INFINITY);
    lp.add_le(vec![(0, 1.0), (1, 1.0)], 1.0);
    let sol = solve_lp(&lp, SolverOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 1.0).abs() < 1e-12);
}

#[test]
fn iteration_limit_is_reported() {
    let r = random_lp(3);
    let opts = SolverOptions {
        max_iter: 0,
        ..SolverOptions::default()
    };
    let sol = solve_lp(&r.lp, opts).unwrap();
    assert_eq!(sol.status, LpStatus::IterationLimit);
}

#[test]
fn nan_is_rejected() {
    let mut lp = LpProblem::new(1);
    lp.add_le(vec![(0, f64::NAN)], 1.0);
    assert!(solve_lp(&lp, SolverOptions::default()).is_err());
}

#[test]
fn pricing_strategies_agree() {
    for seed in 300..320 {
        let r = random_lp(seed);
        let seq = SolverOptions {
            strategy: hankel_mintime::Strategy::Sequential,
            ..SolverOptions::default()
        };
        let par = SolverOptions {
            strategy: hankel_mintime::Strategy::Parallel,
            ..SolverOptions::default()
        };
        let a = solve_lp(&r.lp, seq).unwrap();
        let b = solve_lp(&r.lp, par).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits(), "seed {seed}");
        assert_eq!(a.z, b.z);
    }
}
