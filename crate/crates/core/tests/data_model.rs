mod common;

use common::{perturbed, random_pair, random_system, Rng};
use hankel_mintime::hankel::{build_hankel, is_persistently_exciting};
use hankel_mintime::linalg::{self, sup_norm, RANK_RTOL};
use hankel_mintime::statespace::ADMISSIBILITY_TOL;
use hankel_mintime::{HankelModel, Strategy};
use nalgebra::DVector;

const PAIRS: usize = 100;

struct Case {
    sys: hankel_mintime::StateSpaceModel,
    model: HankelModel,
}

fn case(seed: u64) -> Case {
    let mut rng = Rng::new(seed);
    let n = 1 + rng.below(4);
    let (m, p) = (1 + rng.below(2), 1 + rng.below(2));
    let sys = random_system(&mut rng, n, m, p);
    let lag = sys.lag(RANK_RTOL).unwrap();
    // `p L > n`, so admissible pairs form a proper subspace.
    let window = lag.max(n / p + 1) + rng.below(3);
    let x0 = rng.vector(n, 1.0);
    let data = sys
        .generate_excitation_data(&x0, 160, 1.0, seed + 1000)
        .unwrap();
    assert!(
        is_persistently_exciting(data.inputs(), window + n).unwrap(),
        "seed {seed}: data not PE"
    );
    Case {
        sys,
        model: HankelModel::new(&data, window).unwrap(),
    }
}

#[test]
fn data_membership_agrees_with_state_space() {
    for seed in 0..6 {
        let Case { sys, model } = case(seed);
        let mut rng = Rng::new(seed + 77);
        let l = model.window();
        let good: Vec<_> = (0..PAIRS).map(|_| random_pair(&mut rng, &sys, l)).collect();
        let bad: Vec<_> = good.iter().map(|p| perturbed(&mut rng, p, 1.0)).collect();
        let mut disagreements = 0;
        for (pairs, expect) in [(&good, true), (&bad, false)] {
            let by_data = model.admissible_batch(pairs, ADMISSIBILITY_TOL, Strategy::default());
            for (pair, d) in pairs.iter().zip(by_data) {
                let s = sys.is_admissible(pair, ADMISSIBILITY_TOL);
                if d != s || d != expect {
                    disagreements += 1;
                }
            }
        }
        assert_eq!(
            disagreements,
            0,
            "seed {seed} (n={}, m={}, p={}, L={l})",
            sys.n(),
            sys.m(),
            sys.p()
        );
    }
}

#[test]
fn sequential_and_parallel_batches_match() {
    let Case { sys, model } = case(3);
    let mut rng = Rng::new(5);
    let pairs: Vec<_> = (0..40)
        .map(|i| {
            let p = random_pair(&mut rng, &sys, model.window());
            if i % 3 == 0 {
                perturbed(&mut rng, &p, 0.5)
            } else {
                p
            }
        })
        .collect();
    assert_eq!(
        model.admissible_batch(&pairs, ADMISSIBILITY_TOL, Strategy::Sequential),
        model.admissible_batch(&pairs, ADMISSIBILITY_TOL, Strategy::Parallel)
    );
}

#[test]
fn coefficient_windows_are_admissible() {
    let Case { sys, model } = case(4);
    let mut rng = Rng::new(9);
    for _ in 0..20 {
        let zeta = rng.vector(model.width(), 1.0);
        let pair = model.trajectory_from_coefficients(&zeta).unwrap();
        assert!(model.admissible_by_data(&pair, ADMISSIBILITY_TOL));
        let scale = 1.0 + sup_norm(pair.stacked().as_slice());
        assert!(sys.is_admissible(&pair, ADMISSIBILITY_TOL * scale));
    }
}

#[test]
fn reduction_is_sound() {
    for seed in 0..4 {
        let Case { model, .. } = case(seed);
        let red = model.reduce();
        let mut rng = Rng::new(seed + 11);
        for _ in 0..PAIRS {
            let v = model.stacked() * rng.vector(model.width(), 1.0);
            let (v1, v2) = red.split(&v);
            let err = sup_norm((v2 - red.complement_values(&v1)).as_slice());
            assert!(
                err <= 1e-8 * (1.0 + sup_norm(v.as_slice())),
                "seed {seed}: {err:e}"
            );
        }
    }
}

#[test]
fn reduction_is_complete() {
    for seed in 0..4 {
        let Case { sys, model } = case(seed);
        let red = model.reduce();
        assert_eq!(red.rank(), sys.m() * model.window() + sys.n());
        let basis = linalg::column_basis(model.stacked());
        let mut rng = Rng::new(seed + 23);
        for _ in 0..PAIRS {
            let v = red.expand(&rng.vector(red.rank(), 1.0));
            let res = linalg::projection_residual_sup(&basis, &v);
            assert!(
                res <= 1e-8 * (1.0 + sup_norm(v.as_slice())),
                "seed {seed}: {res:e}"
            );
        }
    }
}

#[test]
fn hankel_shift_structure() {
    let mut rng = Rng::new(1);
    for &(dim, len, window) in &[(1, 12, 4), (2, 20, 5), (3, 9, 9), (2, 7, 1)] {
        let signal: Vec<DVector<f64>> = (0..len).map(|_| rng.vector(dim, 2.0)).collect();
        let h = build_hankel(&signal, window).unwrap();
        let (rows, cols) = (h.nrows(), h.ncols());
        assert_eq!((rows, cols), (dim * window, len - window + 1));
        if window < 2 || cols < 2 {
            continue;
        }
        let drop_first_row_last_col = h.view((dim, 0), (rows - dim, cols - 1));
        let drop_last_row_first_col = h.view((0, 1), (rows - dim, cols - 1));
        assert_eq!(drop_first_row_last_col, drop_last_row_first_col);
    }
}
