//! Data-driven minimum time against the state-space arrival scan on random
//! single-input single-output systems.

mod common;

use common::{chain_system, Rng};
use hankel_mintime::baseline::{solve_min_time_big_m, solve_min_time_exact, BaselineSpec, BIG_M};
use hankel_mintime::lpsolve::DenseSimplex;
use hankel_mintime::statespace::ADMISSIBILITY_TOL;
use hankel_mintime::*;
use nalgebra::{DMatrix, DVector};

const T1: usize = 20;
/// Larger than the CWH scenario's 2: a few instances trade a small early
/// slack against later ones at theta = 2.
const THETA: f64 = 4.0;

struct Instance {
    sys: StateSpaceModel,
    spec: MinTimeSpec,
    baseline: BaselineSpec,
}

/// Relative degree `n` makes an `n`-sample output window equivalent to the
/// state, so a point target on the window is a point target on the state.
fn instance(seed: u64) -> Instance {
    let mut rng = Rng::new(seed);
    let n = 1 + rng.below(3);
    let sys = chain_system(&mut rng, n);
    let k_i = n;
    let window = k_i + 4 + rng.below(3);

    // Controlled-invariant target: an equilibrium with input well inside the box.
    let u_f = rng.uniform(-0.5, 0.5);
    let x_f: DVector<f64> =
        ((DMatrix::identity(n, n) - sys.a()).try_inverse().unwrap() * sys.b() * u_f)
            .column(0)
            .into();
    let y_f = DVector::from_element(n, (sys.c() * &x_f)[0]);

    let x_start = &x_f + rng.vector(n, 3.0);
    let init = sys
        .simulate_pair(&x_start, rng.inputs(1, k_i, 1.0), -(k_i as i64))
        .unwrap();
    let x0 = sys
        .propagated_initial_state(&init, ADMISSIBILITY_TOL)
        .unwrap();

    let spec = MinTimeSpec {
        k_i,
        k_f: n,
        u_i: init.stacked_inputs(),
        y_i: init.stacked_outputs(),
        target: PolyhedralSet::point(y_f),
        path: PathConstraint::input_box(
            &DVector::from_element(1, -1.0),
            &DVector::from_element(1, 1.0),
            1,
        ),
        t0: 0,
        t1: T1,
        theta: THETA,
        window,
        eps_tol: 1e-6,
        rescale_weights: false,
    };
    let baseline = BaselineSpec {
        model: sys.clone(),
        x_i: x0,
        x_f,
        u_lower: DVector::from_element(1, -1.0),
        u_upper: DVector::from_element(1, 1.0),
        t0: 0,
        t1: T1,
    };
    Instance {
        sys,
        spec,
        baseline,
    }
}

fn model_for(inst: &Instance, seed: u64) -> HankelModel {
    let n = inst.sys.n();
    let data = inst
        .sys
        .generate_excitation_data(&DVector::zeros(n), 300, 1.0, seed + 500)
        .unwrap();
    HankelModel::new(&data, inst.spec.window).unwrap()
}

#[test]
fn lp_and_arrival_scan_agree_on_random_systems() {
    let solver = DenseSimplex::default();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for seed in 0..24 {
        let inst = instance(seed);
        let base = solve_min_time_exact(&inst.baseline, &solver, Strategy::default()).unwrap();
        let Some(expect) = base.t_star else { continue };
        let model = model_for(&inst, seed);
        let sol = solve_min_time(&inst.spec, &model, ModelForm::Reduced, &solver).unwrap();
        checked += 1;
        if sol.t_star != Some(expect) {
            mismatches.push((seed, sol.t_star, expect));
        }
        assert!(sol.initial_mismatch(&inst.spec) == 0.0);
        assert!(sol.path_violation(&inst.spec) <= 1e-6);
        assert!(inst.sys.is_admissible(
            &sol.trajectory,
            1e-6 * (1.0 + sol.trajectory.stacked().amax())
        ));
    }
    assert!(checked >= 20, "only {checked} instances reachable in range");
    assert!(
        mismatches.is_empty(),
        "(seed, lp, baseline): {mismatches:?}"
    );
}

#[test]
fn enumeration_matches_literal_big_m() {
    let solver = DenseSimplex::default();
    for seed in 0..8 {
        let mut inst = instance(seed);
        inst.baseline.t1 = 12;
        let scan = solve_min_time_exact(&inst.baseline, &solver, Strategy::Sequential)
            .unwrap()
            .t_star;
        let big_m = solve_min_time_big_m(&inst.baseline, BIG_M, &solver).unwrap();
        assert_eq!(scan, big_m, "seed {seed}");
    }
}

#[test]
fn scan_strategies_agree() {
    let solver = DenseSimplex::default();
    for seed in 0..6 {
        let inst = instance(seed);
        let a = solve_min_time_exact(&inst.baseline, &solver, Strategy::Sequential).unwrap();
        let b = solve_min_time_exact(&inst.baseline, &solver, Strategy::Parallel).unwrap();
        assert_eq!(a.t_star, b.t_star);
    }
}
