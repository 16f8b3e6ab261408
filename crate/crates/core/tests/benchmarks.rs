use nalgebra::{dvector, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use setest_core::benchmarks::*;
use setest_core::interval::{Interval, IntervalVector};
use setest_core::setcore::ReductionMethod;
use setest_core::sysmodel::simulate;

#[test]
fn vdp_factory() {
    let spec = make_vdp(0.1).unwrap();
    let x = spec.system.step_truth(&dvector![1.0, 0.0], &DVector::zeros(0), &DVector::zeros(2)).unwrap();
    assert!((x - dvector![1.0, -0.025]).norm() < 1e-15);
    let spec5 = make_vdp(5.0).unwrap();
    let x = spec5.system.step_truth(&dvector![0.0, 1.0], &DVector::zeros(0), &DVector::zeros(2)).unwrap();
    assert!((x - dvector![0.025, 1.125]).norm() < 1e-15);

    assert_eq!(spec.system.v, IntervalVector::unit(1, 0.2));
    assert_eq!(spec.system.w, IntervalVector::unit(2, 0.001));
    assert_eq!(spec.r0, IntervalVector::unit(2, 1.0));
    assert_eq!(spec.system.c.as_slice(), &[1.0, 0.0]);
    assert_eq!(spec.input.len(), 0);
    assert_eq!(spec.steps, 100);
    assert_eq!(spec.budgets.max_order, 30.0);
    assert_eq!(spec.budgets.max_constraints, 5);
    assert_eq!(spec.budgets.reduction, ReductionMethod::Pca);
    assert_eq!(VDP_DT, 0.025);
    assert!(make_vdp(0.0).is_err() && make_vdp(-1.0).is_err());
}

#[test]
fn tank_factory() {
    let spec = make_tank(30).unwrap();
    let (inflow, measured) = tank_layout(30);
    assert_eq!(measured.len(), 21);
    assert_eq!(inflow, vec![1, 4, 5, 7, 9, 10, 13, 15, 16, 19, 21, 22, 25, 27, 28]);
    assert_eq!(spec.system.n_outputs(), 21);
    assert_eq!(spec.system.n_inputs(), 15);
    assert_eq!(spec.budgets.max_constraints, 60);
    assert_eq!(spec.budgets.max_order, 20.0);
    assert!(spec.augmentation.is_none());

    let x = spec.system.step_truth(&DVector::from_element(30, 20.0), &DVector::zeros(15), &DVector::zeros(30)).unwrap();
    assert!((x[0] - 19.8515).abs() < 1e-4);
    for i in 1..30 {
        assert!((x[i] - 20.0).abs() < 1e-12);
    }

    let six = make_tank(6).unwrap();
    assert_eq!(six.r0, IntervalVector::new(vec![Interval::new(16.0, 24.0); 6]));
    assert_eq!(tank_layout(6), (vec![1, 4, 5], vec![2, 4, 5]));
    assert_eq!(six.budgets.max_constraints, 12);
    assert_eq!(six.input, DVector::from_element(3, 0.1));
    assert_eq!(six.system.w, IntervalVector::unit(6, 0.001));
    assert_eq!(six.system.v, IntervalVector::unit(3, 0.2));
    assert_eq!((TANK_DT, GRAVITY, TANK_AREA, TANK_KAPPA), (0.5, 9.81, 1.0, 0.015));
    assert!(make_tank(1).is_err());
}

#[test]
fn tank_levels_stay_positive() {
    for n in [6, 30] {
        let spec = make_tank(n).unwrap();
        let t = simulate(&spec.system, &spec.r0.lower(), &spec.inputs(100), 100, 3).unwrap();
        assert!(t.states.iter().all(|x| x.iter().all(|&v| v > 1.0)));
    }
}

#[test]
fn vdp_split_properties() {
    for mu in [0.1, 5.0] {
        let spec = make_vdp(mu).unwrap();
        let split = vdp_dc_split(mu).unwrap();
        split.validate(&spec.system.f, &[], 1000, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let p = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
            let f = spec.system.f.eval(&p, &[]).unwrap();
            let g = split.g.eval(&p, &[]).unwrap();
            let h = split.h.eval(&p, &[]).unwrap();
            for i in 0..2 {
                assert!((g[i] - h[i] - f[i]).abs() < 1e-8);
            }
        }
    }
    let flat = vdp_dc_split(0.0).unwrap();
    assert!(flat.g.is_affine() && flat.h.is_affine());
}

#[test]
fn tank_split_properties() {
    for n in [2, 6, 30] {
        let spec = make_tank(n).unwrap();
        let mut split = tank_dc_split(n).unwrap();
        split.validate(&spec.system.f, spec.input.as_slice(), 1000, 13).unwrap();
        split.domain = IntervalVector::new(vec![Interval::new(1.0, 40.0); n]);
        split.validate(&spec.system.f, spec.input.as_slice(), 1000, 14).unwrap();
    }
}

#[test]
fn augmentation_is_consistent() {
    let aug = vdp_augment_redundant(0.1).unwrap();
    assert_eq!(aug.system.n_states(), 4);
    assert_eq!(aug.base_dim, 2);
    assert_eq!(aug.g_aug.shape(), (2, 4));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        assert!((&aug.g_aug * dvector![a, b, a + b, a - b]).norm() < 1e-14);
    }

    let spec = make_vdp(0.1).unwrap();
    let base = simulate(&spec.system, &dvector![0.4, -0.6], &spec.inputs(100), 100, 5).unwrap();
    let lifted = simulate(&aug.system, &dvector![0.4, -0.6, -0.2, 1.0], &spec.inputs(100), 100, 5).unwrap();
    // Disturbances differ (different box dimension); compare noise-free propagation instead.
    let mut x = dvector![0.4, -0.6];
    let mut z = dvector![0.4, -0.6, -0.2, 1.0];
    for _ in 0..100 {
        x = spec.system.step_truth(&x, &DVector::zeros(0), &DVector::zeros(2)).unwrap();
        z = aug.system.step_truth(&z, &DVector::zeros(0), &DVector::zeros(4)).unwrap();
        assert_eq!(z.rows(0, 2).into_owned(), x);
        assert!((&aug.g_aug * &z).norm() < 1e-12);
    }
    assert_eq!(base.steps(), lifted.steps());
    assert_eq!(aug.r0.dim(), 4);
    assert_eq!(aug.r0[2], Interval::new(-2.0, 2.0));

    let t6 = tank_augment_redundant(6).unwrap();
    assert_eq!(t6.system.n_states(), 9);
    assert_eq!(t6.g_aug.nrows(), 3);
    assert_eq!(t6.r0[6], Interval::new(32.0, 48.0));
    assert!(matches!(tank_augment_redundant(30), Err(BenchmarkError::AugmentationRefused(_))));
}

#[test]
fn ids_resolve() {
    for id in SCENARIOS {
        let spec = from_id(id).unwrap();
        assert_eq!(from_id(&spec.name).unwrap().name, spec.name);
    }
    assert!(matches!(from_id("lorenz:1"), Err(BenchmarkError::Unknown(_))));
    assert!(matches!(from_id("tank:x"), Err(BenchmarkError::Parameter(_))));
}
