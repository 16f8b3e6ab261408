use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;

use setest_core::benchmarks::{make_tank, make_vdp};
use setest_core::expr::SymbolicDynamics;
use setest_core::interval::{Interval, IntervalVector};
use setest_core::setcore::SetValue;
use setest_core::sysmodel::*;

fn linear_1d(a: f64, w: f64, v: f64) -> NonlinearDiscreteSystem {
    let f = SymbolicDynamics::parse(1, 0, &[format!("{a:?}*x1")]).unwrap();
    NonlinearDiscreteSystem::new(f, dmatrix![1.0], IntervalVector::unit(1, w), IntervalVector::unit(1, v)).unwrap()
}

#[test]
fn step_truth_examples() {
    let vdp = make_vdp(0.1).unwrap().system;
    let x = vdp.step_truth(&dvector![1.0, 0.0], &DVector::zeros(0), &dvector![0.0, 0.0]).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] + 0.025).abs() < 1e-15);

    let f = SymbolicDynamics::parse(2, 0, &["2*x1 - x2", "0.5*x1 + 3*x2"]).unwrap();
    let sys = NonlinearDiscreteSystem::new(f, dmatrix![1.0, 0.0], IntervalVector::unit(2, 1.0), IntervalVector::unit(1, 1.0)).unwrap();
    let x = dvector![0.3, -1.7];
    let m = dmatrix![2.0, -1.0; 0.5, 3.0];
    assert!((sys.step_truth(&x, &DVector::zeros(0), &DVector::zeros(2)).unwrap() - m * &x).norm() < 1e-14);

    let tank = make_tank(2).unwrap().system;
    let x = tank.step_truth(&dvector![20.0, 20.0], &dvector![0.0], &dvector![0.0, 0.0]).unwrap();
    assert!((x[0] - (20.0 - 0.0075 * 392.4f64.sqrt())).abs() < 1e-12);
    assert!((x[0] - 19.8515).abs() < 1e-4);
    assert!((x[1] - 20.0).abs() < 1e-12);

    let err = tank.step_truth(&dvector![-1.0, 20.0], &dvector![0.0], &dvector![0.0, 0.0]).unwrap_err();
    assert!(format!("{err}").contains("sqrt"));
}

#[test]
fn measure_examples() {
    let vdp = make_vdp(0.1).unwrap().system;
    assert!((vdp.measure(&dvector![3.0, 7.0], &dvector![0.1])[0] - 3.1).abs() < 1e-15);
    for v in [-0.2, 0.2] {
        let y = vdp.measure(&dvector![3.0, 7.0], &dvector![v]);
        assert!(vdp.v.shift(&[3.0], 1.0).contains_point(y.as_slice(), 0.0));
    }
    let f = SymbolicDynamics::parse(1, 0, &["x1"]).unwrap();
    let blind = NonlinearDiscreteSystem::new(f, DMatrix::zeros(0, 1), IntervalVector::unit(1, 0.1), IntervalVector::new(vec![])).unwrap();
    assert_eq!(blind.measure(&dvector![2.0], &DVector::zeros(0)).len(), 0);
}

#[test]
fn dimension_checks() {
    let f = SymbolicDynamics::parse(2, 0, &["x1", "x2"]).unwrap();
    let err = NonlinearDiscreteSystem::new(f, dmatrix![1.0, 0.0], IntervalVector::unit(3, 1.0), IntervalVector::unit(1, 1.0)).unwrap_err();
    assert!(matches!(err, ModelError::Dimension { expected: 2, found: 3, .. }));
}

#[test]
fn simulation_is_deterministic_and_in_bounds() {
    let spec = make_vdp(0.1).unwrap();
    let u = spec.inputs(1000);
    let a = simulate_from_box(&spec.system, &spec.r0, &u, 1000, 42).unwrap();
    let b = simulate_from_box(&spec.system, &spec.r0, &u, 1000, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.states.len(), 1001);
    assert_eq!(a.measurements.len(), 1001);
    assert_eq!(a.steps(), 1000);
    assert!(spec.r0.contains_point(a.states[0].as_slice(), 0.0));
    for w in &a.disturbances {
        assert!(spec.system.w.contains_point(w.as_slice(), 0.0));
    }
    for v in &a.noises {
        assert!(spec.system.v.contains_point(v.as_slice(), 0.0));
    }
    for k in 0..1000 {
        let next = spec.system.step_truth(&a.states[k], &a.inputs[k], &a.disturbances[k]).unwrap();
        assert_eq!(next, a.states[k + 1]);
        assert_eq!(spec.system.measure(&a.states[k], &a.noises[k]), a.measurements[k]);
    }
    let c = simulate_from_box(&spec.system, &spec.r0, &u, 1000, 43).unwrap();
    assert_ne!(a.states[0], c.states[0]);
}

#[test]
fn noise_free_simulation_repeats_step_truth() {
    let spec = make_vdp(5.0).unwrap();
    let zero = |n| IntervalVector::new(vec![Interval::ZERO; n]);
    let sys = NonlinearDiscreteSystem::new(spec.system.f.clone(), spec.system.c.clone(), zero(2), zero(1)).unwrap();
    let x0 = dvector![0.4, -0.3];
    let t = simulate(&sys, &x0, &spec.inputs(50), 50, 7).unwrap();
    let mut x = x0;
    for k in 0..50 {
        x = sys.step_truth(&x, &DVector::zeros(0), &DVector::zeros(2)).unwrap();
        assert_eq!(x, t.states[k + 1]);
    }
}

#[test]
fn simulation_reports_failing_step() {
    let sys = linear_1d(1.0, 0.0, 0.0);
    let f = SymbolicDynamics::parse(1, 0, &["sqrt(x1) - 3"]).unwrap();
    let sys = NonlinearDiscreteSystem::new(f, sys.c, sys.w, sys.v).unwrap();
    let err = simulate(&sys, &dvector![16.0], &vec![DVector::zeros(0); 5], 5, 0).unwrap_err();
    assert!(matches!(err, ModelError::Simulation { step: 2, .. }), "{err}");
    let err = simulate(&sys, &dvector![16.0], &[], 5, 0).unwrap_err();
    assert!(matches!(err, ModelError::ShortInputs { needed: 5, found: 0 }));
}

#[test]
fn oracle_matches_analytic_interval() {
    // x⁺ = 0.5 x + w, x⁻ ∈ [-1, 1], w ∈ [-0.1, 0.1], y = 0.3 with |v| <= 0.2.
    let sys = linear_1d(0.5, 0.1, 0.2);
    let prev = SetValue::Interval(IntervalVector::unit(1, 1.0));
    let res = 1e-3;
    let cloud = consistent_set_oracle(&sys, &prev, &DVector::zeros(0), &dvector![0.3], res).unwrap();
    assert!(!cloud.empty);
    let (lo, hi) = cloud.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[0]), b.max(p[0])));
    assert!(lo >= 0.1 - 1e-12 && hi <= 0.5 + 1e-12);
    assert!(lo < 0.1 + res && hi > 0.5 - res, "{lo} {hi}");

    let blind = linear_1d(0.5, 0.1, 1e9);
    let cloud = consistent_set_oracle(&blind, &prev, &DVector::zeros(0), &dvector![0.3], res).unwrap();
    let (lo, hi) = cloud.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[0]), b.max(p[0])));
    assert!((lo + 0.6).abs() < 1e-12 && (hi - 0.6).abs() < 1e-12);

    let cloud = consistent_set_oracle(&sys, &prev, &DVector::zeros(0), &dvector![5.0], res).unwrap();
    assert!(cloud.empty && cloud.points.is_empty());

    let tank = make_tank(6).unwrap();
    let err = consistent_set_oracle(&tank.system, &SetValue::Interval(tank.r0.clone()), &tank.input, &DVector::zeros(3), 1.0).unwrap_err();
    assert!(matches!(err, ModelError::OracleDimension(6)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn true_state_is_always_consistent(seed in 0u64..1_000_000, mu in prop_oneof![Just(0.1), Just(5.0)]) {
        let spec = make_vdp(mu).unwrap();
        let t = simulate_from_box(&spec.system, &spec.r0, &spec.inputs(20), 20, seed).unwrap();
        for k in 0..=20 {
            let r = &t.measurements[k] - &spec.system.c * &t.states[k];
            prop_assert!(spec.system.v.contains_point(r.as_slice(), 0.0));
        }
    }
}
