use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use setest_core::benchmarks::{from_id, make_vdp};
use setest_core::expr::SymbolicDynamics;
use setest_core::interval::{Interval, IntervalVector};
use setest_core::observers::*;
use setest_core::rangebound::DcSplit;
use setest_core::setcore::*;
use setest_core::sysmodel::{consistent_set_oracle, sample_box, simulate_from_box, NonlinearDiscreteSystem};

fn hull(s: &SetValue) -> IntervalVector {
    s.interval_hull().unwrap()
}

fn assert_hull_close(a: &IntervalVector, b: &IntervalVector, tol: f64) {
    assert_eq!(a.dim(), b.dim());
    for i in 0..a.dim() {
        assert!(
            (a[i].lo - b[i].lo).abs() <= tol && (a[i].hi - b[i].hi).abs() <= tol,
            "axis {i}: {:?} vs {:?}",
            a[i],
            b[i]
        );
    }
}

fn system(comps: &[&str], c: DMatrix<f64>, w: f64, v: f64) -> NonlinearDiscreteSystem {
    let n = comps.len();
    let f = SymbolicDynamics::parse(n, 1, comps).unwrap();
    let r = c.nrows();
    NonlinearDiscreteSystem::new(f, c, IntervalVector::unit(n, w), IntervalVector::unit(r, v)).unwrap()
}

/// Initial state equal to `r0` in the method's representation (the first
/// measurement carries no information).
fn init_uncorrected(cfg: &ObserverConfig, sys: &NonlinearDiscreteSystem, r0: &IntervalVector) -> ObserverState {
    let r = sys.n_outputs();
    let wide = NonlinearDiscreteSystem::new(sys.f.clone(), sys.c.clone(), sys.w.clone(), IntervalVector::unit(r, 1e6)).unwrap();
    initialize(cfg, &wide, r0, &DVector::zeros(r)).unwrap()
}

fn affine_sys(w: f64) -> NonlinearDiscreteSystem {
    system(&["0.9*x1 + 0.2*x2 + u1", "-0.3*x1 + 0.7*x2 + 1"], dmatrix![1.0, 0.0], w, 0.1)
}

const AFFINE_A: [[f64; 2]; 2] = [[0.9, 0.2], [-0.3, 0.7]];

fn affine_image(z: &Zonotope, u: f64, w: f64) -> Zonotope {
    let a = DMatrix::from_fn(2, 2, |i, j| AFFINE_A[i][j]);
    let img = z.linear_map(&a).unwrap().translate(&dvector![u, 1.0]);
    img.minkowski_sum(&Zonotope::from_box(&IntervalVector::unit(2, w))).unwrap()
}

fn skew_zono() -> Zonotope {
    Zonotope::new(dvector![0.5, -0.2], dmatrix![1.0, 0.3, -0.2; 0.1, 0.8, 0.4]).unwrap()
}

#[test]
fn affine_predictions_are_exact() {
    let sys = affine_sys(0.05);
    let z = skew_zono();
    let u = dvector![0.3];
    let expect = hull(&SetValue::Zonotope(affine_image(&z, 0.3, 0.05)));
    for p in [
        predict_mve(&sys, &SetValue::Zonotope(z.clone()), &u).unwrap(),
        predict_linremainder(&sys, &SetValue::Zonotope(z.clone()), &u).unwrap(),
        predict_mve(&sys, &SetValue::ConstrainedZonotope(z.clone().into()), &u).unwrap(),
        predict_linremainder(&sys, &SetValue::ConstrainedZonotope(z.clone().into()), &u).unwrap(),
        predict_mixed_monotone(&sys, &SetValue::ConstrainedZonotope(z.clone().into()), &u).unwrap(),
    ] {
        assert_hull_close(&hull(&p), &expect, 1e-9);
    }
}

#[test]
fn identity_without_disturbance_is_unchanged() {
    let sys = system(&["x1", "x2"], dmatrix![1.0, 0.0], 0.0, 0.1);
    let z = SetValue::Zonotope(skew_zono());
    let u = dvector![0.0];
    assert_hull_close(&hull(&predict_mve(&sys, &z, &u).unwrap()), &hull(&z), 1e-9);
    assert_hull_close(&hull(&predict_linremainder(&sys, &z, &u).unwrap()), &hull(&z), 1e-9);
}

#[test]
fn ellipsoid_affine_prediction_is_exact() {
    let sys = affine_sys(0.0);
    let p = dmatrix![2.0, 0.3; 0.3, 1.0];
    let e = Ellipsoid::new(dvector![1.0, -1.0], p.clone()).unwrap();
    let SetValue::Ellipsoid(out) = predict_linremainder(&sys, &SetValue::Ellipsoid(e), &dvector![0.5]).unwrap() else {
        panic!("ellipsoid expected");
    };
    let a = DMatrix::from_fn(2, 2, |i, j| AFFINE_A[i][j]);
    let center = &a * dvector![1.0, -1.0] + dvector![0.5, 1.0];
    assert!((out.center() - center).amax() < 1e-12);
    assert!((out.shape() - &a * p * a.transpose()).amax() < 1e-12);
}

#[test]
fn square_remainder_covers_the_range() {
    let sys = system(&["x1^2"], DMatrix::identity(1, 1), 0.0, 1.0);
    let z = SetValue::Zonotope(Zonotope::from_box(&IntervalVector::unit(1, 1.0)));
    let h = hull(&predict_linremainder(&sys, &z, &dvector![0.0]).unwrap());
    assert!(h[0].lo <= 1e-12 && h[0].hi >= 1.0 - 1e-12, "{:?}", h[0]);
    assert!(h[0].lo >= -1e-9 && h[0].hi <= 1.0 + 1e-9, "{:?}", h[0]);
}

#[test]
fn dc_prediction_examples() {
    let f = SymbolicDynamics::parse(1, 1, &["x1^2"]).unwrap();
    let sys = NonlinearDiscreteSystem::new(f.clone(), DMatrix::identity(1, 1), IntervalVector::unit(1, 0.0), IntervalVector::unit(1, 1.0)).unwrap();
    let split = DcSplit {
        g: f,
        h: SymbolicDynamics::parse(1, 1, &["0"]).unwrap(),
        domain: IntervalVector::new(vec![Interval::new(-10.0, 10.0)]),
    };
    let x = SetValue::Zonotope(Zonotope::from_box(&IntervalVector::new(vec![Interval::new(0.0, 2.0)])));
    let p = predict_dc(&sys, &x, &dvector![0.0], &split).unwrap();
    for k in 0..=200 {
        let t = 2.0 * k as f64 / 200.0;
        assert!(p.contains_point(&dvector![t * t]).unwrap(), "{t}");
    }
    // Tangent at 1 and the chord bound the image from below and above.
    let h = hull(&p);
    assert!(h[0].hi <= 4.0 + 1e-9 && h[0].lo >= -1.0 - 1e-9, "{:?}", h[0]);

    let sys = affine_sys(0.05);
    let split = DcSplit {
        g: sys.f.clone(),
        h: SymbolicDynamics::parse(2, 1, &["0", "0"]).unwrap(),
        domain: IntervalVector::unit(2, 10.0),
    };
    let z = skew_zono();
    let p = predict_dc(&sys, &SetValue::Zonotope(z.clone()), &dvector![0.3], &split).unwrap();
    assert_hull_close(&hull(&p), &hull(&SetValue::Zonotope(affine_image(&z, 0.3, 0.05))), 1e-9);
}

#[test]
fn vdp_predictions_contain_sampled_images() {
    let spec = make_vdp(0.1).unwrap();
    let sys = &spec.system;
    let r0 = IntervalVector::unit(2, 1.0);
    let z = SetValue::Zonotope(Zonotope::from_box(&r0));
    let cz = SetValue::ConstrainedZonotope(Zonotope::from_box(&r0).into());
    let u = DVector::zeros(sys.n_inputs());
    let preds = [
        predict_mve(sys, &z, &u).unwrap(),
        predict_linremainder(sys, &z, &u).unwrap(),
        predict_linremainder(sys, &cz, &u).unwrap(),
        predict_dc(sys, &z, &u, spec.dc_split.as_ref().unwrap()).unwrap(),
        predict_mixed_monotone(sys, &cz, &u).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let x = sample_box(&mut rng, &r0);
        let w = sample_box(&mut rng, &sys.w);
        let img = sys.step_truth(&x, &u, &w).unwrap();
        for p in &preds {
            assert!(p.contains_point(&img).unwrap(), "{} misses {img}", p.kind());
        }
    }
}

fn strip(normal: DVector<f64>, y: f64, sigma: f64) -> Strip {
    Strip::new(normal, y, Interval::new(-sigma, sigma)).unwrap()
}

const RULES: [StripRule; 4] = [
    StripRule::Gain(GainSelector::Frobenius),
    StripRule::Gain(GainSelector::VolumeLineSearch),
    StripRule::Gain(GainSelector::VolumeCandidates),
    StripRule::CzStrip,
];

#[test]
fn containing_strip_leaves_the_set_unchanged() {
    let z = SetValue::Zonotope(skew_zono());
    let wide = [strip(dvector![1.0, 0.5], 0.0, 100.0)];
    for rule in RULES {
        let out = correct_strip(z.clone(), &wide, rule).unwrap();
        assert_hull_close(&hull(&out), &hull(&z), 1e-9);
    }
}

#[test]
fn frobenius_collapses_a_zero_width_strip() {
    let b2 = SetValue::Zonotope(Zonotope::from_box(&IntervalVector::unit(2, 1.0)));
    let out = correct_strip(b2, &[strip(dvector![1.0, 0.0], 0.0, 0.0)], StripRule::Gain(GainSelector::Frobenius)).unwrap();
    let h = hull(&out);
    assert!(h[0].width() <= 1e-9, "{:?}", h[0]);
    assert!(h[0].contains(0.0));
    assert!((h[1].width() - 2.0).abs() <= 1e-9);
}

#[test]
fn two_orthogonal_point_strips_give_a_point() {
    let b2 = SetValue::Zonotope(Zonotope::from_box(&IntervalVector::unit(2, 1.0)));
    let s = [strip(dvector![1.0, 0.0], 0.25, 0.0), strip(dvector![0.0, 1.0], -0.5, 0.0)];
    let h = hull(&correct_strip(b2, &s, StripRule::CzStrip).unwrap());
    assert!(h[0].width() <= 1e-9 && h[1].width() <= 1e-9);
    assert!((h[0].mid() - 0.25).abs() <= 1e-9 && (h[1].mid() + 0.5).abs() <= 1e-9);
}

#[test]
fn disjoint_strip_is_an_inconsistent_measurement() {
    let b2 = SetValue::Zonotope(Zonotope::from_box(&IntervalVector::unit(2, 1.0)));
    let s = [strip(dvector![1.0, 0.0], 3.0, 0.5)];
    for rule in RULES {
        assert_eq!(correct_strip(b2.clone(), &s, rule).unwrap_err(), DivergenceReason::InconsistentMeasurement);
    }
}

#[test]
fn exact_cz_correction_examples() {
    let sys = system(&["x1", "x2"], dmatrix![1.0, 1.0], 0.0, 10.0);
    let cz: ConstrainedZonotope = skew_zono().into();
    let y = &sys.c * skew_zono().center();
    let out = correct_cz_exact(&cz, &sys, &y).unwrap();
    assert_hull_close(&hull(&SetValue::ConstrainedZonotope(out)), &hull(&SetValue::ConstrainedZonotope(cz.clone())), 1e-9);

    let sys = system(&["x1", "x2"], dmatrix![1.0, 1.0], 0.0, 0.2);
    let y = dvector![0.9];
    let once = correct_cz_exact(&cz, &sys, &y).unwrap();
    let twice = correct_cz_exact(&once, &sys, &y).unwrap();
    let h1 = hull(&SetValue::ConstrainedZonotope(once));
    assert_hull_close(&h1, &hull(&SetValue::ConstrainedZonotope(twice)), 1e-6);
    assert!(h1[0].width() < hull(&SetValue::Zonotope(skew_zono()))[0].width());
}

#[test]
fn exact_cz_correction_contains_the_consistent_cloud() {
    let spec = make_vdp(0.1).unwrap();
    let sys = &spec.system;
    let u = DVector::zeros(sys.n_inputs());
    let y = dvector![0.3];
    let prev = SetValue::Zonotope(Zonotope::from_box(&spec.r0));
    let cloud = consistent_set_oracle(sys, &prev, &u, &y, 0.05).unwrap();
    assert!(!cloud.empty);
    let SetValue::ConstrainedZonotope(pred) = predict_linremainder(sys, &SetValue::ConstrainedZonotope(Zonotope::from_box(&spec.r0).into()), &u).unwrap() else {
        panic!("constrained zonotope expected");
    };
    let out = SetValue::ConstrainedZonotope(correct_cz_exact(&pred, sys, &y).unwrap());
    for p in &cloud.points {
        assert!(out.contains_point(p).unwrap(), "{p}");
    }
}

#[test]
fn frad_c_zero_gain_is_the_prediction() {
    let spec = make_vdp(0.1).unwrap();
    let sys = &spec.system;
    let z = skew_zono();
    let u = DVector::zeros(sys.n_inputs());
    let zero = DMatrix::zeros(2, sys.n_outputs());
    let out = step_frad_c(sys, &z, &u, &dvector![0.4], Some(&zero)).unwrap();
    let pred = predict_linremainder(sys, &SetValue::Zonotope(z), &u).unwrap();
    assert_hull_close(&hull(&SetValue::Zonotope(out)), &hull(&pred), 1e-9);
}

#[test]
fn frad_c_scalar_recursion() {
    // x⁺ = a x, y = x + v: generators scale by a - g and gain -g σ and w, with
    // g = a Σh² / (Σh² + σ²).
    let (a, sigma, w) = (0.9, 0.2, 0.01);
    let sys = system(&["0.9*x1"], DMatrix::identity(1, 1), w, sigma);
    let mut z = Zonotope::from_box(&IntervalVector::unit(1, 2.0));
    let mut gens = vec![2.0f64];
    for _ in 0..60 {
        z = step_frad_c(&sys, &z, &dvector![0.0], &dvector![0.0], None).unwrap();
        let energy: f64 = gens.iter().map(|g| g * g).sum();
        let gain = a * energy / (energy + sigma * sigma);
        gens = gens.iter().map(|g| (a - gain) * g).collect();
        gens.extend([-gain * sigma, w]);
        let r: f64 = gens.iter().map(|g| g.abs()).sum();
        let h = hull(&SetValue::Zonotope(z.clone()));
        assert!((h[0].rad() - r).abs() < 1e-9, "{} vs {r}", h[0].rad());
    }
    let r: f64 = gens.iter().map(|g| g.abs()).sum();
    assert!(r < 0.5);
}

#[test]
fn pdtdi_single_partition_is_natural_inclusion_and_clip() {
    let spec = make_vdp(0.1).unwrap();
    let sys = &spec.system;
    let mut cfg = ObserverConfig::new(ObserverMethod::PDtdi);
    cfg.partitions = 1;
    let state = init_uncorrected(&cfg, sys, &spec.r0);
    assert_eq!(hull(state.internal()), spec.r0);
    let u = DVector::zeros(sys.n_inputs());
    let y = dvector![0.1];
    let next = observer_step(&cfg, &state, sys, &u, &y);
    let nat = sys.f.eval_interval(&spec.r0, &IntervalVector::point(u.as_slice())).unwrap().add(&sys.w);
    let meas = IntervalVector::new(vec![Interval::new(y[0] - sys.v[0].hi, y[0] - sys.v[0].lo)]);
    let expect = contract_box(&nat, &sys.c, &meas).unwrap();
    assert_hull_close(&hull(next.internal()), &expect, 1e-12);
}

#[test]
fn pdtdi_monotone_scalar_is_exact() {
    let sys = system(&["x1 + 0.1*x1^3"], DMatrix::identity(1, 1), 0.0, 1.0);
    let x = IntervalVector::new(vec![Interval::new(-1.0, 2.0)]);
    for parts in [1, 2, 5, 9] {
        let out = predict_pdtdi(&sys, &x, &dvector![0.0], parts, None).unwrap();
        assert!((out[0].lo - -1.1).abs() < 1e-12 && (out[0].hi - 2.8).abs() < 1e-12, "{parts}: {:?}", out[0]);
    }
}

#[test]
fn mixed_monotone_examples() {
    let sys = affine_sys(0.0);
    let p = dvector![0.4, -0.7];
    let point = Zonotope::point(p.clone());
    let expect = DMatrix::from_fn(2, 2, |i, j| AFFINE_A[i][j]) * &p + dvector![0.3, 1.0];
    for x in [SetValue::ConstrainedZonotope(point.clone().into()), SetValue::Bundle(ZonotopeBundle::new(vec![point.clone()]).unwrap())] {
        let h = hull(&predict_mixed_monotone(&sys, &x, &dvector![0.3]).unwrap());
        assert_hull_close(&h, &IntervalVector::point(expect.as_slice()), 1e-12);
    }

    let sys = system(&["x1", "x2"], dmatrix![1.0, 0.0], 0.0, 0.1);
    let z = skew_zono();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for x in [SetValue::ConstrainedZonotope(z.clone().into()), SetValue::Bundle(ZonotopeBundle::new(vec![z.clone()]).unwrap())] {
        let out = predict_mixed_monotone(&sys, &x, &dvector![0.0]).unwrap();
        for _ in 0..50 {
            let d = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            assert!(out.support(&d).unwrap() >= x.support(&d).unwrap() - 1e-9);
        }
    }
}

#[test]
fn divergence_is_absorbing() {
    let spec = make_vdp(0.1).unwrap();
    let sys = &spec.system;
    let u = DVector::zeros(sys.n_inputs());
    for m in ObserverMethod::ALL {
        let cfg = ObserverConfig::for_benchmark(m, &spec);
        let state = initialize(&cfg, sys, &spec.r0, &dvector![0.0]).unwrap();
        let mut bad = observer_step(&cfg, &state, sys, &u, &dvector![50.0]);
        if m == ObserverMethod::FRadC {
            // The Luenberger update never intersects, so nothing is detected.
            assert!(!bad.is_diverged());
            bad.mark_diverged(DivergenceReason::Timeout);
        } else {
            assert_eq!(bad.diverged().map(|d| &d.reason), Some(&DivergenceReason::InconsistentMeasurement), "{m}");
        }
        let d = bad.diverged().unwrap().clone();
        assert_eq!(d.step, 1, "{m}");
        let again = observer_step(&cfg, &bad, sys, &u, &dvector![0.0]);
        assert_eq!(again.diverged(), Some(&d), "{m}");
        assert_eq!(again.step(), 1);
        assert_eq!(again.internal(), bad.internal());
    }
}

#[test]
fn frad_a_matches_the_hand_pipeline() {
    let sys = affine_sys(0.05);
    let cfg = ObserverConfig::new(ObserverMethod::FRadA);
    let r0 = IntervalVector::unit(2, 1.0);
    let y0 = dvector![0.2];
    let state = initialize(&cfg, &sys, &r0, &y0).unwrap();
    let s0 = Strip::from_measurement(&sys.c, &y0, sys.v.comps()).unwrap();
    let z0 = correct_with_strip(&Zonotope::from_box(&r0), &s0[0], GainSelector::Frobenius).unwrap();
    assert_hull_close(&hull(state.internal()), &hull(&SetValue::Zonotope(z0.clone())), 1e-12);

    let y1 = dvector![0.5];
    let next = observer_step(&cfg, &state, &sys, &dvector![0.1], &y1);
    let s1 = Strip::from_measurement(&sys.c, &y1, sys.v.comps()).unwrap();
    let z1 = correct_with_strip(&affine_image(&z0, 0.1, 0.05), &s1[0], GainSelector::Frobenius).unwrap();
    let z1 = reduce_zonotope(&z1, cfg.max_order, cfg.reduction);
    assert_hull_close(&hull(next.internal()), &hull(&SetValue::Zonotope(z1)), 1e-9);
}

#[test]
fn every_method_contains_the_one_step_consistent_cloud() {
    let spec = make_vdp(0.1).unwrap();
    let sys = &spec.system;
    let traj = simulate_from_box(sys, &spec.r0, &spec.inputs(1), 1, 11).unwrap();
    let u = &traj.inputs[0];
    let meas0 = IntervalVector::new(vec![Interval::new(traj.measurements[0][0] - 0.2, traj.measurements[0][0] + 0.2)]);
    let prev0 = SetValue::Interval(contract_box(&spec.r0, &sys.c, &meas0).unwrap());
    let cloud = consistent_set_oracle(sys, &prev0, u, &traj.measurements[1], 0.05).unwrap();
    assert!(!cloud.empty);
    // The Luenberger update does not use y₁: every image of R₀ ∩ {y₀} counts.
    let blind = NonlinearDiscreteSystem::new(sys.f.clone(), sys.c.clone(), sys.w.clone(), IntervalVector::unit(1, 1e6)).unwrap();
    let cloud0 = consistent_set_oracle(&blind, &prev0, u, &dvector![0.0], 0.05).unwrap();
    for m in ObserverMethod::ALL {
        let cfg = ObserverConfig::for_benchmark(m, &spec);
        let state = initialize(&cfg, sys, &spec.r0, &traj.measurements[0]).unwrap();
        let points = if m == ObserverMethod::FRadC { &cloud0.points } else { &cloud.points };
        assert!(!state.is_diverged());
        let next = observer_step(&cfg, &state, sys, u, &traj.measurements[1]);
        assert!(!next.is_diverged(), "{m}: {:?}", next.diverged());
        let est = next.estimate();
        for p in points {
            assert!(est.contains_point(p).unwrap(), "{m} misses {p}");
        }
    }
}

fn order_of(z: &Zonotope) -> f64 {
    z.generators().ncols() as f64 / z.dim() as f64
}

#[test]
fn representation_and_budgets_hold_along_a_run() {
    for id in ["vdp:0.1", "tank:6"] {
        let spec = from_id(id).unwrap();
        let steps = 15;
        let traj = simulate_from_box(&spec.system, &spec.r0, &spec.inputs(steps), steps, 2).unwrap();
        for m in ObserverMethod::ALL {
            let cfg = ObserverConfig::for_benchmark(m, &spec);
            let mut st = initialize(&cfg, &spec.system, &spec.r0, &traj.measurements[0]).unwrap();
            for k in 1..=steps {
                st = observer_step(&cfg, &st, &spec.system, &traj.inputs[k - 1], &traj.measurements[k]);
                if st.is_diverged() {
                    break;
                }
                let s = st.internal();
                assert_eq!(s.kind(), m.representation(), "{id} {m}");
                match s {
                    SetValue::Zonotope(z) => assert!(order_of(z) <= cfg.max_order + 1e-12, "{id} {m}"),
                    SetValue::ConstrainedZonotope(c) => {
                        assert!(c.n_constraints() <= cfg.max_constraints, "{id} {m}");
                        let budget = (cfg.max_order * c.dim() as f64).floor() as usize;
                        assert!(c.n_generators() <= budget.max(c.dim() + c.n_constraints()), "{id} {m}");
                    }
                    SetValue::Bundle(b) => {
                        assert!(b.len() <= cfg.bundle_cap + 1, "{id} {m}");
                        for z in b.members() {
                            assert!(order_of(z) <= cfg.max_order + 1e-12, "{id} {m}");
                        }
                    }
                    _ => {}
                }
            }
        }
    }
}

#[test]
fn method_tags_round_trip() {
    for m in ObserverMethod::ALL {
        assert_eq!(m.tag().parse::<ObserverMethod>().unwrap(), m);
        assert_eq!(m.tag().to_lowercase().replace('-', "_").parse::<ObserverMethod>().unwrap(), m);
    }
    assert!("FRad-D".parse::<ObserverMethod>().is_err());
    let mut cfg = ObserverConfig::new(ObserverMethod::PDtdi);
    cfg.partitions = 0;
    assert_eq!(cfg.validate(), Err(ConfigError::Partitions(0)));
    let mut cfg = ObserverConfig::new(ObserverMethod::FRadA);
    cfg.max_order = 0.5;
    assert_eq!(cfg.validate(), Err(ConfigError::MaxOrder(0.5)));
    assert_eq!(ObserverConfig::new(ObserverMethod::Zdc).validate(), Err(ConfigError::MissingSplit(ObserverMethod::Zdc)));
}

fn arb_zono() -> impl Strategy<Value = Zonotope> {
    (prop::collection::vec(-1.0..1.0f64, 2), prop::collection::vec(-1.0..1.0f64, 2 * 4))
        .prop_map(|(c, g)| Zonotope::new(DVector::from_vec(c), DMatrix::from_vec(2, 4, g)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A point of the set that lies in the strip survives every rule.
    #[test]
    fn corrections_keep_consistent_points(
        z in arb_zono(),
        xi in prop::collection::vec(-1.0..1.0f64, 4),
        normal in prop::collection::vec(-1.0..1.0f64, 2),
        off in -0.3..0.3f64,
        sigma in 0.0..0.5f64,
    ) {
        let n = DVector::from_vec(normal);
        prop_assume!(n.norm() > 0.1);
        let x = z.center() + z.generators() * DVector::from_vec(xi);
        let s = strip(n.clone(), n.dot(&x) + off.clamp(-sigma, sigma), sigma);
        for rule in RULES {
            let out = correct_strip(SetValue::Zonotope(z.clone()), &[s.clone()], rule).unwrap();
            prop_assert!(out.contains_point(&x).unwrap(), "{:?}", rule);
        }
    }

    /// Exact intersections never grow the set: support test in 100 directions.
    #[test]
    fn exact_corrections_are_monotone(
        z in arb_zono(),
        normal in prop::collection::vec(-1.0..1.0f64, 2),
        y in -0.5..0.5f64,
        sigma in 0.05..0.5f64,
        seed in 0u64..1000,
    ) {
        let n = DVector::from_vec(normal);
        prop_assume!(n.norm() > 0.1);
        let s = strip(n, y, sigma);
        let pred = SetValue::Zonotope(z.clone());
        let cz = correct_strip(pred.clone(), &[s.clone()], StripRule::CzStrip);
        let bx = correct_strip(SetValue::Interval(hull(&pred)), &[s], StripRule::CzStrip);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let d = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            if let Ok(c) = &cz {
                prop_assert!(c.support(&d).unwrap() <= pred.support(&d).unwrap() + 1e-9);
            }
            if let Ok(b) = &bx {
                prop_assert!(b.support(&d).unwrap() <= SetValue::Interval(hull(&pred)).support(&d).unwrap() + 1e-9);
            }
        }
    }
}
