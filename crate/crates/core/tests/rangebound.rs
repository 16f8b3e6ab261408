use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use setest_core::benchmarks::{make_tank, make_vdp, tank_dc_split, vdp_dc_split};
use setest_core::expr::SymbolicDynamics;
use setest_core::interval::{Interval, IntervalVector};
use setest_core::rangebound::*;
use setest_core::setcore::{SetValue, Zonotope};

fn iv1(lo: f64, hi: f64) -> IntervalVector {
    IntervalVector::new(vec![Interval::new(lo, hi)])
}

fn none() -> IntervalVector {
    IntervalVector::new(vec![])
}

fn hull_of(s: &SetValue) -> IntervalVector {
    s.interval_hull().unwrap()
}

#[test]
fn natural_inclusion_examples() {
    let f = SymbolicDynamics::parse(1, 0, &["x1^2"]).unwrap();
    assert_eq!(interval_eval(&f, &iv1(-1.0, 2.0), &none()).unwrap()[0], Interval::new(0.0, 4.0));
    let f = SymbolicDynamics::parse(1, 0, &["x1*x1"]).unwrap();
    assert_eq!(interval_eval(&f, &iv1(-1.0, 2.0), &none()).unwrap()[0], Interval::new(-2.0, 4.0));
    let f = SymbolicDynamics::parse(1, 0, &["x1 - x1"]).unwrap();
    assert_eq!(interval_eval(&f, &iv1(0.0, 1.0), &none()).unwrap()[0], Interval::new(-1.0, 1.0));
    let f = SymbolicDynamics::parse(1, 0, &["sqrt(2*9.81*x1)"]).unwrap();
    let r = interval_eval(&f, &iv1(16.0, 25.0), &none()).unwrap()[0];
    assert!((r.lo - 313.92f64.sqrt()).abs() < 1e-12 && (r.hi - 490.5f64.sqrt()).abs() < 1e-12);
    let err = interval_eval(&f, &iv1(-1.0, 1.0), &none()).unwrap_err();
    assert!(format!("{err}").contains("sqrt"), "{err}");
}

#[test]
fn jacobian_examples() {
    let f = SymbolicDynamics::parse(1, 0, &["x1^2"]).unwrap();
    let j = jacobian_interval(&f, &iv1(0.0, 1.0), &none()).unwrap();
    assert_eq!(j.get(0, 0), Interval::new(0.0, 2.0));

    let vdp = make_vdp(0.1).unwrap();
    let j = jacobian_interval(&vdp.system.f, &IntervalVector::unit(2, 1.0), &none()).unwrap();
    let e = j.get(1, 0);
    assert!((e.lo + 0.03).abs() < 1e-12 && (e.hi + 0.02).abs() < 1e-12, "{e:?}");

    let f = SymbolicDynamics::parse(2, 0, &["2*x1 - 3*x2", "0.5*x2"]).unwrap();
    let j = jacobian_interval(&f, &IntervalVector::unit(2, 4.0), &none()).unwrap();
    assert_eq!(j.lower, dmatrix![2.0, -3.0; 0.0, 0.5]);
    assert_eq!(j.lower, j.upper);
}

#[test]
fn mean_value_examples() {
    let f = SymbolicDynamics::parse(1, 0, &["x1^2"]).unwrap();
    let x = SetValue::Interval(iv1(0.0, 1.0));
    let r = mean_value_extension(&f, &x, &dvector![0.5], &[]).unwrap();
    let h = hull_of(&r);
    assert!((h[0].lo + 0.75).abs() < 1e-12 && (h[0].hi - 1.25).abs() < 1e-12, "{h:?}");
    for k in 0..=100 {
        let p = k as f64 / 100.0;
        assert!(h[0].contains(p * p));
    }

    let f = SymbolicDynamics::parse(1, 0, &["2*x1"]).unwrap();
    let z = SetValue::Zonotope(Zonotope::from_box(&iv1(0.0, 1.0)));
    let r = mean_value_extension(&f, &z, &dvector![0.5], &[]).unwrap();
    assert_eq!(hull_of(&r), iv1(0.0, 2.0));

    let f = SymbolicDynamics::parse(1, 0, &["3"]).unwrap();
    let r = mean_value_extension(&f, &z, &dvector![0.5], &[]).unwrap();
    assert_eq!(hull_of(&r), iv1(3.0, 3.0));
}

#[test]
fn linearization_examples() {
    let f = SymbolicDynamics::parse(1, 0, &["x1^2"]).unwrap();
    let lin = conservative_linearization(&f, &SetValue::Interval(iv1(-1.0, 1.0)), &dvector![0.0], &[]).unwrap();
    assert_eq!(lin.a, dmatrix![0.0]);
    assert_eq!(lin.remainder[0], Interval::new(0.0, 1.0));
    assert_eq!(hull_of(&lin.image(&SetValue::Interval(iv1(-1.0, 1.0))).unwrap()), iv1(0.0, 1.0));

    let f = SymbolicDynamics::parse(2, 0, &["x1 + 2*x2 - 1", "x2"]).unwrap();
    let lin = conservative_linearization(&f, &SetValue::Interval(IntervalVector::unit(2, 1.0)), &dvector![0.2, 0.1], &[]).unwrap();
    assert!(lin.remainder.comps().iter().all(|r| *r == Interval::ZERO));

    let f = SymbolicDynamics::parse(1, 0, &["sqrt(x1)"]).unwrap();
    let lin = conservative_linearization(&f, &SetValue::Interval(iv1(16.0, 25.0)), &dvector![20.5], &[]).unwrap();
    let bound = 0.5 * (1.0 / (4.0 * 16f64.powf(1.5))) * 4.5 * 4.5;
    assert!(lin.remainder[0].width() <= bound + 1e-12);
    assert!((bound - 0.0396).abs() < 1e-4);
}

#[test]
fn dc_examples() {
    let g = SymbolicDynamics::parse(1, 0, &["x1^2"]).unwrap();
    let h = SymbolicDynamics::parse(1, 0, &["0"]).unwrap();
    let split = DcSplit::new(g.clone(), h.clone(), iv1(-10.0, 10.0)).unwrap();
    split.validate(&g, &[], 1000, 1).unwrap();
    let b = dc_bounds(&split, &iv1(0.0, 2.0), &dvector![1.0], &[]).unwrap();
    assert!((b.lower[0].slope[0] - 2.0).abs() < 1e-12 && (b.lower[0].offset + 1.0).abs() < 1e-12);
    for k in 0..=200 {
        let x = dvector![k as f64 / 100.0];
        assert!(b.lower[0].eval(&x) <= x[0] * x[0] + 1e-12);
        assert!(b.upper[0].eval(&x) >= x[0] * x[0] - 1e-12);
    }

    let same = DcSplit::new(g.clone(), g.clone(), iv1(-10.0, 10.0)).unwrap();
    let b = dc_bounds(&same, &iv1(0.0, 2.0), &dvector![1.0], &[]).unwrap();
    for k in 0..=20 {
        let x = dvector![k as f64 / 10.0];
        assert!(b.lower[0].eval(&x) <= 1e-12 && b.upper[0].eval(&x) >= -1e-12);
    }

    // Concave part in g is rejected.
    let bad = DcSplit::new(SymbolicDynamics::parse(1, 0, &["-x1^2"]).unwrap(), h, iv1(-1.0, 1.0)).unwrap();
    let f = SymbolicDynamics::parse(1, 0, &["-x1^2"]).unwrap();
    assert!(matches!(bad.validate(&f, &[], 1000, 2), Err(RangeError::InvalidSplit(_))));
}

#[test]
fn vdp_split_identity_and_bounds() {
    for mu in [0.1, 5.0] {
        let spec = make_vdp(mu).unwrap();
        let split = vdp_dc_split(mu).unwrap();
        split.validate(&spec.system.f, &[], 1000, 3).unwrap();
        let x = IntervalVector::unit(2, 1.0);
        let b = dc_bounds(&split, &x, &dvector![0.0, 0.0], &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let p = dvector![rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
            let fp = spec.system.f.eval(p.as_slice(), &[]).unwrap();
            for i in 0..2 {
                assert!(b.lower[i].eval(&p) <= fp[i] + 1e-12);
                assert!(b.upper[i].eval(&p) >= fp[i] - 1e-12);
            }
        }
        // The identity as printed in the source does not hold at [1, 1].
        let printed = mu - (mu / 8.0) * ((1.0f64 - 2.0).powi(2) - (1.0f64 + 2.0).powi(2));
        assert!((printed - mu * (1.0 - 1.0) * 1.0).abs() > 0.1);
    }
}

#[test]
fn dc_refuses_large_boxes() {
    let split = tank_dc_split(30).unwrap();
    let spec = make_tank(30).unwrap();
    let x = spec.r0.clone();
    let err = dc_bounds(&split, &x, &x.center(), spec.input.as_slice()).unwrap_err();
    assert!(matches!(err, RangeError::VertexLimit { dim: 30, .. }));
}

#[test]
fn tank_split_is_valid() {
    let spec = make_tank(6).unwrap();
    let mut split = tank_dc_split(6).unwrap();
    split.domain = IntervalVector::new(vec![Interval::new(1.0, 40.0); 6]);
    split.validate(&spec.system.f, spec.input.as_slice(), 1000, 5).unwrap();
}

struct Scalar<'a>(WithInput<'a>);

#[test]
fn mixed_monotone_examples() {
    let inc = SymbolicDynamics::parse(1, 0, &["x1^3 + x1"]).unwrap();
    let m = WithInput { f: &inc, u: &[] };
    let b = iv1(-1.0, 2.0);
    let d = DecompositionFunction::new(&m, b.clone()).unwrap();
    assert_eq!(mixed_monotone_bounds(&d, &b).unwrap(), iv1(-2.0, 10.0));

    let neg = SymbolicDynamics::parse(1, 0, &["-x1"]).unwrap();
    let m = WithInput { f: &neg, u: &[] };
    let d = DecompositionFunction::new(&m, b.clone()).unwrap();
    assert_eq!(mixed_monotone_bounds(&d, &b).unwrap(), iv1(-2.0, 1.0));

    let s = Scalar(WithInput { f: &inc, u: &[] });
    let p = iv1(0.7, 0.7);
    let d = DecompositionFunction::new(&s.0, p.clone()).unwrap();
    let r = mixed_monotone_bounds(&d, &p).unwrap();
    let fp = 0.7f64.powi(3) + 0.7;
    assert!((r[0].lo - fp).abs() < 1e-12 && (r[0].hi - fp).abs() < 1e-12);
}

#[test]
fn lifted_vdp_bounds_contain_samples() {
    let spec = make_vdp(0.1).unwrap();
    let c = dvector![0.1, -0.2];
    let g = dmatrix![0.6, 0.2, 0.1; -0.1, 0.5, 0.3];
    let (h, mu) = lifted_bounds(&spec.system.f, &[], &c, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let xi = DVector::from_fn(3, |_, _| rng.random_range(-1.0..=1.0));
        let x = &c + &g * &xi;
        let fx = DVector::from_vec(spec.system.f.eval(x.as_slice(), &[]).unwrap());
        let rem = fx - &h * &xi;
        assert!(mu.contains_point(rem.as_slice(), 1e-12));
    }
}

#[test]
fn jacobian_matches_finite_differences_at_points() {
    let spec = make_vdp(5.0).unwrap();
    let f = &spec.system.f;
    let p = [0.3, -0.7];
    let j = f.jacobian_interval(&IntervalVector::point(&p), &none()).unwrap();
    let jp = f.jacobian(&p, &[]).unwrap();
    for i in 0..2 {
        for k in 0..2 {
            let e = j.get(i, k);
            assert!((e.lo - jp[(i, k)]).abs() < 1e-12 && (e.hi - jp[(i, k)]).abs() < 1e-12);
            let mut a = p;
            let mut b = p;
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (f.eval(&a, &[]).unwrap()[i] - f.eval(&b, &[]).unwrap()[i]) / 2e-6;
            assert!((fd - jp[(i, k)]).abs() < 1e-4);
        }
    }
}

/// `a x₁² + b x₁x₂ + c x₂³ + d x₁ + e` componentwise, with fixed coefficients per instance.
fn poly_family(coef: &[f64]) -> SymbolicDynamics {
    let comp = |k: usize| {
        let c = &coef[5 * k..5 * k + 5];
        format!("{:?}*x1^2 + {:?}*x1*x2 + {:?}*x2^3 + {:?}*x1 + {:?}", c[0], c[1], c[2], c[3], c[4])
    };
    SymbolicDynamics::parse(2, 0, &[comp(0), comp(1)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn enclosures_contain_sampled_images(
        coef in proptest::collection::vec(-2.0..2.0f64, 10),
        c in proptest::collection::vec(-1.0..1.0f64, 2),
        g in proptest::collection::vec(-0.6..0.6f64, 6),
        seed in 0u64..10_000,
    ) {
        let f = poly_family(&coef);
        let z = Zonotope::new(DVector::from_vec(c.clone()), DMatrix::from_vec(2, 3, g)).unwrap();
        let x = SetValue::Zonotope(z.clone());
        let center = z.center().clone();
        let mve = mean_value_extension(&f, &x, &center, &[]).unwrap();
        let lin = conservative_linearization(&f, &x, &center, &[]).unwrap().image(&x).unwrap();
        let (h, mu) = lifted_bounds(&f, &[], z.center(), z.generators()).unwrap();
        let nat = interval_eval(&f, &z.interval_hull(), &none()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let xi = DVector::from_fn(3, |_, _| rng.random_range(-1.0..=1.0));
            let p = z.center() + z.generators() * &xi;
            let fp = DVector::from_vec(f.eval(p.as_slice(), &[]).unwrap());
            prop_assert!(mve.contains_point(&fp).unwrap());
            prop_assert!(lin.contains_point(&fp).unwrap());
            prop_assert!(nat.contains_point(fp.as_slice(), 1e-12));
            let rem = &fp - &h * &xi;
            prop_assert!(mu.contains_point(rem.as_slice(), 1e-9));
        }
    }

    #[test]
    fn affine_maps_are_exact(m in proptest::collection::vec(-2.0..2.0f64, 4), b in proptest::collection::vec(-1.0..1.0f64, 2), gz in proptest::collection::vec(-1.0..1.0f64, 6)) {
        let f = SymbolicDynamics::parse(2, 0, &[
            format!("{:?}*x1 + {:?}*x2 + {:?}", m[0], m[1], b[0]),
            format!("{:?}*x1 + {:?}*x2 + {:?}", m[2], m[3], b[1]),
        ]).unwrap();
        let z = Zonotope::new(dvector![0.1, 0.2], DMatrix::from_vec(2, 3, gz)).unwrap();
        let x = SetValue::Zonotope(z.clone());
        let mve = mean_value_extension(&f, &x, z.center(), &[]).unwrap();
        let lin = conservative_linearization(&f, &x, z.center(), &[]).unwrap();
        prop_assert!(lin.remainder.comps().iter().all(|r| *r == Interval::ZERO));
        let mm = DMatrix::from_row_slice(2, 2, &m);
        let exact = z.linear_map(&mm).unwrap().translate(&DVector::from_vec(b));
        for k in 0..16 {
            let t = k as f64 * std::f64::consts::PI / 8.0;
            let d = dvector![t.cos(), t.sin()];
            prop_assert!((mve.support(&d).unwrap() - exact.support(&d)).abs() < 1e-9);
        }
    }

    #[test]
    fn dc_bounds_sandwich_f(lo1 in -1.0..0.5f64, w1 in 0.01..1.0f64, lo2 in -1.0..0.5f64, w2 in 0.01..1.0f64, seed in 0u64..1000) {
        let spec = make_vdp(5.0).unwrap();
        let split = vdp_dc_split(5.0).unwrap();
        let x = IntervalVector::from_bounds(&[lo1, lo2], &[lo1 + w1, lo2 + w2]).unwrap();
        let b = dc_bounds(&split, &x, &x.center(), &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let p = dvector![rng.random_range(x[0].lo..=x[0].hi), rng.random_range(x[1].lo..=x[1].hi)];
            let fp = spec.system.f.eval(p.as_slice(), &[]).unwrap();
            for i in 0..2 {
                prop_assert!(b.lower[i].eval(&p) <= fp[i] + 1e-10);
                prop_assert!(b.upper[i].eval(&p) >= fp[i] - 1e-10);
            }
        }
    }
}
