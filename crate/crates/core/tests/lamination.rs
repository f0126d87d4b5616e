use std::f64::consts::{FRAC_PI_2, PI};

use pinchdyn::dynamics::Verdict;
use pinchdyn::lamination::{
    build_fundamental_lamination, build_koenigs_towards, geodesic_between, geodesic_separation, grand_orbit_expand,
    hyperbolic_distance, isometry_to, validate_chart, validate_lamination, Anchor, GoodNeighborhood, HalfPlaneGeodesic,
    Isometry, KoenigsChart, LaminationParams,
};
use pinchdyn::lang::{catalog, EntireMap};
use pinchdyn::plane::{SpherePoint, Window};
use pinchdyn::Complex64;
use proptest::prelude::*;

fn upper() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, 0.05..10.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

fn isometry() -> impl Strategy<Value = Isometry> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_filter("positive determinant", |(a, b, c, d)| a * d - b * c > 0.1)
        .prop_map(|(a, b, c, d)| Isometry::new(a, b, c, d).unwrap())
}

fn semicircle() -> impl Strategy<Value = HalfPlaneGeodesic> {
    (-10.0..10.0f64, 0.1..10.0f64).prop_map(|(center, radius)| HalfPlaneGeodesic::Semicircle { center, radius })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn isometries_preserve_distance(m in isometry(), z in upper(), w in upper()) {
        let d = hyperbolic_distance(z, w);
        let e = hyperbolic_distance(m.apply(z), m.apply(w));
        prop_assert!((d - e).abs() < 1e-8 * (1.0 + d));
    }

    #[test]
    fn inverse_undoes_isometry(m in isometry(), z in upper()) {
        let back = m.inverse().apply(m.apply(z));
        prop_assert!((back - z).norm() < 1e-9 * (1.0 + z.norm()));
        prop_assert!((m.compose(&m.inverse()).det() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn standard_isometry_maps_the_axis_onto_the_geodesic(g in semicircle(), s in -4.0..4.0f64) {
        let z = isometry_to(&g).apply(Complex64::new(0.0, s.exp()));
        prop_assert!(g.euclidean_distance(z) < 1e-9 * (1.0 + z.norm()));
    }

    #[test]
    fn geodesic_through_two_points_contains_them(a in upper(), b in upper()) {
        prop_assume!((a - b).norm() > 1e-3);
        let g = geodesic_between(a.into(), b.into()).unwrap();
        prop_assert!(g.euclidean_distance(a) < 1e-8 * (1.0 + a.norm()));
        prop_assert!(g.euclidean_distance(b) < 1e-8 * (1.0 + b.norm()));
    }

    #[test]
    fn neighborhood_contains_its_geodesic(g in semicircle(), delta in 0.05..1.5f64, s in -3.0..3.0f64) {
        let nb = GoodNeighborhood::new(g, delta).unwrap();
        let on = nb.isometry.apply(Complex64::new(0.0, s.exp()));
        prop_assert!(nb.contains(on));
        let outside = nb.isometry.apply(Complex64::from_polar(s.exp(), FRAC_PI_2 + delta + 0.01));
        prop_assert!(!nb.contains(outside));
    }

    #[test]
    fn separation_is_symmetric(g in semicircle(), h in semicircle()) {
        let a = geodesic_separation(&g, &h);
        let b = geodesic_separation(&h, &g);
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a));
    }
}

#[test]
fn geodesics_to_infinity_are_vertical() {
    let g = geodesic_between(SpherePoint::new(2.0, 0.0), SpherePoint::Infinity).unwrap();
    assert_eq!(g, HalfPlaneGeodesic::Vertical { x0: 2.0 });
    assert!(geodesic_between(SpherePoint::new(1.0, -1.0), SpherePoint::Infinity).is_err());
    assert!(GoodNeighborhood::new(g, 2.0).is_err());
}

fn chart(f: &EntireMap) -> KoenigsChart {
    build_koenigs_towards(f, Complex64::new(2f64.ln() - 2.0, 0.0), 2.0, 25, Complex64::new(-1.0, 0.0)).unwrap()
}

#[test]
fn koenigs_chart_conjugates_to_doubling() {
    let f = catalog("bergweiler").unwrap();
    let k = chart(&f);
    assert!(validate_chart(&k).unwrap() < 1e-6);
    for z in [Complex64::new(-6.0, 1.0), Complex64::new(-4.0, -2.0), Complex64::new(-8.0, 0.5)] {
        let (zeta, _) = k.zeta(z).unwrap();
        let (zeta_f, _) = k.zeta(f.eval(z).unwrap()).unwrap();
        assert!((zeta_f - 2.0 * zeta).norm() < 1e-6 * (1.0 + zeta.norm()), "{z}");
    }
}

#[test]
fn fundamental_lamination_has_property_p() {
    let f = catalog("bergweiler").unwrap();
    let k = chart(&f);
    let w = Window::square(Complex64::new(-1.0, 0.0), 16.0, 256).unwrap();
    let p = LaminationParams::default();
    let anchors = [Anchor::Zeta { u: 2.4 * PI, v: Some(3.6 * PI) }, Anchor::Zeta { u: -3.6 * PI, v: Some(-2.4 * PI) }];
    let lam = build_fundamental_lamination(&f, &k, &anchors, &w, &p).unwrap();
    assert_eq!(lam.leaves.len(), 2);
    let go = grand_orbit_expand(&f, &lam, 2, &w, &p);
    assert!(go.leaves.len() > 2);
    assert!(go.leaves.iter().all(|l| l.depth <= 2 && !l.to_infinity));
    let report = validate_lamination(&go, &p);
    assert_eq!(report.property_p, Verdict::Pass);
    for l in go.leaves.iter().filter(|l| l.depth > 0) {
        let parent = go.leaves.iter().find(|q| Some(q.id) == l.parent).unwrap();
        for (v, &j) in l.vertices.iter().zip(&l.parent_index) {
            let image = f.eval(*v).unwrap();
            assert!((image - parent.vertices[j]).norm() < 1e-6 * (1.0 + image.norm()));
        }
    }
}

#[test]
fn leaf_to_infinity_fails_property_p() {
    let f = catalog("bergweiler").unwrap();
    let k = chart(&f);
    let w = Window::square(Complex64::new(-1.0, 0.0), 16.0, 256).unwrap();
    let p = LaminationParams::default();
    let lam = build_fundamental_lamination(&f, &k, &[Anchor::Zeta { u: 0.0, v: None }], &w, &p).unwrap();
    let go = grand_orbit_expand(&f, &lam, 1, &w, &p);
    let report = validate_lamination(&go, &p);
    assert!(!report.infinity_leaves.is_empty());
    assert_eq!(report.property_p, Verdict::Fail);
}
