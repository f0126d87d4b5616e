use std::f64::consts::{E, PI};
use std::time::Instant;

use pinchdyn::moduli::{
    annulus_modulus, distance_modulus_bound, quadrilateral_module, random_separation_configs, round_annulus_modulus,
    selftest, separation_bound_check, superadditivity_check, AnnulusSpec, ExtremalParams, QuadrilateralSpec,
    DEFAULT_SLACK,
};
use pinchdyn::plane::SpherePoint;
use pinchdyn::Complex64;
use proptest::prelude::*;

fn origin() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

#[test]
fn round_annulus_calibration() {
    let p = ExtremalParams::default();
    let a = AnnulusSpec::round(origin(), 1.0, E).unwrap();
    let (outer, inner) = a.boundaries(512);
    let m = annulus_modulus(&AnnulusSpec::Polygonal { outer, inner }, &p).unwrap();
    let target = 1.0 / (2.0 * PI);
    assert!((m - target).abs() <= 0.02 * target, "modulus {m}");
}

#[test]
fn rectangle_calibration() {
    let m = quadrilateral_module(&QuadrilateralSpec::rectangle(2.0, 1.0), &ExtremalParams::default()).unwrap();
    assert!((m - 2.0).abs() <= 0.05 * 2.0, "module {m}");
}

#[test]
fn nested_split_is_exactly_additive() {
    let p = ExtremalParams::default();
    let whole = AnnulusSpec::round(origin(), 1.0, 4.0).unwrap();
    let halves = [AnnulusSpec::round(origin(), 1.0, 2.0).unwrap(), AnnulusSpec::round(origin(), 2.0, 4.0).unwrap()];
    let row = superadditivity_check(&whole, &halves, &p, 0.0).unwrap();
    assert!((row.lhs - row.rhs).abs() < 1e-10);
}

#[test]
fn overlapping_parts_are_rejected() {
    let p = ExtremalParams::default();
    let whole = AnnulusSpec::round(origin(), 1.0, 4.0).unwrap();
    let parts = [AnnulusSpec::round(origin(), 1.0, 3.0).unwrap(), AnnulusSpec::round(origin(), 2.0, 4.0).unwrap()];
    assert!(superadditivity_check(&whole, &parts, &p, 0.0).is_err());
}

#[test]
fn random_separation_bounds_hold() {
    let p = ExtremalParams::default();
    let mut violations = 0;
    for (ring, a, b) in random_separation_configs(7, 200) {
        let row = separation_bound_check(&ring, a, b, &p, DEFAULT_SLACK).unwrap();
        violations += usize::from(!row.pass);
    }
    assert_eq!(violations, 0);
}

#[test]
fn non_separating_ring_is_rejected() {
    let p = ExtremalParams::default();
    let b = AnnulusSpec::round(origin(), 1.0, 2.0).unwrap();
    let pair1 = (Complex64::new(0.0, 0.0).into(), Complex64::new(3.0, 0.0).into());
    let pair2 = (Complex64::new(5.0, 0.0).into(), SpherePoint::Infinity);
    assert!(separation_bound_check(&b, pair1, pair2, &p, DEFAULT_SLACK).is_err());
}

#[test]
fn distance_bound_needs_close_points() {
    assert!(distance_modulus_bound(Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0), 1.0).is_err());
}

#[test]
fn selftest_suite_passes_in_time() {
    let start = Instant::now();
    let rows = selftest(7, &ExtremalParams::default()).unwrap();
    let failed: Vec<_> = rows.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect();
    assert!(failed.is_empty(), "failed checks {failed:?}");
    assert!(rows.iter().filter(|r| r.check == "separation-bound-random").count() == 200);
    assert!(start.elapsed().as_secs() < 120);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn round_modulus_is_scale_invariant(r in 0.01..10.0f64, ratio in 1.01..100.0f64, s in 0.01..100.0f64, cx in -5.0..5.0f64) {
        let c = Complex64::new(cx, 0.0);
        let a = round_annulus_modulus(&AnnulusSpec::round(c, r, r * ratio).unwrap()).unwrap();
        let b = round_annulus_modulus(&AnnulusSpec::round(c * s, r * s, r * ratio * s).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn round_parts_are_superadditive(r in 0.1..2.0f64, cuts in prop::collection::vec(0.0..1.0f64, 1..5), ratio in 1.5..50.0f64) {
        let big = r * ratio;
        let mut cs: Vec<f64> = cuts.iter().map(|t| r * ratio.powf(*t)).collect();
        cs.sort_by(f64::total_cmp);
        cs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut bounds = vec![r];
        bounds.extend(cs.iter().copied().filter(|x| *x > r * (1.0 + 1e-9) && *x < big * (1.0 - 1e-9)));
        bounds.push(big);
        let parts: Vec<AnnulusSpec> = bounds.windows(2).map(|w| AnnulusSpec::round(origin(), w[0], w[1]).unwrap()).collect();
        let whole = AnnulusSpec::round(origin(), r, big).unwrap();
        let row = superadditivity_check(&whole, &parts, &ExtremalParams::default(), 0.0).unwrap();
        prop_assert!((row.lhs - row.rhs).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn polygon_annulus_tracks_the_closed_form(ratio in 1.5..20.0f64) {
        let p = ExtremalParams { resolution: 64, ..ExtremalParams::default() };
        let a = AnnulusSpec::round(origin(), 1.0, ratio).unwrap();
        let (outer, inner) = a.boundaries(256);
        let m = annulus_modulus(&AnnulusSpec::Polygonal { outer, inner }, &p).unwrap();
        let exact = round_annulus_modulus(&a).unwrap();
        prop_assert!((m - exact).abs() <= 0.03 * exact, "{m} against {exact}");
    }

    #[test]
    fn rectangle_module_tracks_aspect(w in 0.5..3.0f64) {
        let p = ExtremalParams { resolution: 64, ..ExtremalParams::default() };
        let m = quadrilateral_module(&QuadrilateralSpec::rectangle(w, 1.0), &p).unwrap();
        prop_assert!((m - w).abs() <= 0.08 * w, "{m} against {w}");
    }
}
