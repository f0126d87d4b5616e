use std::f64::consts::PI;

use pinchdyn::lamination::{
    build_fundamental_lamination, build_koenigs_towards, grand_orbit_expand, Anchor, LaminationParams,
};
use pinchdyn::lang::EntireMap;
use pinchdyn::pinch::{assemble_sigma_t, audit_support, strip_map, strip_map_inverse, AssembleOptions, PinchProfile, Side};
use pinchdyn::plane::Window;
use pinchdyn::Complex64;
use proptest::prelude::*;

fn profile() -> PinchProfile {
    PinchProfile::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn stretch_is_increasing_in_height(t in 0.0..0.999f64, y1 in 1.0..3.0f64, y2 in 1.0..3.0f64) {
        let p = profile();
        let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
        prop_assume!(hi - lo > 1e-9);
        let (vl, dl) = p.v(t, lo).unwrap();
        let (vh, dh) = p.v(t, hi).unwrap();
        prop_assert!(vl < vh);
        prop_assert!(dl >= 1.0 && dh >= 1.0);
    }

    #[test]
    fn stretch_freezes_below_a_level(l in 2.0..3.0f64, y in 1.0..3.0f64, s in 0.0..1.0f64) {
        let p = profile();
        let y = p.l_b + (y - p.l_b) * (l - p.l_b) / (p.l_r - p.l_b);
        let t_l = p.freeze_time(l);
        let later = t_l + s * (0.999 - t_l);
        prop_assume!(later < 1.0);
        prop_assert_eq!(p.v(later, y).unwrap().0, p.v(t_l, y).unwrap().0);
        prop_assert_eq!(p.v(later, y).unwrap().0, y);
    }

    #[test]
    fn band_map_commutes_with_real_translation(t in 0.0..0.999f64, x in -50.0..50.0f64, y in 1.0..3.0f64, shift in -100.0..100.0f64) {
        let p = profile();
        let z = Complex64::new(x, y);
        let moved = p.p_tilde(t, z + shift).unwrap();
        let after = p.p_tilde(t, z).unwrap() + shift;
        prop_assert_eq!(moved, after);
    }

    #[test]
    fn strip_maps_invert(x in -20.0..20.0f64, y in 1.0..3.0f64, plus in any::<bool>()) {
        let p = profile();
        let side = if plus { Side::Plus } else { Side::Minus };
        let z = Complex64::new(x, y);
        let (s, _) = strip_map(side, &p, PI / 6.0, z);
        prop_assert!((strip_map_inverse(side, &p, PI / 6.0, s) - z).norm() < 1e-12);
    }
}

#[test]
fn stretch_reaches_tau_at_the_top() {
    let p = profile();
    for t in [0.0, 0.3, 0.6, 0.9] {
        assert!((p.v(t, p.l_r).unwrap().0 - p.tau(t)).abs() < 1e-12);
    }
    for y in [1.0, 1.7, 2.4, 3.0] {
        assert_eq!(p.v(0.0, y).unwrap().0, y);
    }
}

#[test]
fn stretch_is_identity_on_the_lower_band() {
    let p = profile();
    for t in [0.0, 0.5, 0.99] {
        for y in [1.0, 1.5, 2.0] {
            assert_eq!(p.v(t, y).unwrap(), (y, 1.0));
        }
    }
}

#[test]
fn default_grid_ends_at_saturation() {
    let p = profile();
    let ts = p.t_values();
    assert_eq!(ts[0], 0.0);
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
    let last = *ts.last().unwrap();
    assert_eq!(last, p.saturation_t());
    assert!((p.max_stretch(last) - p.k_cap()).abs() < 1e-9);
}

#[test]
fn points_outside_the_band_are_rejected() {
    let p = profile();
    assert!(p.v(0.5, 0.5).is_err());
    assert!(p.v(1.0, 2.0).is_err());
}

#[test]
fn assembled_field_is_capped_and_supported_in_neighborhoods() {
    let f = EntireMap::resolve("bergweiler").unwrap();
    let chart = build_koenigs_towards(&f, Complex64::new(2f64.ln() - 2.0, 0.0), 2.0, 25, Complex64::new(-1.0, 0.0)).unwrap();
    let w = Window::square(Complex64::new(-1.0, 0.0), 16.0, 256).unwrap();
    let params = LaminationParams::default();
    let anchors = [Anchor::Zeta { u: 2.4 * PI, v: Some(3.6 * PI) }, Anchor::Zeta { u: -3.6 * PI, v: Some(-2.4 * PI) }];
    let lam = build_fundamental_lamination(&f, &chart, &anchors, &w, &params).unwrap();
    let go = grand_orbit_expand(&f, &lam, 3, &w, &params);
    let p = profile();
    let opts = AssembleOptions { k_max: 3, ..AssembleOptions::default() };
    for &t in p.t_values().iter().step_by(3) {
        let (field, geom) = assemble_sigma_t(&go, &lam, &chart, &p, t, &w, &opts).unwrap();
        assert!(field.max_abs() <= 0.95, "max |mu| {} at t = {t}", field.max_abs());
        let audit = audit_support(&geom, &chart, &lam).unwrap();
        assert!(audit.checked > 0);
        assert_eq!(audit.violations, 0);
        for (m, cell) in field.mu.iter().zip(&geom.cells) {
            if cell.is_none() {
                assert_eq!(*m, Complex64::new(0.0, 0.0));
            }
        }
    }
}
