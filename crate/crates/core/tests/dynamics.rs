use std::time::Instant;

use pinchdyn::dynamics::{
    classify_baker, classify_point, find_fixed_points, render_dynamical_plane, BakerParams, BakerType, FixedClass, Label,
    RenderParams,
};
use pinchdyn::lang::{catalog, EntireMap};
use pinchdyn::plane::Window;
use pinchdyn::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn bergweiler_fixed_points() {
    let start = Instant::now();
    let f = catalog("bergweiler").unwrap();
    let w = Window::square(c(0.0, 0.0), 8.0, 512).unwrap();
    let fps = find_fixed_points(&f, &w);
    let l2 = fps.iter().find(|p| (p.location - c(2f64.ln(), 0.0)).norm() < 1e-9).expect("fixed point at log 2");
    assert_eq!(l2.class, FixedClass::Superattracting);
    assert!(l2.multiplier.norm() < 1e-12);
    let x0 = fps.iter().find(|p| (p.location - c(-0.900477, 0.0)).norm() < 1e-4).expect("fixed point near -0.900477");
    assert_eq!(x0.class, FixedClass::Repelling);
    assert!(x0.multiplier.norm() > 1.0);
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn fixed_points_solve_the_equation() {
    let f = catalog("bergweiler").unwrap();
    let w = Window::square(c(0.0, 0.0), 8.0, 256).unwrap();
    for p in find_fixed_points(&f, &w) {
        assert!((f.eval(p.location).unwrap() - p.location).norm() < 1e-10);
        assert!((f.deriv(p.location).unwrap() - p.multiplier).norm() < 1e-10);
    }
}

#[test]
fn baker_classification_table() {
    let start = Instant::now();
    let p = BakerParams::default();
    for (name, kind) in [("bergweiler", BakerType::HyperbolicI), ("hyp2", BakerType::HyperbolicII), ("parabolic", BakerType::Parabolic)] {
        let f = catalog(name).unwrap();
        let r = classify_baker(&f, f.baker_probe.unwrap(), 60, &p);
        assert_eq!(r.kind, kind, "{name}: {}", r.note);
        if name == "bergweiler" {
            assert!((r.a - 2.0).abs() <= 0.01, "a = {}", r.a);
        }
    }
    assert!(start.elapsed().as_secs() < 30);
}

fn membership(name: &str, re: (f64, f64), seed: u64) -> usize {
    let f = catalog(name).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rp = RenderParams::default();
    (0..50)
        .filter(|_| {
            let z = c(rng.gen_range(re.0..re.1), rng.gen_range(-8.0..8.0));
            classify_point(&f, z, &rp).label != Label::BakerCandidate
        })
        .count()
}

#[test]
fn left_half_plane_is_baker_for_bergweiler() {
    assert_eq!(membership("bergweiler", (-10.0, -2.0), 3), 0);
}

#[test]
fn right_half_plane_is_baker_for_fatou() {
    assert_eq!(membership("fatou", (1.0, 9.0), 5), 0);
}

#[test]
fn superattracting_basin_is_not_baker() {
    let f = catalog("bergweiler").unwrap();
    let px = classify_point(&f, c(2f64.ln() + 0.01, 0.0), &RenderParams::default());
    assert!(matches!(px.label, Label::Attracted { period: 1, .. }));
}

#[test]
fn render_is_reproducible() {
    let f = catalog("bergweiler").unwrap();
    let w = Window::square(c(0.0, 0.0), 8.0, 64).unwrap();
    let p = RenderParams { budget: 100, ..RenderParams::default() };
    let a = render_dynamical_plane(&f, &w, &p);
    let b = render_dynamical_plane(&f, &w, &p);
    assert_eq!(a.data, b.data);
}

#[test]
fn polynomial_without_baker_domain_is_not_baker() {
    let f = EntireMap::parse("sq", "z*z").unwrap();
    let r = classify_baker(&f, c(0.2, 0.1), 60, &BakerParams::default());
    assert_eq!(r.kind, BakerType::NotBaker);
}
