use std::time::Instant;

use pinchdyn::lang::EntireMap;
use pinchdyn::pinch::BeltramiField;
use pinchdyn::plane::Window;
use pinchdyn::solver::{conjugate_map, solve_beltrami, QCMap, SolverConfig};
use pinchdyn::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn config(n: usize) -> SolverConfig {
    SolverConfig { resolution: n, p: c(0.0, 0.0), q: c(1.0, 0.0), ..SolverConfig::default() }
}

/// Least-squares fit `h ≈ A g + B` over the given points; returns the largest
/// residual relative to the largest `|A g|`.
fn affine_fit_error(h: &QCMap, pts: &[Complex64], g: impl Fn(Complex64) -> Complex64) -> f64 {
    let n = pts.len() as f64;
    let gs: Vec<Complex64> = pts.iter().map(|z| g(*z)).collect();
    let hs: Vec<Complex64> = pts.iter().map(|z| h.evaluate(*z).unwrap()).collect();
    let gm = gs.iter().sum::<Complex64>() / n;
    let hm = hs.iter().sum::<Complex64>() / n;
    let num: Complex64 = gs.iter().zip(&hs).map(|(a, b)| (a - gm).conj() * (b - hm)).sum();
    let den: f64 = gs.iter().map(|a| (a - gm).norm_sqr()).sum();
    let a = num / den;
    let b = hm - a * gm;
    let scale = gs.iter().map(|x| (a * x).norm()).fold(0.0, f64::max);
    gs.iter().zip(&hs).map(|(x, y)| (a * x + b - y).norm()).fold(0.0, f64::max) / scale
}

fn grid_points(w: &Window, keep: impl Fn(Complex64) -> bool) -> Vec<Complex64> {
    let mut out = Vec::new();
    for r in (0..w.rows).step_by(7) {
        for col in (0..w.cols).step_by(7) {
            let z = w.pixel_to_point(col, r);
            if keep(z) {
                out.push(z);
            }
        }
    }
    out
}

#[test]
fn zero_coefficient_gives_the_identity() {
    let w = Window::square(c(0.0, 0.0), 2.0, 1024).unwrap();
    let h = solve_beltrami(&BeltramiField::zero(w), &config(1024)).unwrap();
    let mut err = 0.0f64;
    for r in (0..w.rows).step_by(3) {
        for col in (0..w.cols).step_by(3) {
            err = err.max((h.at(col, r) - w.pixel_to_point(col, r)).norm());
        }
    }
    assert!(err < 1e-8, "sup error {err}");
    assert_eq!(h.negative_cells(), 0);
}

#[test]
fn constant_disc_coefficient_is_affine_inside() {
    let start = Instant::now();
    let w = Window::square(c(0.0, 0.0), 2.0, 1024).unwrap();
    let k = 0.3;
    let field = BeltramiField::from_fn(w, |z| if z.norm() < 0.5 { c(k, 0.0) } else { c(0.0, 0.0) });
    let h = solve_beltrami(&field, &config(1024)).unwrap();
    let pts = grid_points(&w, |z| z.norm() < 0.35);
    let err = affine_fit_error(&h, &pts, |z| z + k * z.conj());
    assert!(err < 1e-2, "relative error {err}");
    assert_eq!(h.negative_cells(), 0);
    assert!(start.elapsed().as_secs() < 180);
}

#[test]
fn radial_coefficient_gives_power_stretch() {
    let start = Instant::now();
    let w = Window::square(c(0.0, 0.0), 2.0, 1024).unwrap();
    let kk = 2.0;
    let k = (kk - 1.0) / (kk + 1.0);
    let field = BeltramiField::from_fn(w, |z| {
        let r = z.norm();
        if r > 0.25 && r < 0.75 { k * z / z.conj() } else { c(0.0, 0.0) }
    });
    let h = solve_beltrami(&field, &config(1024)).unwrap();
    let pts = grid_points(&w, |z| z.norm() > 0.35 && z.norm() < 0.65);
    let err = affine_fit_error(&h, &pts, |z| z * z.norm().powf(kk - 1.0));
    assert!(err < 5e-2, "relative error {err}");
    assert_eq!(h.negative_cells(), 0);
    assert!(start.elapsed().as_secs() < 180);
}

#[test]
fn normalization_points_are_fixed() {
    let w = Window::square(c(0.0, 0.0), 2.0, 256).unwrap();
    let field = BeltramiField::from_fn(w, |z| if (z - c(0.3, 0.2)).norm() < 0.6 { c(0.2, -0.4) } else { c(0.0, 0.0) });
    let cfg = SolverConfig { resolution: 256, p: c(-1.0, 0.5), q: c(1.2, -0.7), ..SolverConfig::default() };
    let h = solve_beltrami(&field, &cfg).unwrap();
    assert!((h.evaluate(cfg.p).unwrap() - cfg.p).norm() < 1e-6);
    assert!((h.evaluate(cfg.q).unwrap() - cfg.q).norm() < 1e-6);
}

#[test]
fn inverse_round_trips_on_random_points() {
    let w = Window::square(c(0.0, 0.0), 2.0, 256).unwrap();
    let field = BeltramiField::from_fn(w, |z| if z.norm() < 0.8 { c(0.4, 0.1) } else { c(0.0, 0.0) });
    let h = solve_beltrami(&field, &config(256)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let z = c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let back = h.invert(h.evaluate(z).unwrap()).unwrap();
        assert!((back - z).norm() < 1e-7, "{z} came back as {back}");
    }
}

#[test]
fn coefficient_reaching_one_is_rejected() {
    let w = Window::square(c(0.0, 0.0), 2.0, 256).unwrap();
    let field = BeltramiField::from_fn(w, |z| if z.norm() < 0.5 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    assert!(solve_beltrami(&field, &config(256)).is_err());
}

#[test]
fn support_in_the_margin_is_rejected() {
    let w = Window::square(c(0.0, 0.0), 2.0, 256).unwrap();
    let field = BeltramiField::from_fn(w, |z| if z.re > 1.8 { c(0.1, 0.0) } else { c(0.0, 0.0) });
    assert!(solve_beltrami(&field, &config(256)).is_err());
}

#[test]
fn resolution_must_be_a_power_of_two() {
    let w = Window::square(c(0.0, 0.0), 2.0, 300).unwrap();
    assert!(solve_beltrami(&BeltramiField::zero(w), &config(300)).is_err());
}

#[test]
fn identity_conjugacy_reproduces_the_map() {
    let w = Window::square(c(0.0, 0.0), 4.0, 256).unwrap();
    let h = QCMap::identity(w);
    let f = EntireMap::resolve("bergweiler").unwrap();
    for z in [c(0.3, 0.1), c(-0.9, 0.4), c(0.69, -0.2)] {
        assert_eq!(conjugate_map(&f, &h, z).unwrap(), f.eval(z).unwrap());
    }
}
