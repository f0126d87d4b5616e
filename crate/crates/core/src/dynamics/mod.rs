//! Iteration engine: orbits, fixed points, inverse branches, per-pixel
//! classification, Baker-domain typing and the probes built on them.

mod baker;
mod probes;
mod render;

use num_complex::Complex64;
use serde::Serialize;

pub use baker::{classify_baker, distance_to_complement, BakerParams, BakerClassification, BakerType};
pub use probes::{
    julia_boundary_samples, postsingular_sample, semihyperbolic_probe, thin_at_infinity_probe, PostsingularSample,
    SemihyperbolicReport, ThinReport, Verdict,
};
pub use render::{classify_point, legend, render_dynamical_plane, render_image, Label, PixelClass, RenderParams};

use crate::lang::EntireMap;
use crate::plane::{SpherePoint, Window};

/// Orbit `z0, f(z0), ..., f^n(z0)`; a saturated step ends the orbit with `Infinity`.
pub fn iterate_orbit(f: &EntireMap, z0: Complex64, n: usize) -> Vec<SpherePoint> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(SpherePoint::Finite(z0));
    let mut z = z0;
    for _ in 0..n {
        match f.eval(z) {
            Ok(w) => {
                z = w;
                out.push(SpherePoint::Finite(w));
            }
            Err(_) => {
                out.push(SpherePoint::Infinity);
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedClass {
    Superattracting,
    Attracting,
    Repelling,
    ParabolicLike,
}

impl FixedClass {
    pub fn of(multiplier: Complex64) -> FixedClass {
        let m = multiplier.norm();
        if m < 1e-9 {
            FixedClass::Superattracting
        } else if (m - 1.0).abs() <= 1e-6 {
            FixedClass::ParabolicLike
        } else if m < 1.0 {
            FixedClass::Attracting
        } else {
            FixedClass::Repelling
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FixedClass::Superattracting => "superattracting",
            FixedClass::Attracting => "attracting",
            FixedClass::Repelling => "repelling",
            FixedClass::ParabolicLike => "parabolic-like",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub location: Complex64,
    pub multiplier: Complex64,
    pub class: FixedClass,
}

/// Newton iteration for `g(w) = 0` given `g` and `g'` together.
///
/// Converges when the step falls below `1e-13*(1+|w|)`; returns `None` on
/// overflow, a vanishing derivative or exhaustion of the iteration budget.
pub fn newton<G>(g: G, seed: Complex64, max_iter: usize) -> Option<Complex64>
where
    G: Fn(Complex64) -> Option<(Complex64, Complex64)>,
{
    let mut w = seed;
    for _ in 0..max_iter {
        let (v, dv) = g(w)?;
        if dv.norm() == 0.0 || !dv.re.is_finite() {
            return None;
        }
        let mut step = v / dv;
        let cap = 4.0 * (1.0 + w.norm());
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        w -= step;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return None;
        }
        if step.norm() <= 1e-13 * (1.0 + w.norm()) {
            return Some(w);
        }
    }
    None
}

/// Fixed points found by Newton from a 32x32 seed grid over the window.
pub fn find_fixed_points(f: &EntireMap, w: &Window) -> Vec<FixedPoint> {
    let g = |z: Complex64| -> Option<(Complex64, Complex64)> {
        let v = f.eval(z).ok()?;
        let d = f.deriv(z).ok()?;
        Some((v - z, d - 1.0))
    };
    let n = 32;
    let mut found: Vec<FixedPoint> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let seed = w.center
                + Complex64::new(
                    w.half_width * (2.0 * i as f64 / (n - 1) as f64 - 1.0),
                    w.half_height * (1.0 - 2.0 * j as f64 / (n - 1) as f64),
                );
            let Some(p) = newton(g, seed, 100) else { continue };
            if !w.contains(p) {
                continue;
            }
            let Ok(fp) = f.eval(p) else { continue };
            if (fp - p).norm() >= 1e-9 * (1.0 + p.norm()) {
                continue;
            }
            if found.iter().any(|q| (q.location - p).norm() < 1e-7) {
                continue;
            }
            let Ok(m) = f.deriv(p) else { continue };
            found.push(FixedPoint { location: p, multiplier: m, class: FixedClass::of(m) });
        }
    }
    found.sort_by(|a, b| {
        a.location.re.total_cmp(&b.location.re).then(a.location.im.total_cmp(&b.location.im))
    });
    found
}

/// Preimages of `target` reached by Newton from the given seeds, deduplicated.
pub fn inverse_images(f: &EntireMap, target: Complex64, seeds: &[Complex64], tol: f64) -> Vec<Complex64> {
    let g = |w: Complex64| -> Option<(Complex64, Complex64)> {
        let v = f.eval(w).ok()?;
        let d = f.deriv(w).ok()?;
        Some((v - target, d))
    };
    let mut out: Vec<Complex64> = Vec::new();
    for &s in seeds {
        let Some(w) = newton(g, s, 80) else { continue };
        let Ok(v) = f.eval(w) else { continue };
        if (v - target).norm() >= tol {
            continue;
        }
        if out.iter().any(|q| (q - w).norm() < 1e-7 * (1.0 + w.norm())) {
            continue;
        }
        out.push(w);
    }
    out
}

/// Seeds `principal + k*T` for `|k| <= k_branch` when the map declares a deck
/// translation, otherwise just the principal guess.
pub fn translate_seeds(f: &EntireMap, principal: Complex64, k_branch: i64) -> Vec<Complex64> {
    match f.translation {
        Some(t) => (-k_branch..=k_branch).map(|k| principal + t.period * k as f64).collect(),
        None => vec![principal],
    }
}
