use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::render::{classify_point, Label, RenderParams};
use super::{inverse_images, newton};
use crate::lang::EntireMap;
use crate::plane::SpherePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BakerType {
    HyperbolicI,
    HyperbolicII,
    Parabolic,
    NotBaker,
    Inconclusive,
}

impl BakerType {
    pub fn as_str(&self) -> &'static str {
        match self {
            BakerType::HyperbolicI => "hyperbolic-I",
            BakerType::HyperbolicII => "hyperbolic-II",
            BakerType::Parabolic => "parabolic",
            BakerType::NotBaker => "not-baker",
            BakerType::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BakerClassification {
    pub kind: BakerType,
    /// Step multiplier estimate.
    pub a: f64,
    /// Tail average of |z_{k+1} - z_k| / dist(z_k, complement of the domain).
    pub hyperbolic_step: f64,
    pub zeta: SpherePoint,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BakerParams {
    pub a_tol: f64,
    pub hyperbolic_tol: f64,
    pub backward_steps: usize,
    /// Iteration budget used when testing whether nearby points share the domain.
    pub membership_budget: usize,
    pub rays: usize,
    pub tail_points: usize,
}

impl Default for BakerParams {
    fn default() -> Self {
        BakerParams { a_tol: 0.05, hyperbolic_tol: 0.05, backward_steps: 80, membership_budget: 200, rays: 16, tail_points: 4 }
    }
}

/// Distance from `z` to the nearest point not classified Baker, found by
/// marching outward along `rays` directions with geometric radii.
pub fn distance_to_complement(f: &EntireMap, z: Complex64, rays: usize, budget: usize) -> f64 {
    let params = RenderParams { budget, ..RenderParams::default() };
    let r_max = 4.0 * (1.0 + z.norm());
    let mut best = r_max;
    for k in 0..rays {
        let dir = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / rays as f64);
        let mut r = 0.02;
        while r < best {
            let px = classify_point(f, z + dir * r, &params);
            if px.label != Label::BakerCandidate {
                best = r;
                break;
            }
            r *= 1.08;
        }
    }
    best
}

fn not_baker(note: &str) -> BakerClassification {
    BakerClassification { kind: BakerType::NotBaker, a: f64::NAN, hyperbolic_step: f64::NAN, zeta: SpherePoint::Infinity, note: note.into() }
}

/// Baker-domain detection and typing from a probe point.
///
/// The step multiplier comes from the tail of the forward orbit. When it is
/// indistinguishable from 1 the orbit may still move by a definite hyperbolic
/// amount (a translation inside a strip), so the step is also measured
/// against the distance to the complement of the domain.
pub fn classify_baker(f: &EntireMap, probe: Complex64, n: usize, bp: &BakerParams) -> BakerClassification {
    let n = n.max(30);
    let r_stop = 1e8;
    let mut orbit = vec![probe];
    let mut z = probe;
    let mut saturated_at = None;
    for k in 1..=n {
        match f.eval(z) {
            Ok(w) if w.norm() <= r_stop => {
                z = w;
                orbit.push(w);
            }
            Ok(w) => {
                orbit.push(w);
                break;
            }
            Err(_) => {
                saturated_at = Some(k);
                break;
            }
        }
    }
    let m = orbit.len() - 1;
    let growing = |from: usize| orbit[from..].windows(2).all(|w| w[1].norm() > w[0].norm());
    if let Some(k) = saturated_at {
        if k < n / 2 && !growing(m / 2) {
            return BakerClassification { kind: BakerType::Inconclusive, note: "orbit saturated early".into(), ..not_baker("") };
        }
    }
    let escaping = m >= 8 && growing(m / 2) && orbit[m].norm() > 1.5 * orbit[m / 2].norm() && orbit[m].norm() > 10.0;
    if !escaping {
        return not_baker("forward orbit does not tend to infinity");
    }
    let steps: Vec<f64> = orbit.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let ratios: Vec<f64> = steps.windows(2).map(|s| s[1] / s[0]).collect();
    let tail = &ratios[ratios.len() - (ratios.len() / 3).max(5).min(ratios.len())..];
    let a_est = tail.iter().sum::<f64>() / tail.len() as f64;

    let mut a = a_est;
    let mut hyp_step = f64::NAN;
    let hyperbolic = if a_est > 1.0 + bp.a_tol {
        true
    } else if (a_est - 1.0).abs() <= bp.a_tol {
        let take = bp.tail_points.min(m - 1).max(1);
        let mut acc = 0.0;
        for k in (m - take)..m {
            let d = distance_to_complement(f, orbit[k], bp.rays, bp.membership_budget);
            acc += steps[k] / d;
        }
        hyp_step = acc / take as f64;
        if hyp_step > bp.hyperbolic_tol {
            a = hyp_step.exp();
            true
        } else {
            false
        }
    } else {
        return BakerClassification {
            kind: BakerType::Inconclusive,
            a: a_est,
            hyperbolic_step: hyp_step,
            zeta: SpherePoint::Infinity,
            note: "step multiplier below 1".into(),
        };
    };
    if !hyperbolic {
        return BakerClassification { kind: BakerType::Parabolic, a, hyperbolic_step: hyp_step, zeta: SpherePoint::Infinity, note: String::new() };
    }

    // Backward orbit along the incoming access, greedy nearest branch.
    let first_step = orbit[1] - orbit[0];
    let mut w = probe;
    let mut back = vec![w];
    for _ in 0..bp.backward_steps {
        let mut seeds = vec![w, w - first_step, w / a];
        if let Some(t) = f.translation {
            for k in [-1.0, 1.0] {
                seeds.push(w + t.period * k);
                seeds.push(w - first_step + t.period * k);
            }
        }
        let pre = inverse_images(f, w, &seeds, 1e-9 * (1.0 + w.norm()));
        let Some(next) = pre.into_iter().min_by(|x, y| (x - w).norm().total_cmp(&(y - w).norm())) else {
            return BakerClassification {
                kind: BakerType::Inconclusive,
                a,
                hyperbolic_step: hyp_step,
                zeta: SpherePoint::Infinity,
                note: "backward branch tracking failed".into(),
            };
        };
        w = next;
        back.push(w);
    }
    let k = back.len() - 1;
    let last = (back[k] - back[k - 1]).norm();
    if last < 1e-8 * (1.0 + back[k].norm()) {
        // a finite backward limit is a fixed point; polish it
        let g = |z: Complex64| -> Option<(Complex64, Complex64)> { Some((f.eval(z).ok()? - z, f.deriv(z).ok()? - 1.0)) };
        let zeta = newton(g, back[k], 50).unwrap_or(back[k]);
        BakerClassification { kind: BakerType::HyperbolicI, a, hyperbolic_step: hyp_step, zeta: zeta.into(), note: String::new() }
    } else if back[k].norm() > 10.0 * (1.0 + probe.norm()) && back[k].norm() > back[k / 2].norm() {
        BakerClassification { kind: BakerType::HyperbolicII, a, hyperbolic_step: hyp_step, zeta: SpherePoint::Infinity, note: String::new() }
    } else {
        BakerClassification {
            kind: BakerType::Inconclusive,
            a,
            hyperbolic_step: hyp_step,
            zeta: SpherePoint::Infinity,
            note: "backward orbit neither converges nor escapes".into(),
        }
    }
}
