use num_complex::Complex64;
use serde::Serialize;

use super::inverse_images;
use super::render::{Label, PixelClass};
use crate::error::{invalid, Result};
use crate::lang::EntireMap;
use crate::plane::{winding_number, Raster, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// Finite points on forward orbits of the singular values inside a window.
#[derive(Debug, Clone, Serialize)]
pub struct PostsingularSample {
    pub seeds: Vec<Complex64>,
    /// (point, seed index, depth)
    pub points: Vec<(Complex64, usize, usize)>,
}

impl PostsingularSample {
    pub fn locations(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.0).collect()
    }
}

/// Forward orbits of critical points in the window and declared asymptotic
/// values, to depth `depth`; orbits stop at saturation.
pub fn postsingular_sample(f: &EntireMap, w: &Window, depth: usize) -> PostsingularSample {
    let mut seeds = f.critical_points_in(w);
    seeds.extend(f.asymptotic_values.iter().copied());
    let mut points = Vec::new();
    for (i, &s) in seeds.iter().enumerate() {
        let mut z = s;
        points.push((z, i, 0));
        for d in 1..=depth {
            match f.eval(z) {
                Ok(v) if v.norm() < 1e12 => {
                    z = v;
                    points.push((z, i, d));
                }
                _ => break,
            }
        }
    }
    PostsingularSample { seeds, points }
}

/// Pixels labeled escape/unresolved that touch a Fatou-labeled pixel.
pub fn julia_boundary_samples(r: &Raster<PixelClass>, max_samples: usize) -> Vec<Complex64> {
    let w = r.window;
    let mut out = Vec::new();
    for row in 1..w.rows - 1 {
        for col in 1..w.cols - 1 {
            if r.get(col, row).label.is_fatou() {
                continue;
            }
            let touches = [(col - 1, row), (col + 1, row), (col, row - 1), (col, row + 1)]
                .iter()
                .any(|&(c, rr)| r.get(c, rr).label.is_fatou());
            if touches {
                out.push(w.pixel_to_point(col, row));
            }
        }
    }
    if out.len() > max_samples && max_samples > 0 {
        let stride = out.len() as f64 / max_samples as f64;
        out = (0..max_samples).map(|k| out[(k as f64 * stride) as usize]).collect();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SemihyperbolicReport {
    pub verdict: Verdict,
    pub min_distance: f64,
    pub threshold: f64,
    pub discs_checked: usize,
    pub critical_hits: usize,
    pub depth: usize,
}

/// Distance between Julia samples and the postsingular sample, plus a
/// depth-bounded degree check: small circles around Julia samples are pulled
/// back branch by branch and must not wind around a critical point.
pub fn semihyperbolic_probe(
    f: &EntireMap,
    julia: &[Complex64],
    ps: &PostsingularSample,
    critical: &[Complex64],
    depth: usize,
    radius: f64,
    discs: usize,
) -> SemihyperbolicReport {
    let threshold = 0.05;
    if julia.is_empty() {
        return SemihyperbolicReport { verdict: Verdict::NotApplicable, min_distance: f64::NAN, threshold, discs_checked: 0, critical_hits: 0, depth };
    }
    let pts = ps.locations();
    let mut min_distance = f64::INFINITY;
    for &a in julia {
        for &p in &pts {
            min_distance = min_distance.min((a - p).norm());
        }
    }
    let mut critical_hits = 0;
    let mut discs_checked = 0;
    let stride = (julia.len() / discs.max(1)).max(1);
    for &a in julia.iter().step_by(stride).take(discs) {
        discs_checked += 1;
        let circle: Vec<Complex64> = (0..24)
            .map(|k| a + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / 24.0))
            .collect();
        let mut center = a;
        let mut ring = circle;
        for _ in 0..depth {
            let seeds = super::translate_seeds(f, center, 1);
            let pre = inverse_images(f, center, &seeds, 1e-9 * (1.0 + center.norm()));
            let Some(&c_pre) = pre.iter().min_by(|x, y| (*x - center).norm().total_cmp(&(*y - center).norm())) else {
                break;
            };
            let mut next = Vec::with_capacity(ring.len());
            let mut prev = c_pre;
            let mut ok = true;
            for &v in &ring {
                let got = inverse_images(f, v, &[prev, c_pre], 1e-9 * (1.0 + v.norm()));
                match got.into_iter().min_by(|x, y| (x - prev).norm().total_cmp(&(y - prev).norm())) {
                    Some(q) => {
                        next.push(q);
                        prev = q;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            if critical.iter().any(|&c| winding_number(&next, c) != 0) {
                critical_hits += 1;
                break;
            }
            center = c_pre;
            ring = next;
        }
    }
    let verdict = if min_distance > threshold && critical_hits == 0 { Verdict::Pass } else { Verdict::Fail };
    SemihyperbolicReport { verdict, min_distance, threshold, discs_checked, critical_hits, depth }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThinReport {
    pub verdict: Verdict,
    pub radius: f64,
    pub epsilon: f64,
    pub max_density: f64,
    pub densities: Vec<(Complex64, f64)>,
}

/// Julia-pixel density in discs of radius `radius` on a grid of centers.
pub fn thin_at_infinity_probe(r: &Raster<PixelClass>, radius: f64, epsilon: f64) -> Result<ThinReport> {
    let w = r.window;
    if 2.0 * radius > 2.0 * w.half_width || 2.0 * radius > 2.0 * w.half_height {
        return invalid("raster too small for the requested disc radius");
    }
    let span_x = w.half_width - radius;
    let span_y = w.half_height - radius;
    let steps = 5;
    let mut densities = Vec::new();
    for j in 0..steps {
        for i in 0..steps {
            let c = w.center
                + Complex64::new(
                    span_x * (2.0 * i as f64 / (steps - 1) as f64 - 1.0),
                    span_y * (2.0 * j as f64 / (steps - 1) as f64 - 1.0),
                );
            let (mut total, mut julia) = (0usize, 0usize);
            for row in 0..w.rows {
                for col in 0..w.cols {
                    let z = w.pixel_to_point(col, row);
                    if (z - c).norm() <= radius {
                        total += 1;
                        if matches!(r.get(col, row).label, Label::Escape | Label::Unresolved) {
                            julia += 1;
                        }
                    }
                }
            }
            if total > 0 {
                densities.push((c, julia as f64 / total as f64));
            }
        }
    }
    let max_density = densities.iter().map(|d| d.1).fold(0.0, f64::max);
    let verdict = if max_density < 1.0 - epsilon { Verdict::Pass } else { Verdict::Fail };
    Ok(ThinReport { verdict, radius, epsilon, max_density, densities })
}
