use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lang::EntireMap;
use crate::plane::{Raster, RgbImage, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderParams {
    pub budget: usize,
    pub escape_radius: f64,
    pub cycle_tol: f64,
    pub max_period: usize,
    /// Largest per-step growth factor of |z| still counted as regular growth.
    pub growth_cap: f64,
    /// Regular-growth steps required when an orbit crosses the escape radius.
    pub tail_steps: usize,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams { budget: 500, escape_radius: 1e10, cycle_tol: 1e-9, max_period: 8, growth_cap: 16.0, tail_steps: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Escape,
    Attracted { period: u8, cycle: u64 },
    BakerCandidate,
    Unresolved,
}

impl Label {
    pub fn is_fatou(&self) -> bool {
        matches!(self, Label::Attracted { .. } | Label::BakerCandidate)
    }

    pub fn code(&self) -> &'static str {
        match self {
            Label::Escape => "escape",
            Label::Attracted { .. } => "attracted",
            Label::BakerCandidate => "baker-candidate",
            Label::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelClass {
    pub label: Label,
    pub iterations: u32,
    pub datum: Complex64,
}

/// Reduces `d` modulo the deck period, used when translates of a component
/// are distinct components (multiplier other than 1).
fn reduce(d: Complex64, period: Complex64) -> Complex64 {
    let k = (d / period).re.round();
    d - period * k
}

fn cycle_key(points: &[Complex64], period: Option<Complex64>) -> u64 {
    let canon = points
        .iter()
        .map(|&z| match period {
            Some(t) => reduce(z, t),
            None => z,
        })
        .map(|z| ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64))
        .min()
        .unwrap_or((0, 0));
    // FNV-1a over the rounded representative and the period
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canon.0.to_le_bytes().iter().chain(canon.1.to_le_bytes().iter()).chain([points.len() as u8].iter()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Classifies the orbit of one point.
pub fn classify_point(f: &EntireMap, z0: Complex64, p: &RenderParams) -> PixelClass {
    let lift = f.translation.filter(|t| t.multiplier != 1).map(|t| t.period);
    let hist_len = p.max_period + 1;
    let mut hist = vec![z0; hist_len];
    let mut z = z0;
    let mut prev_mod = z0.norm();
    let mut run = 0usize;
    for n in 1..=p.budget {
        let w = match f.eval(z) {
            Ok(w) => w,
            Err(_) => return PixelClass { label: Label::Escape, iterations: n as u32, datum: z },
        };
        z = w;
        let m = z.norm();
        if m > prev_mod && m <= p.growth_cap * prev_mod.max(1e-300) {
            run += 1;
        } else {
            run = 0;
        }
        prev_mod = m;
        if m > p.escape_radius {
            let label = if run >= p.tail_steps { Label::BakerCandidate } else { Label::Escape };
            return PixelClass { label, iterations: n as u32, datum: z };
        }
        hist[n % hist_len] = z;
        for per in 1..=p.max_period.min(n) {
            let old = hist[(n - per) % hist_len];
            let close = match lift {
                None => (z - old).norm() < p.cycle_tol,
                Some(t) => reduce(z - old, t).norm() < p.cycle_tol * (1.0 + m),
            };
            if close {
                let pts: Vec<Complex64> = (0..per).map(|k| hist[(n - k) % hist_len]).collect();
                return PixelClass {
                    label: Label::Attracted { period: per as u8, cycle: cycle_key(&pts, lift) },
                    iterations: n as u32,
                    datum: z,
                };
            }
        }
    }
    let label = if run >= (p.budget / 4).max(1) { Label::BakerCandidate } else { Label::Unresolved };
    PixelClass { label, iterations: p.budget as u32, datum: z }
}

/// Per-pixel classification, parallel over rows; bit-identical across runs.
pub fn render_dynamical_plane(f: &EntireMap, w: &Window, p: &RenderParams) -> Raster<PixelClass> {
    let rows: Vec<Vec<PixelClass>> = (0..w.rows)
        .into_par_iter()
        .map(|r| (0..w.cols).map(|c| classify_point(f, w.pixel_to_point(c, r), p)).collect())
        .collect();
    Raster { window: *w, data: rows.into_iter().flatten().collect() }
}

/// Raster legend: escape black, Baker blue, unresolved grey, attracted
/// basins in a hue derived from the cycle key, shaded by iteration count.
pub fn legend(px: &PixelClass) -> [u8; 3] {
    match px.label {
        Label::Escape => [0, 0, 0],
        Label::BakerCandidate => {
            let s = (px.iterations.min(60) as f64 / 60.0 * 80.0) as u8;
            [40 + s / 2, 80 + s, 200]
        }
        Label::Unresolved => [128, 128, 128],
        Label::Attracted { cycle, .. } => {
            let hue = (cycle % 6) as usize;
            let base: [[u8; 3]; 6] =
                [[230, 180, 40], [220, 90, 60], [90, 200, 90], [200, 120, 220], [240, 220, 120], [80, 200, 200]];
            let shade = 1.0 - (px.iterations.min(40) as f64 / 40.0) * 0.5;
            let b = base[hue];
            [(b[0] as f64 * shade) as u8, (b[1] as f64 * shade) as u8, (b[2] as f64 * shade) as u8]
        }
    }
}

pub fn render_image(r: &Raster<PixelClass>) -> RgbImage {
    RgbImage { width: r.window.cols, height: r.window.rows, pixels: r.data.iter().map(legend).collect() }
}
