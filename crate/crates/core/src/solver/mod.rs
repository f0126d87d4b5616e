//! Numerical integration of a compactly supported Beltrami coefficient into a
//! normalized quasiconformal map, on a periodic spectral grid.

mod fft;

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fft::Fft2;

use crate::error::{Error, Result};
use crate::lang::EntireMap;
use crate::pinch::BeltramiField;
use crate::plane::Window;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub resolution: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Normalization points fixed together with ∞.
    pub p: Complex64,
    pub q: Complex64,
    /// Required support-free margin, as a fraction of the window size per side.
    pub margin: f64,
    /// Width in pixels of the Gaussian applied to μ before integration; 0 disables.
    pub smoothing: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            resolution: 512,
            max_iter: 4000,
            tol: 1e-8,
            p: Complex64::new(0.0, 0.0),
            q: Complex64::new(1.0, 0.0),
            margin: 0.1,
            smoothing: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, window: &Window) -> Result<()> {
        if self.resolution < 256 || !self.resolution.is_power_of_two() {
            return Err(Error::Config("solver resolution must be a power of two, at least 256".into()));
        }
        if window.cols != self.resolution || window.rows != self.resolution {
            return Err(Error::Config(format!(
                "field grid {}x{} does not match the solver resolution {}",
                window.cols, window.rows, self.resolution
            )));
        }
        if self.p == self.q {
            return Err(Error::Config("normalization points coincide".into()));
        }
        if !window.contains(self.p) || !window.contains(self.q) {
            return Err(Error::Config("normalization points must lie in the window".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// Gridded quasiconformal map with bilinear interpolation.
#[derive(Debug, Clone)]
pub struct QCMap {
    pub window: Window,
    pub h: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
    pub dilatation: f64,
    pub p: Complex64,
    pub q: Complex64,
    /// Affine post-normalization `h ↦ alpha·h + beta`.
    pub alpha: Complex64,
    pub beta: Complex64,
    pub t: f64,
    /// Set for the exact identity, which evaluates and inverts without interpolation.
    pub identity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QCMapHeader {
    pub schema: String,
    pub window: Window,
    pub cols: usize,
    pub rows: usize,
    pub residual: f64,
    pub iterations: usize,
    pub dilatation: f64,
    pub p: Complex64,
    pub q: Complex64,
    pub t: f64,
    pub layout: String,
}

fn bilinear(w: &Window, data: &[Complex64], z: Complex64) -> Result<Complex64> {
    if !w.contains(z) {
        return Err(Error::OutOfWindow(format!("{z}")));
    }
    let (fx, fy) = w.fractional_pixel(z);
    let c0 = (fx.floor() as usize).min(w.cols - 2);
    let r0 = (fy.floor() as usize).min(w.rows - 2);
    let (ax, ay) = (fx - c0 as f64, fy - r0 as f64);
    let at = |c: usize, r: usize| data[r * w.cols + c];
    Ok(at(c0, r0) * ((1.0 - ax) * (1.0 - ay))
        + at(c0 + 1, r0) * (ax * (1.0 - ay))
        + at(c0, r0 + 1) * ((1.0 - ax) * ay)
        + at(c0 + 1, r0 + 1) * (ax * ay))
}

impl QCMap {
    pub fn identity(window: Window) -> QCMap {
        let mut h = Vec::with_capacity(window.len());
        for r in 0..window.rows {
            for c in 0..window.cols {
                h.push(window.pixel_to_point(c, r));
            }
        }
        QCMap {
            window,
            h,
            residual: 0.0,
            iterations: 0,
            dilatation: 1.0,
            p: Complex64::new(0.0, 0.0),
            q: Complex64::new(1.0, 0.0),
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            t: 0.0,
            identity: true,
        }
    }

    pub fn at(&self, col: usize, row: usize) -> Complex64 {
        self.h[row * self.window.cols + col]
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        if self.identity {
            return if self.window.contains(z) { Ok(z) } else { Err(Error::OutOfWindow(format!("{z}"))) };
        }
        bilinear(&self.window, &self.h, z)
    }

    /// Real Jacobian of the interpolant by central differences.
    fn jacobian(&self, z: Complex64) -> Result<[[f64; 2]; 2]> {
        let e = 1e-3 * self.window.pitch_x().min(self.window.pitch_y());
        let shrink = |d: Complex64| -> Complex64 {
            let w = &self.window;
            let lo = w.center - Complex64::new(w.half_width, w.half_height);
            let hi = w.center + Complex64::new(w.half_width, w.half_height);
            Complex64::new(d.re.clamp(lo.re, hi.re), d.im.clamp(lo.im, hi.im))
        };
        let (xp, xm) = (shrink(z + e), shrink(z - e));
        let (yp, ym) = (shrink(z + Complex64::new(0.0, e)), shrink(z - Complex64::new(0.0, e)));
        let hx = (self.evaluate(xp)? - self.evaluate(xm)?) / (xp.re - xm.re);
        let hy = (self.evaluate(yp)? - self.evaluate(ym)?) / (yp.im - ym.im);
        Ok([[hx.re, hy.re], [hx.im, hy.im]])
    }

    /// Nearest grid preimage by a coarse-to-fine search.
    fn nearest_node(&self, w: Complex64) -> (usize, usize) {
        let win = &self.window;
        let stride = 8.min(win.cols / 4).max(1);
        let mut best = (f64::INFINITY, 0, 0);
        for r in (0..win.rows).step_by(stride) {
            for c in (0..win.cols).step_by(stride) {
                let d = (self.at(c, r) - w).norm_sqr();
                if d < best.0 {
                    best = (d, c, r);
                }
            }
        }
        let span = 2 * stride;
        let (c0, r0) = (best.1, best.2);
        for r in r0.saturating_sub(span)..(r0 + span + 1).min(win.rows) {
            for c in c0.saturating_sub(span)..(c0 + span + 1).min(win.cols) {
                let d = (self.at(c, r) - w).norm_sqr();
                if d < best.0 {
                    best = (d, c, r);
                }
            }
        }
        (best.1, best.2)
    }

    /// Preimage by Newton on the interpolant, started at the nearest node.
    pub fn invert(&self, w: Complex64) -> Result<Complex64> {
        if self.identity {
            return if self.window.contains(w) { Ok(w) } else { Err(Error::OutOfWindow(format!("{w}"))) };
        }
        let (c, r) = self.nearest_node(w);
        self.newton_inverse(w, self.window.pixel_to_point(c, r))
    }

    /// Preimage by Newton started at `guess`, falling back to [`QCMap::invert`].
    pub fn invert_near(&self, w: Complex64, guess: Complex64) -> Result<Complex64> {
        if self.identity || !self.window.contains(guess) {
            return self.invert(w);
        }
        self.newton_inverse(w, guess).or_else(|_| self.invert(w))
    }

    fn newton_inverse(&self, w: Complex64, start: Complex64) -> Result<Complex64> {
        let mut z = start;
        let tol = 1e-12 * (1.0 + z.norm()) + 1e-9 * self.window.pitch_x();
        for _ in 0..60 {
            let v = self.evaluate(z)? - w;
            let j = self.jacobian(z)?;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let dx = (j[1][1] * v.re - j[0][1] * v.im) / det;
            let dy = (-j[1][0] * v.re + j[0][0] * v.im) / det;
            let mut step = Complex64::new(dx, dy);
            let cap = 2.0 * self.window.pitch_x();
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            let next = z - step;
            let win = &self.window;
            let lo = win.center - Complex64::new(win.half_width, win.half_height);
            let hi = win.center + Complex64::new(win.half_width, win.half_height);
            z = Complex64::new(next.re.clamp(lo.re, hi.re), next.im.clamp(lo.im, hi.im));
            if step.norm() <= tol && (self.evaluate(z)? - w).norm() <= 1e-9 * (1.0 + w.norm()) {
                return Ok(z);
            }
        }
        if (self.evaluate(z)? - w).norm() <= 1e-9 * (1.0 + w.norm()) {
            return Ok(z);
        }
        Err(Error::Solver(format!("inversion did not converge at {w}")))
    }

    /// Per grid cell (row-major, `(cols - 1) x (rows - 1)`), whether its image
    /// triangles fail to be positively oriented.
    pub fn negative_mask(&self) -> Vec<bool> {
        let w = &self.window;
        (0..w.rows - 1)
            .into_par_iter()
            .flat_map_iter(|r| {
                (0..w.cols - 1).map(move |c| {
                    // corners counter-clockwise in the plane: bottom-left,
                    // bottom-right, top-right, top-left
                    let (bl, br, tr, tl) = (self.at(c, r + 1), self.at(c + 1, r + 1), self.at(c + 1, r), self.at(c, r));
                    let cross = |a: Complex64, b: Complex64, c: Complex64| ((b - a).conj() * (c - a)).im;
                    cross(bl, br, tr) <= 0.0 || cross(bl, tr, tl) <= 0.0
                })
            })
            .collect()
    }

    /// Number of grid cells whose image triangles are not positively oriented.
    pub fn negative_cells(&self) -> usize {
        self.negative_mask().iter().filter(|&&b| b).count()
    }

    pub fn header(&self) -> QCMapHeader {
        QCMapHeader {
            schema: "pinchdyn.qcmap/1".into(),
            window: self.window,
            cols: self.window.cols,
            rows: self.window.rows,
            residual: self.residual,
            iterations: self.iterations,
            dilatation: self.dilatation,
            p: self.p,
            q: self.q,
            t: self.t,
            layout: "row-major f64 little-endian (re, im) pairs of h, row 0 at the top".into(),
        }
    }

    pub fn write_dump(&self, bin: &Path, header: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(bin)?);
        for v in &self.h {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        w.flush()?;
        std::fs::write(header, serde_json::to_string_pretty(&self.header())?)?;
        Ok(())
    }
}

/// Fourier multipliers `conj(ξ)/ξ` and `2/(iξ)` with `ξ = k_x + i k_y`, and
/// the Gaussian smoothing multiplier for a width of `sigma` pixels.
fn multipliers(w: &Window, sigma: f64) -> (Vec<Complex64>, Vec<Complex64>, Vec<f64>) {
    let (nx, ny) = (w.cols, w.rows);
    let lx = nx as f64 * w.pitch_x();
    let ly = ny as f64 * w.pitch_y();
    let mut b = vec![Complex64::new(0.0, 0.0); nx * ny];
    let mut c = vec![Complex64::new(0.0, 0.0); nx * ny];
    let mut g = vec![1.0; nx * ny];
    for r in 0..ny {
        // rows run downward, so the row frequency has the opposite sign in y
        let ky = -2.0 * PI * fft::freq(r, ny) / ly;
        let sy = 2.0 * PI * fft::freq(r, ny) / ny as f64;
        for col in 0..nx {
            let kx = 2.0 * PI * fft::freq(col, nx) / lx;
            let sx = 2.0 * PI * fft::freq(col, nx) / nx as f64;
            g[r * nx + col] = (-0.5 * sigma * sigma * (sx * sx + sy * sy)).exp();
            let xi = Complex64::new(kx, ky);
            if xi.norm() > 0.0 {
                b[r * nx + col] = xi.conj() / xi;
                c[r * nx + col] = 2.0 / (Complex64::i() * xi);
            }
        }
    }
    (b, c, g)
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `h_z̄ = μ h_z` with `h(z) - z` periodic up to a linear term, then
/// post-composes the affine map fixing `p` and `q`.
pub fn solve_beltrami(field: &BeltramiField, cfg: &SolverConfig) -> Result<QCMap> {
    let w = field.window;
    cfg.validate(&w)?;
    if field.mu.iter().any(|m| !(m.re.is_finite() && m.im.is_finite())) {
        return Err(Error::Solver("Beltrami coefficient has non-finite entries".into()));
    }
    let mu_inf = field.max_abs();
    if !(mu_inf < 1.0) {
        return Err(Error::Solver(format!("|μ| reaches {mu_inf}, not below 1")));
    }
    let mx = cfg.margin * 2.0 * w.half_width;
    let my = cfg.margin * 2.0 * w.half_height;
    for r in 0..w.rows {
        for c in 0..w.cols {
            if field.at(c, r).norm() == 0.0 {
                continue;
            }
            let d = w.pixel_to_point(c, r) - w.center;
            if d.re.abs() > w.half_width - mx || d.im.abs() > w.half_height - my {
                return Err(Error::Solver("support touches the window margin".into()));
            }
        }
    }
    if mu_inf == 0.0 {
        return Ok(QCMap { p: cfg.p, q: cfg.q, t: field.t, ..QCMap::identity(w) });
    }
    let fft = Fft2::new(w.cols, w.rows);
    let (bm, cm, gauss) = multipliers(&w, cfg.smoothing);
    let smoothed;
    let mu = if cfg.smoothing > 0.0 {
        let mut m = field.mu.clone();
        fft.forward(&mut m);
        m.par_iter_mut().zip(gauss.par_iter()).for_each(|(v, g)| *v *= g);
        fft.inverse(&mut m);
        // exact zeros far from the support, and the cap kept after ringing
        let cap = mu_inf;
        m.par_iter_mut().for_each(|v| {
            if v.norm() < 1e-12 {
                *v = Complex64::new(0.0, 0.0);
            } else if v.norm() > cap {
                *v *= cap / v.norm();
            }
        });
        smoothed = m;
        &smoothed
    } else {
        &field.mu
    };
    let n = mu.len() as f64;
    let mut omega: Vec<Complex64> = mu.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut rises = 0;
    let mut last = f64::INFINITY;
    while residual > cfg.tol && iterations < cfg.max_iter {
        iterations += 1;
        let mut g = omega.clone();
        fft.forward(&mut g);
        g.par_iter_mut().zip(bm.par_iter()).for_each(|(v, m)| *v *= m);
        fft.inverse(&mut g);
        let next: Vec<Complex64> = mu.par_iter().zip(g.par_iter()).map(|(m, b)| m * (1.0 + b)).collect();
        let diff = next.iter().zip(&omega).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm = l2(&next);
        residual = if norm > 0.0 { diff / norm } else { 0.0 };
        omega = next;
        if residual > last {
            rises += 1;
            if rises >= 5 {
                return Err(Error::Solver(format!("Neumann series diverges (residual {residual:.3e})")));
            }
        } else {
            rises = 0;
        }
        last = residual;
    }
    let mean = omega.iter().sum::<Complex64>() / n;
    let mut g: Vec<Complex64> = omega.par_iter().map(|v| v - mean).collect();
    fft.forward(&mut g);
    g.par_iter_mut().zip(cm.par_iter()).for_each(|(v, m)| *v *= m);
    fft.inverse(&mut g);
    let mut h: Vec<Complex64> = Vec::with_capacity(mu.len());
    for r in 0..w.rows {
        for c in 0..w.cols {
            let z = w.pixel_to_point(c, r);
            h.push(z + mean * z.conj() + g[r * w.cols + c]);
        }
    }
    let hp = bilinear(&w, &h, cfg.p)?;
    let hq = bilinear(&w, &h, cfg.q)?;
    if (hp - hq).norm() == 0.0 {
        return Err(Error::Solver("normalization points collapse".into()));
    }
    let alpha = (cfg.p - cfg.q) / (hp - hq);
    let beta = cfg.p - alpha * hp;
    h.par_iter_mut().for_each(|v| *v = alpha * *v + beta);
    Ok(QCMap {
        window: w,
        h,
        residual,
        iterations,
        dilatation: field.dilatation(),
        p: cfg.p,
        q: cfg.q,
        alpha,
        beta,
        t: field.t,
        identity: false,
    })
}

/// `f_t(z) = h(f(h⁻¹(z)))`.
pub fn conjugate_map(f: &EntireMap, h: &QCMap, z: Complex64) -> Result<Complex64> {
    let u = h.invert(z)?;
    let v = f.eval(u).map_err(|_| Error::Solver(format!("f overflows at {u}")))?;
    if !h.window.contains(v) {
        return Err(Error::OutOfWindow(format!("f(h⁻¹({z})) = {v}")));
    }
    h.evaluate(v)
}

/// Beltrami coefficient of `g` at `z` estimated by central differences.
pub fn finite_difference_mu(g: impl Fn(Complex64) -> Result<Complex64>, z: Complex64, eps: f64) -> Result<Complex64> {
    let gx = (g(z + eps)? - g(z - eps)?) / (2.0 * eps);
    let gy = (g(z + Complex64::new(0.0, eps))? - g(z - Complex64::new(0.0, eps))?) / (2.0 * eps);
    let dz = (gx - Complex64::i() * gy) * 0.5;
    let dzb = (gx + Complex64::i() * gy) * 0.5;
    if dz.norm() == 0.0 {
        return Err(Error::Solver(format!("vanishing derivative at {z}")));
    }
    Ok(dzb / dz)
}

/// Complex derivative of `g` at `z` by central differences along x.
pub fn finite_difference_derivative(g: impl Fn(Complex64) -> Result<Complex64>, z: Complex64, eps: f64) -> Result<Complex64> {
    let gx = (g(z + eps)? - g(z - eps)?) / (2.0 * eps);
    let gy = (g(z + Complex64::new(0.0, eps))? - g(z - Complex64::new(0.0, eps))?) / (2.0 * eps);
    Ok((gx - Complex64::i() * gy) * 0.5)
}
