use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lang::EntireMap;

/// Linearizing chart `φ(z) = a^{-n}(f^n(z) - p*)` of a hyperbolic Baker
/// domain whose asymptotic model is `z ↦ p* + a(z - p*)`.
///
/// `deep` is the unit direction along which the domain reaches infinity. The
/// chart sends the domain into the half plane `Re(w·conj(deep)) > 0`, and the
/// boundary parameter used by laminations is `ζ = i·conj(deep)·φ`, so the
/// domain corresponds to the upper half plane.
#[derive(Debug, Clone)]
pub struct KoenigsChart {
    pub f: EntireMap,
    pub p_star: Complex64,
    pub a: f64,
    pub n_k: usize,
    pub deep: Complex64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChartSummary {
    pub p_star: Complex64,
    pub a: f64,
    pub n_k: usize,
    pub deep: Complex64,
    pub max_residual: f64,
}

const DEEP_OFFSET: f64 = 40.0;

impl KoenigsChart {
    /// Chart value and derivative; `None` on overflow.
    pub fn forward(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let mut w = z;
        let mut d = Complex64::new(1.0, 0.0);
        for _ in 0..self.n_k {
            d *= self.f.deriv(w).ok()?;
            w = self.f.eval(w).ok()?;
        }
        let s = self.a.powi(-(self.n_k as i32));
        let v = (w - self.p_star) * s;
        let dv = d * s;
        if v.re.is_finite() && v.im.is_finite() && dv.re.is_finite() && dv.im.is_finite() {
            Some((v, dv))
        } else {
            None
        }
    }

    pub fn phi(&self, z: Complex64) -> Option<Complex64> {
        self.forward(z).map(|p| p.0)
    }

    /// Relative conjugacy residual `|φ(f(z)) - aφ(z)| / (1 + |φ(z)|)`.
    pub fn residual(&self, z: Complex64) -> Option<f64> {
        let w = self.phi(z)?;
        let fw = self.phi(self.f.eval(z).ok()?)?;
        Some((fw - w * self.a).norm() / (1.0 + w.norm()))
    }

    /// Distance of a chart value to the boundary of the image half plane.
    pub fn depth_of(&self, w: Complex64) -> f64 {
        (w * self.deep.conj()).re
    }

    pub fn zeta_of_w(&self, w: Complex64) -> Complex64 {
        Complex64::i() * self.deep.conj() * w
    }

    pub fn w_of_zeta(&self, zeta: Complex64) -> Complex64 {
        -Complex64::i() * self.deep * zeta
    }

    /// Boundary parameter `ζ(z)` and its derivative.
    pub fn zeta(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let (w, dw) = self.forward(z)?;
        let r = Complex64::i() * self.deep.conj();
        Some((r * w, r * dw))
    }

    fn newton_to(&self, target: Complex64, seed: Complex64) -> Option<Complex64> {
        let mut z = seed;
        for _ in 0..30 {
            let (v, dv) = self.forward(z)?;
            if dv.norm() == 0.0 {
                return None;
            }
            let step = (v - target) / dv;
            z -= step;
            if step.norm() <= 1e-12 * (1.0 + z.norm()) {
                return Some(z);
            }
        }
        None
    }

    /// Follows the chart inverse along the segment from `w0` (where `z0` is a
    /// preimage) to `w1`, with steps proportional to the distance to the
    /// boundary of the half plane.
    fn track(&self, z0: Complex64, w0: Complex64, w1: Complex64) -> Option<Complex64> {
        let mut z = z0;
        let mut w = w0;
        let mut guard = 0;
        while (w1 - w).norm() > 0.0 {
            guard += 1;
            if guard > 4000 {
                return None;
            }
            let dist = self.depth_of(w).max(0.0);
            let mut h = (0.3 * dist).max(1e-14 * (1.0 + w.norm()));
            loop {
                let rem = w1 - w;
                let next = if rem.norm() <= h { w1 } else { w + rem * (h / rem.norm()) };
                let (_, dv) = self.forward(z)?;
                let pred = z + (next - w) / dv;
                match self.newton_to(next, pred) {
                    Some(zn) if (zn - pred).norm() <= 0.5 * (pred - z).norm() + 1e-12 * (1.0 + z.norm()) => {
                        z = zn;
                        w = next;
                        break;
                    }
                    _ => {
                        h *= 0.5;
                        if h < 1e-15 * (1.0 + w.norm()) {
                            return None;
                        }
                    }
                }
            }
        }
        Some(z)
    }

    fn deep_point(&self, w: Complex64) -> Complex64 {
        w + self.deep * (DEEP_OFFSET + w.norm())
    }

    /// Chart inverse on the image half plane, by continuation from the deep
    /// region where `φ(z) ≈ z - p*`.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64> {
        if !(self.depth_of(w) > 0.0) {
            return Err(Error::Chart(format!("{w} lies outside the chart half plane")));
        }
        let wd = self.deep_point(w);
        let start = self
            .newton_to(wd, wd + self.p_star)
            .ok_or_else(|| Error::Chart("no deep preimage".into()))?;
        self.track(start, wd, w).ok_or_else(|| Error::Chart(format!("continuation to {w} failed")))
    }

    /// Inverse in the boundary parameter: the point with `ζ(z) = zeta`.
    pub fn psi(&self, zeta: Complex64) -> Result<Complex64> {
        self.inverse(self.w_of_zeta(zeta))
    }

    /// Whether `z` lies in the domain itself, not in another component that
    /// the chart also sends into the half plane: the chart inverse through
    /// `z` is continued to the deep region and must land on the model sheet.
    pub fn in_domain(&self, z: Complex64) -> bool {
        let Some(w) = self.phi(z) else { return false };
        if !(self.depth_of(w) > 0.0) {
            return false;
        }
        let wd = self.deep_point(w);
        match self.track(z, w, wd) {
            Some(zd) => (zd - (wd + self.p_star)).norm() < 1e-6 * (1.0 + wd.norm()),
            None => false,
        }
    }

    pub fn summary(&self, max_residual: f64) -> ChartSummary {
        ChartSummary { p_star: self.p_star, a: self.a, n_k: self.n_k, deep: self.deep, max_residual }
    }
}

/// Probe points `p* + deep·(s + it)` well inside the domain.
pub fn chart_probes(p_star: Complex64, deep: Complex64) -> Vec<Complex64> {
    [(8.7, 0.0), (10.0, 2.0), (12.0, -3.0), (15.0, 1.0), (7.0, 0.5)]
        .iter()
        .map(|&(s, t)| p_star + deep * Complex64::new(s, t))
        .collect()
}

/// Builds and validates a chart. The deep direction is taken from the map's
/// Baker probe relative to `p*`, or the negative real axis.
pub fn build_koenigs(f: &EntireMap, p_star: Complex64, a: f64, n_k: usize) -> Result<KoenigsChart> {
    let deep = match f.baker_probe {
        Some(p) if (p - p_star).norm() > 0.0 => (p - p_star) / (p - p_star).norm(),
        _ => Complex64::new(-1.0, 0.0),
    };
    build_koenigs_towards(f, p_star, a, n_k, deep)
}

pub fn build_koenigs_towards(
    f: &EntireMap,
    p_star: Complex64,
    a: f64,
    n_k: usize,
    deep: Complex64,
) -> Result<KoenigsChart> {
    if !(a > 1.0) {
        return Err(Error::Invalid("chart multiplier must exceed 1".into()));
    }
    if n_k == 0 {
        return Err(Error::Invalid("chart depth must be positive".into()));
    }
    let chart = KoenigsChart { f: f.clone(), p_star, a, n_k, deep: deep / deep.norm() };
    let r = validate_chart(&chart)?;
    if r >= 1e-6 {
        return Err(Error::Chart(format!("conjugacy residual {r:.3e} exceeds 1e-6")));
    }
    Ok(chart)
}

/// Largest relative conjugacy residual over the probe points.
pub fn validate_chart(chart: &KoenigsChart) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in chart_probes(chart.p_star, chart.deep) {
        let r = chart.residual(z).ok_or_else(|| Error::Chart(format!("chart overflows at {z}")))?;
        worst = worst.max(r);
    }
    Ok(worst)
}
