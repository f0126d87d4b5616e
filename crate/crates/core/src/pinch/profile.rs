use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Band heights, dilatation cap and t-grid of the stretch family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PinchProfile {
    pub l_b: f64,
    pub l_y: f64,
    pub l_r: f64,
    pub mu_max: f64,
    /// Explicit t-grid; empty means the default grid of [`PinchProfile::t_values`].
    pub t_grid: Vec<f64>,
}

impl Default for PinchProfile {
    fn default() -> Self {
        PinchProfile { l_b: 1.0, l_y: 2.0, l_r: 3.0, mu_max: 0.95, t_grid: Vec::new() }
    }
}

impl PinchProfile {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.l_b && self.l_b < self.l_y && self.l_y < self.l_r && self.l_r.is_finite()) {
            return invalid("band heights must satisfy 0 < L_b < L_y < L_r");
        }
        if !(self.mu_max > 0.0 && self.mu_max < 1.0) {
            return invalid("mu_max must lie in (0, 1)");
        }
        if self.t_grid.iter().any(|t| !(0.0..1.0).contains(t)) {
            return invalid("t values must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.l_r + t / (1.0 - t)
    }

    pub fn m(&self, t: f64) -> f64 {
        self.l_y + t * (self.l_r - self.l_y)
    }

    /// Parameter after which `v_t` no longer changes below `l`.
    pub fn freeze_time(&self, l: f64) -> f64 {
        (l - self.l_y) / (self.l_r - self.l_y)
    }

    fn check(&self, t: f64, y: f64) -> Result<()> {
        if !(0.0..1.0).contains(&t) {
            return invalid(format!("t = {t} outside [0, 1)"));
        }
        if !(y >= self.l_b - 1e-12 && y <= self.l_r + 1e-12) {
            return invalid(format!("y = {y} outside the band [{}, {}]", self.l_b, self.l_r));
        }
        Ok(())
    }

    /// `v_t(y)` and `∂_y v_t(y)`, without the band check.
    pub fn v_unchecked(&self, t: f64, y: f64) -> (f64, f64) {
        let m = self.m(t);
        if y <= m {
            return (y, 1.0);
        }
        let c = self.tau(t) - self.l_r;
        let w = self.l_r - m;
        let u = (y - m) / w;
        (y + c * u * u, 1.0 + 2.0 * c * u / w)
    }

    pub fn v(&self, t: f64, y: f64) -> Result<(f64, f64)> {
        self.check(t, y)?;
        Ok(self.v_unchecked(t, y))
    }

    pub fn p_tilde(&self, t: f64, z: Complex64) -> Result<Complex64> {
        let (v, _) = self.v(t, z.im)?;
        Ok(Complex64::new(z.re, v))
    }

    /// Stretch `∂_y v_t` limited to the dilatation allowed by `mu_max`.
    pub fn capped_stretch(&self, dv: f64) -> f64 {
        dv.min(self.k_cap())
    }

    pub fn k_cap(&self) -> f64 {
        (1.0 + self.mu_max) / (1.0 - self.mu_max)
    }

    /// `(1 - ∂_y v_t)/(1 + ∂_y v_t)`, clamped to magnitude `mu_max`.
    pub fn mu_of_p(&self, t: f64, y: f64) -> Result<f64> {
        let (_, dv) = self.v(t, y)?;
        Ok(mu_of_stretch(dv).max(-self.mu_max).min(self.mu_max))
    }

    /// Pointwise dilatation `max(∂_y v, 1/∂_y v)`, uncapped.
    pub fn dilatation(&self, t: f64, y: f64) -> Result<f64> {
        let (_, dv) = self.v(t, y)?;
        Ok(dv.max(1.0 / dv))
    }

    /// Largest uncapped stretch, attained at `y = L_r`.
    pub fn max_stretch(&self, t: f64) -> f64 {
        self.v_unchecked(t, self.l_r).1
    }

    /// The t at which the stretch at `L_r` reaches the dilatation cap.
    pub fn saturation_t(&self) -> f64 {
        let a = (self.k_cap() - 1.0) * (self.l_r - self.l_y);
        ((a + 1.0) - (2.0 * a + 1.0).sqrt()) / a
    }

    /// The configured grid, or by default {0, 0.2, 0.4, 0.6, 0.8} cut at the
    /// saturation parameter, followed by three halvings of the remaining gap
    /// and the saturation parameter itself.
    pub fn t_values(&self) -> Vec<f64> {
        if !self.t_grid.is_empty() {
            return self.t_grid.clone();
        }
        let ts = self.saturation_t();
        let mut out: Vec<f64> = [0.0, 0.2, 0.4, 0.6, 0.8].into_iter().filter(|&t| t < ts).collect();
        let mut last = *out.last().unwrap_or(&0.0);
        for _ in 0..3 {
            last = ts - 0.5 * (ts - last);
            out.push(last);
        }
        out.push(ts);
        out
    }
}

pub fn mu_of_stretch(dv: f64) -> f64 {
    (1.0 - dv) / (1.0 + dv)
}
