//! The pinching construction: the stretch family `v_t` and band map `P̃_t`,
//! strip maps and strip charts, Beltrami calculus, and assembly of the
//! deformation field over the grand orbit of a lamination.

mod chart;
mod field;
mod profile;

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use chart::StripChart;
pub use field::{
    assemble_sigma_t, audit_support, check_singular_clearance, AssembleOptions, BeltramiField, CellGeometry, FieldGeometry, FieldHeader, FieldReport,
    Provenance, SupportAudit,
};
pub use profile::{mu_of_stretch, PinchProfile};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Plus => "+",
            Side::Minus => "-",
        }
    }
}

fn band_gain(p: &PinchProfile, delta: f64) -> f64 {
    delta / (p.l_r - p.l_b)
}

/// `S_+(z) = [δ L_r L_b/(L_r - L_b)]·(-1/z) + i(π/2 - δ L_b/(L_r - L_b))`.
pub fn s_plus(p: &PinchProfile, delta: f64, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return invalid("S+ is undefined at 0");
    }
    let k = delta * p.l_r * p.l_b / (p.l_r - p.l_b);
    Ok(-k / z + Complex64::new(0.0, FRAC_PI_2 - delta * p.l_b / (p.l_r - p.l_b)))
}

/// `S_-(z) = [δ/(L_r - L_b)]·(z - i L_r) + iπ/2`.
pub fn s_minus(p: &PinchProfile, delta: f64, z: Complex64) -> Complex64 {
    (z - Complex64::new(0.0, p.l_r)) * band_gain(p, delta) + Complex64::new(0.0, FRAC_PI_2)
}

/// Affine strip map of the `+` side: the mirror of `S_-` across `Im = π/2`,
/// `z ↦ -[δ/(L_r - L_b)]·(z - i L_r) + iπ/2`, sending the band onto
/// `R × [π/2, π/2 + δ]` with the top edge on `Im = π/2`.
pub fn s_plus_affine(p: &PinchProfile, delta: f64, z: Complex64) -> Complex64 {
    -(z - Complex64::new(0.0, p.l_r)) * band_gain(p, delta) + Complex64::new(0.0, FRAC_PI_2)
}

/// Strip map used by the strip charts of the given side, with its derivative.
pub fn strip_map(side: Side, p: &PinchProfile, delta: f64, z: Complex64) -> (Complex64, f64) {
    match side {
        Side::Minus => (s_minus(p, delta, z), band_gain(p, delta)),
        Side::Plus => (s_plus_affine(p, delta, z), -band_gain(p, delta)),
    }
}

pub fn strip_map_inverse(side: Side, p: &PinchProfile, delta: f64, s: Complex64) -> Complex64 {
    let g = band_gain(p, delta);
    let u = s - Complex64::new(0.0, FRAC_PI_2);
    let back = match side {
        Side::Minus => u / g,
        Side::Plus => -u / g,
    };
    back + Complex64::new(0.0, p.l_r)
}

/// Beltrami coefficient of `μ` pulled back by a holomorphic map with
/// derivative `dh` at the point: `μ·conj(h')/h'`.
pub fn pullback_beltrami_holomorphic(mu: Complex64, dh: Complex64) -> Result<Complex64> {
    if dh.norm() == 0.0 || !dh.re.is_finite() || !dh.im.is_finite() {
        return invalid("pullback through a critical point");
    }
    Ok(mu * dh.conj() / dh)
}

/// Coefficient of `L1 ∘ L2` for `L2(z) = a2 z + b2 conj(z)` and `L1` of
/// coefficient `mu1`: `(b2 + mu1 conj(a2)) / (a2 + mu1 conj(b2))`.
pub fn compose_linear_beltrami(a2: Complex64, b2: Complex64, mu1: Complex64) -> Result<Complex64> {
    if a2.norm() == 0.0 {
        return invalid("degenerate linear map");
    }
    if !(b2.norm() < a2.norm()) {
        return invalid("linear map must preserve orientation");
    }
    if !(mu1.norm() < 1.0) {
        return invalid("coefficient must have modulus below 1");
    }
    Ok((b2 + mu1 * a2.conj()) / (a2 + mu1 * b2.conj()))
}
