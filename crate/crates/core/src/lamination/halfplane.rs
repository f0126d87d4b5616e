use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::plane::SpherePoint;

/// A complete geodesic of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HalfPlaneGeodesic {
    Vertical { x0: f64 },
    Semicircle { center: f64, radius: f64 },
}

impl HalfPlaneGeodesic {
    /// Endpoints on the extended real line, left to right.
    pub fn endpoints(&self) -> (SpherePoint, SpherePoint) {
        match *self {
            HalfPlaneGeodesic::Vertical { x0 } => (SpherePoint::new(x0, 0.0), SpherePoint::Infinity),
            HalfPlaneGeodesic::Semicircle { center, radius } => {
                (SpherePoint::new(center - radius, 0.0), SpherePoint::new(center + radius, 0.0))
            }
        }
    }

    /// Euclidean distance from `z` to the geodesic, as a set in the plane.
    pub fn euclidean_distance(&self, z: Complex64) -> f64 {
        match *self {
            HalfPlaneGeodesic::Vertical { x0 } => {
                if z.im >= 0.0 {
                    (z.re - x0).abs()
                } else {
                    (z - x0).norm()
                }
            }
            HalfPlaneGeodesic::Semicircle { center, radius } => {
                let d = z - center;
                if z.im >= 0.0 {
                    (d.norm() - radius).abs()
                } else {
                    (d.re.abs() - radius).hypot(d.im)
                }
            }
        }
    }
}

fn upper(p: SpherePoint) -> Result<()> {
    match p {
        SpherePoint::Finite(z) if z.im < 0.0 || !z.re.is_finite() || !z.im.is_finite() => {
            invalid("geodesic endpoints must lie in the closed upper half plane")
        }
        _ => Ok(()),
    }
}

/// Geodesic joining two points of the closed upper half plane or infinity.
pub fn geodesic_between(u: SpherePoint, v: SpherePoint) -> Result<HalfPlaneGeodesic> {
    upper(u)?;
    upper(v)?;
    if u == v {
        return invalid("geodesic endpoints coincide");
    }
    match (u, v) {
        (SpherePoint::Infinity, SpherePoint::Finite(z)) | (SpherePoint::Finite(z), SpherePoint::Infinity) => {
            Ok(HalfPlaneGeodesic::Vertical { x0: z.re })
        }
        (SpherePoint::Finite(a), SpherePoint::Finite(b)) => {
            if a.im == 0.0 && b.im == 0.0 {
                return Ok(HalfPlaneGeodesic::Semicircle { center: 0.5 * (a.re + b.re), radius: 0.5 * (a.re - b.re).abs() });
            }
            if a.re == b.re {
                return Ok(HalfPlaneGeodesic::Vertical { x0: a.re });
            }
            let center = (a.norm_sqr() - b.norm_sqr()) / (2.0 * (a.re - b.re));
            Ok(HalfPlaneGeodesic::Semicircle { center, radius: (a - center).norm() })
        }
        _ => invalid("geodesic endpoints coincide"),
    }
}

/// Element of PSL(2,R) acting by (az+b)/(cz+d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Normalizes a matrix of positive determinant to determinant one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Isometry> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return invalid("isometry needs a positive determinant");
        }
        let s = det.sqrt();
        Ok(Isometry { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    /// Derivative of the Möbius action at `z`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let q = z * self.c + self.d;
        1.0 / (q * q)
    }

    pub fn apply_sphere(&self, p: SpherePoint) -> SpherePoint {
        match p {
            SpherePoint::Infinity if self.c == 0.0 => SpherePoint::Infinity,
            SpherePoint::Infinity => SpherePoint::new(self.a / self.c, 0.0),
            SpherePoint::Finite(z) => {
                let q = z * self.c + self.d;
                if q.norm() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite((z * self.a + self.b) / q)
                }
            }
        }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Isometry) -> Isometry {
        Isometry {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Dilation `z ↦ s z`, s > 0.
    pub fn scaling(s: f64) -> Isometry {
        let r = s.sqrt();
        Isometry { a: r, b: 0.0, c: 0.0, d: 1.0 / r }
    }
}

/// The isometry taking the imaginary axis onto `g`, with 0 going to the left
/// (or finite) endpoint and ∞ to the right one.
pub fn isometry_to(g: &HalfPlaneGeodesic) -> Isometry {
    match *g {
        HalfPlaneGeodesic::Vertical { x0 } => Isometry { a: 1.0, b: x0, c: 0.0, d: 1.0 },
        HalfPlaneGeodesic::Semicircle { center, radius } => {
            let s = (2.0 * radius).sqrt();
            Isometry { a: (center + radius) / s, b: (center - radius) / s, c: 1.0 / s, d: 1.0 / s }
        }
    }
}

/// Tubular neighborhood of a geodesic: the image of the sector
/// `|arg z - π/2| < δ` under the isometry onto the geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodNeighborhood {
    pub geodesic: HalfPlaneGeodesic,
    pub isometry: Isometry,
    pub delta: f64,
}

impl GoodNeighborhood {
    pub fn new(g: HalfPlaneGeodesic, delta: f64) -> Result<GoodNeighborhood> {
        if !(delta > 0.0 && delta < FRAC_PI_2) {
            return invalid("thickness must lie in (0, π/2)");
        }
        Ok(GoodNeighborhood { geodesic: g, isometry: isometry_to(&g), delta })
    }

    /// Logarithmic coordinate `log M⁻¹(z)`; the geodesic is `Im = π/2`.
    pub fn log_coordinate(&self, z: Complex64) -> Complex64 {
        self.isometry.inverse().apply(z).ln()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        if !(z.im > 0.0) {
            return false;
        }
        (self.log_coordinate(z).im - FRAC_PI_2).abs() < self.delta
    }

    /// The two boundary curves `M(exp(s + i(π/2 ∓ δ)))` for `s` in `[-s_max, s_max]`.
    pub fn boundary(&self, n: usize, s_max: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = n.max(2);
        let curve = |theta: f64| -> Vec<Complex64> {
            (0..n)
                .map(|k| {
                    let s = -s_max + 2.0 * s_max * k as f64 / (n - 1) as f64;
                    self.isometry.apply(Complex64::new(s, theta).exp())
                })
                .collect()
        };
        (curve(FRAC_PI_2 - self.delta), curve(FRAC_PI_2 + self.delta))
    }
}

/// Hyperbolic distance in the upper half plane.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm_sqr();
    (1.0 + num / (2.0 * z.im * w.im)).acosh()
}

/// Hyperbolic distance between two disjoint geodesics with finite endpoints
/// `a < b < c < d` or nested; zero when they cross.
pub fn geodesic_separation(g: &HalfPlaneGeodesic, h: &HalfPlaneGeodesic) -> f64 {
    let m = isometry_to(g).inverse();
    let (p, q) = h.endpoints();
    let (p, q) = (m.apply_sphere(p), m.apply_sphere(q));
    let (Some(p), Some(q)) = (p.finite(), q.finite()) else {
        return 0.0;
    };
    let (p, q) = (p.re, q.re);
    if p * q <= 0.0 {
        return 0.0;
    }
    let (lo, hi) = if p.abs() < q.abs() { (p.abs(), q.abs()) } else { (q.abs(), p.abs()) };
    let r = (lo / hi).sqrt();
    ((1.0 + r) / (1.0 - r)).ln()
}
