//! Plane and sphere primitives: chordal metric, windows, polylines and rasters.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub fn new(re: f64, im: f64) -> Self {
        SpherePoint::Finite(Complex64::new(re, im))
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::Finite(z)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpherePointRepr {
    Finite([f64; 2]),
    Marker(String),
}

impl Serialize for SpherePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SpherePoint::Finite(z) => SpherePointRepr::Finite([z.re, z.im]).serialize(s),
            SpherePoint::Infinity => SpherePointRepr::Marker("inf".into()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SpherePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match SpherePointRepr::deserialize(d)? {
            SpherePointRepr::Finite([re, im]) => Ok(SpherePoint::new(re, im)),
            SpherePointRepr::Marker(m) if m == "inf" => Ok(SpherePoint::Infinity),
            SpherePointRepr::Marker(m) => Err(serde::de::Error::custom(format!(
                "expected [re, im] or \"inf\", got {m:?}"
            ))),
        }
    }
}

/// Chordal distance, normalized so that antipodal points are at distance 2.
pub fn chordal_distance(a: SpherePoint, b: SpherePoint) -> f64 {
    match (a, b) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity)
        | (SpherePoint::Infinity, SpherePoint::Finite(z)) => 2.0 / (1.0 + z.norm_sqr()).sqrt(),
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
            if z == w {
                return 0.0;
            }
            let d = 2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt();
            d.min(2.0)
        }
    }
}

/// Chordal distance between two finite points.
pub fn chordal(z: Complex64, w: Complex64) -> f64 {
    chordal_distance(z.into(), w.into())
}

/// Largest chordal distance over all pairs of points.
pub fn spherical_diameter(points: &[SpherePoint]) -> Result<f64> {
    if points.is_empty() {
        return invalid("spherical diameter of an empty point set");
    }
    let mut best = 0.0f64;
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            best = best.max(chordal_distance(a, b));
        }
    }
    Ok(best)
}

/// An ordered list of sphere points, open or closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<SpherePoint>,
    closed: bool,
}

impl Polyline {
    pub fn new(points: Vec<SpherePoint>, closed: bool) -> Result<Self> {
        if points.len() < 2 {
            return invalid("a polyline needs at least two points");
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return invalid("consecutive polyline points coincide");
        }
        if closed && points.first() == points.last() {
            return invalid("closed polyline repeats its first point");
        }
        Ok(Polyline { points, closed })
    }

    /// Builds a polyline from finite samples, dropping exact consecutive repeats.
    pub fn from_finite(zs: &[Complex64], closed: bool) -> Result<Self> {
        let mut pts: Vec<SpherePoint> = Vec::with_capacity(zs.len());
        for &z in zs {
            if pts.last() != Some(&SpherePoint::Finite(z)) {
                pts.push(z.into());
            }
        }
        if closed && pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        Polyline::new(pts, closed)
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reversed(&self) -> Polyline {
        let mut points = self.points.clone();
        points.reverse();
        Polyline { points, closed: self.closed }
    }

    pub fn diameter(&self) -> f64 {
        spherical_diameter(&self.points).unwrap_or(0.0)
    }

    /// Finite vertices only.
    pub fn finite_points(&self) -> Vec<Complex64> {
        self.points.iter().filter_map(|p| p.finite()).collect()
    }
}

/// Axis-aligned rectangle of the plane sampled by a pixel grid.
///
/// Pixel (0, 0) sits on the top-left corner and pixel (cols-1, rows-1) on the
/// bottom-right corner, so the pixel pitch is `2*half_width/(cols-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Complex64,
    pub half_width: f64,
    pub half_height: f64,
    pub cols: usize,
    pub rows: usize,
}

impl Window {
    pub fn new(center: Complex64, half_width: f64, half_height: f64, cols: usize, rows: usize) -> Result<Self> {
        let w = Window { center, half_width, half_height, cols, rows };
        w.validate()?;
        Ok(w)
    }

    pub fn square(center: Complex64, half: f64, n: usize) -> Result<Self> {
        Window::new(center, half, half, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_height > 0.0) || !self.half_width.is_finite() || !self.half_height.is_finite() {
            return invalid("window half sizes must be positive and finite");
        }
        if self.cols < 2 || self.rows < 2 {
            return invalid("window resolution must be at least 2x2");
        }
        if !(self.center.re.is_finite() && self.center.im.is_finite()) {
            return invalid("window center must be finite");
        }
        Ok(())
    }

    pub fn pitch_x(&self) -> f64 {
        2.0 * self.half_width / (self.cols - 1) as f64
    }

    pub fn pitch_y(&self) -> f64 {
        2.0 * self.half_height / (self.rows - 1) as f64
    }

    pub fn top_left(&self) -> Complex64 {
        self.center + Complex64::new(-self.half_width, self.half_height)
    }

    pub fn pixel_to_point(&self, col: usize, row: usize) -> Complex64 {
        let tl = self.top_left();
        Complex64::new(tl.re + col as f64 * self.pitch_x(), tl.im - row as f64 * self.pitch_y())
    }

    /// Continuous pixel coordinates (col, row) of a point; no bounds check.
    pub fn fractional_pixel(&self, z: Complex64) -> (f64, f64) {
        let tl = self.top_left();
        ((z.re - tl.re) / self.pitch_x(), (tl.im - z.im) / self.pitch_y())
    }

    /// Closed rectangle test, with a relative slack of `1e-12` so that edge
    /// pixel centers count as inside.
    pub fn contains(&self, z: Complex64) -> bool {
        let slack = 1.0 + 1e-12;
        (z.re - self.center.re).abs() <= self.half_width * slack && (z.im - self.center.im).abs() <= self.half_height * slack
    }

    pub fn point_to_pixel(&self, z: Complex64) -> Result<(usize, usize)> {
        if !self.contains(z) {
            return Err(Error::OutOfWindow(format!("{z}")));
        }
        let (c, r) = self.fractional_pixel(z);
        let col = (c.round() as usize).min(self.cols - 1);
        let row = (r.round() as usize).min(self.rows - 1);
        Ok((col, row))
    }

    /// Same window geometry with a different pixel grid.
    pub fn with_resolution(&self, cols: usize, rows: usize) -> Result<Self> {
        Window::new(self.center, self.half_width, self.half_height, cols, rows)
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Row-major grid of values over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    pub window: Window,
    pub data: Vec<T>,
}

impl<T: Clone> Raster<T> {
    pub fn filled(window: Window, value: T) -> Self {
        Raster { window, data: vec![value; window.len()] }
    }
}

impl<T> Raster<T> {
    pub fn get(&self, col: usize, row: usize) -> &T {
        &self.data[row * self.window.cols + col]
    }

    pub fn at_point(&self, z: Complex64) -> Option<&T> {
        let (c, r) = self.window.point_to_pixel(z).ok()?;
        Some(self.get(c, r))
    }
}

/// 8-bit RGB image buffer, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.bytes())?;
        out.flush()?;
        Ok(())
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        image::save_buffer(path, &self.bytes(), self.width as u32, self.height as u32, image::ColorType::Rgb8)
            .map_err(|e| Error::Image(e.to_string()))
    }

    /// Writes PNG or PPM depending on the file extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ppm") => self.write_ppm(path),
            _ => self.write_png(path),
        }
    }
}

/// Distance from `z` to the segment [a, b].
pub fn point_segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Winding number of a closed polygon around `z`.
pub fn winding_number(poly: &[Complex64], z: Complex64) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.im <= z.im {
            if b.im > z.im && cross(b - a, z - a) > 0.0 {
                wn += 1;
            }
        } else if b.im <= z.im && cross(b - a, z - a) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

/// Signed area of a closed polygon (positive when counterclockwise).
pub fn signed_area(poly: &[Complex64]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() * 0.5
}

fn segments_cross(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

/// True when two non-adjacent edges of the closed polygon cross.
pub fn polygon_self_intersects(poly: &[Complex64]) -> bool {
    let n = poly.len();
    if n < 4 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(a, b, poly[j], poly[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chordal_examples() {
        let o = SpherePoint::new(0.0, 0.0);
        assert_eq!(chordal_distance(o, SpherePoint::Infinity), 2.0);
        assert_eq!(chordal_distance(o, o), 0.0);
        let d = chordal_distance(SpherePoint::new(1.0, 0.0), SpherePoint::new(-1.0, 0.0));
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn window_corners() {
        let w = Window::square(Complex64::new(1.0, -2.0), 3.0, 11).unwrap();
        assert_eq!(w.pixel_to_point(0, 0), Complex64::new(-2.0, 1.0));
        assert_eq!(w.pixel_to_point(5, 5), Complex64::new(1.0, -2.0));
        assert_eq!(w.point_to_pixel(Complex64::new(1.0, -2.0)).unwrap(), (5, 5));
        assert!(w.point_to_pixel(Complex64::new(10.0, 0.0)).is_err());
    }

    #[test]
    fn polyline_rules() {
        let a = SpherePoint::new(0.0, 0.0);
        assert!(Polyline::new(vec![a], false).is_err());
        assert!(Polyline::new(vec![a, a], false).is_err());
        assert!(Polyline::new(vec![a, SpherePoint::Infinity, a], true).is_err());
        assert!(Polyline::new(vec![a, SpherePoint::Infinity, SpherePoint::new(1.0, 0.0)], true).is_ok());
    }

    #[test]
    fn winding_and_area() {
        let sq = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
        ];
        assert_eq!(winding_number(&sq, Complex64::new(0.5, 0.5)), 1);
        assert_eq!(winding_number(&sq, Complex64::new(1.5, 0.5)), 0);
        assert!((signed_area(&sq) - 1.0).abs() < 1e-15);
        assert!(!polygon_self_intersects(&sq));
        let bow = [sq[0], sq[2], sq[1], sq[3]];
        assert!(polygon_self_intersects(&bow));
    }

    #[test]
    fn sphere_point_json() {
        let v = vec![SpherePoint::new(1.5, -2.0), SpherePoint::Infinity];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[[1.5,-2.0],\"inf\"]");
        let back: Vec<SpherePoint> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
