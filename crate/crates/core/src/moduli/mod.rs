//! Conformal moduli and extremal length on grids, and the inequality checks
//! built on them.

mod fem;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use fem::{DirichletGrid, Node};

use crate::error::{invalid, Error, Result};
use crate::plane::{chordal_distance, point_segment_distance, polygon_self_intersects, winding_number, SpherePoint, Window};

pub const CSV_HEADER: &str = "check,params,lhs,rhs,slack,pass";
pub const DEFAULT_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnnulusSpec {
    Round { center: Complex64, r: f64, big_r: f64 },
    Polygonal { outer: Vec<Complex64>, inner: Vec<Complex64> },
}

impl AnnulusSpec {
    pub fn round(center: Complex64, r: f64, big_r: f64) -> Result<AnnulusSpec> {
        let a = AnnulusSpec::Round { center, r, big_r };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AnnulusSpec::Round { r, big_r, .. } => {
                if !(*r > 0.0 && r < big_r && big_r.is_finite()) {
                    return invalid(format!("round annulus needs 0 < r < R, got r={r}, R={big_r}"));
                }
            }
            AnnulusSpec::Polygonal { outer, inner } => {
                if outer.len() < 3 || inner.len() < 3 {
                    return invalid("polygonal annulus needs at least three vertices per boundary");
                }
                if polygon_self_intersects(outer) || polygon_self_intersects(inner) {
                    return invalid("annulus boundary is not simple");
                }
                if inner.iter().any(|&z| winding_number(outer, z) == 0) {
                    return invalid("inner boundary is not inside the outer boundary");
                }
            }
        }
        Ok(())
    }

    /// Sampled boundary polylines (outer, inner).
    pub fn boundaries(&self, samples: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        match self {
            AnnulusSpec::Round { center, r, big_r } => {
                let circle = |rad: f64| -> Vec<Complex64> {
                    (0..samples).map(|k| center + Complex64::from_polar(rad, 2.0 * PI * k as f64 / samples as f64)).collect()
                };
                (circle(*big_r), circle(*r))
            }
            AnnulusSpec::Polygonal { outer, inner } => (outer.clone(), inner.clone()),
        }
    }

    /// True when `z` lies in the bounded complementary component.
    pub fn encloses(&self, z: SpherePoint) -> bool {
        let SpherePoint::Finite(z) = z else { return false };
        match self {
            AnnulusSpec::Round { center, r, .. } => (z - center).norm() < *r,
            AnnulusSpec::Polygonal { inner, .. } => winding_number(inner, z) != 0,
        }
    }

    /// True when `z` lies in the unbounded complementary component.
    pub fn excludes(&self, z: SpherePoint) -> bool {
        let SpherePoint::Finite(z) = z else { return true };
        match self {
            AnnulusSpec::Round { center, big_r, .. } => (z - center).norm() > *big_r,
            AnnulusSpec::Polygonal { outer, .. } => winding_number(outer, z) == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrilateralSpec {
    pub polyline: Vec<Complex64>,
    pub marks: [usize; 4],
}

impl QuadrilateralSpec {
    pub fn rectangle(width: f64, height: f64) -> QuadrilateralSpec {
        // marked so that the first side is a vertical side of length `height`
        QuadrilateralSpec {
            polyline: vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(width, 0.0),
                Complex64::new(width, height),
                Complex64::new(0.0, height),
            ],
            marks: [1, 2, 3, 0],
        }
    }

    /// Same quadrilateral with the marked vertices moved one step along.
    pub fn rotated(&self) -> QuadrilateralSpec {
        let m = self.marks;
        QuadrilateralSpec { polyline: self.polyline.clone(), marks: [m[1], m[2], m[3], m[0]] }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.polyline.len();
        if n < 4 {
            return invalid("quadrilateral needs at least four vertices");
        }
        if self.marks.iter().any(|&m| m >= n) {
            return invalid("marked vertex index out of range");
        }
        let steps: usize = (0..4).map(|k| (self.marks[(k + 1) % 4] + n - self.marks[k]) % n).sum();
        if steps != n || (0..4).any(|k| self.marks[k] == self.marks[(k + 1) % 4]) {
            return invalid("marked vertices are not in cyclic order");
        }
        if polygon_self_intersects(&self.polyline) {
            return invalid("quadrilateral boundary is self-intersecting");
        }
        if crate::plane::signed_area(&self.polyline) <= 0.0 {
            return invalid("quadrilateral is not positively oriented");
        }
        Ok(())
    }

    /// Boundary arc from mark `k` to mark `k+1`.
    fn side(&self, k: usize) -> Vec<Complex64> {
        let n = self.polyline.len();
        let (a, b) = (self.marks[k], self.marks[(k + 1) % 4]);
        let mut out = vec![self.polyline[a]];
        let mut i = a;
        while i != b {
            i = (i + 1) % n;
            out.push(self.polyline[i]);
        }
        out
    }
}

/// Non-negative density on the cells of a window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMetric {
    pub window: Window,
    pub rho: Vec<f64>,
}

impl GridMetric {
    pub fn cell_area(&self) -> f64 {
        self.window.pitch_x() * self.window.pitch_y()
    }

    /// `A(ρ) = Σ ρ² · cell area`.
    pub fn area(&self) -> f64 {
        self.rho.iter().map(|r| r * r).sum::<f64>() * self.cell_area()
    }

    /// ρ-length of a polyline.
    pub fn length(&self, curve: &[Complex64]) -> Result<f64> {
        Ok(cell_lengths(&self.window, curve)?.iter().map(|(k, l)| self.rho[*k] * l).sum())
    }
}

/// Length of a polyline inside each cell it meets, as sorted (cell, length) pairs.
fn cell_lengths(w: &Window, curve: &[Complex64]) -> Result<Vec<(usize, f64)>> {
    let h = 0.25 * w.pitch_x().min(w.pitch_y());
    let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for seg in curve.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = (b - a).norm();
        let pieces = (len / h).ceil().max(1.0) as usize;
        for p in 0..pieces {
            let mid = a + (b - a) * ((p as f64 + 0.5) / pieces as f64);
            let (c, r) = w.point_to_pixel(mid)?;
            *acc.entry(r * w.cols + c).or_insert(0.0) += len / pieces as f64;
        }
    }
    Ok(acc.into_iter().collect())
}

#[derive(Debug, Clone)]
pub enum CurveFamily {
    /// Explicit sampled curves.
    Sampled(Vec<Vec<Complex64>>),
    /// Curves joining the first and third marked sides.
    Joining(QuadrilateralSpec),
    /// Curves joining the two boundary components.
    Connecting(AnnulusSpec),
    /// Closed curves separating the two boundary components.
    Separating(AnnulusSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtremalParams {
    pub resolution: usize,
    pub iterations: usize,
    pub tol: f64,
}

impl Default for ExtremalParams {
    fn default() -> Self {
        ExtremalParams { resolution: 128, iterations: 50, tol: 1e-10 }
    }
}

/// Extremal length of a curve family.
///
/// Sampled families use density ascent over the grid cells: the density is a
/// convex combination of the curves' length densities, updated by
/// Frank–Wolfe steps toward the currently shortest curve, and the best value
/// `min L(ρ)²/A(ρ)` seen is returned (a lower bound for the sampled family).
/// The other families are computed from the Dirichlet energy of the
/// associated potential.
pub fn extremal_length_grid(family: &CurveFamily, window: Option<&Window>, p: &ExtremalParams) -> Result<f64> {
    match family {
        CurveFamily::Sampled(curves) => {
            let w = window.ok_or_else(|| Error::Invalid("sampled families need a metric window".into()))?;
            Ok(density_ascent(curves, w, p.iterations)?.0)
        }
        CurveFamily::Joining(q) => quadrilateral_module(q, p),
        CurveFamily::Connecting(a) => annulus_modulus(a, p),
        CurveFamily::Separating(a) => Ok(1.0 / annulus_modulus(a, p)?),
    }
}

/// Density ascent for a sampled family; returns the bound and its metric.
pub fn density_ascent(curves: &[Vec<Complex64>], w: &Window, iterations: usize) -> Result<(f64, GridMetric)> {
    if curves.is_empty() {
        return invalid("empty curve family");
    }
    let lens: Vec<Vec<(usize, f64)>> = curves.iter().map(|c| cell_lengths(w, c)).collect::<Result<_>>()?;
    if lens.iter().any(|l| l.is_empty()) {
        return invalid("curve family contains a degenerate curve");
    }
    let cell_area = w.pitch_x() * w.pitch_y();
    let n = curves.len() as f64;
    let mut g = vec![0.0; w.len()];
    for l in &lens {
        for &(k, v) in l {
            g[k] += v / n;
        }
    }
    let length = |g: &[f64], l: &[(usize, f64)]| -> f64 { l.iter().map(|&(k, v)| g[k] * v).sum() };
    let mut best = (0.0, g.clone());
    for _ in 0..=iterations {
        let area: f64 = g.iter().map(|v| v * v).sum::<f64>() * cell_area;
        let (j, lmin) = lens
            .iter()
            .enumerate()
            .map(|(i, l)| (i, length(&g, l)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("family is non-empty");
        let value = lmin * lmin / area;
        if value > best.0 {
            best = (value, g.clone());
        }
        // exact line search for min ||g + γ(ℓ_j − g)||² on γ ∈ [0, 1]
        let mut d = g.iter().map(|v| -v).collect::<Vec<f64>>();
        for &(k, v) in &lens[j] {
            d[k] += v;
        }
        let gd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let dd: f64 = d.iter().map(|v| v * v).sum();
        if dd == 0.0 {
            break;
        }
        let gamma = (-gd / dd).clamp(0.0, 1.0);
        if gamma == 0.0 {
            break;
        }
        for (a, b) in g.iter_mut().zip(&d) {
            *a += gamma * b;
        }
    }
    Ok((best.0, GridMetric { window: *w, rho: best.1 }))
}

/// `log(R/r)/(2π)`.
pub fn round_annulus_modulus(a: &AnnulusSpec) -> Result<f64> {
    match a {
        AnnulusSpec::Round { r, big_r, .. } => {
            a.validate()?;
            Ok((big_r / r).ln() / (2.0 * PI))
        }
        AnnulusSpec::Polygonal { .. } => invalid("round_annulus_modulus needs a round annulus"),
    }
}

/// Modulus of a round or polygonal annulus. Round annuli use the closed form;
/// polygonal ones the Dirichlet energy in log-polar coordinates when both
/// boundaries are star-shaped about a common center, otherwise on a
/// Cartesian grid.
pub fn annulus_modulus(a: &AnnulusSpec, p: &ExtremalParams) -> Result<f64> {
    a.validate()?;
    match a {
        AnnulusSpec::Round { .. } => round_annulus_modulus(a),
        AnnulusSpec::Polygonal { outer, inner } => {
            let c = inner.iter().sum::<Complex64>() / inner.len() as f64;
            match (radial_function(inner, c), radial_function(outer, c)) {
                (Some(_), Some(_)) => log_polar_modulus(inner, outer, c, p),
                _ => cartesian_annulus_modulus(inner, outer, p),
            }
        }
    }
}

/// Modulus of an annulus whose boundaries are polylines, computed in
/// log-polar coordinates about `c`.
pub fn log_polar_modulus(inner: &[Complex64], outer: &[Complex64], c: Complex64, p: &ExtremalParams) -> Result<f64> {
    let n_theta = 2 * p.resolution.max(16);
    let (Some(rin), Some(rout)) = (radial_function(inner, c), radial_function(outer, c)) else {
        return invalid("boundary is not star-shaped about the center");
    };
    let dtheta = 2.0 * PI / n_theta as f64;
    let thetas: Vec<f64> = (0..n_theta).map(|j| j as f64 * dtheta).collect();
    let s_in: Vec<f64> = thetas.iter().map(|&t| rin(t).ln()).collect();
    let s_out: Vec<f64> = thetas.iter().map(|&t| rout(t).ln()).collect();
    if s_in.iter().zip(&s_out).any(|(a, b)| a >= b) {
        return invalid("inner boundary meets the outer boundary");
    }
    let s_lo = s_in.iter().copied().fold(f64::INFINITY, f64::min);
    let s_hi = s_out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ns = (((s_hi - s_lo) / dtheta).ceil() as usize + 1).max(3);
    let ds = (s_hi - s_lo) / (ns - 1) as f64;
    let mut grid = DirichletGrid::new(n_theta, ns, dtheta, ds, true);
    for j in 0..ns {
        let s = s_lo + j as f64 * ds;
        for i in 0..n_theta {
            let k = j * n_theta + i;
            if s <= s_in[i] + 1e-12 {
                grid.nodes[k] = Node::Fixed(0.0);
            } else if s >= s_out[i] - 1e-12 {
                grid.nodes[k] = Node::Fixed(1.0);
            }
        }
    }
    let (energy, _) = grid.solve(p.tol)?;
    Ok(1.0 / energy)
}

/// Distance from `c` to a closed polyline along each direction, when the
/// polyline is star-shaped about `c` (argument strictly monotone, one turn).
fn radial_function(poly: &[Complex64], c: Complex64) -> Option<impl Fn(f64) -> f64 + '_> {
    let n = poly.len();
    if poly.iter().any(|&z| (z - c).norm() == 0.0) {
        return None;
    }
    let mut total = 0.0;
    let mut sign = 0.0;
    for i in 0..n {
        let d = ((poly[(i + 1) % n] - c) / (poly[i] - c)).arg();
        if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
            return None;
        }
        sign = d.signum();
        total += d;
    }
    if (total.abs() - 2.0 * PI).abs() > 1e-6 {
        return None;
    }
    Some(move |theta: f64| {
        let dir = Complex64::from_polar(1.0, theta);
        let mut best = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (poly[i] - c, poly[(i + 1) % n] - c);
            // solve t·dir = a + s(b − a), t > 0, s ∈ [0, 1]
            let e = b - a;
            let det = dir.re * (-e.im) - dir.im * (-e.re);
            if det.abs() < 1e-300 {
                continue;
            }
            let t = (a.re * (-e.im) - a.im * (-e.re)) / det;
            let s = (dir.re * a.im - dir.im * a.re) / det;
            if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                best = best.min(t);
            }
        }
        best
    })
}

fn bbox(points: &[Complex64]) -> (Complex64, Complex64) {
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in points {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    (lo, hi)
}

fn distance_to_polyline(z: Complex64, poly: &[Complex64]) -> f64 {
    poly.windows(2).map(|s| point_segment_distance(z, s[0], s[1])).fold(f64::INFINITY, f64::min)
}

/// Square-pitch node grid over a box, with `resolution` cells along the longer side.
/// Node counts and spacings of a grid whose first and last nodes lie on the
/// edges of the box, with cells as close to square as the counts allow.
fn box_grid(lo: Complex64, hi: Complex64, resolution: usize) -> (usize, usize, f64, f64) {
    let (width, height) = ((hi - lo).re, (hi - lo).im);
    let h = width.max(height) / resolution as f64;
    let nx = ((width / h).round() as usize).max(1) + 1;
    let ny = ((height / h).round() as usize).max(1) + 1;
    (nx, ny, width / (nx - 1) as f64, height / (ny - 1) as f64)
}

fn cartesian_annulus_modulus(inner: &[Complex64], outer: &[Complex64], p: &ExtremalParams) -> Result<f64> {
    let (lo, hi) = bbox(outer);
    let pad = (hi - lo).norm() * 0.02;
    let (lo, hi) = (lo - Complex64::new(pad, pad), hi + Complex64::new(pad, pad));
    let (nx, ny, hx, hy) = box_grid(lo, hi, p.resolution);
    let mut grid = DirichletGrid::new(nx, ny, hx, hy, false);
    for j in 0..ny {
        for i in 0..nx {
            let z = Complex64::new(lo.re + i as f64 * hx, hi.im - j as f64 * hy);
            let k = j * nx + i;
            if winding_number(inner, z) != 0 {
                grid.nodes[k] = Node::Fixed(0.0);
            } else if winding_number(outer, z) == 0 {
                grid.nodes[k] = Node::Fixed(1.0);
            }
        }
    }
    let (energy, _) = grid.solve(p.tol)?;
    Ok(1.0 / energy)
}

/// Module of a quadrilateral: extremal length of the curves joining the side
/// from mark 0 to mark 1 with the side from mark 2 to mark 3.
pub fn quadrilateral_module(q: &QuadrilateralSpec, p: &ExtremalParams) -> Result<f64> {
    q.validate()?;
    let (lo, hi) = bbox(&q.polyline);
    let (nx, ny, hx, hy) = box_grid(lo, hi, p.resolution);
    let h = hx.max(hy);
    let (s0, s2) = (q.side(0), q.side(2));
    let mut closed = q.polyline.clone();
    closed.push(q.polyline[0]);
    let on_edge = 1e-9 * h;
    let mut grid = DirichletGrid::new(nx, ny, hx, hy, false);
    for j in 0..ny {
        for i in 0..nx {
            let z = Complex64::new(lo.re + i as f64 * hx, hi.im - j as f64 * hy);
            let k = j * nx + i;
            let inside = winding_number(&q.polyline, z) != 0 || distance_to_polyline(z, &closed) <= on_edge;
            if !inside {
                grid.nodes[k] = Node::Outside;
            } else if distance_to_polyline(z, &s0) <= 0.71 * h {
                grid.nodes[k] = Node::Fixed(0.0);
            } else if distance_to_polyline(z, &s2) <= 0.71 * h {
                grid.nodes[k] = Node::Fixed(1.0);
            }
        }
    }
    let (energy, _) = grid.solve(p.tol)?;
    if energy <= 0.0 {
        return Err(Error::Invalid("marked sides are not connected inside the quadrilateral".into()));
    }
    Ok(1.0 / energy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Row for `lhs ≤ rhs·(1 + slack)`.
    pub fn at_most(check: &str, params: String, lhs: f64, rhs: f64, slack: f64) -> CheckRow {
        CheckRow { check: check.into(), params, lhs, rhs, slack, pass: lhs <= rhs * (1.0 + slack) }
    }

    /// Row for `|lhs − rhs| ≤ slack·|rhs|`.
    pub fn close(check: &str, params: String, lhs: f64, rhs: f64, slack: f64) -> CheckRow {
        CheckRow { check: check.into(), params, lhs, rhs, slack, pass: (lhs - rhs).abs() <= slack * rhs.abs() }
    }

    pub fn csv_line(&self) -> String {
        format!("{},\"{}\",{:.12e},{:.12e},{},{}", self.check, self.params.replace('"', "'"), self.lhs, self.rhs, self.slack, self.pass)
    }
}

pub fn write_csv(rows: &[CheckRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Checks `mod(B) ≤ π²/(2α²)` for a ring separating `{a1, b1}` from
/// `{a2, b2}`, with α the smaller chordal distance within the pairs.
pub fn separation_bound_check(
    b: &AnnulusSpec,
    pair1: (SpherePoint, SpherePoint),
    pair2: (SpherePoint, SpherePoint),
    p: &ExtremalParams,
    slack: f64,
) -> Result<CheckRow> {
    let inside = |z| b.encloses(z);
    let outside = |z| b.excludes(z);
    let separates = (inside(pair1.0) && inside(pair1.1) && outside(pair2.0) && outside(pair2.1))
        || (outside(pair1.0) && outside(pair1.1) && inside(pair2.0) && inside(pair2.1));
    if !separates {
        return Err(Error::Hypothesis("the ring does not separate the two pairs".into()));
    }
    let alpha = chordal_distance(pair1.0, pair1.1).min(chordal_distance(pair2.0, pair2.1));
    if alpha <= 0.0 {
        return Err(Error::Hypothesis("a pair has coincident points".into()));
    }
    let m = annulus_modulus(b, p)?;
    let params = format!("mod={m:.6};alpha={alpha:.6}");
    Ok(CheckRow::at_most("separation-bound", params, m, PI * PI / (2.0 * alpha * alpha), slack))
}

/// Checks `Σ mod(parts) ≤ mod(A)` for disjoint nested sub-annuli that each
/// separate the boundary components of `A`.
pub fn superadditivity_check(a: &AnnulusSpec, parts: &[AnnulusSpec], p: &ExtremalParams, slack: f64) -> Result<CheckRow> {
    if parts.is_empty() {
        return invalid("no parts given");
    }
    for part in parts {
        part.validate()?;
        if !separating_subannulus(a, part) {
            return Err(Error::Hypothesis("a part is not a separating sub-annulus".into()));
        }
    }
    for (i, x) in parts.iter().enumerate() {
        for y in &parts[i + 1..] {
            if !nested_disjoint(x, y) && !nested_disjoint(y, x) {
                return Err(Error::Hypothesis("parts overlap".into()));
            }
        }
    }
    let total = annulus_modulus(a, p)?;
    let sum = parts.iter().map(|q| annulus_modulus(q, p)).sum::<Result<f64>>()?;
    let params = format!("parts={}", parts.len());
    Ok(CheckRow::at_most("superadditivity", params, sum, total, slack))
}

/// True when `part` lies in the closure of `a` and its bounded complementary
/// component contains that of `a`.
fn separating_subannulus(a: &AnnulusSpec, part: &AnnulusSpec) -> bool {
    let tol = 1e-12;
    match (a, part) {
        (AnnulusSpec::Round { center: c, r, big_r }, AnnulusSpec::Round { center: c2, r: r2, big_r: big_r2 }) => {
            let d = (c - c2).norm();
            d + big_r2 <= big_r * (1.0 + tol) && d + r <= r2 * (1.0 + tol)
        }
        _ => {
            let (outer, inner) = part.boundaries(256);
            let (_, a_inner) = a.boundaries(256);
            outer.iter().chain(&inner).all(|&z| !a.encloses(z.into()) && !a.excludes(z.into()))
                && a_inner.iter().all(|&z| part.encloses(z.into()))
        }
    }
}

/// True when `x` lies in the closure of the bounded complementary component of `y`.
fn nested_disjoint(x: &AnnulusSpec, y: &AnnulusSpec) -> bool {
    match (x, y) {
        (AnnulusSpec::Round { center: c1, big_r, .. }, AnnulusSpec::Round { center: c2, r, .. }) => {
            (c1 - c2).norm() + big_r <= r * (1.0 + 1e-12)
        }
        _ => {
            let (outer, _) = x.boundaries(256);
            outer.iter().all(|&z| y.encloses(z.into()))
        }
    }
}

/// Checks `|z − w| > |w|·exp(−2π/Λ)` given an extremal-length estimate Λ for
/// the curves separating `{0, ∞}` from `{z, w}`.
pub fn distance_modulus_bound(z: Complex64, w: Complex64, lambda: f64) -> Result<CheckRow> {
    if (z - w).norm() >= w.norm() {
        return Err(Error::Hypothesis(format!("|z − w| = {} is not below |w| = {}", (z - w).norm(), w.norm())));
    }
    if !(lambda > 0.0) {
        return invalid("extremal length estimate must be positive");
    }
    let rhs = w.norm() * (-2.0 * PI / lambda).exp();
    let lhs = (z - w).norm();
    let params = format!("z={z};w={w};lambda={lambda:.6}");
    Ok(CheckRow { check: "distance-modulus".into(), params, lhs, rhs, slack: 0.0, pass: lhs > rhs })
}

/// Extremal length of the curves separating the segment `[z, w]` from the
/// ray from 0 away from `w`, as the Dirichlet energy of the condenser they
/// bound, on a grid of half-width `4|w|` about 0.
pub fn separating_extremal_length(z: Complex64, w: Complex64, p: &ExtremalParams) -> Result<f64> {
    if w.norm() == 0.0 || z == w {
        return invalid("degenerate configuration");
    }
    let half = 4.0 * w.norm().max(z.norm());
    let n = 2 * p.resolution;
    let h = 2.0 * half / n as f64;
    let dir = -w / w.norm();
    let ray = [Complex64::new(0.0, 0.0), dir * (2.0 * half)];
    let seg = [z, w];
    let mut grid = DirichletGrid::new(n + 1, n + 1, h, h, false);
    for j in 0..=n {
        for i in 0..=n {
            let u = Complex64::new(-half + i as f64 * h, half - j as f64 * h);
            let k = j * (n + 1) + i;
            if point_segment_distance(u, seg[0], seg[1]) <= 0.5 * h {
                grid.nodes[k] = Node::Fixed(0.0);
            } else if point_segment_distance(u, ray[0], ray[1]) <= 0.5 * h {
                grid.nodes[k] = Node::Fixed(1.0);
            }
        }
    }
    Ok(grid.solve(p.tol)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquicontinuityReport {
    pub moduli: Vec<f64>,
    pub bound: f64,
    pub pass: bool,
}

/// Moduli of the images of round annuli under `h`, and whether all reach `bound`.
/// A degenerate image (self-intersecting boundary, or a failed evaluation)
/// counts as modulus 0.
pub fn equicontinuity_probe(
    h: impl Fn(Complex64) -> Result<Complex64>,
    annuli: &[AnnulusSpec],
    bound: f64,
    samples: usize,
    p: &ExtremalParams,
) -> Result<EquicontinuityReport> {
    for (i, a) in annuli.iter().enumerate() {
        a.validate()?;
        if i > 0 && !nested_disjoint(a, &annuli[i - 1]) {
            return Err(Error::Hypothesis("annuli are not nested".into()));
        }
    }
    let mut moduli = Vec::with_capacity(annuli.len());
    for a in annuli {
        let (outer, inner) = a.boundaries(samples);
        let map = |v: &[Complex64]| v.iter().map(|&z| h(z)).collect::<Result<Vec<_>>>();
        let m = match (map(&outer), map(&inner)) {
            (Ok(o), Ok(i)) if !polygon_self_intersects(&o) && !polygon_self_intersects(&i) => {
                let image = AnnulusSpec::Polygonal { outer: o, inner: i };
                annulus_modulus(&image, p).unwrap_or(0.0)
            }
            _ => 0.0,
        };
        moduli.push(m);
    }
    let pass = moduli.iter().all(|&m| m >= bound);
    Ok(EquicontinuityReport { moduli, bound, pass })
}

/// Two points of the sphere.
pub type PointPair = (SpherePoint, SpherePoint);

/// Random round-annulus configurations for the separation bound.
pub fn random_separation_configs(seed: u64, count: usize) -> Vec<(AnnulusSpec, PointPair, PointPair)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let c = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let r = rng.gen_range(0.05..2.0);
            let big_r = r * rng.gen_range(1.01f64..50.0);
            let inside = |rng: &mut ChaCha8Rng| -> SpherePoint {
                (c + Complex64::from_polar(r * rng.gen_range(0.0..0.99), rng.gen_range(0.0..2.0 * PI))).into()
            };
            let a1 = inside(&mut rng);
            let b1 = inside(&mut rng);
            let a2: SpherePoint = (c + Complex64::from_polar(big_r * rng.gen_range(1.01..5.0), rng.gen_range(0.0..2.0 * PI))).into();
            let b2 = if rng.gen_bool(0.5) {
                SpherePoint::Infinity
            } else {
                (c + Complex64::from_polar(big_r * rng.gen_range(1.01..5.0), rng.gen_range(0.0..2.0 * PI))).into()
            };
            (AnnulusSpec::Round { center: c, r, big_r }, (a1, b1), (a2, b2))
        })
        .collect()
}

/// Radial segments of a round annulus, `count` of them.
pub fn radial_family(center: Complex64, r: f64, big_r: f64, count: usize) -> Vec<Vec<Complex64>> {
    (0..count)
        .map(|k| {
            let d = Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / count as f64);
            vec![center + d * r, center + d * big_r]
        })
        .collect()
}

/// The module self-test suite: calibrations and randomized audits.
pub fn selftest(seed: u64, p: &ExtremalParams) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let o = Complex64::new(0.0, 0.0);
    let e = std::f64::consts::E;

    let round = AnnulusSpec::round(o, 1.0, e)?;
    rows.push(CheckRow::close("annulus-closed-form", "r=1;R=e".into(), round_annulus_modulus(&round)?, 1.0 / (2.0 * PI), 1e-12));
    let (outer, inner) = round.boundaries(512);
    let poly = AnnulusSpec::Polygonal { outer, inner };
    rows.push(CheckRow::close("annulus-grid", "r=1;R=e;polygon=512".into(), annulus_modulus(&poly, p)?, 1.0 / (2.0 * PI), 0.02));

    for (wd, ht, target) in [(2.0, 1.0, 2.0), (1.0, 1.0, 1.0), (3.0, 1.0, 3.0)] {
        let q = QuadrilateralSpec::rectangle(wd, ht);
        rows.push(CheckRow::close("rectangle-module", format!("{wd}x{ht}"), quadrilateral_module(&q, p)?, target, DEFAULT_SLACK));
    }
    let q = QuadrilateralSpec::rectangle(2.0, 1.0);
    let m = quadrilateral_module(&q, p)?;
    let m_rot = quadrilateral_module(&q.rotated(), p)?;
    rows.push(CheckRow::close("rectangle-duality", "2x1 rotated marks".into(), m * m_rot, 1.0, 0.10));

    let window = Window::new(Complex64::new(1.0, 0.5), 1.0, 0.5, 2 * p.resolution + 1, p.resolution + 1)?;
    let lines: Vec<Vec<Complex64>> = (0..p.resolution)
        .map(|k| {
            let y = (k as f64 + 0.5) / p.resolution as f64;
            vec![Complex64::new(0.0, y), Complex64::new(2.0, y)]
        })
        .collect();
    let lam = extremal_length_grid(&CurveFamily::Sampled(lines), Some(&window), p)?;
    rows.push(CheckRow::close("extremal-length-sampled", "2x1 horizontal".into(), lam, 2.0, DEFAULT_SLACK));

    let aw = Window::square(o, e, 2 * p.resolution + 1)?;
    let rays = radial_family(o, 1.0, e, 8 * p.resolution);
    let lam = extremal_length_grid(&CurveFamily::Sampled(rays), Some(&aw), p)?;
    rows.push(CheckRow::close("extremal-length-radial", "r=1;R=e".into(), lam, 1.0 / (2.0 * PI), DEFAULT_SLACK));
    let sep = extremal_length_grid(&CurveFamily::Separating(round.clone()), None, p)?;
    rows.push(CheckRow::close("extremal-length-duality", "r=1;R=e".into(), lam * sep, 1.0, DEFAULT_SLACK));

    let whole = AnnulusSpec::round(o, 1.0, 4.0)?;
    let halves = [AnnulusSpec::round(o, 1.0, 2.0)?, AnnulusSpec::round(o, 2.0, 4.0)?];
    let split = superadditivity_check(&whole, &halves, p, 0.0)?;
    rows.push(CheckRow::close("superadditivity-split", "1<|z|<4 at 2".into(), split.lhs, split.rhs, 1e-10));
    rows.push(superadditivity_check(&whole, std::slice::from_ref(&whole), p, 0.0)?);
    let ten = AnnulusSpec::round(o, 1.0, 10.0)?;
    let three = [AnnulusSpec::round(o, 1.0, 2.0)?, AnnulusSpec::round(o, 2.5, 4.0)?, AnnulusSpec::round(o, 5.0, 9.0)?];
    rows.push(superadditivity_check(&ten, &three, p, 0.0)?);

    let b = AnnulusSpec::round(o, 1.0, 2.0)?;
    rows.push(separation_bound_check(
        &b,
        (Complex64::new(0.0, 0.0).into(), Complex64::new(0.5, 0.0).into()),
        (Complex64::new(3.0, 0.0).into(), SpherePoint::Infinity),
        p,
        DEFAULT_SLACK,
    )?);
    let mut violations = 0;
    for (k, (ring, p1, p2)) in random_separation_configs(seed, 200).into_iter().enumerate() {
        let mut row = separation_bound_check(&ring, p1, p2, p, DEFAULT_SLACK)?;
        row.check = "separation-bound-random".into();
        row.params = format!("k={k};{}", row.params);
        if !row.pass {
            violations += 1;
        }
        rows.push(row);
    }
    rows.push(CheckRow { check: "separation-bound-violations".into(), params: format!("seed={seed};n=200"), lhs: violations as f64, rhs: 0.0, slack: 0.0, pass: violations == 0 });

    let (z, w) = (Complex64::new(1.0, 0.0), Complex64::new(1.1, 0.0));
    let lam = separating_extremal_length(z, w, p)?;
    rows.push(distance_modulus_bound(z, w, lam)?);

    let nested: Vec<AnnulusSpec> = (0..3).map(|k| AnnulusSpec::round(o, (-2.0 * PI * (k + 1) as f64).exp(), (-2.0 * PI * k as f64).exp())).collect::<Result<_>>()?;
    let id = equicontinuity_probe(Ok, &nested, 0.9, 256, p)?;
    rows.push(CheckRow { check: "equicontinuity-identity".into(), params: format!("moduli={:?}", id.moduli), lhs: min_of(&id.moduli), rhs: 0.9, slack: 0.0, pass: id.pass });
    let dbl = equicontinuity_probe(|z| Ok(2.0 * z), &nested, 0.9, 256, p)?;
    rows.push(CheckRow { check: "equicontinuity-scaling".into(), params: format!("moduli={:?}", dbl.moduli), lhs: min_of(&dbl.moduli), rhs: 0.9, slack: 0.0, pass: dbl.pass });
    Ok(rows)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}
