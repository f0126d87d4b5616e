use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mu_of_stretch, PinchProfile, Side};
use crate::error::{Error, Result};
use crate::lamination::{GoodNeighborhood, GrandOrbit, HalfPlaneGeodesic, KoenigsChart, Lamination};
use crate::lang::EntireMap;
use crate::plane::{point_segment_distance, Window};

/// Where a support cell comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub leaf: u32,
    pub depth: u8,
    pub side: Side,
}

/// t-independent data of a support cell: the depth `k` at which the orbit
/// enters the neighborhood of leaf `leaf` scaled by `a^scale`, the angular
/// coordinate `theta = Im s` and `ds/dz` for `s = log M⁻¹(a^{-scale} ζ(f^k z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub depth: u8,
    pub leaf: u32,
    pub scale: i32,
    pub theta: f64,
    pub ds: Complex64,
}

impl CellGeometry {
    /// Coefficient at the cell point itself, without cell averaging.
    pub fn pointwise_mu(&self, profile: &PinchProfile, delta: f64, t: f64) -> Result<Complex64> {
        let gain = delta / (profile.l_r - profile.l_b);
        let y = (profile.l_r - (self.theta - FRAC_PI_2).abs() / gain).max(profile.l_b);
        let k = profile.mu_of_p(t, y)?;
        Ok(self.ds.conj() / self.ds * k)
    }

    pub fn side(&self) -> Side {
        if self.theta < FRAC_PI_2 {
            Side::Minus
        } else {
            Side::Plus
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldGeometry {
    pub window: Window,
    pub k_max: usize,
    pub delta: f64,
    /// Fraction of the window kept free of support on each side.
    pub margin: f64,
    pub cells: Vec<Option<CellGeometry>>,
    pub leaf_ids: Vec<usize>,
    pub clipped: usize,
}

struct Locator {
    hoods: Vec<GoodNeighborhood>,
    a: f64,
}

impl Locator {
    /// Finds the scaled neighborhood containing `zeta`, returning the leaf
    /// index, scale, `s` and `ds/dζ`.
    fn locate(&self, zeta: Complex64) -> Option<(usize, i32, Complex64, Complex64)> {
        let la = self.a.ln();
        for (i, nb) in self.hoods.iter().enumerate() {
            let reference = match nb.geodesic {
                HalfPlaneGeodesic::Vertical { x0: 0.0 } => None,
                HalfPlaneGeodesic::Vertical { x0 } => Some(x0.abs()),
                HalfPlaneGeodesic::Semicircle { center, radius } => Some(center.abs().max(radius)),
            };
            let js: Vec<i32> = match reference {
                None => vec![0],
                Some(r) => {
                    let j0 = ((zeta.norm() / r).ln() / la).round() as i32;
                    (j0 - 2..=j0 + 2).collect()
                }
            };
            for j in js {
                let sc = self.a.powi(-j);
                let zj = zeta * sc;
                if nb.contains(zj) {
                    let minv = nb.isometry.inverse();
                    let e = minv.apply(zj);
                    let ds = minv.derivative(zj) / e * sc;
                    return Some((i, j, e.ln(), ds));
                }
            }
        }
        None
    }
}

fn geodesics_of(lam: &Lamination) -> (Vec<HalfPlaneGeodesic>, Vec<usize>) {
    lam.leaves.iter().filter(|l| l.depth == 0).filter_map(|l| l.geodesic.map(|g| (g, l.id))).unzip()
}

impl FieldGeometry {
    pub fn compute(
        chart: &KoenigsChart,
        lam: &Lamination,
        window: &Window,
        k_max: usize,
        margin: f64,
    ) -> Result<FieldGeometry> {
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::Invalid("margin must lie in [0, 0.5)".into()));
        }
        let (geos, leaf_ids) = geodesics_of(lam);
        let hoods = geos.iter().map(|&g| GoodNeighborhood::new(g, lam.delta)).collect::<Result<Vec<_>>>()?;
        let loc = Locator { hoods, a: chart.a };
        let inner_w = window.half_width * (1.0 - 2.0 * margin);
        let inner_h = window.half_height * (1.0 - 2.0 * margin);
        let rows: Vec<(Vec<Option<CellGeometry>>, usize)> = (0..window.rows)
            .into_par_iter()
            .map(|r| {
                let mut clipped = 0;
                let row = (0..window.cols)
                    .map(|c| {
                        let z = window.pixel_to_point(c, r);
                        let g = point_geometry(chart, &loc, z, k_max);
                        let d = z - window.center;
                        if g.is_some() && (d.re.abs() > inner_w || d.im.abs() > inner_h) {
                            clipped += 1;
                            return None;
                        }
                        g
                    })
                    .collect();
                (row, clipped)
            })
            .collect();
        let clipped = rows.iter().map(|r| r.1).sum();
        let cells = rows.into_iter().flat_map(|r| r.0).collect();
        Ok(FieldGeometry { window: *window, k_max, delta: lam.delta, margin, cells, leaf_ids, clipped })
    }

    /// Geometry of a single point, without window clipping.
    pub fn at_point(chart: &KoenigsChart, lam: &Lamination, z: Complex64, k_max: usize) -> Result<Option<CellGeometry>> {
        let (geos, _) = geodesics_of(lam);
        let hoods = geos.iter().map(|&g| GoodNeighborhood::new(g, lam.delta)).collect::<Result<Vec<_>>>()?;
        Ok(point_geometry(chart, &Locator { hoods, a: chart.a }, z, k_max))
    }

    pub fn support_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Cell-averaged field at parameter `t`. Each cell averages the capped
    /// stretch `∂_y v_t` over an 8×8 subsample of the cell, with the band
    /// height linearized across the cell.
    pub fn field(&self, profile: &PinchProfile, t: f64) -> Result<BeltramiField> {
        profile.validate()?;
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Invalid(format!("t = {t} outside [0, 1)")));
        }
        let gain = self.delta / (profile.l_r - profile.l_b);
        let (px, py) = (self.window.pitch_x(), self.window.pitch_y());
        let sub = 8;
        let offsets: Vec<Complex64> = (0..sub * sub)
            .map(|k| {
                let (i, j) = (k % sub, k / sub);
                Complex64::new(px * ((i as f64 + 0.5) / sub as f64 - 0.5), py * ((j as f64 + 0.5) / sub as f64 - 0.5))
            })
            .collect();
        let m = profile.m(t);
        let mu: Vec<Complex64> = self
            .cells
            .par_iter()
            .map(|cell| {
                let Some(g) = cell else { return Complex64::new(0.0, 0.0) };
                let mut acc = 0.0;
                for &o in &offsets {
                    let theta = g.theta + (g.ds * o).im;
                    let y = profile.l_r - (theta - FRAC_PI_2).abs() / gain;
                    acc += if y <= m { 1.0 } else { profile.capped_stretch(profile.v_unchecked(t, y).1) };
                }
                let k = mu_of_stretch(acc / offsets.len() as f64).max(-profile.mu_max);
                if k == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    g.ds.conj() / g.ds * k
                }
            })
            .collect();
        let provenance = self
            .cells
            .iter()
            .zip(&mu)
            .map(|(c, m)| {
                c.filter(|_| m.norm() > 0.0).map(|g| Provenance {
                    leaf: self.leaf_ids[g.leaf as usize] as u32,
                    depth: g.depth,
                    side: g.side(),
                })
            })
            .collect();
        Ok(BeltramiField { window: self.window, t, k_max: self.k_max, mu_max: profile.mu_max, mu, provenance })
    }

    /// Compares against the geometry at depth `k_max + 1`: cells of depth at
    /// most `k_max` must agree and the other one may only add cells of the
    /// new depth. Returns whether that holds and the number of added cells.
    pub fn depth_stability(&self, deeper: &FieldGeometry) -> (bool, usize) {
        let mut ok = deeper.k_max == self.k_max + 1 && deeper.cells.len() == self.cells.len();
        let mut added = 0;
        for (a, b) in self.cells.iter().zip(&deeper.cells) {
            match (a, b) {
                (Some(x), Some(y)) => ok &= x == y,
                (None, Some(y)) => {
                    added += 1;
                    ok &= y.depth as usize == deeper.k_max;
                }
                (Some(_), None) => ok = false,
                (None, None) => {}
            }
        }
        (ok, added)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportAudit {
    pub checked: usize,
    pub violations: usize,
}

/// Independent re-check that every support cell is carried by `f^depth`
/// into the domain and into the scaled good neighborhood it was assigned.
pub fn audit_support(geom: &FieldGeometry, chart: &KoenigsChart, lam: &Lamination) -> Result<SupportAudit> {
    let (geos, _) = geodesics_of(lam);
    let w = geom.window;
    let bad: Vec<bool> = geom
        .cells
        .par_iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|g| (i, g)))
        .map(|(i, g)| {
            let mut z = w.pixel_to_point(i % w.cols, i / w.cols);
            for _ in 0..g.depth {
                match chart.f.eval(z) {
                    Ok(v) => z = v,
                    Err(_) => return true,
                }
            }
            let Some((zeta, _)) = chart.zeta(z) else { return true };
            let s = chart.a.powi(g.scale);
            let scaled = match geos[g.leaf as usize] {
                HalfPlaneGeodesic::Vertical { x0 } => HalfPlaneGeodesic::Vertical { x0: x0 * s },
                HalfPlaneGeodesic::Semicircle { center, radius } => {
                    HalfPlaneGeodesic::Semicircle { center: center * s, radius: radius * s }
                }
            };
            match GoodNeighborhood::new(scaled, geom.delta) {
                Ok(nb) => !(nb.contains(zeta) && chart.in_domain(z)),
                Err(_) => true,
            }
        })
        .collect();
    Ok(SupportAudit { checked: bad.len(), violations: bad.iter().filter(|b| **b).count() })
}

fn point_geometry(chart: &KoenigsChart, loc: &Locator, z: Complex64, k_max: usize) -> Option<CellGeometry> {
    let f = &chart.f;
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for k in 0..=k_max {
        if let Some((zeta, dzeta)) = chart.zeta(w) {
            if zeta.im > 0.0 {
                if let Some((leaf, scale, s, ds)) = loc.locate(zeta) {
                    let ds = ds * dzeta * d;
                    if !(ds.norm() > 0.0 && ds.norm().is_finite()) {
                        return None;
                    }
                    if chart.in_domain(w) {
                        return Some(CellGeometry { depth: k as u8, leaf: leaf as u32, scale, theta: s.im, ds });
                    }
                }
            }
        }
        if k == k_max {
            break;
        }
        d *= f.deriv(w).ok()?;
        w = f.eval(w).ok()?;
    }
    None
}

/// A gridded Beltrami coefficient with per-cell provenance.
#[derive(Debug, Clone)]
pub struct BeltramiField {
    pub window: Window,
    pub t: f64,
    pub k_max: usize,
    pub mu_max: f64,
    pub mu: Vec<Complex64>,
    pub provenance: Vec<Option<Provenance>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldReport {
    pub t: f64,
    pub support_cells: usize,
    pub max_abs_mu: f64,
    pub dilatation: f64,
    pub support_by_depth: Vec<usize>,
    pub mu_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub schema: String,
    pub window: Window,
    pub cols: usize,
    pub rows: usize,
    pub t: f64,
    pub k_max: usize,
    pub support_cells: usize,
    pub max_abs_mu: f64,
    pub dilatation: f64,
    pub layout: String,
}

impl BeltramiField {
    pub fn zero(window: Window) -> BeltramiField {
        BeltramiField {
            window,
            t: 0.0,
            k_max: 0,
            mu_max: 0.0,
            mu: vec![Complex64::new(0.0, 0.0); window.len()],
            provenance: vec![None; window.len()],
        }
    }

    /// A field from a function of the point, with no provenance.
    pub fn from_fn(window: Window, g: impl Fn(Complex64) -> Complex64) -> BeltramiField {
        let mut mu = Vec::with_capacity(window.len());
        for r in 0..window.rows {
            for c in 0..window.cols {
                mu.push(g(window.pixel_to_point(c, r)));
            }
        }
        let mu_max = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        BeltramiField { window, t: 0.0, k_max: 0, mu_max, mu, provenance: vec![None; window.len()] }
    }

    pub fn at(&self, col: usize, row: usize) -> Complex64 {
        self.mu[row * self.window.cols + col]
    }

    pub fn max_abs(&self) -> f64 {
        self.mu.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// `ess sup (1 + |μ|)/(1 - |μ|)` over the grid.
    pub fn dilatation(&self) -> f64 {
        let k = self.max_abs();
        (1.0 + k) / (1.0 - k)
    }

    pub fn support_cells(&self) -> usize {
        self.mu.iter().filter(|m| m.norm() > 0.0).count()
    }

    pub fn report(&self) -> FieldReport {
        let mut by_depth = vec![0; self.k_max + 1];
        for p in self.provenance.iter().flatten() {
            if (p.depth as usize) < by_depth.len() {
                by_depth[p.depth as usize] += 1;
            }
        }
        FieldReport {
            t: self.t,
            support_cells: self.support_cells(),
            max_abs_mu: self.max_abs(),
            dilatation: self.dilatation(),
            support_by_depth: by_depth,
            mu_max: self.mu_max,
        }
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader {
            schema: "pinchdyn.field/1".into(),
            window: self.window,
            cols: self.window.cols,
            rows: self.window.rows,
            t: self.t,
            k_max: self.k_max,
            support_cells: self.support_cells(),
            max_abs_mu: self.max_abs(),
            dilatation: self.dilatation(),
            layout: "row-major f64 little-endian (re, im) pairs, row 0 at the top".into(),
        }
    }

    /// Binary grid plus JSON header written next to it.
    pub fn write_dump(&self, bin: &Path, header: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(bin)?);
        for m in &self.mu {
            w.write_all(&m.re.to_le_bytes())?;
            w.write_all(&m.im.to_le_bytes())?;
        }
        w.flush()?;
        std::fs::write(header, serde_json::to_string_pretty(&self.header())?)?;
        Ok(())
    }
}

/// Hard error when a leaf passes within `eps` of a critical point.
pub fn check_singular_clearance(f: &EntireMap, go: &GrandOrbit, eps: f64) -> Result<f64> {
    let crit = f.critical_points_in(&go.window);
    let mut best = f64::INFINITY;
    for l in &go.leaves {
        for &c in &crit {
            let d = if l.vertices.len() == 1 {
                (l.vertices[0] - c).norm()
            } else {
                l.vertices.windows(2).map(|s| point_segment_distance(c, s[0], s[1])).fold(f64::INFINITY, f64::min)
            };
            if d < eps {
                return Err(Error::Hypothesis(format!("leaf {} passes within {d:.3e} of the critical point {c}", l.id)));
            }
            best = best.min(d);
        }
    }
    Ok(best)
}

/// Options of [`assemble_sigma_t`].
#[derive(Debug, Clone, Copy)]
pub struct AssembleOptions {
    pub k_max: usize,
    pub margin: f64,
    pub eps_sing: f64,
    pub allow_infinite_leaves: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { k_max: 4, margin: 0.1, eps_sing: 0.05, allow_infinite_leaves: false }
    }
}

/// Checks the hypotheses on the grand orbit, then assembles the field.
pub fn assemble_sigma_t(
    go: &GrandOrbit,
    lam: &Lamination,
    chart: &KoenigsChart,
    profile: &PinchProfile,
    t: f64,
    window: &Window,
    opts: &AssembleOptions,
) -> Result<(BeltramiField, FieldGeometry)> {
    if !opts.allow_infinite_leaves && go.leaves.iter().any(|l| l.to_infinity) {
        return Err(Error::Hypothesis("the grand orbit contains a leaf ending at ∞".into()));
    }
    check_singular_clearance(&chart.f, go, opts.eps_sing)?;
    let geom = FieldGeometry::compute(chart, lam, window, opts.k_max, opts.margin)?;
    let field = geom.field(profile, t)?;
    Ok((field, geom))
}
