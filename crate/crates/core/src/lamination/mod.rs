//! Half-plane geometry, linearizing charts of hyperbolic Baker domains, and
//! Baker laminations with their grand orbits.

mod halfplane;
mod koenigs;

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use halfplane::{
    geodesic_between, geodesic_separation, hyperbolic_distance, isometry_to, GoodNeighborhood, HalfPlaneGeodesic,
    Isometry,
};
pub use koenigs::{build_koenigs, build_koenigs_towards, chart_probes, validate_chart, ChartSummary, KoenigsChart};

use crate::dynamics::{newton, Verdict};
use crate::error::{Error, Result};
use crate::lang::EntireMap;
use crate::plane::{point_segment_distance, spherical_diameter, SpherePoint, Window};

pub const SCHEMA: &str = "pinchdyn.lamination/1";

/// Leaf endpoints, given either by boundary parameters `ζ` of the domain
/// (`v = None` means ∞) or by points of the domain boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Anchor {
    Zeta { u: f64, v: Option<f64> },
    Boundary { a: SpherePoint, b: SpherePoint },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaminationParams {
    /// Thickness of the good neighborhoods.
    pub delta: f64,
    /// Vertices per depth-0 leaf.
    pub samples: usize,
    /// Relative distance at which leaf sampling stops short of an endpoint.
    pub end_gap: f64,
    pub min_gap: f64,
    pub continuity_tol: f64,
    pub merge_tol: f64,
    /// Seed grid side used to find preimages of a vertex.
    pub seed_grid: usize,
    /// Vertices of each parent leaf from which preimage branches are started.
    pub branch_starts: usize,
}

impl Default for LaminationParams {
    fn default() -> Self {
        LaminationParams {
            delta: std::f64::consts::FRAC_PI_6,
            samples: 256,
            end_gap: 1e-4,
            min_gap: 1e-3,
            continuity_tol: 1.0,
            merge_tol: 1e-4,
            seed_grid: 16,
            branch_starts: 5,
        }
    }
}

/// A leaf polyline with its endpoints and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub id: usize,
    pub depth: usize,
    pub parent: Option<usize>,
    /// Id of the depth-0 leaf this one descends from.
    pub root: usize,
    pub vertices: Vec<Complex64>,
    /// For each vertex, the index of the parent vertex it maps to.
    pub parent_index: Vec<usize>,
    pub endpoints: [SpherePoint; 2],
    /// Whether the polyline stops short of the corresponding endpoint.
    pub truncated: [bool; 2],
    /// Set when one endpoint is ∞.
    pub to_infinity: bool,
    /// Half-plane geodesic of a depth-0 leaf, in the boundary parameter.
    pub geodesic: Option<HalfPlaneGeodesic>,
    pub max_residual: f64,
}

impl Leaf {
    /// Spherical diameter of the leaf closure.
    pub fn diameter(&self) -> f64 {
        let mut pts: Vec<SpherePoint> = self.vertices.iter().map(|&z| z.into()).collect();
        for (e, t) in self.endpoints.iter().zip(self.truncated) {
            if !t || e.is_infinite() {
                pts.push(*e);
            }
        }
        spherical_diameter(&pts).unwrap_or(0.0)
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |b, z| {
            (b.0.min(z.re), b.1.max(z.re), b.2.min(z.im), b.3.max(z.im))
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lamination {
    pub schema: String,
    pub map: String,
    pub delta: f64,
    pub chart: Option<ChartRecord>,
    pub leaves: Vec<Leaf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartRecord {
    pub p_star: Complex64,
    pub a: f64,
    pub n_k: usize,
    pub deep: Complex64,
}

impl From<&KoenigsChart> for ChartRecord {
    fn from(c: &KoenigsChart) -> Self {
        ChartRecord { p_star: c.p_star, a: c.a, n_k: c.n_k, deep: c.deep }
    }
}

fn lam_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Lamination(msg.into()))
}

fn boundary_parameter(chart: &KoenigsChart, p: SpherePoint) -> Result<Option<f64>> {
    match p {
        SpherePoint::Infinity => Ok(None),
        SpherePoint::Finite(z) => {
            let Some((zeta, _)) = chart.zeta(z) else {
                return lam_err(format!("anchor {z} is not on the domain boundary (chart overflows)"));
            };
            if zeta.im.abs() > 1e-6 * (1.0 + zeta.norm()) {
                return lam_err(format!("anchor {z} is not on the domain boundary (Im ζ = {:.3e})", zeta.im));
            }
            Ok(Some(zeta.re))
        }
    }
}

fn sphere_of(u: Option<f64>) -> SpherePoint {
    match u {
        Some(x) => SpherePoint::new(x, 0.0),
        None => SpherePoint::Infinity,
    }
}

/// Samples `Ψ(M(i e^s))` along a half-plane geodesic.
fn sample_leaf(
    chart: &KoenigsChart,
    g: &HalfPlaneGeodesic,
    window: &Window,
    p: &LaminationParams,
) -> Result<(Vec<Complex64>, [bool; 2])> {
    let m = isometry_to(g);
    let n = p.samples.max(8);
    let (s_lo, s_hi, open_top) = match *g {
        HalfPlaneGeodesic::Semicircle { .. } => {
            let s = (2.0 / p.end_gap).ln();
            (-s, s, false)
        }
        HalfPlaneGeodesic::Vertical { x0 } => {
            let scale = 1.0 + x0.abs();
            ((p.end_gap * scale).ln(), (4.0 * (window.half_width + window.half_height) + 40.0).ln(), true)
        }
    };
    let mut out = Vec::with_capacity(n);
    let mut cut_top = false;
    for k in 0..n {
        let s = s_lo + (s_hi - s_lo) * k as f64 / (n - 1) as f64;
        let zeta = m.apply(Complex64::new(0.0, s.exp()));
        let z = chart.psi(zeta)?;
        if open_top && !window.contains(z) && !out.is_empty() {
            cut_top = true;
            break;
        }
        out.push(z);
    }
    Ok((out, [false, cut_top || open_top]))
}

/// Depth-0 leaves from anchors: chart images of the half-plane geodesics
/// joining the anchor parameters.
pub fn build_fundamental_lamination(
    f: &EntireMap,
    chart: &KoenigsChart,
    anchors: &[Anchor],
    window: &Window,
    p: &LaminationParams,
) -> Result<Lamination> {
    if !(p.delta > 0.0 && p.delta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Invalid("thickness must lie in (0, π/2)".into()));
    }
    let mut leaves = Vec::new();
    for (id, anchor) in anchors.iter().enumerate() {
        let (u, v, given) = match *anchor {
            Anchor::Zeta { u, v } => (Some(u), v, None),
            Anchor::Boundary { a, b } => (boundary_parameter(chart, a)?, boundary_parameter(chart, b)?, Some([a, b])),
        };
        let (u, v, given) = match (u, v) {
            (None, Some(_)) => (v, None, given.map(|g| [g[1], g[0]])),
            (None, None) => return lam_err("both anchor endpoints are ∞"),
            (Some(x), Some(y)) if x > y => (v, u, given.map(|g| [g[1], g[0]])),
            _ => (u, v, given),
        };
        let g = geodesic_between(sphere_of(u), sphere_of(v)).map_err(|e| Error::Lamination(e.to_string()))?;
        let (vertices, truncated) = sample_leaf(chart, &g, window, p)?;
        let (ea, eb) = g.endpoints();
        let end_point = |e: SpherePoint| -> Result<SpherePoint> {
            match e {
                SpherePoint::Infinity => Ok(SpherePoint::Infinity),
                SpherePoint::Finite(x) => {
                    let eps = 1e-7 * (1.0 + x.norm());
                    Ok(SpherePoint::Finite(chart.psi(x + Complex64::new(0.0, eps))?))
                }
            }
        };
        let endpoints = match given {
            Some(e) => e,
            None => [end_point(ea)?, end_point(eb)?],
        };
        let to_infinity = endpoints.iter().any(|e| e.is_infinite());
        leaves.push(Leaf {
            id,
            depth: 0,
            parent: None,
            root: id,
            parent_index: (0..vertices.len()).collect(),
            vertices,
            endpoints,
            truncated,
            to_infinity,
            geodesic: Some(g),
            max_residual: 0.0,
        });
    }
    check_neighborhoods_disjoint(&leaves, chart.a, p.delta)?;
    for i in 0..leaves.len() {
        for j in i + 1..leaves.len() {
            let d = leaf_distance(&leaves[i], &leaves[j], f64::INFINITY);
            if d < p.min_gap {
                return lam_err(format!("leaves {i} and {j} meet at sample resolution (distance {d:.2e})"));
            }
        }
    }
    Ok(Lamination { schema: SCHEMA.into(), map: f.name.clone(), delta: p.delta, chart: Some(chart.into()), leaves })
}

/// Hyperbolic half-width of a good neighborhood of thickness `delta`.
pub fn neighborhood_radius(delta: f64) -> f64 {
    (1.0 / delta.cos()).acosh()
}

fn scaled(g: &HalfPlaneGeodesic, s: f64) -> HalfPlaneGeodesic {
    match *g {
        HalfPlaneGeodesic::Vertical { x0 } => HalfPlaneGeodesic::Vertical { x0: x0 * s },
        HalfPlaneGeodesic::Semicircle { center, radius } => {
            HalfPlaneGeodesic::Semicircle { center: center * s, radius: radius * s }
        }
    }
}

/// The good neighborhoods of the leaves and of all their images under
/// `ζ ↦ a^k ζ` must be pairwise disjoint.
fn check_neighborhoods_disjoint(leaves: &[Leaf], a: f64, delta: f64) -> Result<()> {
    let need = 2.0 * neighborhood_radius(delta);
    let gs: Vec<HalfPlaneGeodesic> = leaves.iter().filter_map(|l| l.geodesic).collect();
    for (i, g) in gs.iter().enumerate() {
        for (j, h) in gs.iter().enumerate() {
            for k in -40i32..=40 {
                if i == j && k == 0 {
                    continue;
                }
                let hk = scaled(h, a.powi(k));
                if i == j && hk == *g {
                    continue;
                }
                if i != j && k == 0 && j < i {
                    continue;
                }
                let d = geodesic_separation(g, &hk);
                if d <= need {
                    return lam_err(format!(
                        "good neighborhoods of leaves {i} and {j} (scale {a}^{k}) overlap: separation {d:.3} ≤ {need:.3}"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Smallest vertex-to-segment distance between two leaves, with early exit
/// once it cannot beat `bound`.
fn leaf_distance(a: &Leaf, b: &Leaf, bound: f64) -> f64 {
    let (ba, bb) = (a.bbox(), b.bbox());
    let gap_x = (bb.0 - ba.1).max(ba.0 - bb.1).max(0.0);
    let gap_y = (bb.2 - ba.3).max(ba.2 - bb.3).max(0.0);
    if gap_x.hypot(gap_y) >= bound {
        return gap_x.hypot(gap_y);
    }
    let one_way = |p: &Leaf, q: &Leaf| -> f64 {
        let mut best = f64::INFINITY;
        for &z in &p.vertices {
            if q.vertices.len() == 1 {
                best = best.min((z - q.vertices[0]).norm());
            }
            for s in q.vertices.windows(2) {
                best = best.min(point_segment_distance(z, s[0], s[1]));
            }
        }
        best
    };
    one_way(a, b).min(one_way(b, a))
}

fn covered_by(v: &[Complex64], leaf: &Leaf) -> bool {
    let mut poly = Vec::with_capacity(leaf.vertices.len() + 2);
    if let (SpherePoint::Finite(e), false) = (leaf.endpoints[0], leaf.truncated[0]) {
        poly.push(e);
    }
    poly.extend_from_slice(&leaf.vertices);
    if let (SpherePoint::Finite(e), false) = (leaf.endpoints[1], leaf.truncated[1]) {
        poly.push(e);
    }
    let tol = |z: Complex64| 1e-6 * (1.0 + z.norm());
    v.iter().all(|&z| {
        poly.windows(2).any(|s| point_segment_distance(z, s[0], s[1]) < tol(z)) || poly.iter().any(|&w| (w - z).norm() < tol(z))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrandOrbit {
    pub schema: String,
    pub map: String,
    pub delta: f64,
    pub chart: Option<ChartRecord>,
    pub window: Window,
    pub k_max: usize,
    pub leaves: Vec<Leaf>,
    /// Leaves dropped per depth because branch tracking lost continuity.
    pub dropped: Vec<usize>,
    /// Largest leaf diameter per depth.
    pub max_diameter: Vec<f64>,
}

impl GrandOrbit {
    pub fn at_depth(&self, k: usize) -> impl Iterator<Item = &Leaf> {
        self.leaves.iter().filter(move |l| l.depth == k)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<GrandOrbit> {
        let g: GrandOrbit = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if g.schema != SCHEMA {
            return Err(Error::Config(format!("unsupported lamination schema `{}`", g.schema)));
        }
        Ok(g)
    }
}

struct Traced {
    vertices: Vec<Complex64>,
    parent_index: Vec<usize>,
    truncated: [bool; 2],
    residual: f64,
}

fn preimage_step(f: &EntireMap, target: Complex64, from: Complex64, prev_target: Complex64) -> Option<Complex64> {
    let d = f.deriv(from).ok()?;
    if d.norm() == 0.0 {
        return None;
    }
    let pred = from + (target - prev_target) / d;
    let g = |w: Complex64| -> Option<(Complex64, Complex64)> { Some((f.eval(w).ok()? - target, f.deriv(w).ok()?)) };
    newton(g, pred, 60)
}

/// Follows one inverse branch along the parent polyline from vertex `s`.
fn trace_branch(
    f: &EntireMap,
    parent: &[Complex64],
    s: usize,
    q: Complex64,
    window: &Window,
    tol: f64,
) -> Option<Traced> {
    let mut fwd = vec![(q, s)];
    let mut cut = [false, false];
    for (dir, range) in [(1usize, (s + 1..parent.len()).collect::<Vec<_>>()), (0, (0..s).rev().collect())] {
        let mut cur = q;
        let mut prev_idx = s;
        let mut acc = Vec::new();
        for i in range {
            let next = preimage_step(f, parent[i], cur, parent[prev_idx])?;
            if (next - cur).norm() > tol {
                return None;
            }
            if !window.contains(next) {
                cut[dir] = true;
                break;
            }
            acc.push((next, i));
            cur = next;
            prev_idx = i;
        }
        if dir == 1 {
            fwd.extend(acc);
        } else {
            acc.reverse();
            acc.extend(fwd);
            fwd = acc;
        }
    }
    let residual = fwd
        .iter()
        .map(|&(w, i)| f.eval(w).map(|v| (v - parent[i]).norm()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    Some(Traced {
        vertices: fwd.iter().map(|p| p.0).collect(),
        parent_index: fwd.iter().map(|p| p.1).collect(),
        truncated: cut,
        residual,
    })
}

fn seed_grid(window: &Window, n: usize) -> Vec<Complex64> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(
                window.center
                    + Complex64::new(
                        window.half_width * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0),
                        window.half_height * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0),
                    ),
            );
        }
    }
    out
}

/// All inverse branches of a leaf that meet the window.
fn pull_back(f: &EntireMap, parent: &Leaf, window: &Window, p: &LaminationParams) -> (Vec<Traced>, usize) {
    let verts = &parent.vertices;
    let mut out: Vec<Traced> = Vec::new();
    let mut dropped = 0;
    if verts.len() < 2 {
        return (out, 0);
    }
    let seeds = seed_grid(window, p.seed_grid);
    let starts = p.branch_starts.max(1);
    for k in 0..starts {
        let s = ((k as f64 + 0.5) / starts as f64 * verts.len() as f64) as usize;
        let s = s.min(verts.len() - 1);
        let target = verts[s];
        let pre = crate::dynamics::inverse_images(f, target, &seeds, 1e-9 * (1.0 + target.norm()));
        for q in pre {
            if !window.contains(q) {
                continue;
            }
            let known = out.iter().any(|t| {
                t.parent_index.iter().zip(&t.vertices).any(|(&i, &w)| i == s && (w - q).norm() < 1e-6 * (1.0 + q.norm()))
            });
            if known {
                continue;
            }
            match trace_branch(f, verts, s, q, window, p.continuity_tol) {
                Some(t) if t.vertices.len() >= 2 => out.push(t),
                Some(_) => {}
                None => dropped += 1,
            }
        }
    }
    (out, dropped)
}

/// Pulls the lamination back `k_max` times inside the window.
pub fn grand_orbit_expand(
    f: &EntireMap,
    lam: &Lamination,
    k_max: usize,
    window: &Window,
    p: &LaminationParams,
) -> GrandOrbit {
    let mut leaves: Vec<Leaf> = lam.leaves.clone();
    let mut dropped = vec![0];
    let mut frontier: Vec<usize> = (0..leaves.len()).collect();
    for depth in 1..=k_max {
        let results: Vec<(Vec<Traced>, usize)> =
            frontier.par_iter().map(|&i| pull_back(f, &leaves[i], window, p)).collect();
        let mut next = Vec::new();
        let mut lost = 0;
        for (&pi, (traced, d)) in frontier.iter().zip(results) {
            lost += d;
            for t in traced {
                if leaves.iter().any(|l| covered_by(&t.vertices, l)) {
                    continue;
                }
                let parent = &leaves[pi];
                let n = t.vertices.len();
                let mut endpoints = [SpherePoint::Finite(t.vertices[0]), SpherePoint::Finite(t.vertices[n - 1])];
                let mut truncated = t.truncated;
                let ends = [(0usize, t.parent_index[0], 0usize), (1, t.parent_index[n - 1], parent.vertices.len() - 1)];
                for (e, reached, last) in ends {
                    if parent.endpoints[e].is_infinite() {
                        endpoints[e] = SpherePoint::Infinity;
                        truncated[e] = true;
                    } else if reached == last && !truncated[e] && !parent.truncated[e] {
                        let from = if e == 0 { t.vertices[0] } else { t.vertices[n - 1] };
                        let target = parent.endpoints[e].finite().unwrap_or_default();
                        match preimage_step(f, target, from, parent.vertices[last]) {
                            Some(w) if (w - from).norm() <= p.continuity_tol => endpoints[e] = SpherePoint::Finite(w),
                            _ => truncated[e] = true,
                        }
                    } else {
                        truncated[e] = true;
                    }
                }
                let id = leaves.len() + next.len();
                next.push(Leaf {
                    id,
                    depth,
                    parent: Some(pi),
                    root: parent.root,
                    vertices: t.vertices,
                    parent_index: t.parent_index,
                    endpoints,
                    truncated,
                    to_infinity: endpoints.iter().any(|e| e.is_infinite()),
                    geodesic: None,
                    max_residual: t.residual,
                });
            }
        }
        dropped.push(lost);
        frontier = (leaves.len()..leaves.len() + next.len()).collect();
        leaves.extend(next);
    }
    let max_diameter = (0..=k_max)
        .map(|k| leaves.iter().filter(|l| l.depth == k).map(|l| l.diameter()).fold(0.0, f64::max))
        .collect();
    GrandOrbit {
        schema: SCHEMA.into(),
        map: lam.map.clone(),
        delta: lam.delta,
        chart: lam.chart,
        window: *window,
        k_max,
        leaves,
        dropped,
        max_diameter,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaminationReport {
    pub leaves: usize,
    pub min_distance: f64,
    pub closest_pair: Option<(usize, usize)>,
    pub accumulation: bool,
    pub infinity_leaves: Vec<usize>,
    pub closed_curve: bool,
    /// Leaf that closes a cycle in the endpoint graph.
    pub cycle_leaf: Option<usize>,
    pub max_residual: f64,
    pub property_p: Verdict,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let n = parent[y];
        parent[y] = r;
        y = n;
    }
    r
}

/// Separation, accumulation, ∞-endpoint and closed-curve checks.
pub fn validate_lamination(go: &GrandOrbit, p: &LaminationParams) -> LaminationReport {
    let leaves = &go.leaves;
    let pairs: Vec<(usize, usize)> =
        (0..leaves.len()).flat_map(|i| (i + 1..leaves.len()).map(move |j| (i, j))).collect();
    let dists: Vec<(f64, usize, usize)> = pairs
        .par_iter()
        .map(|&(i, j)| (leaf_distance(&leaves[i], &leaves[j], 1.0), i, j))
        .collect();
    let mut min_distance = f64::INFINITY;
    let mut closest_pair = None;
    let mut accumulation = false;
    for (d, i, j) in dists {
        if d < min_distance {
            min_distance = d;
            closest_pair = Some((leaves[i].id, leaves[j].id));
        }
        if leaves[i].depth == 0 && leaves[j].depth == 0 && d < p.min_gap {
            accumulation = true;
        }
    }
    let infinity_leaves: Vec<usize> = leaves.iter().filter(|l| l.to_infinity).map(|l| l.id).collect();

    // endpoint graph: merged finite endpoints, one node for ∞, private nodes
    // for endpoints cut off by the window
    let mut nodes: Vec<Option<Complex64>> = vec![None];
    let node_of = |e: SpherePoint, cut: bool, other: Option<usize>, nodes: &mut Vec<Option<Complex64>>| -> usize {
        match e {
            SpherePoint::Infinity => 0,
            SpherePoint::Finite(z) => {
                if !cut {
                    let hit = nodes
                        .iter()
                        .enumerate()
                        .position(|(k, n)| Some(k) != other && n.is_some_and(|w| (w - z).norm() < p.merge_tol));
                    if let Some(k) = hit {
                        return k;
                    }
                }
                nodes.push(if cut { Some(Complex64::new(f64::NAN, f64::NAN)) } else { Some(z) });
                nodes.len() - 1
            }
        }
    };
    let mut edges = Vec::new();
    for l in leaves {
        let a = node_of(l.endpoints[0], l.truncated[0] && !l.endpoints[0].is_infinite(), None, &mut nodes);
        let b = node_of(l.endpoints[1], l.truncated[1] && !l.endpoints[1].is_infinite(), Some(a), &mut nodes);
        edges.push((a, b, l.id));
    }
    let mut uf: Vec<usize> = (0..nodes.len()).collect();
    let mut cycle_leaf = None;
    for (a, b, id) in edges {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra == rb {
            cycle_leaf = Some(id);
            break;
        }
        uf[ra] = rb;
    }
    let closed_curve = cycle_leaf.is_some();
    let max_residual = leaves.iter().map(|l| l.max_residual).fold(0.0, f64::max);
    let ok = !accumulation && infinity_leaves.is_empty() && !closed_curve;
    LaminationReport {
        leaves: leaves.len(),
        min_distance,
        closest_pair,
        accumulation,
        infinity_leaves,
        closed_curve,
        cycle_leaf,
        max_residual,
        property_p: if ok { Verdict::Pass } else { Verdict::Fail },
    }
}
