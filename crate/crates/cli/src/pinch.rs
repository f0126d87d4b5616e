use std::f64::consts::PI;
use std::path::Path;

use pinchdyn::dynamics::{classify_point, legend, postsingular_sample, render_dynamical_plane, render_image, RenderParams, Verdict};
use pinchdyn::lamination::{Anchor, Leaf, LaminationParams};
use pinchdyn::lang::EntireMap;
use pinchdyn::pinch::{audit_support, check_singular_clearance, FieldGeometry, PinchProfile};
use pinchdyn::plane::{chordal_distance, spherical_diameter, RgbImage, SpherePoint, Window};
use pinchdyn::solver::{conjugate_map, finite_difference_derivative, finite_difference_mu, solve_beltrami, QCMap, SolverConfig};
use pinchdyn::{Complex64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{config_error, csv, num, Audit, ChartSpec, OutDir, Outcome, WindowSpec};
use crate::lamination::{build, default_window, fundamental_anchors, infinity_anchor, leaves_csv, Built};

/// Repelling fixed point on the boundary of the Baker domain of the bergweiler map.
pub const X0: f64 = -0.9004770794800946;

/// Which experiment runs on the shared pinch pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Pinching the fundamental-annulus leaves; the grand orbit must avoid ∞.
    Wandering,
    /// Pinching a leaf that ends at ∞.
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssembleSpec {
    pub k_max: usize,
    pub margin: f64,
    pub eps_sing: f64,
}

impl Default for AssembleSpec {
    fn default() -> Self {
        AssembleSpec { k_max: 3, margin: 0.1, eps_sing: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscSpec {
    pub center: Complex64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    /// Discs off the lamination whose images must neither collapse nor blow up.
    pub discs: Vec<DiscSpec>,
    pub disc_samples: usize,
    pub disc_ratio_min: f64,
    pub disc_ratio_max: f64,
    pub postsingular_depth: usize,
    pub postsingular_min_distance: f64,
    /// Random points of the fundamental half annulus `r_in ≤ |ζ| ≤ r_out`.
    pub region_samples: usize,
    pub region_r_in: f64,
    pub region_r_out: f64,
    /// Grand-orbit leaves of positive depth whose diameters are tracked.
    pub grand_leaves: usize,
    pub diameter_ratio_max: f64,
    /// Lower bound for the largest tracked grand-leaf diameter.
    pub curve_floor: f64,
    pub tracked_point: Complex64,
    pub endpoint_tol: f64,
    pub fixed_point: Complex64,
    pub fixed_residual_max: f64,
    pub fixed_multiplier_max: f64,
    pub holomorphy_grid: usize,
    pub holomorphy_max: f64,
    pub rim_pixels: usize,
    pub normalization_max: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        let ln2 = 2f64.ln();
        ProbeSpec {
            discs: vec![
                DiscSpec { center: Complex64::new(ln2, 0.0), radius: 0.5 },
                DiscSpec { center: Complex64::new(ln2, -4.0 * PI), radius: 0.5 },
                DiscSpec { center: Complex64::new(ln2, 2.0 * PI), radius: 0.5 },
            ],
            disc_samples: 64,
            disc_ratio_min: 0.2,
            disc_ratio_max: 5.0,
            postsingular_depth: 3,
            postsingular_min_distance: 0.5,
            region_samples: 200,
            region_r_in: 2.0 * PI,
            region_r_out: 4.0 * PI,
            grand_leaves: 12,
            diameter_ratio_max: 0.2,
            curve_floor: 0.05,
            tracked_point: Complex64::new(X0, 0.0),
            endpoint_tol: 1e-4,
            fixed_point: Complex64::new(ln2, 0.0),
            fixed_residual_max: 1e-4,
            fixed_multiplier_max: 0.05,
            holomorphy_grid: 12,
            holomorphy_max: 0.05,
            rim_pixels: 3,
            normalization_max: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSpec {
    pub enabled: bool,
    pub resolution: usize,
    /// Also write the Beltrami field and the solved map of each t as binary dumps.
    pub dump_maps: bool,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec { enabled: true, resolution: 256, dump_maps: false }
    }
}

/// Shared configuration of `thmd-pinch` and `thma-probe`; the defaults differ
/// only in the anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinchConfig {
    pub function: String,
    pub window: WindowSpec,
    pub render: RenderParams,
    pub chart: ChartSpec,
    pub anchors: Vec<Anchor>,
    pub lamination: LaminationParams,
    pub assemble: AssembleSpec,
    pub profile: PinchProfile,
    pub solver: SolverConfig,
    pub probes: ProbeSpec,
    pub frames: FrameSpec,
    pub seed: u64,
}

impl PinchConfig {
    pub fn for_mode(mode: Mode) -> PinchConfig {
        let x0 = Complex64::new(X0, 0.0);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        PinchConfig {
            function: "bergweiler".into(),
            window: default_window(),
            render: RenderParams { budget: 200, ..RenderParams::default() },
            chart: ChartSpec::default(),
            anchors: match mode {
                Mode::Wandering => fundamental_anchors(),
                Mode::Divergence => infinity_anchor(),
            },
            lamination: LaminationParams::default(),
            assemble: AssembleSpec::default(),
            profile: PinchProfile::default(),
            solver: SolverConfig { p: x0 + two_pi_i, q: x0 - two_pi_i, ..SolverConfig::default() },
            probes: ProbeSpec::default(),
            frames: FrameSpec::default(),
            seed: 0,
        }
    }
}

/// Everything measured at one t.
struct Frame {
    t: f64,
    max_abs_mu: f64,
    dilatation: f64,
    support_cells: usize,
    iterations: usize,
    residual: f64,
    negative_cells: usize,
    normalization_error: f64,
    leaf_diameters: Vec<f64>,
    disc_diameters: Vec<f64>,
    postsingular_distance: f64,
    fixed_residual: f64,
    fixed_multiplier: f64,
    holomorphy_max: f64,
    holomorphy_probes: usize,
    x0_to_infinity: f64,
    image: Option<RgbImage>,
    h: QCMap,
    field_dump: Option<pinchdyn::pinch::BeltramiField>,
}

/// Spherical diameter of `h` applied to a leaf closure, using the vertices
/// inside the window and the endpoints the leaf reaches.
pub fn image_diameter(h: &QCMap, leaf: &Leaf) -> f64 {
    let mut pts: Vec<SpherePoint> =
        leaf.vertices.iter().filter(|z| h.window.contains(**z)).filter_map(|z| h.evaluate(*z).ok()).map(SpherePoint::from).collect();
    for (e, cut) in leaf.endpoints.iter().zip(leaf.truncated) {
        match e {
            SpherePoint::Infinity => pts.push(SpherePoint::Infinity),
            SpherePoint::Finite(z) if !cut => {
                if let Ok(w) = h.evaluate(*z) {
                    pts.push(w.into());
                }
            }
            SpherePoint::Finite(_) => {}
        }
    }
    spherical_diameter(&pts).unwrap_or(f64::NAN)
}

fn euclidean_diameter(pts: &[Complex64]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

fn circle(d: &DiscSpec, n: usize) -> Vec<Complex64> {
    (0..n).map(|k| d.center + Complex64::from_polar(d.radius, 2.0 * PI * k as f64 / n as f64)).collect()
}

/// Cells within `r` pixels of a change of support indicator.
fn rim_mask(w: &Window, support: &[bool], r: usize) -> Vec<bool> {
    (0..w.rows)
        .into_par_iter()
        .flat_map_iter(|row| {
            (0..w.cols).map(move |col| {
                let s = support[row * w.cols + col];
                let (r0, r1) = (row.saturating_sub(r), (row + r).min(w.rows - 1));
                let (c0, c1) = (col.saturating_sub(r), (col + r).min(w.cols - 1));
                (r0..=r1).any(|rr| (c0..=c1).any(|cc| support[rr * w.cols + cc] != s))
            })
        })
        .collect()
}

/// Pixels within `r` of a grid cell on which `h` folds.
fn fold_mask(w: &Window, folded: &[bool], r: usize) -> Vec<bool> {
    let (cc, cr) = (w.cols - 1, w.rows - 1);
    (0..w.rows)
        .into_par_iter()
        .flat_map_iter(|row| {
            (0..w.cols).map(move |col| {
                let (r0, r1) = (row.saturating_sub(r + 1), (row + r).min(cr - 1));
                let (c0, c1) = (col.saturating_sub(r + 1), (col + r).min(cc - 1));
                (r0..=r1).any(|rr| (c0..=c1).any(|c| folded[rr * cc + c]))
            })
        })
        .collect()
}

/// Points of the fundamental half annulus mapped into the domain.
fn region_points(b: &Built, spec: &ProbeSpec, w: &Window, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..spec.region_samples {
        let r = rng.gen_range(spec.region_r_in..=spec.region_r_out);
        let th = rng.gen_range(0.02 * PI..0.98 * PI);
        if let Ok(z) = b.chart.psi(Complex64::from_polar(r, th)) {
            if w.contains(z) {
                out.push(z);
            }
        }
    }
    out
}

/// Dynamical plane of `f_t = h f h⁻¹`, classifying `h⁻¹(z)` under `f`.
fn frame_image(f: &EntireMap, h: &QCMap, fw: &Window, params: &RenderParams) -> RgbImage {
    let rows: Vec<Vec<[u8; 3]>> = (0..fw.rows)
        .into_par_iter()
        .map(|r| {
            let mut guess: Option<Complex64> = None;
            (0..fw.cols)
                .map(|c| {
                    let z = fw.pixel_to_point(c, r);
                    let u = match guess {
                        Some(g) => h.invert_near(z, g),
                        None => h.invert(z),
                    };
                    match u {
                        Ok(u) => {
                            guess = Some(u);
                            legend(&classify_point(f, u, params))
                        }
                        Err(_) => [128, 128, 128],
                    }
                })
                .collect()
        })
        .collect();
    RgbImage { width: fw.cols, height: fw.rows, pixels: rows.into_iter().flatten().collect() }
}

pub fn run(cfg: &PinchConfig, mode: Mode, out: &Path) -> Result<Outcome> {
    let ws = cfg.window;
    if ws.half_width != ws.half_height {
        return Err(config_error("the pinch window must be square"));
    }
    let w = ws.window(cfg.solver.resolution)?;
    cfg.solver.validate(&w)?;
    cfg.profile.validate()?;
    let fw = ws.window(cfg.frames.resolution)?;
    let p = &cfg.probes;
    let b = build(&cfg.function, &cfg.chart, &cfg.anchors, &w, &cfg.lamination, cfg.assemble.k_max)?;
    if mode == Mode::Wandering && b.go.leaves.iter().any(|l| l.to_infinity) {
        return Err(Error::Hypothesis("the grand orbit contains a leaf ending at ∞".into()));
    }
    let clearance = check_singular_clearance(&b.f, &b.go, cfg.assemble.eps_sing)?;
    let geom = FieldGeometry::compute(&b.chart, &b.lam, &w, cfg.assemble.k_max, cfg.assemble.margin)?;
    let deeper = FieldGeometry::compute(&b.chart, &b.lam, &w, cfg.assemble.k_max + 1, cfg.assemble.margin)?;
    let (stable, added) = geom.depth_stability(&deeper);
    drop(deeper);
    let support_audit = audit_support(&geom, &b.chart, &b.lam)?;
    let support: Vec<bool> = geom.cells.iter().map(|c| c.is_some()).collect();
    let rim = rim_mask(&w, &support, p.rim_pixels);

    let mut tracked: Vec<&Leaf> = b.go.at_depth(0).collect();
    let n_pinched = tracked.len();
    let grand: Vec<&Leaf> = b.go.leaves.iter().filter(|l| l.depth > 0).collect();
    let n_grand = p.grand_leaves.min(grand.len());
    for k in 0..n_grand {
        tracked.push(grand[k * grand.len() / n_grand]);
    }

    let disc_hits: Vec<usize> = p
        .discs
        .iter()
        .map(|d| {
            (0..w.len())
                .filter(|&i| support[i] && (w.pixel_to_point(i % w.cols, i / w.cols) - d.center).norm() <= d.radius)
                .count()
        })
        .collect();
    let circles: Vec<Vec<Complex64>> = p.discs.iter().map(|d| circle(d, p.disc_samples)).collect();
    let post: Vec<Complex64> = postsingular_sample(&b.f, &w, p.postsingular_depth)
        .locations()
        .into_iter()
        .filter(|z| w.contains(*z))
        .collect();
    let region = region_points(&b, p, &w, cfg.seed);
    let span = Complex64::new(0.5 * ws.half_width, 0.5 * ws.half_height);
    let grid_n = p.holomorphy_grid.max(2);
    let holo_pts: Vec<Complex64> = (0..grid_n * grid_n)
        .map(|k| {
            let (i, j) = ((k % grid_n) as f64, (k / grid_n) as f64);
            let s = (grid_n - 1) as f64;
            ws.center + Complex64::new(span.re * (2.0 * i / s - 1.0), span.im * (2.0 * j / s - 1.0))
        })
        .collect();

    let ts = cfg.profile.t_values();
    let results: Vec<Result<Frame>> = ts
        .par_iter()
        .map(|&t| {
            let field = geom.field(&cfg.profile, t)?;
            let h = solve_beltrami(&field, &cfg.solver)?;
            let norm_err = (h.evaluate(cfg.solver.p)? - cfg.solver.p).norm().max((h.evaluate(cfg.solver.q)? - cfg.solver.q).norm());
            let leaf_diameters = tracked.iter().map(|l| image_diameter(&h, l)).collect();
            let disc_diameters = circles
                .iter()
                .map(|c| {
                    let img: Vec<Complex64> = c.iter().filter_map(|z| h.evaluate(*z).ok()).collect();
                    euclidean_diameter(&img)
                })
                .collect();
            let hp: Vec<Complex64> = post.iter().filter_map(|z| h.evaluate(*z).ok()).collect();
            let hr: Vec<Complex64> = region.iter().filter_map(|z| h.evaluate(*z).ok()).collect();
            let postsingular_distance =
                hp.iter().flat_map(|a| hr.iter().map(move |b| (a - b).norm())).fold(f64::INFINITY, f64::min);
            let ft = |z: Complex64| conjugate_map(&b.f, &h, z);
            let eps = w.pitch_x();
            let zs = h.evaluate(p.fixed_point)?;
            let fixed_residual = (ft(zs)? - zs).norm();
            let fixed_multiplier = finite_difference_derivative(ft, zs, eps)?.norm();
            let folded = h.negative_mask();
            let folds = fold_mask(&w, &folded, p.rim_pixels);
            let mut holomorphy_max = 0.0f64;
            let mut holomorphy_probes = 0;
            for &z in &holo_pts {
                let Ok(u) = h.invert(z) else { continue };
                let Ok(v) = b.f.eval(u) else { continue };
                let (Ok(pu), Ok(pv)) = (w.point_to_pixel(u), w.point_to_pixel(v)) else { continue };
                let (iu, iv) = (pu.1 * w.cols + pu.0, pv.1 * w.cols + pv.0);
                if rim[iu] || rim[iv] || folds[iu] || folds[iv] || support[iu] != support[iv] {
                    continue;
                }
                if let Ok(m) = finite_difference_mu(ft, z, eps) {
                    holomorphy_max = holomorphy_max.max(m.norm());
                    holomorphy_probes += 1;
                }
            }
            let x0_to_infinity = chordal_distance(h.evaluate(p.tracked_point)?.into(), SpherePoint::Infinity);
            let image = cfg.frames.enabled.then(|| frame_image(&b.f, &h, &fw, &cfg.render));
            Ok(Frame {
                t,
                max_abs_mu: field.max_abs(),
                dilatation: field.dilatation(),
                support_cells: field.support_cells(),
                iterations: h.iterations,
                residual: h.residual,
                negative_cells: folded.iter().filter(|&&b| b).count(),
                normalization_error: norm_err,
                leaf_diameters,
                disc_diameters,
                postsingular_distance,
                fixed_residual,
                fixed_multiplier,
                holomorphy_max,
                holomorphy_probes,
                x0_to_infinity,
                image,
                field_dump: cfg.frames.dump_maps.then_some(field),
                h,
            })
        })
        .collect();

    let mut dir = OutDir::create(out)?;
    dir.write("leaves.csv", &leaves_csv(&b.go))?;
    let mut frames = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(f) => frames.push(f),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    let first = frames.first().filter(|f| f.t == 0.0);
    let mut summary_rows = Vec::new();
    let mut leaf_rows = Vec::new();
    let mut disc_rows = Vec::new();
    for (k, f) in frames.iter().enumerate() {
        summary_rows.push(vec![
            num(f.t),
            num(f.max_abs_mu),
            num(f.dilatation),
            f.support_cells.to_string(),
            f.iterations.to_string(),
            num(f.residual),
            f.negative_cells.to_string(),
            num(f.normalization_error),
            num(ratio_extreme(f, first, f64::min)),
            num(ratio_extreme(f, first, f64::max)),
            num(f.postsingular_distance),
            num(f.fixed_residual),
            num(f.fixed_multiplier),
            num(f.holomorphy_max),
            f.holomorphy_probes.to_string(),
            num(f.x0_to_infinity),
        ]);
        for (i, (l, d)) in tracked.iter().zip(&f.leaf_diameters).enumerate() {
            let role = if i < n_pinched { "pinched" } else { "grand" };
            leaf_rows.push(vec![num(f.t), l.id.to_string(), l.depth.to_string(), l.root.to_string(), role.into(), num(*d)]);
        }
        for (i, (d, spec)) in f.disc_diameters.iter().zip(&p.discs).enumerate() {
            let base = first.map(|f0| f0.disc_diameters[i]).unwrap_or(f64::NAN);
            disc_rows.push(vec![
                num(f.t),
                i.to_string(),
                num(spec.center.re),
                num(spec.center.im),
                num(spec.radius),
                num(*d),
                num(d / base),
            ]);
        }
        if let Some(img) = &f.image {
            img.save(&dir.file(&format!("frames/frame_{k:02}.png"))?)?;
        }
        if let Some(field) = &f.field_dump {
            field.write_dump(&dir.file(&format!("maps/mu_{k:02}.bin"))?, &dir.file(&format!("maps/mu_{k:02}.json"))?)?;
            f.h.write_dump(&dir.file(&format!("maps/h_{k:02}.bin"))?, &dir.file(&format!("maps/h_{k:02}.json"))?)?;
        }
    }
    dir.write(
        "summary.csv",
        &csv(
            &[
                "t",
                "max_abs_mu",
                "dilatation",
                "support_cells",
                "iterations",
                "residual",
                "negative_cells",
                "normalization_error",
                "probe_ratio_min",
                "probe_ratio_max",
                "postsingular_distance",
                "fixed_point_residual",
                "fixed_point_multiplier",
                "holomorphy_max",
                "holomorphy_probes",
                "x0_to_infinity",
            ],
            &summary_rows,
        ),
    )?;
    dir.write("leaf_diameters.csv", &csv(&["t", "leaf", "depth", "root", "role", "diameter"], &leaf_rows))?;
    dir.write("probe_discs.csv", &csv(&["t", "disc", "center_re", "center_im", "radius", "image_diameter", "ratio"], &disc_rows))?;
    if let Some(e) = failure {
        return Err(e);
    }

    let mut audits = Vec::new();
    let all = |pred: &dyn Fn(&Frame) -> bool| frames.iter().all(pred);
    let worst = |g: &dyn Fn(&Frame) -> f64| frames.iter().map(g).fold(f64::NEG_INFINITY, f64::max);
    audits.push(Audit::new("chart-residual", b.chart_residual < 1e-6, format!("{:e}", b.chart_residual)));
    if mode == Mode::Wandering {
        audits.push(Audit::new(
            "property-p",
            b.report.property_p == Verdict::Pass,
            format!("min leaf distance {:e}", b.report.min_distance),
        ));
    }
    audits.push(Audit::new(
        "dilatation-cap",
        all(&|f| f.max_abs_mu <= cfg.profile.mu_max),
        format!("max |mu| {:.6} against cap {}", worst(&|f| f.max_abs_mu), cfg.profile.mu_max),
    ));
    audits.push(Audit::new(
        "support-in-neighborhoods",
        support_audit.violations == 0,
        format!("{} of {} cells outside their neighborhood", support_audit.violations, support_audit.checked),
    ));
    audits.push(Audit::new("depth-stability", stable, format!("{added} cells added at depth {}", cfg.assemble.k_max + 1)));
    audits.push(Audit::new(
        "homeomorphism",
        all(&|f| f.negative_cells == 0),
        format!("negative cells per t {:?}", frames.iter().map(|f| f.negative_cells).collect::<Vec<_>>()),
    ));
    audits.push(Audit::new(
        "normalization",
        all(&|f| f.normalization_error < p.normalization_max),
        format!("max error {:e}", worst(&|f| f.normalization_error)),
    ));
    let series = |i: usize| frames.iter().map(|f| f.leaf_diameters[i]).collect::<Vec<f64>>();
    for (i, l) in tracked.iter().take(n_pinched).enumerate() {
        let s = series(i);
        let decreasing = s.windows(2).all(|w| w[1] < w[0]);
        let ratio = s.last().copied().unwrap_or(f64::NAN) / s.first().copied().unwrap_or(f64::NAN);
        audits.push(Audit::new(
            &format!("leaf-{}-decreasing", l.id),
            decreasing,
            format!("diameters {}", s.iter().map(|d| format!("{d:.5}")).collect::<Vec<_>>().join(" ")),
        ));
        if mode == Mode::Wandering {
            audits.push(Audit::new(
                &format!("leaf-{}-final-ratio", l.id),
                ratio <= p.diameter_ratio_max,
                format!("final/initial {ratio:.4} against {}", p.diameter_ratio_max),
            ));
        }
    }
    let ratios_ok = frames.iter().all(|f| {
        let lo = ratio_extreme(f, first, f64::min);
        let hi = ratio_extreme(f, first, f64::max);
        lo >= p.disc_ratio_min && hi <= p.disc_ratio_max
    });
    audits.push(Audit::new(
        "probe-disc-ratio",
        ratios_ok && first.is_some(),
        format!("ratios within [{}, {}] at every t", p.disc_ratio_min, p.disc_ratio_max),
    ));
    audits.push(Audit::new(
        "probe-discs-off-support",
        disc_hits.iter().all(|&n| n == 0),
        format!("support cells inside each disc {disc_hits:?}"),
    ));
    let min_post = frames.iter().map(|f| f.postsingular_distance).fold(f64::INFINITY, f64::min);
    audits.push(Audit::new(
        "postsingular-distance",
        min_post >= p.postsingular_min_distance && !post.is_empty() && !region.is_empty(),
        format!("min distance {min_post:.4} over {} postsingular and {} region points", post.len(), region.len()),
    ));
    audits.push(Audit::new(
        "fixed-point",
        all(&|f| f.fixed_residual < p.fixed_residual_max && f.fixed_multiplier < p.fixed_multiplier_max),
        format!("max residual {:e}, max |multiplier| {:e}", worst(&|f| f.fixed_residual), worst(&|f| f.fixed_multiplier)),
    ));
    audits.push(Audit::new(
        "holomorphy",
        all(&|f| f.holomorphy_max < p.holomorphy_max && f.holomorphy_probes > 0),
        format!("max |mu(f_t)| {:.4e} over at least {} probes", worst(&|f| f.holomorphy_max), frames.iter().map(|f| f.holomorphy_probes).min().unwrap_or(0)),
    ));
    if cfg.frames.enabled {
        if let Some(f0) = first.and_then(|f| f.image.as_ref()) {
            let base = render_image(&render_dynamical_plane(&b.f, &fw, &cfg.render));
            let diff = base.pixels.iter().zip(&f0.pixels).filter(|(a, b)| a != b).count();
            audits.push(Audit::new("t0-frame-matches-render", diff == 0, format!("{diff} differing pixels")));
        }
    }
    if mode == Mode::Divergence {
        let endpoint = b.lam.leaves.first().and_then(|l| l.endpoints.iter().find_map(|e| e.finite()));
        let e_err = endpoint.map(|e| (e - p.tracked_point).norm()).unwrap_or(f64::INFINITY);
        audits.push(Audit::new(
            "leaf-endpoint",
            e_err <= p.endpoint_tol,
            format!("finite endpoint {:?} at distance {e_err:e} from {}", endpoint, p.tracked_point),
        ));
        let floor = frames
            .iter()
            .map(|f| f.leaf_diameters[n_pinched..].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min);
        audits.push(Audit::new(
            "grand-curves-bounded-below",
            n_grand > 0 && floor >= p.curve_floor,
            format!("min over t of max diameter {floor:.4} over {n_grand} curves, floor {}", p.curve_floor),
        ));
    }

    let t_max = frames.last().map(|f| f.t).unwrap_or(f64::NAN);
    let summary = json!({
        "t_values": ts,
        "t_max": t_max,
        "leaves": b.go.leaves.len(),
        "support_cells": geom.support_cells(),
        "clipped_cells": geom.clipped,
        "singular_clearance": clearance,
        "pinched_leaves": tracked.iter().take(n_pinched).map(|l| l.id).collect::<Vec<_>>(),
        "grand_leaves": tracked.iter().skip(n_pinched).map(|l| l.id).collect::<Vec<_>>(),
        "property_p": b.report.property_p,
        "negative_cells": frames.iter().map(|f| f.negative_cells).collect::<Vec<_>>(),
        "x0_to_infinity": frames.iter().map(|f| f.x0_to_infinity).collect::<Vec<_>>(),
    });
    Ok(Outcome { outputs: dir.written, audits, summary })
}

fn ratio_extreme(f: &Frame, first: Option<&Frame>, pick: fn(f64, f64) -> f64) -> f64 {
    let Some(f0) = first else { return f64::NAN };
    f.disc_diameters
        .iter()
        .zip(&f0.disc_diameters)
        .map(|(d, b)| d / b)
        .reduce(pick)
        .unwrap_or(f64::NAN)
}
