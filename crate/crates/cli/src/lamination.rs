use std::f64::consts::PI;
use std::path::Path;

use pinchdyn::dynamics::{render_dynamical_plane, render_image, RenderParams, Verdict};
use pinchdyn::lamination::{
    build_fundamental_lamination, grand_orbit_expand, validate_chart, validate_lamination, Anchor, GrandOrbit,
    KoenigsChart, Lamination, LaminationParams, LaminationReport,
};
use pinchdyn::lang::EntireMap;
use pinchdyn::plane::{SpherePoint, Window};
use pinchdyn::{Complex64, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{csv, draw_polyline, num, Audit, ChartSpec, OutDir, Outcome, WindowSpec};

/// Boundary parameters of the two leaves in the fundamental annulus.
pub fn fundamental_anchors() -> Vec<Anchor> {
    vec![Anchor::Zeta { u: 2.4 * PI, v: Some(3.6 * PI) }, Anchor::Zeta { u: -3.6 * PI, v: Some(-2.4 * PI) }]
}

/// The leaf from the repelling fixed point to ∞ along the real axis.
pub fn infinity_anchor() -> Vec<Anchor> {
    vec![Anchor::Zeta { u: 0.0, v: None }]
}

pub fn default_window() -> WindowSpec {
    WindowSpec::square(Complex64::new(-1.0, 0.0), 16.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaminationConfig {
    pub function: String,
    pub window: WindowSpec,
    pub resolution: usize,
    pub render: RenderParams,
    pub chart: ChartSpec,
    pub anchors: Vec<Anchor>,
    pub params: LaminationParams,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for LaminationConfig {
    fn default() -> Self {
        LaminationConfig {
            function: "bergweiler".into(),
            window: default_window(),
            resolution: 512,
            render: RenderParams { budget: 200, ..RenderParams::default() },
            chart: ChartSpec::default(),
            anchors: fundamental_anchors(),
            params: LaminationParams::default(),
            k_max: 3,
            seed: 0,
        }
    }
}

/// Map, chart, depth-0 lamination and grand orbit of a run.
pub struct Built {
    pub f: EntireMap,
    pub chart: KoenigsChart,
    pub chart_residual: f64,
    pub lam: Lamination,
    pub go: GrandOrbit,
    pub report: LaminationReport,
}

pub fn build(
    function: &str,
    chart: &ChartSpec,
    anchors: &[Anchor],
    window: &Window,
    params: &LaminationParams,
    k_max: usize,
) -> Result<Built> {
    let f = EntireMap::resolve(function)?;
    let chart = chart.build(&f)?;
    let chart_residual = validate_chart(&chart)?;
    let lam = build_fundamental_lamination(&f, &chart, anchors, window, params)?;
    let go = grand_orbit_expand(&f, &lam, k_max, window, params);
    let report = validate_lamination(&go, params);
    Ok(Built { f, chart, chart_residual, lam, go, report })
}

fn endpoint_cells(e: SpherePoint) -> [String; 3] {
    match e {
        SpherePoint::Infinity => [String::new(), String::new(), "true".into()],
        SpherePoint::Finite(z) => [num(z.re), num(z.im), "false".into()],
    }
}

pub fn leaves_csv(go: &GrandOrbit) -> String {
    let rows: Vec<Vec<String>> = go
        .leaves
        .iter()
        .map(|l| {
            let [a_re, a_im, a_inf] = endpoint_cells(l.endpoints[0]);
            let [b_re, b_im, b_inf] = endpoint_cells(l.endpoints[1]);
            vec![
                l.id.to_string(),
                l.depth.to_string(),
                l.parent.map(|p| p.to_string()).unwrap_or_default(),
                l.root.to_string(),
                l.vertices.len().to_string(),
                a_re,
                a_im,
                a_inf,
                l.truncated[0].to_string(),
                b_re,
                b_im,
                b_inf,
                l.truncated[1].to_string(),
                l.to_infinity.to_string(),
                num(l.diameter()),
                num(l.max_residual),
            ]
        })
        .collect();
    csv(
        &[
            "leaf",
            "depth",
            "parent",
            "root",
            "vertices",
            "end0_re",
            "end0_im",
            "end0_infinite",
            "end0_truncated",
            "end1_re",
            "end1_im",
            "end1_infinite",
            "end1_truncated",
            "to_infinity",
            "diameter",
            "max_residual",
        ],
        &rows,
    )
}

/// Leaf colors by depth over the dynamical-plane render.
pub const DEPTH_COLORS: [[u8; 3]; 5] = [[255, 255, 255], [255, 60, 60], [60, 255, 60], [255, 160, 0], [0, 220, 255]];

pub fn run(cfg: &LaminationConfig, out: &Path) -> Result<Outcome> {
    let w = cfg.window.window(cfg.resolution)?;
    let b = build(&cfg.function, &cfg.chart, &cfg.anchors, &w, &cfg.params, cfg.k_max)?;
    let mut dir = OutDir::create(out)?;
    std::fs::write(dir.file("lamination.json")?, serde_json::to_string_pretty(&b.lam)?)?;
    b.go.write_json(&dir.file("grand_orbit.json")?)?;
    dir.write("leaves.csv", &leaves_csv(&b.go))?;
    dir.write("report.json", &serde_json::to_string_pretty(&b.report)?)?;

    let raster = render_dynamical_plane(&b.f, &w, &cfg.render);
    let mut img = render_image(&raster);
    for l in b.go.leaves.iter().rev() {
        draw_polyline(&mut img, &w, &l.vertices, DEPTH_COLORS[l.depth.min(DEPTH_COLORS.len() - 1)]);
    }
    img.save(&dir.file("lamination.png")?)?;

    let audits = vec![
        Audit::new("chart-residual", b.chart_residual < 1e-6, format!("max conjugacy residual {:e}", b.chart_residual)),
        Audit::new(
            "property-p",
            b.report.property_p == Verdict::Pass,
            format!(
                "accumulation {}, leaves to infinity {}, closed curve {}",
                b.report.accumulation,
                b.report.infinity_leaves.len(),
                b.report.closed_curve
            ),
        ),
        Audit::new("non-accumulation", !b.report.accumulation, format!("min leaf distance {:e}", b.report.min_distance)),
    ];
    let per_depth: Vec<usize> = (0..=cfg.k_max).map(|k| b.go.at_depth(k).count()).collect();
    let summary = json!({
        "leaves": b.go.leaves.len(),
        "leaves_by_depth": per_depth,
        "dropped_by_depth": b.go.dropped,
        "max_diameter_by_depth": b.go.max_diameter,
        "min_distance": b.report.min_distance,
        "chart_residual": b.chart_residual,
    });
    Ok(Outcome { outputs: dir.written, audits, summary })
}
