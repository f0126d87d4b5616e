use std::collections::BTreeMap;
use std::path::Path;

use pinchdyn::dynamics::{classify_point, find_fixed_points, render_dynamical_plane, render_image, Label, RenderParams};
use pinchdyn::lang::EntireMap;
use pinchdyn::{Complex64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{config_error, csv, num, Audit, OutDir, Outcome, WindowSpec};

/// Box of sample points that must all classify as Baker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Membership {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub samples: usize,
}

/// A fixed point the render must find, with bounds on its multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedFixed {
    pub location: Complex64,
    pub tol: f64,
    pub class: String,
    #[serde(default)]
    pub multiplier_below: Option<f64>,
    #[serde(default)]
    pub multiplier_above: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub function: String,
    pub window: Option<WindowSpec>,
    pub resolution: usize,
    pub render: RenderParams,
    pub membership: Option<Membership>,
    pub expected_fixed_points: Option<Vec<ExpectedFixed>>,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            function: "bergweiler".into(),
            window: None,
            resolution: 512,
            render: RenderParams::default(),
            membership: None,
            expected_fixed_points: None,
            seed: 0,
        }
    }
}

/// Repelling fixed point of the bergweiler map on the real axis.
pub const BERGWEILER_X0: f64 = -0.900477;

impl RenderConfig {
    /// Fills catalog defaults for the window, membership box and fixed points.
    pub fn resolve(mut self) -> RenderConfig {
        let name = self.function.as_str();
        if self.window.is_none() {
            let half = match name {
                "bergweiler" => 8.0,
                "fatou" => 5.0,
                _ => 4.0,
            };
            self.window = Some(WindowSpec::square(Complex64::new(0.0, 0.0), half));
        }
        if self.membership.is_none() {
            self.membership = match name {
                "bergweiler" => Some(Membership { re_min: -10.0, re_max: -2.0, im_min: -8.0, im_max: 8.0, samples: 50 }),
                "fatou" => Some(Membership { re_min: 1.0, re_max: 9.0, im_min: -8.0, im_max: 8.0, samples: 50 }),
                _ => Some(Membership { re_min: 0.0, re_max: 0.0, im_min: 0.0, im_max: 0.0, samples: 0 }),
            };
        }
        if self.expected_fixed_points.is_none() {
            self.expected_fixed_points = Some(match name {
                "bergweiler" => vec![
                    ExpectedFixed {
                        location: Complex64::new(2f64.ln(), 0.0),
                        tol: 1e-9,
                        class: "superattracting".into(),
                        multiplier_below: Some(1e-12),
                        multiplier_above: None,
                    },
                    ExpectedFixed {
                        location: Complex64::new(BERGWEILER_X0, 0.0),
                        tol: 1e-4,
                        class: "repelling".into(),
                        multiplier_below: None,
                        multiplier_above: Some(1.0),
                    },
                ],
                _ => Vec::new(),
            });
        }
        self
    }
}

/// Seeded uniform samples in the membership box.
pub fn membership_samples(m: &Membership, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m.samples)
        .map(|_| {
            let x = if m.re_max > m.re_min { rng.gen_range(m.re_min..m.re_max) } else { m.re_min };
            let y = if m.im_max > m.im_min { rng.gen_range(m.im_min..m.im_max) } else { m.im_min };
            Complex64::new(x, y)
        })
        .collect()
}

pub fn run(cfg: &RenderConfig, out: &Path) -> Result<Outcome> {
    let f = EntireMap::resolve(&cfg.function)?;
    let ws = cfg.window.ok_or_else(|| config_error("window unresolved"))?;
    let w = ws.window(cfg.resolution)?;
    let mut dir = OutDir::create(out)?;

    let raster = render_dynamical_plane(&f, &w, &cfg.render);
    render_image(&raster).save(&dir.file("render.png")?)?;

    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut cycles: BTreeMap<u64, usize> = BTreeMap::new();
    for px in &raster.data {
        *counts.entry(px.label.code()).or_default() += 1;
        if let Label::Attracted { cycle, .. } = px.label {
            *cycles.entry(cycle).or_default() += 1;
        }
    }
    let label_rows: Vec<Vec<String>> = ["escape", "attracted", "baker-candidate", "unresolved"]
        .iter()
        .map(|l| vec![l.to_string(), counts.get(l).copied().unwrap_or(0).to_string()])
        .collect();
    dir.write("labels.csv", &csv(&["label", "pixels"], &label_rows))?;

    let fps = find_fixed_points(&f, &w);
    let fp_rows: Vec<Vec<String>> = fps
        .iter()
        .map(|p| {
            vec![
                num(p.location.re),
                num(p.location.im),
                num(p.multiplier.re),
                num(p.multiplier.im),
                num(p.multiplier.norm()),
                p.class.as_str().to_string(),
            ]
        })
        .collect();
    dir.write("fixed_points.csv", &csv(&["re", "im", "multiplier_re", "multiplier_im", "multiplier_abs", "class"], &fp_rows))?;

    let mut audits = Vec::new();
    for e in cfg.expected_fixed_points.as_deref().unwrap_or(&[]) {
        let hit = fps.iter().find(|p| (p.location - e.location).norm() <= e.tol);
        let (pass, detail) = match hit {
            None => (false, format!("no fixed point within {} of {}", e.tol, e.location)),
            Some(p) => {
                let m = p.multiplier.norm();
                let ok = p.class.as_str() == e.class
                    && e.multiplier_below.is_none_or(|b| m < b)
                    && e.multiplier_above.is_none_or(|b| m > b);
                (ok, format!("found {} class {} |multiplier| {:e}", p.location, p.class.as_str(), m))
            }
        };
        audits.push(Audit::new(&format!("fixed-point {}", e.location), pass, detail));
    }

    let mut member_rows = Vec::new();
    if let Some(m) = cfg.membership.filter(|m| m.samples > 0) {
        let pts = membership_samples(&m, cfg.seed);
        let mut misses = 0;
        for (i, z) in pts.iter().enumerate() {
            let px = classify_point(&f, *z, &cfg.render);
            let ok = px.label == Label::BakerCandidate;
            misses += usize::from(!ok);
            member_rows.push(vec![i.to_string(), num(z.re), num(z.im), px.label.code().into(), px.iterations.to_string(), ok.to_string()]);
        }
        dir.write("membership.csv", &csv(&["index", "re", "im", "label", "iterations", "baker"], &member_rows))?;
        audits.push(Audit::new(
            "baker-membership",
            misses == 0,
            format!("{} of {} samples classified baker", pts.len() - misses, pts.len()),
        ));
    }

    let summary = json!({
        "labels": counts,
        "attracted_components_by_cycle": cycles.len(),
        "fixed_points": fps.len(),
        "membership_samples": member_rows.len(),
    });
    Ok(Outcome { outputs: dir.written, audits, summary })
}
