use std::path::Path;

use pinchdyn::dynamics::{classify_baker, BakerParams};
use pinchdyn::lang::EntireMap;
use pinchdyn::plane::SpherePoint;
use pinchdyn::{Complex64, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{config_error, csv, num, Audit, OutDir, Outcome};

/// One row of the classification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyEntry {
    pub function: String,
    /// Probe point; the catalog Baker probe when absent.
    #[serde(default)]
    pub probe: Option<Complex64>,
    #[serde(default)]
    pub expected: Option<String>,
    /// Expected step multiplier and its tolerance.
    #[serde(default)]
    pub expected_a: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub entries: Vec<ClassifyEntry>,
    pub baker: BakerParams,
    pub orbit_length: usize,
    pub seed: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let entry = |f: &str, kind: &str, a: Option<(f64, f64)>| ClassifyEntry {
            function: f.into(),
            probe: None,
            expected: Some(kind.into()),
            expected_a: a,
        };
        ClassifyConfig {
            entries: vec![
                entry("bergweiler", "hyperbolic-I", Some((2.0, 0.01))),
                entry("hyp2", "hyperbolic-II", None),
                entry("parabolic", "parabolic", None),
            ],
            baker: BakerParams::default(),
            orbit_length: 60,
            seed: 0,
        }
    }
}

impl ClassifyConfig {
    /// Fills missing probes from the catalog.
    pub fn resolve(mut self) -> Result<ClassifyConfig> {
        for e in &mut self.entries {
            if e.probe.is_none() {
                let f = EntireMap::resolve(&e.function)?;
                e.probe = Some(f.baker_probe.ok_or_else(|| config_error(format!("entry `{}` needs a probe", e.function)))?);
            }
        }
        Ok(self)
    }
}

pub fn run(cfg: &ClassifyConfig, out: &Path) -> Result<Outcome> {
    let mut dir = OutDir::create(out)?;
    let maps = cfg.entries.iter().map(|e| EntireMap::resolve(&e.function)).collect::<Result<Vec<_>>>()?;
    let results: Vec<_> = cfg
        .entries
        .par_iter()
        .zip(maps.par_iter())
        .map(|(e, f)| {
            let probe = e.probe.unwrap_or_default();
            classify_baker(f, probe, cfg.orbit_length, &cfg.baker)
        })
        .collect();
    let mut rows = Vec::new();
    let mut audits = Vec::new();
    let mut inconclusive = 0;
    for (e, c) in cfg.entries.iter().zip(&results) {
        let kind = c.kind.as_str();
        inconclusive += usize::from(kind == "inconclusive");
        let kind_ok = e.expected.as_deref().is_none_or(|k| k == kind);
        let a_ok = e.expected_a.is_none_or(|(a, tol)| (c.a - a).abs() <= tol);
        let (zr, zi, zinf) = match c.zeta {
            SpherePoint::Finite(z) => (num(z.re), num(z.im), false),
            SpherePoint::Infinity => (String::new(), String::new(), true),
        };
        let probe = e.probe.unwrap_or_default();
        rows.push(vec![
            e.function.clone(),
            num(probe.re),
            num(probe.im),
            kind.into(),
            num(c.a),
            num(c.hyperbolic_step),
            zr,
            zi,
            zinf.to_string(),
            e.expected.clone().unwrap_or_default(),
            (kind_ok && a_ok).to_string(),
            c.note.replace(',', ";"),
        ]);
        if e.expected.is_some() || e.expected_a.is_some() {
            audits.push(Audit::new(
                &format!("classify {}", e.function),
                kind_ok && a_ok,
                format!("{kind}, a = {:.6}{}", c.a, e.expected.as_ref().map(|k| format!(", expected {k}")).unwrap_or_default()),
            ));
        }
    }
    dir.write(
        "classify.csv",
        &csv(
            &[
                "function",
                "probe_re",
                "probe_im",
                "type",
                "a_estimate",
                "hyperbolic_step",
                "zeta_re",
                "zeta_im",
                "zeta_infinite",
                "expected",
                "match",
                "note",
            ],
            &rows,
        ),
    )?;
    let summary = json!({ "rows": rows.len(), "inconclusive": inconclusive });
    Ok(Outcome { outputs: dir.written, audits, summary })
}
