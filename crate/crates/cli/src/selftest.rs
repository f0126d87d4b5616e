use std::collections::BTreeMap;
use std::path::Path;

use pinchdyn::moduli::{selftest, write_csv, ExtremalParams};
use pinchdyn::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::common::{Audit, OutDir, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelftestConfig {
    pub extremal: ExtremalParams,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig { extremal: ExtremalParams::default(), seed: 7 }
    }
}

pub fn run(cfg: &SelftestConfig, out: &Path) -> Result<Outcome> {
    let rows = selftest(cfg.seed, &cfg.extremal)?;
    let mut dir = OutDir::create(out)?;
    dir.write("moduli.csv", &write_csv(&rows))?;
    let mut groups: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &rows {
        let g = groups.entry(r.check.as_str()).or_default();
        g.0 += 1;
        g.1 += usize::from(!r.pass);
    }
    let audits = groups
        .iter()
        .map(|(name, (n, bad))| Audit::new(name, *bad == 0, format!("{bad} of {n} rows violate their bound")))
        .collect();
    let summary = json!({ "rows": rows.len(), "violations": rows.iter().filter(|r| !r.pass).count() });
    Ok(Outcome { outputs: dir.written, audits, summary })
}
