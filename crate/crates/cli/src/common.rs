use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pinchdyn::lamination::{build_koenigs_towards, KoenigsChart};
use pinchdyn::lang::EntireMap;
use pinchdyn::plane::{RgbImage, Window};
use pinchdyn::{Complex64, Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Rectangle of the plane; the pixel grid is attached by each command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub center: Complex64,
    pub half_width: f64,
    pub half_height: f64,
}

impl WindowSpec {
    pub fn square(center: Complex64, half: f64) -> WindowSpec {
        WindowSpec { center, half_width: half, half_height: half }
    }

    /// Grid with `resolution` columns and rows chosen for square pixels.
    pub fn window(&self, resolution: usize) -> Result<Window> {
        let rows = ((resolution as f64 - 1.0) * self.half_height / self.half_width).round() as usize + 1;
        Window::new(self.center, self.half_width, self.half_height, resolution, rows)
    }
}

/// Linearizing chart parameters of a hyperbolic Baker domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub p_star: Complex64,
    pub a: f64,
    pub n_k: usize,
    pub deep: Complex64,
}

impl Default for ChartSpec {
    fn default() -> Self {
        ChartSpec { p_star: Complex64::new(2f64.ln() - 2.0, 0.0), a: 2.0, n_k: 25, deep: Complex64::new(-1.0, 0.0) }
    }
}

impl ChartSpec {
    pub fn build(&self, f: &EntireMap) -> Result<KoenigsChart> {
        build_koenigs_towards(f, self.p_star, self.a, self.n_k, self.deep)
    }
}

/// A named pass/fail check of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Audit {
    pub fn new(name: &str, pass: bool, detail: String) -> Audit {
        Audit { name: name.into(), pass, detail }
    }
}

/// What a command produced: files relative to the output directory, audits
/// and a free-form summary recorded in the manifest.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub outputs: Vec<String>,
    pub audits: Vec<Audit>,
    pub summary: serde_json::Value,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.audits.iter().all(|a| a.pass)
    }
}

/// Collects output files under one directory.
pub struct OutDir {
    pub root: PathBuf,
    pub written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<OutDir> {
        std::fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    /// Path of a new output file; parent directories are created.
    pub fn file(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.written.push(rel.to_string());
        Ok(p)
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let p = self.file(rel)?;
        std::fs::write(p, contents)?;
        Ok(())
    }
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Shortest round-trip decimal form, `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let mut s = String::new();
        let _ = write!(s, "{x:?}");
        s
    }
}

pub fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Marks the pixels along a polyline, skipping parts outside the window.
pub fn draw_polyline(img: &mut RgbImage, w: &Window, pts: &[Complex64], color: [u8; 3]) {
    let mut put = |z: Complex64| {
        if let Ok((c, r)) = w.point_to_pixel(z) {
            img.pixels[r * w.cols + c] = color;
        }
    };
    if let [single] = pts {
        put(*single);
    }
    for s in pts.windows(2) {
        if !(w.contains(s[0]) || w.contains(s[1])) {
            continue;
        }
        let d = s[1] - s[0];
        let steps = ((d.re.abs() / w.pitch_x()).max(d.im.abs() / w.pitch_y()).ceil() as usize).clamp(1, 4 * (w.cols + w.rows));
        for k in 0..=steps {
            put(s[0] + d * (k as f64 / steps as f64));
        }
    }
}

fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Overlays a JSON document on the serialized defaults and parses the result;
/// nested objects merge key by key, every other value replaces the default.
pub fn load_config<T: Serialize + DeserializeOwned>(defaults: &T, text: &str) -> Result<T> {
    let patch: serde_json::Value = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
    if !patch.is_object() {
        return Err(config_error("config must be a JSON object"));
    }
    let mut base = serde_json::to_value(defaults)?;
    merge(&mut base, patch);
    serde_json::from_value(base).map_err(|e| config_error(e.to_string()))
}
