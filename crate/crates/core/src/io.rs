//! Config files, CSV/JSON tables, field dumps, pixmaps and run manifests.
//!
//! Floats are written with 17 significant digits so every value survives a
//! write/read cycle unchanged.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aux_constants::{AuxConstants, AuxOptions};
use crate::error::{Error, Result};
use crate::fem::{FemOptions, SolutionField};
use crate::geometry::WaveguideConfig;
use crate::sweep::{MinReflectionCurve, SweepTable};

pub const SWEEP_HEADER: &str = "Lp_eps,Lm_eps,beta_p,beta_m,R_re,R_im,Tp_re,Tp_im,Tm_re,Tm_im,energy_residual,source";
pub const CURVE_HEADER: &str = "Lp_eps,Lm_eps,beta_p,beta_m,R_abs,Tp_abs,Tm_abs,ratio,source";
/// Environment variable naming the directory of the constant cache.
pub const CACHE_DIR_ENV: &str = "SLITGUIDE_CACHE_DIR";
pub const CACHE_FILE: &str = "constants.txt";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parsed config file: device parameters plus numerical options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub config: WaveguideConfig,
    pub fem: FemOptions,
    pub aux: AuxOptions,
}

/// Numbers with an optional `pi` factor: `2.5`, `pi`, `0.8pi`, `0.8*pi`,
/// `-pi/2`, `3*pi/4`.
pub fn parse_number(s: &str) -> Option<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(pos) = t.find("pi") else {
        return t.parse::<f64>().ok().filter(|v| v.is_finite());
    };
    let (head, tail) = (&t[..pos], &t[pos + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().ok()?,
    };
    let div = if tail.is_empty() {
        1.0
    } else {
        tail.strip_prefix('/')?.parse::<f64>().ok()?
    };
    let v = factor * PI / div;
    v.is_finite().then_some(v)
}

const KEYS: &[&str] = &[
    "omega",
    "epsilon",
    "p_plus",
    "p_minus",
    "m_plus",
    "m_minus",
    "Lp_plus",
    "Lp_minus",
    "wall_x",
    "mesh_h0",
    "mesh_grading",
    "corner_factor",
    "grading",
    "n_dtn_modes",
    "trunc_h",
    "trunc_v",
    "c_xi_tolerance",
    "n_terms",
];
const REQUIRED: &[&str] = &["omega", "epsilon", "p_plus", "p_minus"];

/// Short spellings accepted for some keys.
fn canonical_key(key: &str) -> &str {
    match key {
        "lp_plus" => "Lp_plus",
        "lp_minus" => "Lp_minus",
        "h0" => "mesh_h0",
        "dtn_modes" => "n_dtn_modes",
        k => k,
    }
}

/// Parses `key = value` lines; `#` starts a comment. `p_plus = flush` puts
/// the slit against the end wall.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut raw: HashMap<&str, (usize, &str)> = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected key = value, got {line:?}"),
            });
        };
        let (key, value) = (canonical_key(key.trim()), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("unknown key {key:?}"),
            });
        }
        if raw.insert(key, (lineno, value)).is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("duplicate key {key:?}"),
            });
        }
    }
    let last_line = text.lines().count().max(1);
    for key in REQUIRED {
        if !raw.contains_key(key) {
            return Err(Error::Parse {
                line: last_line,
                msg: format!("missing required key {key:?}"),
            });
        }
    }
    let num = |key: &str| -> Result<Option<f64>> {
        match raw.get(key) {
            None => Ok(None),
            Some(&(line, v)) => parse_number(v).map(Some).ok_or_else(|| Error::Parse {
                line,
                msg: format!("{key}: {v:?} is not a number"),
            }),
        }
    };
    let int = |key: &str| -> Result<Option<u64>> {
        match raw.get(key) {
            None => Ok(None),
            Some(&(line, v)) => v.parse::<u64>().map(Some).map_err(|_| Error::Parse {
                line,
                msg: format!("{key}: {v:?} is not a non-negative integer"),
            }),
        }
    };
    let to_u32 = |key: &str, v: u64| -> Result<u32> {
        u32::try_from(v).map_err(|_| Error::Parse {
            line: raw[key].0,
            msg: format!("{key} = {v} too large"),
        })
    };

    let epsilon = num("epsilon")?.unwrap();
    let wall_x = num("wall_x")?.unwrap_or(0.0);
    let p_plus = match raw.get("p_plus") {
        Some(&(_, "flush")) => wall_x - 0.5 * epsilon,
        _ => num("p_plus")?.unwrap(),
    };
    let config = WaveguideConfig {
        omega: num("omega")?.unwrap(),
        epsilon,
        p_plus,
        p_minus: num("p_minus")?.unwrap(),
        m_plus: to_u32("m_plus", int("m_plus")?.unwrap_or(1))?,
        m_minus: to_u32("m_minus", int("m_minus")?.unwrap_or(1))?,
        lp_plus: num("Lp_plus")?.unwrap_or(0.0),
        lp_minus: num("Lp_minus")?.unwrap_or(0.0),
        wall_x,
    };
    config.validate()?;

    let mut fem = FemOptions::default();
    if let Some(v) = num("mesh_h0")? {
        fem.mesh.h0 = v;
    }
    if let Some(v) = num("mesh_grading")? {
        fem.mesh.refine_factor = v;
    }
    if let Some(v) = num("corner_factor")? {
        fem.mesh.corner_factor = v;
    }
    if let Some(v) = num("grading")? {
        fem.mesh.grading = v;
    }
    if let Some(v) = int("n_dtn_modes")? {
        fem.n_modes = v as usize;
    }
    fem.trunc_h = num("trunc_h")?;
    if let Some(v) = num("trunc_v")? {
        fem.trunc_v = v;
    }
    let mut aux = AuxOptions::default();
    if let Some(v) = num("c_xi_tolerance")? {
        aux.c_xi_tolerance = v;
    }
    if let Some(v) = int("n_terms")? {
        aux.n_terms = v as usize;
    }
    Ok(RunConfig { config, fem, aux })
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    parse_config_str(&fs::read_to_string(path)?)
}

/// Config file text reproducing `run` (full precision).
pub fn config_to_string(run: &RunConfig) -> String {
    let c = &run.config;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("omega", fmt_f64(c.omega));
    kv("epsilon", fmt_f64(c.epsilon));
    kv("p_plus", fmt_f64(c.p_plus));
    kv("p_minus", fmt_f64(c.p_minus));
    kv("m_plus", c.m_plus.to_string());
    kv("m_minus", c.m_minus.to_string());
    kv("Lp_plus", fmt_f64(c.lp_plus));
    kv("Lp_minus", fmt_f64(c.lp_minus));
    kv("wall_x", fmt_f64(c.wall_x));
    kv("mesh_h0", fmt_f64(run.fem.mesh.h0));
    kv("mesh_grading", fmt_f64(run.fem.mesh.refine_factor));
    kv("corner_factor", fmt_f64(run.fem.mesh.corner_factor));
    kv("grading", fmt_f64(run.fem.mesh.grading));
    kv("n_dtn_modes", run.fem.n_modes.to_string());
    if let Some(t) = run.fem.trunc_h {
        kv("trunc_h", fmt_f64(t));
    }
    kv("trunc_v", fmt_f64(run.fem.trunc_v));
    kv("c_xi_tolerance", fmt_f64(run.aux.c_xi_tolerance));
    kv("n_terms", run.aux.n_terms.to_string());
    s
}

/// One data row of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l_plus: f64,
    pub l_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub r: Complex64,
    pub t_plus: Complex64,
    pub t_minus: Complex64,
    pub energy_residual: f64,
    pub source: String,
}

pub fn sweep_rows(table: &SweepTable) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for cell in &table.cells {
        let mut push = |s: &crate::ScatteringTriple, source: &str| {
            rows.push(SweepRow {
                l_plus: cell.lengths.0,
                l_minus: cell.lengths.1,
                beta_plus: cell.beta.beta_plus,
                beta_minus: cell.beta.beta_minus,
                r: s.r,
                t_plus: s.t_plus,
                t_minus: s.t_minus,
                energy_residual: s.energy_residual,
                source: source.to_string(),
            })
        };
        push(&cell.asym, "asym");
        if let Some(f) = cell.fem_ok() {
            push(f, "fem");
        }
    }
    rows
}

/// Sweep table as CSV; `run_id` goes into a leading comment line. Cells
/// whose FEM solve failed are listed as comments.
pub fn sweep_csv(table: &SweepTable, run_id: &str) -> String {
    let mut out = format!("# run {run_id}\n{SWEEP_HEADER}\n");
    for row in sweep_rows(table) {
        let vals = [
            row.l_plus,
            row.l_minus,
            row.beta_plus,
            row.beta_minus,
            row.r.re,
            row.r.im,
            row.t_plus.re,
            row.t_plus.im,
            row.t_minus.re,
            row.t_minus.im,
            row.energy_residual,
        ];
        let joined: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{},{}", joined.join(","), row.source);
    }
    for cell in &table.cells {
        if let Some(Err(e)) = &cell.fem {
            let _ = writeln!(
                out,
                "# fem failed at Lp_eps={} Lm_eps={}: {}",
                fmt_f64(cell.lengths.0),
                fmt_f64(cell.lengths.1),
                e.replace('\n', " ")
            );
        }
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != SWEEP_HEADER {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: "unexpected sweep header".into(),
                });
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("{} fields, expected 12", fields.len()),
            });
        }
        let mut v = [0.0; 11];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| Error::Parse {
                line: k + 1,
                msg: format!("bad number {f:?}"),
            })?;
        }
        rows.push(SweepRow {
            l_plus: v[0],
            l_minus: v[1],
            beta_plus: v[2],
            beta_minus: v[3],
            r: Complex64::new(v[4], v[5]),
            t_plus: Complex64::new(v[6], v[7]),
            t_minus: Complex64::new(v[8], v[9]),
            energy_residual: v[10],
            source: fields[11].to_string(),
        });
    }
    Ok(rows)
}

pub fn curve_csv(curve: &MinReflectionCurve, run_id: &str) -> String {
    let source = match curve.source {
        crate::sweep::Source::Asym => "asym",
        crate::sweep::Source::Fem => "fem",
    };
    let mut out = format!("# run {run_id}\n{CURVE_HEADER}\n");
    for p in &curve.points {
        let vals = [
            p.l_plus,
            p.l_minus,
            p.beta_plus,
            p.beta_minus,
            p.r_abs,
            p.t_plus_abs,
            p.t_minus_abs,
            p.ratio(),
        ];
        let joined: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{},{source}", joined.join(","));
    }
    out
}

/// Plain-text field dump: per block its region, grid lines and nodal
/// `re im` values row by row.
pub fn field_text(field: &SolutionField, run_id: &str) -> String {
    let mut out = format!("# run {run_id}\n# omega {}\nblocks {}\n", fmt_f64(field.omega), field.mesh.blocks.len());
    for b in &field.mesh.blocks {
        let _ = writeln!(out, "block {:?} {} {}", b.region, b.xs.len(), b.ys.len());
        let line = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "x {}", line(&b.xs));
        let _ = writeln!(out, "y {}", line(&b.ys));
        for j in 0..b.ys.len() {
            let row: Vec<String> = (0..b.xs.len())
                .map(|i| {
                    let v = field.values[b.node(i, j)];
                    format!("{} {}", fmt_f64(v.re), fmt_f64(v.im))
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Colormap {
    Gray,
    /// Black-red-yellow-white.
    Hot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldQuantity {
    Modulus,
    /// Real part, mapped from `[-max, max]`.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixmapSpec {
    pub pixels_per_unit: f64,
    pub colormap: Colormap,
    pub quantity: FieldQuantity,
}

impl Default for PixmapSpec {
    fn default() -> Self {
        Self {
            pixels_per_unit: 100.0,
            colormap: Colormap::Hot,
            quantity: FieldQuantity::Modulus,
        }
    }
}

fn colour(map: Colormap, t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let byte = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match map {
        Colormap::Gray => [byte(t); 3],
        Colormap::Hot => [byte(3.0 * t), byte(3.0 * t - 1.0), byte(3.0 * t - 2.0)],
    }
}

/// Binary PPM (`P6`) of the field over its bounding box, one pixel per
/// `1/pixels_per_unit` in both directions. Points outside the domain get the
/// colour of zero.
pub fn field_pixmap(field: &SolutionField, spec: &PixmapSpec) -> Result<Vec<u8>> {
    if !(spec.pixels_per_unit > 0.0) {
        return Err(Error::Validation(format!("pixels_per_unit = {}", spec.pixels_per_unit)));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &field.mesh.nodes {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let w = (((x1 - x0) * spec.pixels_per_unit).ceil() as usize).max(1);
    let h = (((y1 - y0) * spec.pixels_per_unit).ceil() as usize).max(1);
    let scale = field.max_abs();
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    for row in 0..h {
        let y = y1 - (row as f64 + 0.5) / spec.pixels_per_unit;
        for col in 0..w {
            let x = x0 + (col as f64 + 0.5) / spec.pixels_per_unit;
            let t = match field.eval(x, y) {
                None => match spec.quantity {
                    FieldQuantity::Modulus => 0.0,
                    FieldQuantity::Real => 0.5,
                },
                Some(v) if scale > 0.0 => match spec.quantity {
                    FieldQuantity::Modulus => v.norm() / scale,
                    FieldQuantity::Real => 0.5 + 0.5 * v.re / scale,
                },
                Some(_) => match spec.quantity {
                    FieldQuantity::Modulus => 0.0,
                    FieldQuantity::Real => 0.5,
                },
            };
            out.extend_from_slice(&colour(spec.colormap, t));
        }
    }
    Ok(out)
}

/// Record of one CLI run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub command: String,
    pub config: RunConfig,
    pub constants: Vec<AuxConstants>,
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig) -> Self {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        Self {
            run_id: format!("{nanos:x}-{}", std::process::id()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            constants: Vec::new(),
            timings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Writes an output file and records it.
    pub fn write_output(&mut self, path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data")
    }
}

/// Cache file location from the environment, if set.
pub fn cache_path_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(|d| PathBuf::from(d).join(CACHE_FILE))
}
