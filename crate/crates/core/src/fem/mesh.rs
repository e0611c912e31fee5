//! Structured biquadratic meshes on unions of axis-aligned rectangles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainDescription, Region, Side};

/// Minimum number of elements across a slit.
pub const MIN_SLIT_ELEMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    /// Element size away from the slits.
    pub h0: f64,
    /// Slit element size is `min(epsilon, h0) / refine_factor`.
    pub refine_factor: f64,
    /// Element size at the slit corners is `h_slit / corner_factor`.
    pub corner_factor: f64,
    /// Slope of the element size away from slit corners:
    /// `h(d) = min(h_cap, h_corner + grading * d)`.
    pub grading: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            h0: 0.05,
            refine_factor: 4.0,
            corner_factor: 8.0,
            grading: 0.25,
        }
    }
}

impl MeshOptions {
    /// Every length scale of the mesh halved.
    pub fn halved(&self) -> Self {
        Self {
            h0: 0.5 * self.h0,
            refine_factor: self.refine_factor,
            corner_factor: self.corner_factor,
            grading: 0.5 * self.grading,
        }
    }

    pub fn slit_size(&self, epsilon: f64) -> f64 {
        epsilon.min(self.h0) / self.refine_factor
    }

    pub fn corner_size(&self, epsilon: f64) -> f64 {
        self.slit_size(epsilon) / self.corner_factor
    }

    fn check(&self) -> Result<()> {
        if !(self.h0 > 0.0 && self.h0 <= 0.1) {
            return Err(Error::Mesh(format!("h0 = {} must lie in (0, 0.1]", self.h0)));
        }
        if !(self.refine_factor >= 1.0) {
            return Err(Error::Mesh(format!("refine_factor = {} < 1", self.refine_factor)));
        }
        if !(self.corner_factor >= 1.0) {
            return Err(Error::Mesh(format!("corner_factor = {} < 1", self.corner_factor)));
        }
        if !(self.grading > 0.0) {
            return Err(Error::Mesh(format!("grading = {} must be positive", self.grading)));
        }
        Ok(())
    }
}

/// Tensor grid of one rectangle. `xs`/`ys` hold every node line, element
/// vertices at even indices and midpoints at odd ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub region: Region,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Global node ids, row-major: `node_ids[j * xs.len() + i]`.
    pub node_ids: Vec<usize>,
}

impl Block {
    pub fn nx_elements(&self) -> usize {
        (self.xs.len() - 1) / 2
    }

    pub fn ny_elements(&self) -> usize {
        (self.ys.len() - 1) / 2
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        self.node_ids[j * self.xs.len() + i]
    }

    /// The 9 nodes of element `(ex, ey)` with local index `3 * b + a`
    /// for `a`, `b` in `0..3` along x and y.
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [usize; 9] {
        let mut out = [0; 9];
        for b in 0..3 {
            for a in 0..3 {
                out[3 * b + a] = self.node(2 * ex + a, 2 * ey + b);
            }
        }
        out
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xs[0] && x <= *self.xs.last().unwrap() && y >= self.ys[0] && y <= *self.ys.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredMesh {
    pub blocks: Vec<Block>,
    pub nodes: Vec<[f64; 2]>,
}

impl StructuredMesh {
    /// Builds blocks from element vertex lines, inserting midpoints and
    /// sharing nodes with identical coordinates across blocks.
    pub fn from_lines(specs: Vec<(Region, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let mut index: HashMap<(i64, i64), usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut blocks = Vec::with_capacity(specs.len());
        for (region, xv, yv) in specs {
            let xs = with_midpoints(&xv)?;
            let ys = with_midpoints(&yv)?;
            let mut ids = Vec::with_capacity(xs.len() * ys.len());
            for &y in &ys {
                for &x in &xs {
                    let key = (quantize(x), quantize(y));
                    let id = *index.entry(key).or_insert_with(|| {
                        nodes.push([x, y]);
                        nodes.len() - 1
                    });
                    ids.push(id);
                }
            }
            blocks.push(Block {
                region,
                xs,
                ys,
                node_ids: ids,
            });
        }
        Ok(Self { blocks, nodes })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.blocks.iter().map(|b| b.nx_elements() * b.ny_elements()).sum()
    }

    pub fn block(&self, region: Region) -> Option<&Block> {
        self.blocks.iter().find(|b| b.region == region)
    }

    /// Smallest element edge in the mesh.
    pub fn min_size(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| {
                let dx = b.xs.windows(3).step_by(2).map(|w| w[2] - w[0]);
                let dy = b.ys.windows(3).step_by(2).map(|w| w[2] - w[0]);
                dx.chain(dy).collect::<Vec<_>>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn quantize(v: f64) -> i64 {
    (v * 1e9).round() as i64
}

fn with_midpoints(lines: &[f64]) -> Result<Vec<f64>> {
    if lines.len() < 2 {
        return Err(Error::Mesh("a block needs at least one element per direction".into()));
    }
    let mut out = Vec::with_capacity(2 * lines.len() - 1);
    for w in lines.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Mesh(format!("grid lines not increasing at {} -> {}", w[0], w[1])));
        }
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*lines.last().unwrap());
    Ok(out)
}

/// Element vertices on `[a, b]` containing every break point, with sizes
/// following `h(x) = min(h_max, h_min + grading * dist(x, refine))`.
pub fn graded_line(a: f64, b: f64, breaks: &[f64], refine: &[f64], h_min: f64, h_max: f64, grading: f64) -> Vec<f64> {
    let tol = 1e-12 * (b - a).abs().max(1.0);
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a + tol && x < b - tol).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    cuts.dedup_by(|u, v| (*u - *v).abs() <= tol);

    let size = |x: f64| {
        let d = refine.iter().map(|r| (x - r).abs()).fold(f64::INFINITY, f64::min);
        if d.is_finite() {
            (h_min + grading * d).min(h_max)
        } else {
            h_max
        }
    };

    const SAMPLES: usize = 4000;
    let mut out = vec![cuts[0]];
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        // cumulative integral of 1/h
        let dx = (v - u) / SAMPLES as f64;
        let mut cum = vec![0.0; SAMPLES + 1];
        let mut prev = 1.0 / size(u);
        for k in 1..=SAMPLES {
            let cur = 1.0 / size(u + k as f64 * dx);
            cum[k] = cum[k - 1] + 0.5 * (prev + cur) * dx;
            prev = cur;
        }
        let total = cum[SAMPLES];
        let n = ((total - 1e-9).ceil() as usize).max(1);
        let mut k = 0;
        for e in 1..n {
            let target = total * e as f64 / n as f64;
            while cum[k + 1] < target {
                k += 1;
            }
            let t = (target - cum[k]) / (cum[k + 1] - cum[k]);
            out.push(u + (k as f64 + t) * dx);
        }
        out.push(v);
    }
    out
}

fn uniform_line(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect()
}

/// Graded tensor mesh of the five-rectangle domain, refined towards the slit
/// corners. Slit cross-sections are shared with the trunk and
/// channel grids so that every interface is conforming.
pub fn build_mesh(domain: &DomainDescription, opts: &MeshOptions) -> Result<StructuredMesh> {
    opts.check()?;
    let cfg = &domain.config;
    let eps = cfg.epsilon;
    let h_slit = opts.slit_size(eps);
    let h_corner = opts.corner_size(eps);
    let n_across = ((eps / h_slit) - 1e-9).ceil() as usize;
    if n_across < MIN_SLIT_ELEMENTS {
        return Err(Error::Mesh(format!(
            "{n_across} elements across the slit, need at least {MIN_SLIT_ELEMENTS}"
        )));
    }
    let piece = |r: Region| {
        domain
            .piece(r)
            .map(|p| p.rect)
            .ok_or_else(|| Error::Mesh(format!("domain has no {r:?} piece")))
    };
    let trunk = piece(Region::Trunk)?;
    if !(trunk.height() > 0.0 && trunk.width() > 0.0) {
        return Err(Error::Mesh("degenerate trunk".into()));
    }

    // a flush slit may overshoot the wall by rounding
    let snap = |x: f64| if (x - trunk.x1).abs() <= 1e-12 { trunk.x1 } else { x };
    let slit_rect = |side: Side| -> Result<crate::geometry::Rect> {
        let mut r = piece(Region::Slit(side))?;
        r.x0 = snap(r.x0);
        r.x1 = snap(r.x1);
        Ok(r)
    };
    let mut slit_lines = Vec::new();
    for side in Side::BOTH {
        let r = slit_rect(side)?;
        if r.x0 < trunk.x0 || r.x1 > trunk.x1 {
            return Err(Error::Mesh(format!("slit {} leaves the trunk", side.label())));
        }
        slit_lines.push(graded_line(r.x0, r.x1, &[], &[r.x0, r.x1], h_corner, h_slit, opts.grading));
    }

    // trunk: x lines refined around the slit edges, slit spans copied verbatim
    let mut edges = Vec::new();
    for side in Side::BOTH {
        let r = slit_rect(side)?;
        edges.extend([r.x0, r.x1]);
    }
    let mut trunk_x = splice(
        graded_line(trunk.x0, trunk.x1, &edges, &edges, h_corner, opts.h0, opts.grading),
        &slit_lines,
    );
    trunk_x.dedup();
    let trunk_y = graded_line(trunk.y0, trunk.y1, &[], &[trunk.y1], h_corner, opts.h0, opts.grading);
    let mut specs = vec![(Region::Trunk, trunk_x, trunk_y)];

    for (k, side) in Side::BOTH.into_iter().enumerate() {
        let s = slit_rect(side)?;
        let c = piece(Region::Channel(side))?;
        let slit_y = graded_line(s.y0, s.y1, &[], &[s.y0, s.y1], h_corner, opts.h0, opts.grading);
        specs.push((Region::Slit(side), slit_lines[k].clone(), slit_y));
        let chan_x = splice(
            graded_line(c.x0, c.x1, &[s.x0, s.x1], &[s.x0, s.x1], h_corner, opts.h0, opts.grading),
            &slit_lines[k..=k],
        );
        let chan_y = graded_line(c.y0, c.y1, &[], &[c.y0], h_corner, opts.h0, opts.grading);
        specs.push((Region::Channel(side), chan_x, chan_y));
    }
    StructuredMesh::from_lines(specs)
}

/// Replaces the lines of `base` inside each span by the span's own lines.
fn splice(base: Vec<f64>, spans: &[Vec<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = base
        .into_iter()
        .filter(|&x| !spans.iter().any(|s| x >= s[0] && x <= *s.last().unwrap()))
        .collect();
    for s in spans {
        out.extend_from_slice(s);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Uniform mesh of a single rectangle.
pub fn rectangle_mesh(region: Region, x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<StructuredMesh> {
    StructuredMesh::from_lines(vec![(region, uniform_line(x0, x1, nx), uniform_line(y0, y1, ny))])
}
