//! Full-wave solver: biquadratic finite elements on the truncated domain with
//! modal transparent conditions on the inlet and outlet sections.

pub mod assembly;
pub mod dtn;
pub mod mesh;
pub mod system;

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_domain, default_trunc_h, FaceKind, Region, Side, WaveguideConfig, DEFAULT_TRUNC_V};
use crate::ScatteringTriple;

pub use dtn::{DtnFace, DEFAULT_MODES};
pub use mesh::{build_mesh, MeshOptions, StructuredMesh};
pub use system::{LinearSystem, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FemOptions {
    pub mesh: MeshOptions,
    pub n_modes: usize,
    /// Wall-to-inlet distance; `None` uses [`default_trunc_h`].
    pub trunc_h: Option<f64>,
    /// Slit-top-to-outlet distance.
    pub trunc_v: f64,
}

impl Default for FemOptions {
    fn default() -> Self {
        Self {
            mesh: MeshOptions::default(),
            n_modes: DEFAULT_MODES,
            trunc_h: None,
            trunc_v: DEFAULT_TRUNC_V,
        }
    }
}

/// Nodal solution over a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub mesh: StructuredMesh,
    pub values: Vec<Complex64>,
    pub omega: f64,
    pub config: Option<WaveguideConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub n_nodes: usize,
    pub n_elements: usize,
    pub nnz: usize,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FemResult {
    pub scattering: ScatteringTriple,
    pub field: SolutionField,
    pub stats: SolveStats,
}

fn lagrange3(t: f64) -> [f64; 3] {
    [2.0 * (t - 0.5) * (t - 1.0), -4.0 * t * (t - 1.0), 2.0 * t * (t - 0.5)]
}

/// Index `e` of the element `[v[2e], v[2e+2]]` containing `x`.
fn locate(v: &[f64], x: f64) -> usize {
    let n = (v.len() - 1) / 2;
    let mut lo = 0;
    let mut hi = n;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if v[2 * mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

impl SolutionField {
    /// Finite element interpolant at `(x, y)`; `None` outside the mesh.
    pub fn eval(&self, x: f64, y: f64) -> Option<Complex64> {
        let block = self.mesh.blocks.iter().find(|b| b.contains(x, y))?;
        let ex = locate(&block.xs, x);
        let ey = locate(&block.ys, y);
        let tx = (x - block.xs[2 * ex]) / (block.xs[2 * ex + 2] - block.xs[2 * ex]);
        let ty = (y - block.ys[2 * ey]) / (block.ys[2 * ey + 2] - block.ys[2 * ey]);
        let (lx, ly) = (lagrange3(tx), lagrange3(ty));
        let nodes = block.element_nodes(ex, ey);
        let mut v = Complex64::new(0.0, 0.0);
        for b in 0..3 {
            for a in 0..3 {
                v += self.values[nodes[3 * b + a]] * (lx[a] * ly[b]);
            }
        }
        Some(v)
    }

    /// Largest nodal `|u|` in a region.
    pub fn max_abs_in(&self, region: Region) -> Option<f64> {
        let b = self.mesh.block(region)?;
        Some(b.node_ids.iter().map(|&n| self.values[n].norm()).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Solves `Delta u + omega^2 u = 0` on `mesh` with a unit incident wave
/// entering through the left edge of the trunk block. The trunk's right edge
/// is the phase reference for `R`, each channel's bottom edge for `T`.
pub fn solve_mesh(mesh: StructuredMesh, omega: f64, n_modes: usize) -> Result<(ScatteringTriple, SolutionField, SolveStats)> {
    let start = Instant::now();
    let faces = dtn::domain_faces(&mesh, n_modes)?;
    let trunk = mesh.block(Region::Trunk).expect("checked by domain_faces");
    let ell0 = trunk.xs[trunk.xs.len() - 1] - trunk.xs[0];
    let mut builder = assembly::assemble(&mesh, omega);
    for f in &faces {
        f.apply(&mut builder, omega);
        if f.kind == FaceKind::Inlet {
            let g = Complex64::new(0.0, -2.0 * omega) * Complex64::new(0.0, -omega * ell0).exp();
            f.add_mode0_load(&mut builder, g);
        }
    }
    let system = builder.finish();
    let nnz = system.matrix.nnz();
    let sol = system.solve()?;
    let u = sol.values;

    let mut r = Complex64::new(0.0, 0.0);
    let mut t = [Complex64::new(0.0, 0.0); 2];
    for f in &faces {
        let c0 = f.project(&u, 0);
        match f.kind {
            FaceKind::Inlet => {
                let back = Complex64::new(0.0, -omega * ell0).exp();
                r = (c0 - back) * back;
            }
            FaceKind::Outlet(side) => {
                let ch = mesh.block(Region::Channel(side)).expect("face built from block");
                let ell = ch.ys[ch.ys.len() - 1] - ch.ys[0];
                let k = if side == Side::Plus { 0 } else { 1 };
                t[k] = c0 * Complex64::new(0.0, -omega * ell).exp();
            }
        }
    }
    let stats = SolveStats {
        n_nodes: mesh.n_nodes(),
        n_elements: mesh.n_elements(),
        nnz,
        residual: sol.residual,
        seconds: start.elapsed().as_secs_f64(),
    };
    let field = SolutionField {
        mesh,
        values: u,
        omega,
        config: None,
    };
    Ok((ScatteringTriple::new(r, t[0], t[1]), field, stats))
}

/// Scattering coefficients of a configuration by a single FEM solve.
pub fn solve_config(config: &WaveguideConfig, opts: &FemOptions) -> Result<FemResult> {
    let trunc_h = opts.trunc_h.unwrap_or_else(|| default_trunc_h(config));
    let domain = build_domain(config, trunc_h, opts.trunc_v)?;
    let mesh = build_mesh(&domain, &opts.mesh)?;
    let (scattering, mut field, stats) = solve_mesh(mesh, config.omega, opts.n_modes)?;
    field.config = Some(*config);
    Ok(FemResult {
        scattering,
        field,
        stats,
    })
}

/// Straight channel `(x0, wall) x (0, 1)` closed by a sound-hard wall, with
/// the given number of elements per unit length.
pub fn solve_closed_channel(omega: f64, length: f64, per_unit: usize, n_modes: usize) -> Result<(ScatteringTriple, SolutionField)> {
    if !(length > 0.0) || per_unit == 0 {
        return Err(Error::Mesh(format!("channel length {length}, {per_unit} elements per unit")));
    }
    let nx = ((length * per_unit as f64).round() as usize).max(1);
    let mesh = mesh::rectangle_mesh(Region::Trunk, -length, 0.0, 0.0, 1.0, nx, per_unit)?;
    let (s, f, _) = solve_mesh(mesh, omega, n_modes)?;
    Ok((s, f))
}
