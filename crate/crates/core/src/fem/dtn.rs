//! Modal Dirichlet-to-Neumann conditions on unit-width truncation sections.
//!
//! On a section with outward coordinate `d`, outgoing waves are
//! `sum_k c_k psi_k(s) exp(lambda_k d)` with `psi_0 = 1`,
//! `psi_k = sqrt(2) cos(k pi s)`, `lambda_0 = i omega` and
//! `lambda_k = -sqrt(k^2 pi^2 - omega^2)`, so `du/dn = sum_k lambda_k <u, psi_k> psi_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::StructuredMesh;
use super::system::SystemBuilder;
use crate::error::{Error, Result};
use crate::geometry::{FaceKind, Region, Side};
use crate::quadrature::gauss_legendre_on;

pub const DEFAULT_MODES: usize = 15;

/// Mesh nodes of one truncation section with the modal data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnFace {
    pub kind: FaceKind,
    /// Node ids ordered along the section.
    pub nodes: Vec<usize>,
    /// Section coordinate of each node, `0..=1`.
    pub s: Vec<f64>,
    pub n_modes: usize,
    /// `b[k][i] = int psi_k phi_i ds`.
    pub loads: Vec<Vec<f64>>,
}

pub fn mode_profile(k: usize, s: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        2f64.sqrt() * (k as f64 * PI * s).cos()
    }
}

/// `lambda_k` in `du/dn = lambda_k u` for outgoing mode `k`.
pub fn mode_rate(k: usize, omega: f64) -> Complex64 {
    if k == 0 {
        Complex64::new(0.0, omega)
    } else {
        let kp = k as f64 * PI;
        Complex64::new(-(kp * kp - omega * omega).sqrt(), 0.0)
    }
}

fn quad_shape(t: f64) -> [f64; 3] {
    // t in [0, 1] over the edge
    [2.0 * (t - 0.5) * (t - 1.0), -4.0 * t * (t - 1.0), 2.0 * t * (t - 0.5)]
}

impl DtnFace {
    /// Builds a face from nodes along a section of unit length. `s` must
    /// start at 0 and end at 1 with an odd node count (quadratic edges).
    pub fn new(kind: FaceKind, nodes: Vec<usize>, s: Vec<f64>, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Face("at least one mode required".into()));
        }
        if nodes.len() != s.len() || s.len() < 3 || s.len() % 2 == 0 {
            return Err(Error::Face(format!("{} nodes do not form quadratic edges", s.len())));
        }
        if (s[0]).abs() > 1e-9 || (s[s.len() - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::Face(format!(
                "section spans [{}, {}], must have unit width",
                s[0],
                s[s.len() - 1]
            )));
        }
        let (gx, gw) = gauss_legendre_on(8, 0.0, 1.0);
        let mut loads = vec![vec![0.0; s.len()]; n_modes];
        for e in 0..(s.len() - 1) / 2 {
            let (s0, s2) = (s[2 * e], s[2 * e + 2]);
            let h = s2 - s0;
            for (t, w) in gx.iter().zip(&gw) {
                let shape = quad_shape(*t);
                let sv = s0 + t * h;
                for (k, row) in loads.iter_mut().enumerate() {
                    let psi = mode_profile(k, sv) * w * h;
                    for a in 0..3 {
                        row[2 * e + a] += psi * shape[a];
                    }
                }
            }
        }
        Ok(Self {
            kind,
            nodes,
            s,
            n_modes,
            loads,
        })
    }

    /// `-sum_k lambda_k b_k b_k^T` added to the system.
    pub fn apply(&self, builder: &mut SystemBuilder, omega: f64) {
        for (k, b) in self.loads.iter().enumerate() {
            let lam = mode_rate(k, omega);
            for (i, &ni) in self.nodes.iter().enumerate() {
                if b[i] == 0.0 {
                    continue;
                }
                for (j, &nj) in self.nodes.iter().enumerate() {
                    builder.add(ni, nj, -lam * b[i] * b[j]);
                }
            }
        }
    }

    /// Adds `amplitude * b_0` to the right-hand side.
    pub fn add_mode0_load(&self, builder: &mut SystemBuilder, amplitude: Complex64) {
        for (i, &ni) in self.nodes.iter().enumerate() {
            builder.rhs[ni] += amplitude * self.loads[0][i];
        }
    }

    /// Modal coefficient `<u, psi_k>` of a nodal field.
    pub fn project(&self, u: &[Complex64], k: usize) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.loads[k])
            .map(|(&n, &b)| u[n] * b)
            .sum()
    }
}

/// Inlet on the left edge of the trunk and outlets on the top edges of the
/// channels. Faces must be unit-width mesh lines.
pub fn domain_faces(mesh: &StructuredMesh, n_modes: usize) -> Result<Vec<DtnFace>> {
    let mut faces = Vec::new();
    let trunk = mesh
        .block(Region::Trunk)
        .ok_or_else(|| Error::Face("mesh has no trunk".into()))?;
    faces.push(left_face(trunk, FaceKind::Inlet, n_modes)?);
    for side in Side::BOTH {
        if let Some(ch) = mesh.block(Region::Channel(side)) {
            faces.push(top_face(ch, FaceKind::Outlet(side), n_modes)?);
        }
    }
    Ok(faces)
}

pub fn left_face(block: &super::mesh::Block, kind: FaceKind, n_modes: usize) -> Result<DtnFace> {
    let y0 = block.ys[0];
    let nodes = (0..block.ys.len()).map(|j| block.node(0, j)).collect();
    let s = block.ys.iter().map(|y| y - y0).collect();
    DtnFace::new(kind, nodes, s, n_modes)
}

pub fn right_face(block: &super::mesh::Block, kind: FaceKind, n_modes: usize) -> Result<DtnFace> {
    let y0 = block.ys[0];
    let i = block.xs.len() - 1;
    let nodes = (0..block.ys.len()).map(|j| block.node(i, j)).collect();
    let s = block.ys.iter().map(|y| y - y0).collect();
    DtnFace::new(kind, nodes, s, n_modes)
}

pub fn top_face(block: &super::mesh::Block, kind: FaceKind, n_modes: usize) -> Result<DtnFace> {
    let x0 = block.xs[0];
    let j = block.ys.len() - 1;
    let nodes = (0..block.xs.len()).map(|i| block.node(i, j)).collect();
    let s = block.xs.iter().map(|x| x - x0).collect();
    DtnFace::new(kind, nodes, s, n_modes)
}
