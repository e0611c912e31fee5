//! Element matrices and global assembly of `K - omega^2 M`.

use num_complex::Complex64;

use super::mesh::StructuredMesh;
use super::system::SystemBuilder;

/// 1D quadratic mass matrix on an element of length `h` (nodes: left, mid, right).
pub fn mass_1d(h: f64) -> [[f64; 3]; 3] {
    let s = h / 30.0;
    [[4.0 * s, 2.0 * s, -s], [2.0 * s, 16.0 * s, 2.0 * s], [-s, 2.0 * s, 4.0 * s]]
}

/// 1D quadratic stiffness matrix on an element of length `h`.
pub fn stiffness_1d(h: f64) -> [[f64; 3]; 3] {
    let s = 1.0 / (3.0 * h);
    [[7.0 * s, -8.0 * s, s], [-8.0 * s, 16.0 * s, -8.0 * s], [s, -8.0 * s, 7.0 * s]]
}

/// Local matrix `stiff * K + mass * M` of a biquadratic rectangle, local
/// node order `3 * b + a`.
pub fn element_matrix(hx: f64, hy: f64, stiff: f64, mass: f64) -> [[f64; 9]; 9] {
    let (mx, kx) = (mass_1d(hx), stiffness_1d(hx));
    let (my, ky) = (mass_1d(hy), stiffness_1d(hy));
    let mut out = [[0.0; 9]; 9];
    for b in 0..3 {
        for a in 0..3 {
            for d in 0..3 {
                for c in 0..3 {
                    let k = kx[a][c] * my[b][d] + mx[a][c] * ky[b][d];
                    let m = mx[a][c] * my[b][d];
                    out[3 * b + a][3 * d + c] = stiff * k + mass * m;
                }
            }
        }
    }
    out
}

/// Adds `stiff * K + mass * M` over every element of `mesh`.
pub fn add_volume_terms(builder: &mut SystemBuilder, mesh: &StructuredMesh, stiff: f64, mass: f64) {
    for block in &mesh.blocks {
        for ey in 0..block.ny_elements() {
            let hy = block.ys[2 * ey + 2] - block.ys[2 * ey];
            for ex in 0..block.nx_elements() {
                let hx = block.xs[2 * ex + 2] - block.xs[2 * ex];
                let local = element_matrix(hx, hy, stiff, mass);
                let nodes = block.element_nodes(ex, ey);
                for (i, &ni) in nodes.iter().enumerate() {
                    for (j, &nj) in nodes.iter().enumerate() {
                        builder.add(ni, nj, Complex64::new(local[i][j], 0.0));
                    }
                }
            }
        }
    }
}

/// Helmholtz operator `K - omega^2 M` with natural (sound-hard) boundaries.
pub fn assemble(mesh: &StructuredMesh, omega: f64) -> SystemBuilder {
    let mut b = SystemBuilder::new(mesh.n_nodes());
    add_volume_terms(&mut b, mesh, 1.0, -omega * omega);
    b
}
