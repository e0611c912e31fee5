//! Oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use slitguide::fem::assembly::assemble;
use slitguide::fem::dtn::top_face;
use slitguide::fem::mesh::{graded_line, StructuredMesh};
use slitguide::geometry::{FaceKind, Region, Side};
use std::f64::consts::PI;

/// Strip constant of the junction problem by a direct finite element solve
/// on the box `[-w, w] x [-w, 0]` joined to the strip `[-1/2, 1/2] x [0, 3]`.
/// Unit flux leaves through the strip top and the box sides carry the
/// far-field value `-ln(r) / pi`, whose first neglected term is `O(r^-2)`.
pub fn c_xi_truncated(w: f64, h_min: f64, grading: f64) -> f64 {
    let top = 3.0;
    let h_max = 0.05 * w.max(4.0);
    let corners = [-0.5, 0.5];
    let xs_box = graded_line(-w, w, &corners, &corners, h_min, h_max.min(0.1).max(h_min), grading);
    let ys_box = graded_line(-w, 0.0, &[], &[0.0], h_min, h_max, grading);
    // conforming aperture: the strip reuses the box lines
    let xs_strip: Vec<f64> = xs_box.iter().copied().filter(|x| x.abs() <= 0.5 + 1e-12).collect();
    let ys_strip = graded_line(0.0, top, &[], &[0.0], h_min, 0.1, grading);
    let mesh = StructuredMesh::from_lines(vec![
        (Region::Trunk, xs_box, ys_box),
        (Region::Slit(Side::Plus), xs_strip, ys_strip),
    ])
    .expect("oracle mesh");
    let mut builder = assemble(&mesh, 0.0);
    let strip = mesh.block(Region::Slit(Side::Plus)).unwrap();
    let face = top_face(strip, FaceKind::Outlet(Side::Plus), 1).unwrap();
    face.add_mode0_load(&mut builder, Complex64::new(1.0, 0.0));
    let mut system = builder.finish();
    let fixed: Vec<(usize, Complex64)> = mesh
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, p)| (p[0].abs() - w).abs() < 1e-9 || (p[1] + w).abs() < 1e-9)
        .map(|(i, p)| (i, Complex64::new(-p[0].hypot(p[1]).ln() / PI, 0.0)))
        .collect();
    system.apply_dirichlet(&fixed);
    let u = system.solve().expect("oracle solve").values;
    face.project(&u, 0).re - top
}
