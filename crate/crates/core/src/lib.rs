//! Thin-slit acoustic energy distributor: asymptotic design formulas and a
//! full-wave finite element verifier.
//!
//! The device is a semi-infinite channel `(-inf, 0) x (0, 1)` with a
//! sound-hard end wall, connected through two thin resonant slits of width
//! `epsilon` to two vertical output channels. Tuning the slit lengths around
//! `pi m / omega` routes the incident energy into the outputs with a
//! prescribed ratio.
//!
//! Layers:
//! - [`geometry`]: configuration, validation and the rectangle decomposition.
//! - [`aux_constants`]: the epsilon-independent constants (boundary-layer
//!   constant and regularized Green's function values).
//! - [`asymptotic`]: closed-form scattering coefficients and inverse design.
//! - [`fem`]: biquadratic finite elements with modal transparent boundaries.
//! - [`sweep`]: parameter sweeps, minimum-reflection curves, design checks.
//! - [`io`]: config files, CSV/JSON/pixmap output, run manifests.

pub mod asymptotic;
pub mod aux_constants;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex scattering coefficients of the three-channel junction.
///
/// `r` is referenced to `x = 0`, `t_plus`/`t_minus` to the top of the
/// respective slit. Used for both asymptotic and finite element results.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScatteringTriple {
    pub r: Complex64,
    pub t_plus: Complex64,
    pub t_minus: Complex64,
    pub energy_residual: f64,
}

impl ScatteringTriple {
    pub fn new(r: Complex64, t_plus: Complex64, t_minus: Complex64) -> Self {
        let energy_residual = (1.0 - r.norm_sqr() - t_plus.norm_sqr() - t_minus.norm_sqr()).abs();
        Self {
            r,
            t_plus,
            t_minus,
            energy_residual,
        }
    }

    /// `|T+| / |T-|`; infinite when nothing goes into the minus channel.
    pub fn transmission_ratio(&self) -> f64 {
        self.t_plus.norm() / self.t_minus.norm()
    }

    /// Largest componentwise modulus difference to another triple.
    pub fn max_abs_diff(&self, other: &ScatteringTriple) -> f64 {
        (self.r - other.r)
            .norm()
            .max((self.t_plus - other.t_plus).norm())
            .max((self.t_minus - other.t_minus).norm())
    }
}
