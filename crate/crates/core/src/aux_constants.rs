//! Epsilon-independent constants of the slit asymptotics.
//!
//! * `C_Xi`: additive constant of the linearly growing harmonic function on
//!   the half-plane/half-strip junction (`Y1 ~ xi_y + C_Xi` up the strip,
//!   `Y1 ~ pi^-1 ln(1/|xi|)` in the half-plane).
//! * `G`: finite part at the source of the outgoing Green's function of the
//!   unit half-strip with a boundary point source at the middle of its base.
//! * `Gamma+-`, `Gamma~`: finite part (resp. cross value) of the outgoing
//!   Green's functions of the input channel with a point source on its top
//!   wall at `A+-`.
//!
//! The modal series of the Green's functions have a logarithmically divergent
//! self-value. The `1/k` part of each term is subtracted and summed in closed
//! form (`sum q^k / k = -ln(1 - q)`), the `1/k^3` remainder is corrected with
//! `zeta(3)`, so the truncation error decays like `N^-4`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Side, WaveguideConfig};
use crate::quadrature::gauss_legendre_on;

const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Default number of modal terms in the Green's function series.
pub const DEFAULT_N_TERMS: usize = 100_000;
/// Doubling the series length must move a constant by at most this much.
pub const SERIES_TOL: f64 = 1e-8;
/// Default tolerance on `C_Xi`.
pub const DEFAULT_C_XI_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxOptions {
    pub c_xi_tolerance: f64,
    pub n_terms: usize,
}

impl Default for AuxOptions {
    fn default() -> Self {
        Self {
            c_xi_tolerance: DEFAULT_C_XI_TOL,
            n_terms: DEFAULT_N_TERMS,
        }
    }
}

/// Constants of the asymptotic model at one `(omega, p+, p-)`.
///
/// `p_plus`/`p_minus` are abscissae relative to the end wall; `0` denotes a
/// slit flush against the wall (see [`WaveguideConfig::model_abscissa`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxConstants {
    pub c_xi: f64,
    pub g_const: Complex64,
    pub gamma_plus: Complex64,
    pub gamma_minus: Complex64,
    pub gamma_tilde: Complex64,
    pub omega: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub tolerance: f64,
}

impl AuxConstants {
    pub fn compute(omega: f64, p_plus: f64, p_minus: f64, opts: &AuxOptions) -> Result<Self> {
        let c_xi = compute_c_xi(opts.c_xi_tolerance)?;
        Self::compute_with_c_xi(c_xi, omega, p_plus, p_minus, opts)
    }

    /// Same as [`AuxConstants::compute`] with a precomputed `C_Xi`, which does
    /// not depend on `omega` or the slit positions.
    pub fn compute_with_c_xi(
        c_xi: f64,
        omega: f64,
        p_plus: f64,
        p_minus: f64,
        opts: &AuxOptions,
    ) -> Result<Self> {
        let n = opts.n_terms;
        Ok(Self {
            c_xi,
            g_const: compute_g_const(omega, n)?,
            gamma_plus: compute_gamma(omega, p_plus, p_plus, n)?,
            gamma_minus: compute_gamma(omega, p_minus, p_minus, n)?,
            gamma_tilde: compute_gamma(omega, p_plus, p_minus, n)?,
            omega,
            p_plus,
            p_minus,
            tolerance: opts.c_xi_tolerance,
        })
    }

    /// Constants at the model abscissae of `config`.
    pub fn for_config(config: &WaveguideConfig, opts: &AuxOptions) -> Result<Self> {
        config.validate()?;
        Self::compute(
            config.omega,
            config.model_abscissa(Side::Plus),
            config.model_abscissa(Side::Minus),
            opts,
        )
    }

    pub fn gamma(&self, side: Side) -> Complex64 {
        match side {
            Side::Plus => self.gamma_plus,
            Side::Minus => self.gamma_minus,
        }
    }

    pub fn p(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.p_plus,
            Side::Minus => self.p_minus,
        }
    }

    /// Errors unless these constants were computed for `config`.
    pub fn check_matches(&self, config: &WaveguideConfig) -> Result<()> {
        let want = [
            config.omega,
            config.model_abscissa(Side::Plus),
            config.model_abscissa(Side::Minus),
        ];
        let have = [self.omega, self.p_plus, self.p_minus];
        if want.iter().zip(&have).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs())) {
            return Err(Error::Mismatch(format!(
                "constants at (omega, p+, p-) = {have:?}, config needs {want:?}"
            )));
        }
        Ok(())
    }

    pub fn far_field(&self) -> FarFieldAmplitudes {
        let w = self.omega;
        FarFieldAmplitudes {
            s_plus: Complex64::new(0.0, (w * self.p_plus).cos() / w),
            s_minus: Complex64::new(0.0, (w * self.p_minus).cos() / w),
            eta: (self.gamma_tilde * w).re,
        }
    }
}

/// Amplitudes of the reflected plane wave radiated by the unit point sources
/// at `A+-`, and the coupling `eta = Re(omega Gamma~)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarFieldAmplitudes {
    pub s_plus: Complex64,
    pub s_minus: Complex64,
    pub eta: f64,
}

/// `1/kappa_k - 1/(k pi)` with `kappa_k = sqrt(k^2 pi^2 - omega^2)`, free of
/// cancellation for large `k`.
fn inverse_gap(omega: f64, k: f64) -> (f64, f64) {
    let kp = k * PI;
    let kappa = (kp * kp - omega * omega).sqrt();
    (omega * omega / (kappa * kp * (kp + kappa)), kappa)
}

/// `sum_{k > n} k^-3`, Euler-Maclaurin.
fn zeta3_tail(n: usize) -> f64 {
    let n = n as f64;
    1.0 / (2.0 * n * n) - 1.0 / (2.0 * n * n * n) + 1.0 / (4.0 * n.powi(4))
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega < PI) {
        return Err(Error::Domain(format!("omega = {omega} outside (0, pi)")));
    }
    Ok(())
}

fn check_terms(n_terms: usize) -> Result<()> {
    if n_terms < 100 {
        return Err(Error::Domain(format!("n_terms = {n_terms} < 100")));
    }
    Ok(())
}

/// Finite part at the source of the unit-width strip Green's function with a
/// boundary source: `G_s(r) - pi^-1 ln(1/r) -> S` as `r -> 0` along the wall.
fn strip_self(omega: f64, n: usize) -> Complex64 {
    let mut acc = 0.0;
    for k in (1..=n).rev() {
        acc += inverse_gap(omega, k as f64).0;
    }
    acc += omega * omega / (2.0 * PI.powi(3)) * zeta3_tail(n);
    Complex64::new(acc - PI.ln() / PI, 0.5 / omega)
}

/// Strip Green's function between two points of the same wall at distance
/// `d > 0`:
/// `G_s(d) = i e^{i omega d} / (2 omega) + sum_k e^{-kappa_k d} / kappa_k`.
fn strip_wall(omega: f64, d: f64, n: usize) -> Complex64 {
    debug_assert!(d > 0.0);
    let mut acc = 0.0;
    for k in (1..=n).rev() {
        let kf = k as f64;
        let (gap, kappa) = inverse_gap(omega, kf);
        let kp = kf * PI;
        let decay = (-kp * d).exp();
        if decay == 0.0 && (-kappa * d).exp() == 0.0 {
            continue;
        }
        // e^{-kappa d}/kappa - e^{-k pi d}/(k pi)
        acc += (-kappa * d).exp() * gap + decay * ((kp - kappa) * d).exp_m1() / kp;
    }
    let log_part = -(-(-PI * d).exp_m1()).ln() / PI;
    Complex64::new(0.0, 0.5 / omega) * Complex64::new(0.0, omega * d).exp() + acc + log_part
}

fn converged(a: Complex64, b: Complex64, what: &str, n: usize) -> Result<Complex64> {
    if (a - b).norm() > SERIES_TOL {
        return Err(Error::Convergence(format!(
            "{what}: {n} and {} terms differ by {:.3e}",
            2 * n,
            (a - b).norm()
        )));
    }
    Ok(b)
}

/// `G = i/omega + sum_j (2/kappa_{2j} - 1/(j pi)) - ln(2 pi)/pi` with the
/// series truncated at `n_terms` (even modes only contribute at the centre).
pub fn g_const_partial(omega: f64, n_terms: usize) -> Complex64 {
    let mut acc = 0.0;
    for j in (1..=n_terms).rev() {
        acc += 2.0 * inverse_gap(omega, 2.0 * j as f64).0;
    }
    acc += omega * omega / (8.0 * PI.powi(3)) * zeta3_tail(n_terms);
    Complex64::new(acc - (2.0 * PI).ln() / PI, 1.0 / omega)
}

/// Constant `G` in `g(x, y) = pi^-1 ln(1/r) + G + O(r)` for the outgoing
/// half-strip Green's function `g` with source at the middle of the base.
pub fn compute_g_const(omega: f64, n_terms: usize) -> Result<Complex64> {
    check_omega(omega)?;
    check_terms(n_terms)?;
    converged(
        g_const_partial(omega, n_terms),
        g_const_partial(omega, 2 * n_terms),
        "G",
        n_terms,
    )
}

fn gamma_partial(omega: f64, p: f64, p_eval: f64, n: usize) -> Complex64 {
    // image source at -p restores the sound-hard wall at x = 0
    if p_eval == p {
        if p == 0.0 {
            // both sources merge at the corner: log coefficient 2/pi
            strip_self(omega, n) * 2.0
        } else {
            strip_self(omega, n) + strip_wall(omega, 2.0 * p.abs(), n)
        }
    } else {
        let direct = (p_eval - p).abs();
        let image = (p_eval + p).abs();
        let g_image = if image == 0.0 {
            // unreachable for p, p_eval <= 0 unless both vanish
            strip_self(omega, n)
        } else {
            strip_wall(omega, image, n)
        };
        strip_wall(omega, direct, n) + g_image
    }
}

/// Green's function of the input channel with a unit boundary source at
/// `(p, 1)`, sound-hard walls and outgoing radiation.
///
/// With `p_eval == p` returns the finite part `Gamma` at the source
/// (subtracting `pi^-1 ln(1/r)`, or `2 pi^-1 ln(1/r)` at the corner `p = 0`);
/// otherwise the value `gamma_p(p_eval, 1)`.
pub fn compute_gamma(omega: f64, p: f64, p_eval: f64, n_terms: usize) -> Result<Complex64> {
    check_omega(omega)?;
    check_terms(n_terms)?;
    if p > 0.0 || p_eval > 0.0 || !p.is_finite() || !p_eval.is_finite() {
        return Err(Error::Domain(format!(
            "source {p} and evaluation point {p_eval} must lie on the wall x <= 0"
        )));
    }
    converged(
        gamma_partial(omega, p, p_eval, n_terms),
        gamma_partial(omega, p, p_eval, 2 * n_terms),
        "Gamma",
        n_terms,
    )
}

/// `eta = Re(omega Gamma~)`, meaningful when both slits sit where
/// `cos(omega p) = 1`; then `omega Gamma~ = eta + i`.
pub fn coupling_eta(aux: &AuxConstants) -> Result<f64> {
    for (label, p) in [("p_plus", aux.p_plus), ("p_minus", aux.p_minus)] {
        let c = (aux.omega * p).cos();
        if (c - 1.0).abs() > 1e-9 {
            return Err(Error::Regime(format!(
                "cos(omega {label}) = {c}, coupling eta needs cos(omega p) = 1"
            )));
        }
    }
    Ok((aux.gamma_tilde * aux.omega).re)
}

// ---------------------------------------------------------------------------
// Boundary-layer constant

fn odd_harmonic(m: usize) -> f64 {
    (1..=m).map(|j| 1.0 / (2 * j - 1) as f64).sum()
}

fn odd_harmonic2(m: usize) -> f64 {
    (1..=m).map(|j| 1.0 / ((2 * j - 1) as f64).powi(2)).sum()
}

/// `sum_{k odd} k / ((k^2 - 4m^2)(k^2 - 4n^2))` in closed form.
fn odd_sum(m: usize, n: usize) -> f64 {
    if m == n {
        if m == 0 {
            7.0 / 8.0 * ZETA3
        } else {
            odd_harmonic2(m) / (4.0 * m as f64)
        }
    } else {
        let (mf, nf) = (m as f64, n as f64);
        (odd_harmonic(n) - odd_harmonic(m)) / (4.0 * (mf * mf - nf * nf))
    }
}

/// `I[m][n] = int int cos(2 m pi x) cos(2 n pi s) ln|x - s| dx ds` over the
/// aperture `(-1/2, 1/2)^2`.
///
/// `ln|u| = ln|2 sin(pi u / 2)| + f(u)`; the first part has the cosine series
/// `-sum_k cos(k pi u)/k` and is integrated term by term in closed form, the
/// smooth remainder `f` by tensor Gauss-Legendre.
fn aperture_log_moments(modes: usize) -> Vec<Vec<f64>> {
    let q = 2 * modes + 80;
    let (x, w) = gauss_legendre_on(q, -0.5, 0.5);
    let smooth = Mat::<f64>::from_fn(q, q, |a, b| {
        let u = x[a] - x[b];
        if u.abs() < 1e-14 {
            -PI.ln()
        } else {
            (u.abs()).ln() - (2.0 * (0.5 * PI * u).sin()).abs().ln()
        }
    });
    let basis = Mat::<f64>::from_fn(q, modes + 1, |a, m| w[a] * (2.0 * PI * m as f64 * x[a]).cos());
    let smooth_part = basis.transpose() * &smooth * &basis;
    let mut out = vec![vec![0.0; modes + 1]; modes + 1];
    for m in 0..=modes {
        for n in 0..=modes {
            let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
            let mut series = sign * 4.0 / (PI * PI) * odd_sum(m, n);
            if m == n && m >= 1 {
                series += 1.0 / (8.0 * m as f64);
            }
            out[m][n] = smooth_part[(m, n)] - series;
        }
    }
    out
}

/// Galerkin matching of `Y1` across the aperture with `modes` cosine modes.
///
/// Strip side: `Y1 = xi_y + C + sum_n b_n cos(2 n pi xi_x) e^{-2 n pi xi_y}`.
/// Half-plane side: single-layer potential of the aperture flux,
/// `Y1 = -pi^-1 int h(s) ln|xi - s| ds`, which carries exactly the
/// `pi^-1 ln(1/|xi|)` far field with no additive constant. Continuity is
/// imposed weakly against the same cosines.
pub fn c_xi_galerkin(modes: usize) -> Result<f64> {
    let i = aperture_log_moments(modes);
    let dim = modes + 1;
    let a = Mat::<f64>::from_fn(dim, dim, |m, n| {
        if n == 0 {
            if m == 0 {
                -1.0
            } else {
                0.0
            }
        } else {
            2.0 * n as f64 * i[m][n] - if m == n { 0.5 } else { 0.0 }
        }
    });
    let rhs = Mat::<f64>::from_fn(dim, 1, |m, _| i[m][0] / PI);
    let sol = a.partial_piv_lu().solve(&rhs);
    let c = sol[(0, 0)];
    if !c.is_finite() {
        return Err(Error::SingularSystem(format!("aperture system with {modes} modes")));
    }
    Ok(c)
}

/// Convergence order of the Galerkin values in the number of modes, set by
/// the `r^(2/3)` corner singularity.
const C_XI_ORDER: f64 = 4.0 / 3.0;
const C_XI_MAX_MODES: usize = 2048;

/// Computes `C_Xi` by aperture mode matching with Richardson extrapolation
/// over doubling mode counts, until two successive extrapolants agree within
/// `tolerance`. Laplace problem: no frequency dependence.
pub fn compute_c_xi(tolerance: f64) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!("tolerance {tolerance} must be positive")));
    }
    let factor = 2f64.powf(C_XI_ORDER);
    let mut modes = 8;
    let mut prev_raw = c_xi_galerkin(modes)?;
    let mut prev_extrap: Option<f64> = None;
    while modes < C_XI_MAX_MODES {
        modes *= 2;
        let raw = c_xi_galerkin(modes)?;
        let extrap = (factor * raw - prev_raw) / (factor - 1.0);
        if let Some(pe) = prev_extrap {
            if (extrap - pe).abs() <= tolerance {
                return Ok(extrap);
            }
        }
        prev_raw = raw;
        prev_extrap = Some(extrap);
    }
    Err(Error::Convergence(format!(
        "C_Xi not within {tolerance} after {C_XI_MAX_MODES} modes"
    )))
}

// ---------------------------------------------------------------------------
// Cache

/// Thread-safe store of computed constants, optionally mirrored to an
/// append-only text file with one record per line:
/// `omega p_plus p_minus c_xi g_re g_im gp_re gp_im gm_re gm_im gt_re gt_im tolerance`.
#[derive(Debug, Default)]
pub struct ConstantCache {
    path: Option<PathBuf>,
    entries: RwLock<Vec<AuxConstants>>,
    c_xi: RwLock<HashMap<u64, f64>>,
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl AuxConstants {
    pub fn to_record(&self) -> String {
        [
            self.omega,
            self.p_plus,
            self.p_minus,
            self.c_xi,
            self.g_const.re,
            self.g_const.im,
            self.gamma_plus.re,
            self.gamma_plus.im,
            self.gamma_minus.re,
            self.gamma_minus.im,
            self.gamma_tilde.re,
            self.gamma_tilde.im,
            self.tolerance,
        ]
        .iter()
        .map(|v| fmt17(*v))
        .collect::<Vec<_>>()
        .join(" ")
    }

    pub fn from_record(line: &str) -> Option<Self> {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .ok()?;
        if v.len() != 13 {
            return None;
        }
        Some(Self {
            omega: v[0],
            p_plus: v[1],
            p_minus: v[2],
            c_xi: v[3],
            g_const: Complex64::new(v[4], v[5]),
            gamma_plus: Complex64::new(v[6], v[7]),
            gamma_minus: Complex64::new(v[8], v[9]),
            gamma_tilde: Complex64::new(v[10], v[11]),
            tolerance: v[12],
        })
    }

    fn same_key(&self, omega: f64, p_plus: f64, p_minus: f64, tolerance: f64) -> bool {
        self.omega == omega && self.p_plus == p_plus && self.p_minus == p_minus && self.tolerance == tolerance
    }
}

impl ConstantCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates on first write) a cache file; malformed lines are
    /// skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = Vec::new();
        if path.exists() {
            let reader = BufReader::new(std::fs::File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim_start().starts_with('#') {
                    continue;
                }
                if let Some(rec) = AuxConstants::from_record(&line) {
                    entries.push(rec);
                }
            }
        }
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
            c_xi: RwLock::new(HashMap::new()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, omega: f64, p_plus: f64, p_minus: f64, tolerance: f64) -> Option<AuxConstants> {
        self.entries
            .read()
            .unwrap()
            .iter()
            .rev()
            .find(|e| e.same_key(omega, p_plus, p_minus, tolerance))
            .copied()
    }

    fn c_xi(&self, tolerance: f64) -> Result<f64> {
        if let Some(c) = self.c_xi.read().unwrap().get(&tolerance.to_bits()) {
            return Ok(*c);
        }
        let from_entries = self
            .entries
            .read()
            .unwrap()
            .iter()
            .find(|e| e.tolerance == tolerance)
            .map(|e| e.c_xi);
        let c = match from_entries {
            Some(c) => c,
            None => compute_c_xi(tolerance)?,
        };
        self.c_xi.write().unwrap().insert(tolerance.to_bits(), c);
        Ok(c)
    }

    pub fn get_or_compute(&self, omega: f64, p_plus: f64, p_minus: f64, opts: &AuxOptions) -> Result<AuxConstants> {
        if let Some(hit) = self.lookup(omega, p_plus, p_minus, opts.c_xi_tolerance) {
            return Ok(hit);
        }
        let c_xi = self.c_xi(opts.c_xi_tolerance)?;
        let aux = AuxConstants::compute_with_c_xi(c_xi, omega, p_plus, p_minus, opts)?;
        let mut entries = self.entries.write().unwrap();
        // another writer may have stored the same key meanwhile
        if let Some(hit) = entries
            .iter()
            .find(|e| e.same_key(omega, p_plus, p_minus, opts.c_xi_tolerance))
        {
            return Ok(*hit);
        }
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", aux.to_record())?;
        }
        entries.push(aux);
        Ok(aux)
    }

    pub fn for_config(&self, config: &WaveguideConfig, opts: &AuxOptions) -> Result<AuxConstants> {
        config.validate()?;
        self.get_or_compute(
            config.omega,
            config.model_abscissa(Side::Plus),
            config.model_abscissa(Side::Minus),
            opts,
        )
    }
}
