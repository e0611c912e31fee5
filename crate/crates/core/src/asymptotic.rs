//! Leading-order asymptotics of the scattering coefficients as `epsilon -> 0`
//! with slit lengths `pi m / omega + epsilon L'`.
//!
//! Everything is expressed through the detunings `beta+-`; the slit
//! amplitudes `a+-` solve a 2x2 system coupling the two slits through
//! `omega Gamma~`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aux_constants::AuxConstants;
use crate::error::{Error, Result};
use crate::geometry::{Side, WaveguideConfig};
use crate::ScatteringTriple;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative residual accepted for the closed-form amplitudes before falling
/// back to elimination.
pub const AMPLITUDE_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPair {
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl BetaPair {
    pub fn new(beta_plus: f64, beta_minus: f64) -> Self {
        Self { beta_plus, beta_minus }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.beta_plus,
            Side::Minus => self.beta_minus,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.beta_plus.is_finite() && self.beta_minus.is_finite()
    }
}

/// Slit amplitudes: inside slit `+-` the leading field is
/// `epsilon^-1 a+- sin(omega (y - 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePair {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
}

impl AmplitudePair {
    pub fn get(&self, side: Side) -> Complex64 {
        match side {
            Side::Plus => self.a_plus,
            Side::Minus => self.a_minus,
        }
    }

    /// Matching constant at the slit mouth, `a omega`.
    pub fn c_a(&self, side: Side, omega: f64) -> Complex64 {
        self.get(side) * omega
    }

    /// Matching constant at the slit top, `(-1)^(1+m) a omega`.
    pub fn c_b(&self, side: Side, omega: f64, m: u32) -> Complex64 {
        self.get(side) * omega * parity(m + 1)
    }
}

fn parity(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Dirichlet mode of order `m` on a slit of length `length`, in the slit
/// variable `y in (1, 1 + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantMode {
    pub m: u32,
    pub length: f64,
}

impl ResonantMode {
    pub fn new(m: u32, length: f64) -> Result<Self> {
        if m == 0 || !(length > 0.0) {
            return Err(Error::Domain(format!("mode order {m}, length {length}")));
        }
        Ok(Self { m, length })
    }

    /// The resonant mode at wave number `omega`: `length = pi m / omega`.
    pub fn resonant(m: u32, omega: f64) -> Result<Self> {
        Self::new(m, crate::geometry::resonant_length(omega, m)?)
    }

    pub fn mu(&self) -> f64 {
        (PI * self.m as f64 / self.length).powi(2)
    }

    pub fn profile(&self, y: f64) -> f64 {
        (PI * self.m as f64 * (y - 1.0) / self.length).sin()
    }
}

/// Shift of the length correction to the detuning: `beta = omega (L' + offset)`.
///
/// A slit whose wall continues the end wall of the trunk (flush slit) sees a
/// quarter-plane instead of a half-plane at its mouth; its constants are
/// evaluated at the corner and the mouth contributes the doubled-width
/// boundary-layer term.
pub fn beta_offset(config: &WaveguideConfig, aux: &AuxConstants, side: Side) -> f64 {
    let log_eps = config.epsilon.ln().abs();
    let base = 2.0 * log_eps / PI + 2.0 * aux.c_xi + aux.gamma(side).re + aux.g_const.re;
    if config.is_flush(side) {
        base + log_eps / PI + aux.c_xi - 2.0 * 2f64.ln() / PI
    } else {
        base
    }
}

pub fn beta_from_config(config: &WaveguideConfig, aux: &AuxConstants) -> Result<BetaPair> {
    config.validate()?;
    aux.check_matches(config)?;
    let b = |s: Side| config.omega * (config.lp(s) + beta_offset(config, aux, s));
    Ok(BetaPair::new(b(Side::Plus), b(Side::Minus)))
}

/// Length corrections `L'+-` realising `beta`.
pub fn lprime_from_beta(beta: &BetaPair, config: &WaveguideConfig, aux: &AuxConstants) -> Result<(f64, f64)> {
    aux.check_matches(config)?;
    if !beta.is_finite() {
        return Err(Error::Domain(format!("non-finite detuning {beta:?}")));
    }
    let l = |s: Side| beta.get(s) / config.omega - beta_offset(config, aux, s);
    Ok((l(Side::Plus), l(Side::Minus)))
}

/// Slit lengths `L^eps+-` realising `beta`.
pub fn lengths_from_beta(beta: &BetaPair, config: &WaveguideConfig, aux: &AuxConstants) -> Result<(f64, f64)> {
    let (lp, lm) = lprime_from_beta(beta, config, aux)?;
    let len = |s: Side, l: f64| -> Result<f64> {
        let base = crate::geometry::resonant_length(config.omega, config.m(s))?;
        let v = base + config.epsilon * l;
        if !(v > 0.0) {
            return Err(Error::Domain(format!("slit {} length {v} <= 0", s.label())));
        }
        Ok(v)
    };
    Ok((len(Side::Plus, lp)?, len(Side::Minus, lm)?))
}

/// Copy of `config` with the length corrections set to realise `beta`.
pub fn config_for_beta(beta: &BetaPair, config: &WaveguideConfig, aux: &AuxConstants) -> Result<WaveguideConfig> {
    lengths_from_beta(beta, config, aux)?;
    let (lp, lm) = lprime_from_beta(beta, config, aux)?;
    let mut out = *config;
    out.set_lp(Side::Plus, lp);
    out.set_lp(Side::Minus, lm);
    Ok(out)
}

struct System {
    diag: [Complex64; 2],
    coupling: Complex64,
    rhs: [Complex64; 2],
}

impl System {
    fn new(beta: &BetaPair, omega: f64, p_plus: f64, p_minus: f64, gamma_tilde: Complex64) -> Self {
        let cp = (omega * p_plus).cos();
        let cm = (omega * p_minus).cos();
        Self {
            diag: [
                Complex64::new(beta.beta_plus, 1.0 + cp * cp),
                Complex64::new(beta.beta_minus, 1.0 + cm * cm),
            ],
            coupling: gamma_tilde * omega,
            rhs: [Complex64::from(-2.0 * cp), Complex64::from(-2.0 * cm)],
        }
    }

    fn relative_residual(&self, a: [Complex64; 2]) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..2 {
            let t1 = a[k] * self.diag[k];
            let t2 = a[1 - k] * self.coupling;
            let scale = t1.norm().max(t2.norm()).max(self.rhs[k].norm());
            let r = (t1 + t2 - self.rhs[k]).norm();
            if scale > 0.0 {
                worst = worst.max(r / scale);
            } else {
                worst = worst.max(r);
            }
        }
        worst
    }

    fn eliminate(&self) -> [Complex64; 2] {
        // partial pivoting on the first column
        let (d0, d1, c, r0, r1) = (self.diag[0], self.diag[1], self.coupling, self.rhs[0], self.rhs[1]);
        if d0.norm() >= c.norm() {
            let f = c / d0;
            let am = (r1 - f * r0) / (d1 - f * c);
            [(r0 - c * am) / d0, am]
        } else {
            let f = d0 / c;
            let am = (r0 - f * r1) / (c - f * d1);
            [(r1 - d1 * am) / c, am]
        }
    }
}

/// Slit amplitudes from the closed form; the system residual is checked and
/// a pivoted elimination takes over if cancellation spoiled it.
pub fn solve_amplitudes(
    beta: &BetaPair,
    omega: f64,
    p_plus: f64,
    p_minus: f64,
    gamma_tilde: Complex64,
) -> Result<AmplitudePair> {
    let sys = System::new(beta, omega, p_plus, p_minus, gamma_tilde);
    let w2g2 = sys.coupling * sys.coupling;
    let prod = sys.diag[0] * sys.diag[1];
    let den = prod - w2g2;
    let scale = prod.norm() + w2g2.norm();
    if !(den.norm() >= 1e-14 * scale) || !den.norm().is_finite() {
        return Err(Error::SingularSystem(format!(
            "amplitude determinant {den} (scale {scale:e})"
        )));
    }
    let cp = -0.5 * sys.rhs[0].re;
    let cm = -0.5 * sys.rhs[1].re;
    let a_plus = (2.0 * cm * sys.coupling - 2.0 * sys.diag[1] * cp) / den;
    let a_minus = (2.0 * cp * sys.coupling - 2.0 * sys.diag[0] * cm) / den;
    let mut a = [a_plus, a_minus];
    if sys.relative_residual(a) > AMPLITUDE_RESIDUAL_TOL {
        a = sys.eliminate();
        let res = sys.relative_residual(a);
        if res > AMPLITUDE_RESIDUAL_TOL {
            return Err(Error::SingularSystem(format!("amplitude residual {res:e}")));
        }
    }
    Ok(AmplitudePair {
        a_plus: a[0],
        a_minus: a[1],
    })
}

/// Largest relative row residual of the amplitude system for `amps`.
pub fn amplitude_residual(
    amps: &AmplitudePair,
    beta: &BetaPair,
    omega: f64,
    p_plus: f64,
    p_minus: f64,
    gamma_tilde: Complex64,
) -> f64 {
    System::new(beta, omega, p_plus, p_minus, gamma_tilde).relative_residual([amps.a_plus, amps.a_minus])
}

/// Leading-order coefficients from the slit amplitudes. A slit couples to
/// the input channel through `cos(omega p)` but radiates into its own output
/// channel with unit strength, so `T+-` carries no cosine factor; with one it
/// would lose energy whenever `|cos(omega p)| < 1`.
pub fn scattering_first_order(
    amps: &AmplitudePair,
    omega: f64,
    p_plus: f64,
    p_minus: f64,
    m_plus: u32,
    m_minus: u32,
) -> ScatteringTriple {
    let cp = (omega * p_plus).cos();
    let cm = (omega * p_minus).cos();
    let r = Complex64::from(1.0) + I * (amps.a_plus * cp + amps.a_minus * cm);
    let t_plus = I * parity(1 + m_plus) * amps.a_plus;
    let t_minus = I * parity(1 + m_minus) * amps.a_minus;
    ScatteringTriple::new(r, t_plus, t_minus)
}

/// Coefficients when `cos(omega p+-) = 1` and `omega Gamma~ = eta + i`.
pub fn scattering_eta(beta: &BetaPair, eta: f64, m_plus: u32, m_minus: u32) -> ScatteringTriple {
    let (bp, bm) = (beta.beta_plus, beta.beta_minus);
    let den = Complex64::new(bp * bm - 3.0 - eta * eta, 2.0 * (bp + bm) - 2.0 * eta);
    let r = Complex64::new(bp * bm + 1.0 - eta * eta, 2.0 * eta) / den;
    let t = |other: f64, m: u32| 2.0 * I * parity(m) * Complex64::new(other - eta, 1.0) / den;
    ScatteringTriple::new(r, t(bm, m_plus), t(bp, m_minus))
}

/// Coefficients with the inter-slit coupling neglected (`eta = 0`).
pub fn scattering_decoupled(beta: &BetaPair, m_plus: u32, m_minus: u32) -> ScatteringTriple {
    scattering_eta(beta, 0.0, m_plus, m_minus)
}

/// Detunings on the zero-reflection curve `beta+ beta- = -1` giving
/// `|T+| / |T-| = t`; the ratio on that curve is `1 / |beta+|`.
pub fn design_for_ratio(target_ratio: f64) -> Result<BetaPair> {
    design_for_ratio_branch(target_ratio, false)
}

/// As [`design_for_ratio`]; `negative` selects the branch `beta+ = -1/t`.
pub fn design_for_ratio_branch(target_ratio: f64, negative: bool) -> Result<BetaPair> {
    if !(target_ratio > 0.0) || !target_ratio.is_finite() {
        return Err(Error::Domain(format!("target ratio {target_ratio} must be in (0, inf)")));
    }
    let s = if negative { -1.0 } else { 1.0 };
    Ok(BetaPair::new(s / target_ratio, -s * target_ratio))
}

/// Peak field magnitude `|a+-| / epsilon` inside each slit.
pub fn slit_amplitude(amps: &AmplitudePair, epsilon: f64) -> (f64, f64) {
    (amps.a_plus.norm() / epsilon, amps.a_minus.norm() / epsilon)
}

/// Full asymptotic evaluation of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    pub beta: BetaPair,
    pub amplitudes: AmplitudePair,
    pub scattering: ScatteringTriple,
    pub lengths: (f64, f64),
}

pub fn evaluate(config: &WaveguideConfig, aux: &AuxConstants) -> Result<AsymptoticResult> {
    let beta = beta_from_config(config, aux)?;
    evaluate_beta(&beta, config, aux)
}

/// Evaluation at prescribed detunings; the length corrections of `config`
/// are ignored.
pub fn evaluate_beta(beta: &BetaPair, config: &WaveguideConfig, aux: &AuxConstants) -> Result<AsymptoticResult> {
    let lengths = lengths_from_beta(beta, config, aux)?;
    let amplitudes = solve_amplitudes(beta, aux.omega, aux.p_plus, aux.p_minus, aux.gamma_tilde)?;
    let scattering =
        scattering_first_order(&amplitudes, aux.omega, aux.p_plus, aux.p_minus, config.m_plus, config.m_minus);
    Ok(AsymptoticResult {
        beta: *beta,
        amplitudes,
        scattering,
        lengths,
    })
}
