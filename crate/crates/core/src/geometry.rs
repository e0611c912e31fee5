//! Slit geometry: configuration, validation and the truncated rectangle
//! decomposition used by the finite element solver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slits closer than this to the wall (relative to their half width) are
/// treated as flush against it.
const FLUSH_TOL: f64 = 1e-12;

/// Which of the two slits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    pub fn other(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

/// Physical and geometric parameters of the device.
///
/// Base slit lengths are never stored: they follow from `(omega, m)` through
/// [`resonant_length`], so a config always sits on a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideConfig {
    pub omega: f64,
    pub epsilon: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub m_plus: u32,
    pub m_minus: u32,
    /// Length corrections `L'`; the true slit length is `L + epsilon L'`.
    pub lp_plus: f64,
    pub lp_minus: f64,
    /// Abscissa of the end wall of the input channel.
    pub wall_x: f64,
}

impl WaveguideConfig {
    /// Parameters of the reference experiment: `omega = 0.8 pi`,
    /// `epsilon = 0.05`, slits at `-2.5` and flush against the end wall.
    pub fn reference() -> Self {
        let epsilon = 0.05;
        Self {
            omega: 0.8 * PI,
            epsilon,
            p_plus: -epsilon / 2.0,
            p_minus: -2.5,
            m_plus: 1,
            m_minus: 1,
            lp_plus: 0.0,
            lp_minus: 0.0,
            wall_x: 0.0,
        }
    }

    /// Checks the invariants shared by the asymptotic model and the solver.
    ///
    /// A slit may touch or straddle the end wall here (`p <= wall_x`); the
    /// finite element geometry additionally needs `p + epsilon/2 <= wall_x`,
    /// which [`build_domain`] enforces.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if !(self.omega > 0.0 && self.omega < PI) {
            return fail(format!(
                "omega = {} must lie in (0, pi) so that a single mode propagates",
                self.omega
            ));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return fail(format!("epsilon = {} must be positive", self.epsilon));
        }
        for v in [self.p_plus, self.p_minus, self.lp_plus, self.lp_minus, self.wall_x] {
            if !v.is_finite() {
                return fail("non-finite geometric parameter".into());
            }
        }
        if self.p_plus == self.p_minus {
            return fail("p_plus and p_minus must differ".into());
        }
        if (self.p_plus - self.p_minus).abs() <= self.epsilon {
            return fail(format!(
                "slits overlap: |p_plus - p_minus| = {} <= epsilon = {}",
                (self.p_plus - self.p_minus).abs(),
                self.epsilon
            ));
        }
        for side in Side::BOTH {
            if self.p(side) > self.wall_x {
                return fail(format!(
                    "slit {} at p = {} lies beyond the end wall x = {}",
                    side.label(),
                    self.p(side),
                    self.wall_x
                ));
            }
        }
        if self.m_plus < 1 || self.m_minus < 1 {
            return fail("resonance orders m_plus, m_minus must be >= 1".into());
        }
        for side in Side::BOTH {
            self.slit_length(side)?;
        }
        Ok(())
    }

    pub fn p(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.p_plus,
            Side::Minus => self.p_minus,
        }
    }

    pub fn m(&self, side: Side) -> u32 {
        match side {
            Side::Plus => self.m_plus,
            Side::Minus => self.m_minus,
        }
    }

    pub fn lp(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.lp_plus,
            Side::Minus => self.lp_minus,
        }
    }

    pub fn set_lp(&mut self, side: Side, value: f64) {
        match side {
            Side::Plus => self.lp_plus = value,
            Side::Minus => self.lp_minus = value,
        }
    }

    /// Resonance length `pi m / omega` of one slit.
    pub fn base_length(&self, side: Side) -> Result<f64> {
        resonant_length(self.omega, self.m(side))
    }

    /// True slit length `L + epsilon L'`.
    pub fn slit_length(&self, side: Side) -> Result<f64> {
        slit_length(self.base_length(side)?, self.lp(side), self.epsilon)
    }

    /// Slit mouth `A = (p, 1)`.
    pub fn mouth(&self, side: Side) -> [f64; 2] {
        [self.p(side), 1.0]
    }

    /// Slit top `B = (p, 1 + L^eps)`.
    pub fn top(&self, side: Side) -> Result<[f64; 2]> {
        Ok([self.p(side), 1.0 + self.slit_length(side)?])
    }

    /// True when the slit touches (or crosses) the end wall. The asymptotic
    /// model then treats it as a corner slit.
    pub fn is_flush(&self, side: Side) -> bool {
        self.p(side) + 0.5 * self.epsilon >= self.wall_x - FLUSH_TOL * self.epsilon.max(1.0)
    }

    /// Slit abscissa relative to the wall as seen by the asymptotic model:
    /// `0` for a flush slit, `p - wall_x` otherwise.
    pub fn model_abscissa(&self, side: Side) -> f64 {
        if self.is_flush(side) {
            0.0
        } else {
            self.p(side) - self.wall_x
        }
    }
}

/// `pi m / omega`: the shortest lengths at which `omega^2` is a Dirichlet
/// eigenvalue of the 1D slit problem, with eigenfunction `sin(omega (y-1))`.
pub fn resonant_length(omega: f64, m: u32) -> Result<f64> {
    if !(omega > 0.0 && omega < PI) {
        return Err(Error::Domain(format!("omega = {omega} outside (0, pi)")));
    }
    if m < 1 {
        return Err(Error::Domain("resonance order must be >= 1".into()));
    }
    Ok(PI * m as f64 / omega)
}

/// `L + epsilon L'`.
pub fn slit_length(base: f64, lp: f64, epsilon: f64) -> Result<f64> {
    if !(base > 0.0) {
        return Err(Error::Domain(format!("base length {base} must be positive")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon {epsilon} must be positive")));
    }
    let len = base + epsilon * lp;
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::Domain(format!(
            "slit length {base} + {epsilon} * {lp} = {len} is not positive"
        )));
    }
    Ok(len)
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Truncated input channel.
    Trunk,
    Slit(Side),
    /// Truncated output channel above a slit.
    Channel(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub region: Region,
    pub rect: Rect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceKind {
    /// Vertical section of the trunk carrying the incident wave.
    Inlet,
    /// Horizontal section of an output channel, outgoing only.
    Outlet(Side),
}

/// Straight segment from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        ((self.b[0] - self.a[0]).powi(2) + (self.b[1] - self.a[1]).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationFace {
    pub kind: FaceKind,
    pub segment: Segment,
}

/// An interface between two pieces, named by their indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub segment: Segment,
    pub pieces: [usize; 2],
}

/// Truncation of the unbounded domain into axis-aligned rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDescription {
    pub config: WaveguideConfig,
    pub rectangles: Vec<Piece>,
    pub truncation_faces: Vec<TruncationFace>,
    pub interface_segments: Vec<Interface>,
    pub trunc_h: f64,
    pub trunc_v: f64,
}

impl DomainDescription {
    pub fn piece(&self, region: Region) -> Option<&Piece> {
        self.rectangles.iter().find(|p| p.region == region)
    }

    pub fn total_area(&self) -> f64 {
        self.rectangles.iter().map(|p| p.rect.area()).sum()
    }

    pub fn face(&self, kind: FaceKind) -> Option<&TruncationFace> {
        self.truncation_faces.iter().find(|f| f.kind == kind)
    }
}

/// Default distance from the wall to the inlet section: `|p_min - wall_x| + 2`.
pub fn default_trunc_h(config: &WaveguideConfig) -> f64 {
    config.wall_x - config.p_plus.min(config.p_minus) + 2.0
}

pub const DEFAULT_TRUNC_V: f64 = 2.0;

/// Builds the five-rectangle decomposition with the inlet at
/// `x = wall_x - trunc_h` and the outlets `trunc_v` above each slit top.
pub fn build_domain(config: &WaveguideConfig, trunc_h: f64, trunc_v: f64) -> Result<DomainDescription> {
    config.validate().map_err(|e| Error::Geometry(e.to_string()))?;
    let eps = config.epsilon;
    if (config.p_plus - config.p_minus).abs() < 1.0 {
        return Err(Error::Geometry(format!(
            "output channels overlap: |p_plus - p_minus| = {} < 1",
            (config.p_plus - config.p_minus).abs()
        )));
    }
    for side in Side::BOTH {
        let right = config.p(side) + 0.5 * eps;
        if right > config.wall_x + FLUSH_TOL {
            return Err(Error::Geometry(format!(
                "slit {} spans up to x = {right}, past the end wall x = {}",
                side.label(),
                config.wall_x
            )));
        }
    }
    if !(trunc_v >= 1.0) {
        return Err(Error::Geometry(format!("trunc_v = {trunc_v} must be >= 1")));
    }
    let x_in = config.wall_x - trunc_h;
    let leftmost = config.p_plus.min(config.p_minus) - 0.5 * eps;
    if !(leftmost - x_in >= 1.0) {
        return Err(Error::Geometry(format!(
            "inlet section at x = {x_in} is closer than 1 to the slit edge at x = {leftmost}"
        )));
    }

    let mut rectangles = vec![Piece {
        region: Region::Trunk,
        rect: Rect::new(x_in, config.wall_x, 0.0, 1.0),
    }];
    let mut faces = vec![TruncationFace {
        kind: FaceKind::Inlet,
        segment: Segment {
            a: [x_in, 0.0],
            b: [x_in, 1.0],
        },
    }];
    let mut interfaces = Vec::new();
    for side in Side::BOTH {
        let p = config.p(side);
        let top = 1.0 + config.slit_length(side)?;
        let slit = rectangles.len();
        rectangles.push(Piece {
            region: Region::Slit(side),
            rect: Rect::new(p - 0.5 * eps, p + 0.5 * eps, 1.0, top),
        });
        rectangles.push(Piece {
            region: Region::Channel(side),
            rect: Rect::new(p - 0.5, p + 0.5, top, top + trunc_v),
        });
        faces.push(TruncationFace {
            kind: FaceKind::Outlet(side),
            segment: Segment {
                a: [p - 0.5, top + trunc_v],
                b: [p + 0.5, top + trunc_v],
            },
        });
        interfaces.push(Interface {
            segment: Segment {
                a: [p - 0.5 * eps, 1.0],
                b: [p + 0.5 * eps, 1.0],
            },
            pieces: [0, slit],
        });
        interfaces.push(Interface {
            segment: Segment {
                a: [p - 0.5 * eps, top],
                b: [p + 0.5 * eps, top],
            },
            pieces: [slit, slit + 1],
        });
    }
    Ok(DomainDescription {
        config: *config,
        rectangles,
        truncation_faces: faces,
        interface_segments: interfaces,
        trunc_h,
        trunc_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonant_length_examples() {
        assert!((resonant_length(0.8 * PI, 1).unwrap() - 1.25).abs() < 1e-15);
        assert!((resonant_length(PI / 2.0, 2).unwrap() - 4.0).abs() < 1e-15);
        assert!((resonant_length(0.8 * PI, 2).unwrap() - 2.5).abs() < 1e-15);
        assert!(resonant_length(PI, 1).is_err());
        assert!(resonant_length(0.0, 1).is_err());
        assert!(resonant_length(1.0, 0).is_err());
    }

    #[test]
    fn resonant_length_is_integer_multiple() {
        for &omega in &[0.1, 0.3 * PI, 1.7, 0.99 * PI] {
            for m in 1..6 {
                let l = resonant_length(omega, m).unwrap();
                let k = l * omega / PI;
                assert!((k - k.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slit_length_examples() {
        assert_eq!(slit_length(1.25, 0.0, 0.05).unwrap(), 1.25);
        assert!((slit_length(1.25, -2.0, 0.05).unwrap() - 1.15).abs() < 1e-15);
        assert!(slit_length(1.25, -30.0, 0.05).is_err());
        assert!(slit_length(1.25, 0.0, 0.0).is_err());
    }

    #[test]
    fn reference_domain_has_five_rectangles() {
        let cfg = WaveguideConfig::reference();
        let d = build_domain(&cfg, default_trunc_h(&cfg), DEFAULT_TRUNC_V).unwrap();
        assert_eq!(d.rectangles.len(), 5);
        assert_eq!(d.truncation_faces.len(), 3);
        assert_eq!(d.interface_segments.len(), 4);
        for i in &d.interface_segments {
            assert!((i.segment.length() - cfg.epsilon).abs() < 1e-14);
        }
        let inlet = d.face(FaceKind::Inlet).unwrap();
        assert!((inlet.segment.a[0] + 4.5).abs() < 1e-14);
    }

    #[test]
    fn area_is_sum_of_parts() {
        let cfg = WaveguideConfig::reference();
        let d = build_domain(&cfg, 5.0, 2.0).unwrap();
        let l_p = cfg.slit_length(Side::Plus).unwrap();
        let l_m = cfg.slit_length(Side::Minus).unwrap();
        let expected = 5.0 + cfg.epsilon * (l_p + l_m) + 2.0 * 2.0;
        assert!((d.total_area() - expected).abs() < 1e-12);
    }

    #[test]
    fn interfaces_touch_both_pieces() {
        let cfg = WaveguideConfig::reference();
        let d = build_domain(&cfg, 4.5, 2.0).unwrap();
        for i in &d.interface_segments {
            for &k in &i.pieces {
                let r = d.rectangles[k].rect;
                assert!(r.contains(i.segment.a[0], i.segment.a[1]));
                assert!(r.contains(i.segment.b[0], i.segment.b[1]));
            }
        }
    }

    #[test]
    fn faces_keep_distance_from_slits() {
        let cfg = WaveguideConfig::reference();
        let d = build_domain(&cfg, default_trunc_h(&cfg), DEFAULT_TRUNC_V).unwrap();
        let inlet = d.face(FaceKind::Inlet).unwrap().segment.a[0];
        for side in Side::BOTH {
            let slit = d.piece(Region::Slit(side)).unwrap().rect;
            assert!(slit.x0 - inlet >= 1.0);
            let out = d.face(FaceKind::Outlet(side)).unwrap().segment.a[1];
            assert!(out - slit.y1 >= 1.0);
        }
    }

    #[test]
    fn build_domain_is_deterministic() {
        let cfg = WaveguideConfig::reference();
        let a = build_domain(&cfg, 4.5, 2.0).unwrap();
        let b = build_domain(&cfg, 4.5, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn geometry_errors() {
        let mut cfg = WaveguideConfig::reference();
        cfg.p_plus = cfg.p_minus;
        assert!(build_domain(&cfg, 5.0, 2.0).is_err());

        let mut cfg = WaveguideConfig::reference();
        cfg.epsilon = 3.0;
        assert!(build_domain(&cfg, 8.0, 2.0).is_err());

        // centred on the wall: fine for the model, not meshable
        let mut cfg = WaveguideConfig::reference();
        cfg.p_plus = 0.0;
        assert!(cfg.validate().is_ok());
        assert!(matches!(build_domain(&cfg, 5.0, 2.0), Err(Error::Geometry(_))));

        let cfg = WaveguideConfig::reference();
        assert!(build_domain(&cfg, 2.0, 2.0).is_err());
        assert!(build_domain(&cfg, 5.0, 0.5).is_err());
    }

    #[test]
    fn validation_rejects_multimode_and_bad_orders() {
        let mut cfg = WaveguideConfig::reference();
        cfg.omega = 1.5 * PI;
        assert!(cfg.validate().is_err());
        let mut cfg = WaveguideConfig::reference();
        cfg.m_minus = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = WaveguideConfig::reference();
        cfg.p_minus = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flush_detection() {
        let cfg = WaveguideConfig::reference();
        assert!(cfg.is_flush(Side::Plus));
        assert!(!cfg.is_flush(Side::Minus));
        assert_eq!(cfg.model_abscissa(Side::Plus), 0.0);
        assert_eq!(cfg.model_abscissa(Side::Minus), -2.5);
        let mut paper = cfg;
        paper.p_plus = 0.0;
        assert!(paper.is_flush(Side::Plus));
    }
}
