//! Grid sweeps over the slit lengths, minimum-reflection curves and the
//! design-then-verify pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{
    beta_from_config, config_for_beta, design_for_ratio, evaluate, scattering_decoupled, AsymptoticResult, BetaPair,
};
use crate::aux_constants::{coupling_eta, AuxConstants};
use crate::error::{Error, Result};
use crate::fem::{solve_config, FemOptions, SolveStats};
use crate::geometry::{resonant_length, Side, WaveguideConfig};
use crate::ScatteringTriple;

/// `n` equispaced values on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let ok = lo.is_finite() && hi.is_finite() && n >= 1 && (n == 1 || hi > lo);
        if !ok {
            return Err(Error::Validation(format!("axis [{lo}, {hi}] with {n} points")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|k| {
                if k + 1 == self.n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / (self.n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    /// Detunings `beta+-`.
    Beta,
    /// Slit lengths `L^eps+-`.
    Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: AxisKind,
    pub plus: Axis,
    pub minus: Axis,
}

impl GridSpec {
    /// `n x n` lengths on `[pi m / omega - 10 eps, pi m / omega + 2 eps]`.
    pub fn default_lengths(config: &WaveguideConfig, n: usize) -> Result<Self> {
        let axis = |s: Side| -> Result<Axis> {
            let base = resonant_length(config.omega, config.m(s))?;
            Axis::new(base - 10.0 * config.epsilon, base + 2.0 * config.epsilon, n)
        };
        Ok(Self {
            kind: AxisKind::Length,
            plus: axis(Side::Plus)?,
            minus: axis(Side::Minus)?,
        })
    }

    pub fn beta_square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let a = Axis::new(lo, hi, n)?;
        Ok(Self {
            kind: AxisKind::Beta,
            plus: a,
            minus: a,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub beta: BetaPair,
    pub lengths: (f64, f64),
    pub asym: ScatteringTriple,
    pub fem: Option<std::result::Result<ScatteringTriple, String>>,
    pub fem_stats: Option<SolveStats>,
}

impl Cell {
    pub fn fem_ok(&self) -> Option<&ScatteringTriple> {
        self.fem.as_ref().and_then(|r| r.as_ref().ok())
    }
}

/// Rectangular table of cells; `cells[i * n_minus + j]` is at
/// `(plus_values[i], minus_values[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub grid: GridSpec,
    pub plus_values: Vec<f64>,
    pub minus_values: Vec<f64>,
    pub cells: Vec<Cell>,
}

impl SweepTable {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.minus_values.len() + j]
    }

    pub fn n_failed(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c.fem, Some(Err(_))))
            .count()
    }

    /// Largest cell-wise `|R_fem - R_asym|` over cells with a FEM result.
    pub fn max_reflection_discrepancy(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter_map(|c| c.fem_ok().map(|f| (f.r - c.asym.r).norm()))
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
    }
}

/// Configuration of one grid cell, with the length corrections set.
pub fn cell_config(config: &WaveguideConfig, aux: &AuxConstants, kind: AxisKind, vp: f64, vm: f64) -> Result<WaveguideConfig> {
    match kind {
        AxisKind::Beta => config_for_beta(&BetaPair::new(vp, vm), config, aux),
        AxisKind::Length => {
            let mut c = *config;
            for (s, v) in [(Side::Plus, vp), (Side::Minus, vm)] {
                if !(v > 0.0) {
                    return Err(Error::Domain(format!("slit {} length {v} <= 0", s.label())));
                }
                let base = resonant_length(config.omega, config.m(s))?;
                c.set_lp(s, (v - base) / config.epsilon);
            }
            Ok(c)
        }
    }
}

/// Evaluates the asymptotic model on every cell and, if `fem` is given, one
/// FEM solve per cell. Cells run on a pool of `workers` threads; FEM
/// failures are recorded in the cell.
pub fn run_sweep(
    config: &WaveguideConfig,
    aux: &AuxConstants,
    grid: &GridSpec,
    fem: Option<&FemOptions>,
    workers: usize,
) -> Result<SweepTable> {
    config.validate()?;
    aux.check_matches(config)?;
    let plus_values = grid.plus.values();
    let minus_values = grid.minus.values();
    let mut jobs = Vec::with_capacity(plus_values.len() * minus_values.len());
    for &vp in &plus_values {
        for &vm in &minus_values {
            let c = cell_config(config, aux, grid.kind, vp, vm)?;
            let a: AsymptoticResult = evaluate(&c, aux)?;
            jobs.push((c, a));
        }
    }
    let run = |(c, a): &(WaveguideConfig, AsymptoticResult)| -> Cell {
        let (fem_result, fem_stats) = match fem {
            None => (None, None),
            Some(opts) => match solve_config(c, opts) {
                Ok(r) => (Some(Ok(r.scattering)), Some(r.stats)),
                Err(e) => (Some(Err(e.to_string())), None),
            },
        };
        Cell {
            beta: a.beta,
            lengths: a.lengths,
            asym: a.scattering,
            fem: fem_result,
            fem_stats,
        }
    };
    let cells = if fem.is_some() && workers != 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Solver(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    } else {
        jobs.iter().map(run).collect()
    };
    Ok(SweepTable {
        grid: *grid,
        plus_values,
        minus_values,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Asym,
    Fem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub l_plus: f64,
    pub l_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub r_abs: f64,
    pub t_plus_abs: f64,
    pub t_minus_abs: f64,
}

impl CurvePoint {
    pub fn ratio(&self) -> f64 {
        self.t_plus_abs / self.t_minus_abs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinReflectionCurve {
    pub source: Source,
    pub points: Vec<CurvePoint>,
}

/// Per column (fixed `+` value) the cell of least `|R|`; ties go to the
/// smaller `-` value. Columns without any usable result are skipped.
pub fn extract_min_reflection_curve(table: &SweepTable, source: Source) -> Result<MinReflectionCurve> {
    if table.cells.is_empty() {
        return Err(Error::Validation("empty sweep table".into()));
    }
    let mut points = Vec::new();
    for i in 0..table.plus_values.len() {
        let mut best: Option<(&Cell, &ScatteringTriple)> = None;
        for j in 0..table.minus_values.len() {
            let cell = table.cell(i, j);
            let s = match source {
                Source::Asym => Some(&cell.asym),
                Source::Fem => cell.fem_ok(),
            };
            if let Some(s) = s {
                if best.map_or(true, |(_, b)| s.r.norm() < b.r.norm()) {
                    best = Some((cell, s));
                }
            }
        }
        if let Some((cell, s)) = best {
            points.push(CurvePoint {
                l_plus: cell.lengths.0,
                l_minus: cell.lengths.1,
                beta_plus: cell.beta.beta_plus,
                beta_minus: cell.beta.beta_minus,
                r_abs: s.r.norm(),
                t_plus_abs: s.t_plus.norm(),
                t_minus_abs: s.t_minus.norm(),
            });
        }
    }
    if points.is_empty() {
        return Err(Error::Validation(format!("no {source:?} results in the table")));
    }
    Ok(MinReflectionCurve { source, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub target_ratio: f64,
    pub beta: BetaPair,
    pub lprime: (f64, f64),
    pub lengths: (f64, f64),
    pub eta: f64,
    /// First-order prediction including the inter-slit coupling.
    pub predicted: ScatteringTriple,
    /// Prediction with the coupling neglected, which the design inverts.
    pub predicted_decoupled: ScatteringTriple,
    pub achieved: ScatteringTriple,
    pub predicted_ratio: f64,
    pub achieved_ratio: f64,
    pub slit_field_max: (f64, f64),
    pub fem_stats: SolveStats,
}

/// Designs slit lengths for `|T+|/|T-| = target_ratio` and checks them by
/// one FEM solve.
pub fn design_and_verify(
    config: &WaveguideConfig,
    aux: &AuxConstants,
    target_ratio: f64,
    fem: &FemOptions,
) -> Result<DesignReport> {
    let beta = design_for_ratio(target_ratio)?;
    if config.epsilon > 0.1 {
        return Err(Error::Regime(format!("epsilon = {} > 0.1", config.epsilon)));
    }
    aux.check_matches(config)?;
    let eta = coupling_eta(aux)?;
    let designed = config_for_beta(&beta, config, aux)?;
    debug_assert!((beta_from_config(&designed, aux)?.beta_plus - beta.beta_plus).abs() < 1e-9);
    let asym = evaluate(&designed, aux)?;
    let decoupled = scattering_decoupled(&beta, config.m_plus, config.m_minus);
    let fem_result = solve_config(&designed, fem)?;
    let achieved = fem_result.scattering;
    let field = &fem_result.field;
    let slit_max = |s: Side| field.max_abs_in(crate::geometry::Region::Slit(s)).unwrap_or(0.0);
    Ok(DesignReport {
        target_ratio,
        beta,
        lprime: (designed.lp_plus, designed.lp_minus),
        lengths: asym.lengths,
        eta,
        predicted: asym.scattering,
        predicted_decoupled: decoupled,
        achieved,
        predicted_ratio: asym.scattering.transmission_ratio(),
        achieved_ratio: achieved.transmission_ratio(),
        slit_field_max: (slit_max(Side::Plus), slit_max(Side::Minus)),
        fem_stats: fem_result.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn aux_for(c: &WaveguideConfig) -> AuxConstants {
        let w = c.omega;
        AuxConstants {
            c_xi: 0.462,
            g_const: Complex64::new(-0.55, 1.0 / w),
            gamma_plus: Complex64::new(-0.26, 1.0 / w),
            gamma_minus: Complex64::new(-0.13, 1.0 / w),
            gamma_tilde: Complex64::new(0.0, 1.0 / w),
            omega: w,
            p_plus: c.model_abscissa(Side::Plus),
            p_minus: c.model_abscissa(Side::Minus),
            tolerance: 1e-6,
        }
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis::new(0.0, 1.0, 3).unwrap().values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Axis::new(2.0, 2.0, 1).unwrap().values(), vec![2.0]);
        assert!(Axis::new(1.0, 0.0, 3).is_err());
        assert!(Axis::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn asymptotic_sweep_exact_energy() {
        let c = WaveguideConfig::reference();
        let aux = aux_for(&c);
        let grid = GridSpec::default_lengths(&c, 5).unwrap();
        let t = run_sweep(&c, &aux, &grid, None, 1).unwrap();
        assert_eq!(t.cells.len(), 25);
        assert!(t.cells.iter().all(|c| c.asym.energy_residual < 1e-12 && c.fem.is_none()));
        // length axes are reproduced
        for i in 0..5 {
            for j in 0..5 {
                let cell = t.cell(i, j);
                assert!((cell.lengths.0 - t.plus_values[i]).abs() < 1e-12);
                assert!((cell.lengths.1 - t.minus_values[j]).abs() < 1e-12);
            }
        }
        assert_eq!(t, run_sweep(&c, &aux, &grid, None, 1).unwrap());
    }

    #[test]
    fn decoupled_curve_follows_hyperbola() {
        // eta = 0 constants: the model reduces to the decoupled formulas
        let c = WaveguideConfig::reference();
        let aux = aux_for(&c);
        let grid = GridSpec::beta_square(-5.0, 5.0, 41).unwrap();
        let t = run_sweep(&c, &aux, &grid, None, 1).unwrap();
        let curve = extract_min_reflection_curve(&t, Source::Asym).unwrap();
        assert_eq!(curve.points.len(), 41);
        let step = 0.25;
        let (mut above, mut below) = (false, false);
        for p in &curve.points {
            if p.beta_plus.abs() >= 0.5 && p.beta_plus.abs() <= 4.0 {
                // |beta-| on the curve is 1/|beta+|; allow one grid step
                assert!((p.beta_minus + 1.0 / p.beta_plus).abs() <= step, "{p:?}");
            }
            let energy = p.t_plus_abs.powi(2) + p.t_minus_abs.powi(2);
            if p.r_abs < 0.05 {
                assert!((energy - 1.0).abs() < 0.01);
            }
            above |= p.ratio() > 1.0;
            below |= p.ratio() < 1.0;
        }
        assert!(above && below);
    }

    #[test]
    fn single_column_and_ties() {
        let c = WaveguideConfig::reference();
        let aux = aux_for(&c);
        let grid = GridSpec {
            kind: AxisKind::Beta,
            plus: Axis::new(1.0, 1.0, 1).unwrap(),
            minus: Axis::new(-3.0, 1.0, 5).unwrap(),
        };
        let t = run_sweep(&c, &aux, &grid, None, 1).unwrap();
        let curve = extract_min_reflection_curve(&t, Source::Asym).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert!((curve.points[0].beta_minus + 1.0).abs() < 1e-12);
        assert!(extract_min_reflection_curve(&t, Source::Fem).is_err());

        // identical |R| in a column: smaller minus value wins
        let mut tied = t.clone();
        for cell in &mut tied.cells {
            cell.asym = ScatteringTriple::new(Complex64::new(0.5, 0.0), 0.5.into(), 0.5.into());
        }
        let curve = extract_min_reflection_curve(&tied, Source::Asym).unwrap();
        assert!((curve.points[0].beta_minus + 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_table_rejected() {
        let c = WaveguideConfig::reference();
        let t = SweepTable {
            grid: GridSpec::beta_square(0.0, 1.0, 2).unwrap(),
            plus_values: vec![],
            minus_values: vec![],
            cells: vec![],
        };
        let _ = c;
        assert!(extract_min_reflection_curve(&t, Source::Asym).is_err());
    }

    #[test]
    fn design_preconditions() {
        let c = WaveguideConfig::reference();
        let aux = aux_for(&c);
        let fem = FemOptions::default();
        assert!(matches!(design_and_verify(&c, &aux, 0.0, &fem), Err(Error::Domain(_))));
        assert!(matches!(design_and_verify(&c, &aux, -2.0, &fem), Err(Error::Domain(_))));
        let mut off = c;
        off.p_minus = -2.0;
        let aux_off = aux_for(&off);
        assert!(matches!(design_and_verify(&off, &aux_off, 1.0, &fem), Err(Error::Regime(_))));
    }
}
