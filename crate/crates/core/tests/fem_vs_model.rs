//! Finite element results against the asymptotic model away from the
//! reference setup, and sweep determinism.

use slitguide::asymptotic::{config_for_beta, evaluate, BetaPair};
use slitguide::aux_constants::{AuxConstants, AuxOptions};
use slitguide::fem::{solve_config, FemOptions};
use slitguide::geometry::WaveguideConfig;
use slitguide::sweep::{run_sweep, GridSpec};

/// With `cos(omega p-) = 0.31` the transmitted amplitude is `|a-|`, not
/// `|a-| cos(omega p-)`.
#[test]
fn transmission_off_the_cosine_peak() {
    let mut c = WaveguideConfig::reference();
    c.p_minus = -2.0;
    let aux = AuxConstants::for_config(&c, &AuxOptions::default()).unwrap();
    let cm = (c.omega * c.p_minus).cos();
    assert!((cm - 0.309).abs() < 1e-3);
    let tuned = config_for_beta(&BetaPair::new(0.0, 0.0), &c, &aux).unwrap();
    let model = evaluate(&tuned, &aux).unwrap();
    let fem = solve_config(&tuned, &FemOptions::default()).unwrap().scattering;
    assert!(fem.energy_residual < 1e-10);
    let (tm_fem, tm_model) = (fem.t_minus.norm(), model.scattering.t_minus.norm());
    assert!((tm_fem - tm_model).abs() < 0.02, "FEM {tm_fem} vs model {tm_model}");
    assert!((fem.r.norm() - model.scattering.r.norm()).abs() < 0.05);
    assert!(tm_fem > 2.0 * model.amplitudes.a_minus.norm() * cm.abs());
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let c = WaveguideConfig::reference();
    let aux = AuxConstants::for_config(&c, &AuxOptions::default()).unwrap();
    let grid = GridSpec::beta_square(-1.0, 1.0, 2).unwrap();
    let opts = FemOptions::default();
    let one = run_sweep(&c, &aux, &grid, Some(&opts), 1).unwrap();
    let two = run_sweep(&c, &aux, &grid, Some(&opts), 2).unwrap();
    let again = run_sweep(&c, &aux, &grid, Some(&opts), 2).unwrap();
    for ((a, b), d) in one.cells.iter().zip(&two.cells).zip(&again.cells) {
        let (fa, fb, fd) = (a.fem_ok().unwrap(), b.fem_ok().unwrap(), d.fem_ok().unwrap());
        assert!(fa.max_abs_diff(fb) < 1e-12);
        assert_eq!(fb, fd);
        assert_eq!(a.asym, b.asym);
    }
}
