//! Acceptance gate. Runs without the libtest harness so that every criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use slitguide::asymptotic::{
    amplitude_residual, config_for_beta, design_for_ratio, scattering_decoupled, scattering_eta,
    scattering_first_order, solve_amplitudes, AmplitudePair, BetaPair,
};
use slitguide::aux_constants::{
    compute_c_xi, compute_g_const, compute_gamma, AuxConstants, AuxOptions, DEFAULT_N_TERMS,
};
use slitguide::fem::{solve_closed_channel, solve_config, FemOptions};
use slitguide::geometry::{default_trunc_h, WaveguideConfig, DEFAULT_TRUNC_V};
use slitguide::sweep::{design_and_verify, extract_min_reflection_curve, run_sweep, GridSpec, Source, SweepTable};
use slitguide::ScatteringTriple;

// Pinned tolerances.
const LEMMA_TOL: f64 = 1e-6;
const RECIPROCITY_TOL: f64 = 1e-10;
const C_XI_CROSS_TOL: f64 = 1e-4;
const ENERGY_EXACT_TOL: f64 = 1e-12;
const ZERO_R_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-12;
const AMPLITUDE_TOL: f64 = 1e-12;
const DEGENERATE_TOL: f64 = 1e-15;
const NO_SLIT_TOL: f64 = 1e-6;
const FEM_ENERGY_TOL: f64 = 1e-2;
const UNTUNED_MIN_R: f64 = 0.9;
const SWEEP_MAX_MIN_R: f64 = 0.1;
const DISCREPANCY_BOUND: f64 = 0.2;
const DTN_TRUNC_TOL: f64 = 1e-4;
const HALVING_TOL: f64 = 1e-3;
const MIN_ORDER: f64 = 3.0;
const DESIGN_R_MAX: f64 = 0.15;
const DESIGN_RATIO_REL: f64 = 0.25;
const RECIPROCAL_REL: f64 = 0.10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn reference_with_epsilon(epsilon: f64) -> WaveguideConfig {
    let mut c = WaveguideConfig::reference();
    c.epsilon = epsilon;
    c.p_plus = -epsilon / 2.0;
    c
}

fn reference_aux() -> AuxConstants {
    AuxConstants::for_config(&WaveguideConfig::reference(), &AuxOptions::default()).expect("reference constants")
}

fn criterion_1() -> Outcome {
    let n = DEFAULT_N_TERMS;
    let omegas = [0.3 * PI, 0.5 * PI, 0.8 * PI];
    let ps = [-4.0, -2.5, -1.0, 0.0];
    let mut worst_lemma: f64 = 0.0;
    let mut worst_recip: f64 = 0.0;
    for &w in &omegas {
        let g = compute_g_const(w, n).unwrap();
        worst_lemma = worst_lemma.max(((w * g).im - 1.0).abs());
        for &p in &ps {
            let gp = compute_gamma(w, p, p, n).unwrap();
            worst_lemma = worst_lemma.max(((w * gp).im - (w * p).cos().powi(2)).abs());
            for &q in &ps {
                if q == p {
                    continue;
                }
                let gt = compute_gamma(w, p, q, n).unwrap();
                let back = compute_gamma(w, q, p, n).unwrap();
                worst_lemma = worst_lemma.max(((w * gt).im - (w * p).cos() * (w * q).cos()).abs());
                worst_recip = worst_recip.max((gt - back).norm());
            }
        }
    }
    let c_modes = compute_c_xi(1e-6).unwrap();
    // finite element oracle, Richardson in 1/W^2 from W = 4, 8
    let (c4, c8) = (common::c_xi_truncated(4.0, 0.002, 0.3), common::c_xi_truncated(8.0, 0.002, 0.3));
    let c_box = (4.0 * c8 - c4) / 3.0;
    let cross = (c_modes - c_box).abs();
    let pass = worst_lemma <= LEMMA_TOL && worst_recip <= RECIPROCITY_TOL && cross <= C_XI_CROSS_TOL;
    outcome(
        pass,
        format!(
            "lemma max dev {worst_lemma:.2e} (tol {LEMMA_TOL:e}), reciprocity {worst_recip:.2e} (tol {RECIPROCITY_TOL:e}), \
             C_Xi modes {c_modes:.8} vs box {c_box:.8}: {cross:.2e} (tol {C_XI_CROSS_TOL:e}), imag 0 by real arithmetic"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5117);
    let mut worst_eta: f64 = 0.0;
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let b = BetaPair::new(scale * rng.random_range(-1.0..1.0), scale * rng.random_range(-1.0..1.0));
        let eta = rng.random_range(-2.0..2.0);
        let (mp, mm) = (rng.random_range(1..4), rng.random_range(1..4));
        worst_eta = worst_eta.max(scattering_eta(&b, eta, mp, mm).energy_residual);
    }
    let mut worst_first: f64 = 0.0;
    for _ in 0..10_000 {
        let w = rng.random_range(0.05..0.95) * PI;
        let (p, q) = (rng.random_range(-6.0..0.0), rng.random_range(-6.0..0.0));
        let gt = Complex64::new(rng.random_range(-1.0..1.0), (w * p).cos() * (w * q).cos()) / w;
        let b = BetaPair::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let Ok(a) = solve_amplitudes(&b, w, p, q, gt) else { continue };
        worst_first = worst_first.max(scattering_first_order(&a, w, p, q, 1, 2).energy_residual);
    }
    let pass = worst_eta <= ENERGY_EXACT_TOL && worst_first <= ENERGY_EXACT_TOL;
    outcome(
        pass,
        format!("energy defect eta-form {worst_eta:.2e}, first-order {worst_first:.2e} (tol {ENERGY_EXACT_TOL:e})"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst_r: f64 = 0.0;
    for k in 0..=120 {
        let bp = 10f64.powf(-3.0 + 6.0 * k as f64 / 120.0);
        for s in [1.0, -1.0] {
            let t = scattering_decoupled(&BetaPair::new(s * bp, -s / bp), 1, 1);
            worst_r = worst_r.max(t.r.norm());
        }
    }
    let mut worst_ratio: f64 = 0.0;
    for t in [1e-2, 1.0 / 3.0, 1.0, 3.0, 1e2] {
        let s = scattering_decoupled(&design_for_ratio(t).unwrap(), 1, 1);
        worst_ratio = worst_ratio.max((s.transmission_ratio() - t).abs() / t);
    }
    outcome(
        worst_r <= ZERO_R_TOL && worst_ratio <= RATIO_TOL,
        format!("max |R| on zero curve {worst_r:.2e} (tol {ZERO_R_TOL:e}), ratio rel err {worst_ratio:.2e} (tol {RATIO_TOL:e})"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = StdRng::seed_from_u64(44);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let w = rng.random_range(0.05..0.95) * PI;
        let (p, q) = (rng.random_range(-6.0..0.0), rng.random_range(-6.0..0.0));
        let gt = Complex64::new(rng.random_range(-1.0..1.0), (w * p).cos() * (w * q).cos()) / w;
        let b = BetaPair::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let Ok(a) = solve_amplitudes(&b, w, p, q, gt) else { continue };
        worst = worst.max(amplitude_residual(&a, &b, w, p, q, gt));
    }
    // cos(omega p) = 0 at both slits, up to the rounding of pi
    let w = 0.8 * PI;
    let (p, q) = (-0.5 * PI / w, -1.5 * PI / w);
    let gt = Complex64::new(0.2, 0.0);
    let a = solve_amplitudes(&BetaPair::new(0.7, -1.3), w, p, q, gt).unwrap();
    let s = scattering_first_order(&a, w, p, q, 1, 1);
    let exact = scattering_first_order(
        &AmplitudePair {
            a_plus: 0.0.into(),
            a_minus: 0.0.into(),
        },
        w,
        p,
        q,
        1,
        1,
    );
    let degenerate = a.a_plus.norm().max(a.a_minus.norm()).max(s.max_abs_diff(&exact));
    let exact_ok = exact.r == Complex64::new(1.0, 0.0) && exact.t_plus == 0.0.into() && exact.t_minus == 0.0.into();
    outcome(
        worst <= AMPLITUDE_TOL && degenerate <= DEGENERATE_TOL && exact_ok,
        format!(
            "max relative residual {worst:.2e} (tol {AMPLITUDE_TOL:e}), zero-cosine amplitudes {degenerate:.1e} (tol {DEGENERATE_TOL:e})"
        ),
    )
}

/// FEM tables shared between criteria 5 and 6.
struct FemRuns {
    wide: SweepTable,
    by_epsilon: Vec<(f64, f64)>,
    max_energy: f64,
    n_solves: usize,
}

fn table_energy(t: &SweepTable) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for c in &t.cells {
        match &c.fem {
            Some(Ok(s)) => {
                worst = worst.max(s.energy_residual);
                n += 1;
            }
            Some(Err(_)) => worst = f64::INFINITY,
            None => {}
        }
    }
    (worst, n)
}

/// Grid-max of `|R_fem - R_asym|` over the integer detunings in `[-4, 4]^2`.
fn discrepancy_on_subgrid(t: &SweepTable) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, bp) in t.plus_values.iter().enumerate() {
        for (j, bm) in t.minus_values.iter().enumerate() {
            let on = |v: f64| v.abs() <= 4.0 + 1e-9 && (v - v.round()).abs() < 1e-9;
            if !(on(*bp) && on(*bm)) {
                continue;
            }
            let c = t.cell(i, j);
            let d = c.fem_ok().map_or(f64::INFINITY, |f| (f.r - c.asym.r).norm());
            worst = worst.max(d);
        }
    }
    worst
}

fn fem_runs(aux: &AuxConstants) -> FemRuns {
    let opts = FemOptions::default();
    let reference = WaveguideConfig::reference();
    let wide = run_sweep(&reference, aux, &GridSpec::beta_square(-5.0, 5.0, 21).unwrap(), Some(&opts), workers())
        .expect("21x21 sweep");
    let (mut max_energy, mut n_solves) = table_energy(&wide);
    let mut by_epsilon = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        if eps == 0.05 {
            by_epsilon.push((eps, discrepancy_on_subgrid(&wide)));
            continue;
        }
        let cfg = reference_with_epsilon(eps);
        let t = run_sweep(&cfg, aux, &GridSpec::beta_square(-4.0, 4.0, 9).unwrap(), Some(&opts), workers())
            .expect("9x9 sweep");
        let (e, n) = table_energy(&t);
        max_energy = max_energy.max(e);
        n_solves += n;
        by_epsilon.push((eps, discrepancy_on_subgrid(&t)));
    }
    FemRuns {
        wide,
        by_epsilon,
        max_energy,
        n_solves,
    }
}

fn criterion_5(runs: &FemRuns) -> Outcome {
    let opts = FemOptions::default();
    let w = 0.8 * PI;
    let (closed, _) = solve_closed_channel(w, 2.0, 40, opts.n_modes).unwrap();
    let no_slit = (closed.r - Complex64::new(1.0, 0.0)).norm();

    let untuned = solve_config(&WaveguideConfig::reference(), &opts).unwrap().scattering;
    let energy = runs.max_energy.max(untuned.energy_residual);

    let table = &runs.wide;
    let failed = table.n_failed();
    let min_r = table
        .cells
        .iter()
        .filter_map(|c| c.fem_ok().map(|s| s.r.norm()))
        .fold(f64::INFINITY, f64::min);
    let curve = extract_min_reflection_curve(table, Source::Fem).unwrap();
    let ratios: Vec<f64> = curve.points.iter().map(|p| p.ratio()).collect();
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);

    let pass = no_slit <= NO_SLIT_TOL
        && energy <= FEM_ENERGY_TOL
        && untuned.r.norm() >= UNTUNED_MIN_R
        && failed == 0
        && min_r <= SWEEP_MAX_MIN_R
        && hi >= 2.0
        && lo <= 0.5;
    outcome(
        pass,
        format!(
            "(a) no-slit |R-1| {no_slit:.1e} (tol {NO_SLIT_TOL:e}); (b) max energy residual {energy:.2e} over {} solves \
             (tol {FEM_ENERGY_TOL:e}); (c) untuned |R| {:.4} (>= {UNTUNED_MIN_R}); (d) min |R| {min_r:.4} (<= {SWEEP_MAX_MIN_R}), \
             curve ratio range [{lo:.3}, {hi:.3}] (needs <= 0.5 and >= 2), {failed} failed solves",
            runs.n_solves + 2,
            untuned.r.norm()
        ),
    )
}

fn criterion_6(runs: &FemRuns) -> Outcome {
    let d: Vec<f64> = runs.by_epsilon.iter().map(|x| x.1).collect();
    let at_005 = runs.by_epsilon.iter().find(|x| x.0 == 0.05).unwrap().1;
    let monotone = d.windows(2).all(|w| w[1] < w[0]);
    let listing: Vec<String> = runs.by_epsilon.iter().map(|(e, v)| format!("eps {e}: {v:.4}")).collect();
    outcome(
        at_005 <= DISCREPANCY_BOUND && monotone,
        format!(
            "max |R_fem - R_asym| {} (bound {DISCREPANCY_BOUND} at eps 0.05, decreasing: {monotone})",
            listing.join(", ")
        ),
    )
}

fn criterion_7(aux: &AuxConstants) -> Outcome {
    let cfg = config_for_beta(&BetaPair::new(1.0, -1.0), &WaveguideConfig::reference(), aux).unwrap();
    let base_opts = FemOptions::default();
    let solve = |o: &FemOptions| -> ScatteringTriple { solve_config(&cfg, o).unwrap().scattering };
    let base = solve(&base_opts);
    let modes = solve(&FemOptions {
        n_modes: 25,
        ..base_opts
    });
    let horiz = solve(&FemOptions {
        trunc_h: Some(default_trunc_h(&cfg) + 0.5),
        ..base_opts
    });
    let vert = solve(&FemOptions {
        trunc_v: DEFAULT_TRUNC_V + 0.5,
        ..base_opts
    });
    let fine = solve(&FemOptions {
        mesh: base_opts.mesh.halved(),
        ..base_opts
    });
    let d_modes = base.max_abs_diff(&modes);
    let d_trunc = base.max_abs_diff(&horiz).max(base.max_abs_diff(&vert));
    let d_mesh = base.max_abs_diff(&fine);

    let w = 0.8 * PI;
    let err = |n: usize| {
        let (_, f) = solve_closed_channel(w, 2.0, n, 15).unwrap();
        f.mesh
            .nodes
            .iter()
            .zip(&f.values)
            .map(|(p, v)| (v - Complex64::new(2.0 * (w * p[0]).cos(), 0.0)).norm())
            .fold(0.0, f64::max)
    };
    let (e2, e4, e8) = (err(2), err(4), err(8));
    let order = (e2 / e4).log2().min((e4 / e8).log2());
    outcome(
        d_modes < DTN_TRUNC_TOL && d_trunc < DTN_TRUNC_TOL && d_mesh < HALVING_TOL && order >= MIN_ORDER,
        format!(
            "N 15->25 {d_modes:.1e}, truncation +0.5 {d_trunc:.1e} (tol {DTN_TRUNC_TOL:e}); mesh halving {d_mesh:.1e} \
             (tol {HALVING_TOL:e}); no-slit order {order:.2} (>= {MIN_ORDER})"
        ),
    )
}

fn criterion_8(aux: &AuxConstants) -> Outcome {
    let cfg = WaveguideConfig::reference();
    let opts = FemOptions::default();
    let one = design_and_verify(&cfg, aux, 1.0, &opts).unwrap();
    let three = design_and_verify(&cfg, aux, 3.0, &opts).unwrap();
    let third = design_and_verify(&cfg, aux, 1.0 / 3.0, &opts).unwrap();
    let r1 = one.achieved.r.norm();
    let rel1 = (one.achieved_ratio - 1.0).abs();
    let recip = (three.achieved_ratio * third.achieved_ratio - 1.0).abs();
    outcome(
        r1 < DESIGN_R_MAX && rel1 <= DESIGN_RATIO_REL && recip <= RECIPROCAL_REL,
        format!(
            "t=1: |R| {r1:.4} (< {DESIGN_R_MAX}), ratio {:.4} (within {DESIGN_RATIO_REL}); t=3 ratio {:.4}, t=1/3 ratio {:.4}, \
             product deviates {recip:.3} (<= {RECIPROCAL_REL})",
            one.achieved_ratio, three.achieved_ratio, third.achieved_ratio
        ),
    )
}

fn main() {
    // cargo passes libtest flags such as --nocapture or a name filter
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return;
    }
    let start = Instant::now();
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut run = |n: usize, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {n}: {} {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o, secs));
    };
    run(1, &criterion_1);
    run(2, &criterion_2);
    run(3, &criterion_3);
    run(4, &criterion_4);
    let aux = reference_aux();
    let t = Instant::now();
    let runs = fem_runs(&aux);
    println!("fem sweeps: {} solves in {:.1}s on {} workers", runs.n_solves, t.elapsed().as_secs_f64(), workers());
    run(5, &|| criterion_5(&runs));
    run(6, &|| criterion_6(&runs));
    run(7, &|| criterion_7(&aux));
    run(8, &|| criterion_8(&aux));
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
