use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use slitguide::asymptotic::{config_for_beta, design_for_ratio_branch, evaluate, lengths_from_beta, slit_amplitude};
use slitguide::aux_constants::{coupling_eta, AuxConstants, ConstantCache};
use slitguide::fem::solve_config;
use slitguide::geometry::Side;
use slitguide::io::{
    cache_path_from_env, curve_csv, field_pixmap, field_text, parse_config, sweep_csv, Colormap, FieldQuantity,
    PixmapSpec, RunConfig, RunManifest,
};
use slitguide::sweep::{
    design_and_verify, extract_min_reflection_curve, run_sweep, Axis, AxisKind, GridSpec, Source, SweepTable,
};
use slitguide::{Error, Result};

#[derive(Parser)]
#[command(name = "slitguide", version, about = "Thin-slit energy distributor: asymptotic design and FEM verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; a manifest is written there.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// `beta:LO:HI:N`, `length:N` (window [L - 10 eps, L + 2 eps]) or
    /// `length:LO:HI:N`.
    #[arg(long, default_value = "length:41")]
    grid: String,
    /// Also solve every cell with the finite element model.
    #[arg(long)]
    fem: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Print the epsilon-independent constants.
    Constants(Common),
    /// Leading-order asymptotic scattering coefficients.
    Asym(Common),
    /// One finite element solve.
    Fem(Common),
    /// Grid sweep over the slit lengths or detunings; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Minimum-reflection curve of a sweep; writes curve.csv.
    Curve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Slit lengths for a target ratio |T+|/|T-|.
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ratio: f64,
        /// Use the branch with negative beta_plus.
        #[arg(long)]
        negative_branch: bool,
        /// Check the design with a finite element solve.
        #[arg(long)]
        fem: bool,
    },
    /// Solve and export the field (field.txt, field.ppm).
    Field {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Quantity::Abs)]
        quantity: Quantity,
        #[arg(long, value_enum, default_value_t = Map::Hot)]
        colormap: Map,
        #[arg(long, default_value_t = 100.0)]
        pixels_per_unit: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    Abs,
    Re,
}

#[derive(Clone, Copy, ValueEnum)]
enum Map {
    Hot,
    Gray,
}

fn parse_grid(spec: &str, run: &RunConfig) -> Result<GridSpec> {
    let bad = || Error::Validation(format!("grid {spec:?}: expected beta:LO:HI:N, length:N or length:LO:HI:N"));
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let count = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match parts.as_slice() {
        ["beta", lo, hi, n] => GridSpec::beta_square(num(lo)?, num(hi)?, count(n)?),
        ["length", n] => GridSpec::default_lengths(&run.config, count(n)?),
        ["length", lo, hi, n] => {
            let a = Axis::new(num(lo)?, num(hi)?, count(n)?)?;
            Ok(GridSpec {
                kind: AxisKind::Length,
                plus: a,
                minus: a,
            })
        }
        _ => Err(bad()),
    }
}

struct Session {
    run: RunConfig,
    cache: ConstantCache,
    manifest: RunManifest,
    out: Option<PathBuf>,
}

impl Session {
    fn open(command: &str, common: &Common) -> Result<Self> {
        let run = parse_config(&common.config)?;
        let cache = match cache_path_from_env() {
            Some(p) => ConstantCache::open(p)?,
            None => ConstantCache::in_memory(),
        };
        Ok(Self {
            run,
            cache,
            manifest: RunManifest::new(command, run),
            out: common.out.clone(),
        })
    }

    fn constants(&mut self) -> Result<AuxConstants> {
        let t = Instant::now();
        let aux = self.cache.for_config(&self.run.config, &self.run.aux)?;
        self.manifest.constants.push(aux);
        self.manifest.timings.push(("constants".into(), t.elapsed().as_secs_f64()));
        Ok(aux)
    }

    fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let v = f()?;
        self.manifest.timings.push((label.into(), t.elapsed().as_secs_f64()));
        Ok(v)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let dir = self
            .out
            .clone()
            .ok_or_else(|| Error::Validation(format!("--out is required to write {name}")))?;
        self.manifest.write_output(dir.join(name), bytes)
    }

    fn finish(self, report: serde_json::Value) -> Result<()> {
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("manifest.json"), self.manifest.to_json())?;
        }
        println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
        Ok(())
    }
}

fn sweep_table(s: &mut Session, args: &SweepArgs) -> Result<SweepTable> {
    let aux = s.constants()?;
    let grid = parse_grid(&args.grid, &s.run)?;
    let fem = args.fem.then_some(s.run.fem);
    let config = s.run.config;
    s.timed("sweep", || run_sweep(&config, &aux, &grid, fem.as_ref(), args.workers.max(1)))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Constants(common) => {
            let mut s = Session::open("constants", &common)?;
            let aux = s.constants()?;
            let eta = coupling_eta(&aux).ok();
            s.finish(json!({ "constants": aux, "far_field": aux.far_field(), "eta": eta }))
        }
        Command::Asym(common) => {
            let mut s = Session::open("asym", &common)?;
            let aux = s.constants()?;
            let a = evaluate(&s.run.config, &aux)?;
            let amp = slit_amplitude(&a.amplitudes, s.run.config.epsilon);
            s.finish(json!({
                "beta": a.beta,
                "amplitudes": a.amplitudes,
                "slit_amplitude": amp,
                "lengths": a.lengths,
                "scattering": a.scattering,
            }))
        }
        Command::Fem(common) => {
            let mut s = Session::open("fem", &common)?;
            let (config, opts) = (s.run.config, s.run.fem);
            let r = s.timed("fem", || solve_config(&config, &opts))?;
            s.finish(json!({ "scattering": r.scattering, "stats": r.stats }))
        }
        Command::Sweep { common, sweep } => {
            let mut s = Session::open("sweep", &common)?;
            let table = sweep_table(&mut s, &sweep)?;
            let csv = sweep_csv(&table, &s.manifest.run_id);
            s.write("sweep.csv", csv.as_bytes())?;
            let discrepancy = table.max_reflection_discrepancy();
            s.finish(json!({
                "cells": table.cells.len(),
                "fem_failures": table.n_failed(),
                "max_reflection_discrepancy": discrepancy,
                "grid": table.grid,
            }))
        }
        Command::Curve { common, sweep } => {
            let mut s = Session::open("curve", &common)?;
            let table = sweep_table(&mut s, &sweep)?;
            let source = if sweep.fem { Source::Fem } else { Source::Asym };
            let curve = extract_min_reflection_curve(&table, source)?;
            let csv = curve_csv(&curve, &s.manifest.run_id);
            s.write("curve.csv", csv.as_bytes())?;
            let min_r = curve.points.iter().map(|p| p.r_abs).fold(f64::INFINITY, f64::min);
            s.finish(json!({ "points": curve.points.len(), "min_r_abs": min_r, "grid": table.grid }))
        }
        Command::Design {
            common,
            ratio,
            negative_branch,
            fem,
        } => {
            let mut s = Session::open("design", &common)?;
            let aux = s.constants()?;
            let config = s.run.config;
            if fem {
                let opts = s.run.fem;
                let report = s.timed("design", || design_and_verify(&config, &aux, ratio, &opts))?;
                let value = serde_json::to_value(&report).expect("plain data");
                if s.out.is_some() {
                    s.write("design.json", value.to_string().as_bytes())?;
                }
                s.finish(value)
            } else {
                let beta = design_for_ratio_branch(ratio, negative_branch)?;
                let designed = config_for_beta(&beta, &config, &aux)?;
                let lengths = lengths_from_beta(&beta, &config, &aux)?;
                s.finish(json!({
                    "target_ratio": ratio,
                    "beta": beta,
                    "lprime": [designed.lp(Side::Plus), designed.lp(Side::Minus)],
                    "lengths": lengths,
                }))
            }
        }
        Command::Field {
            common,
            quantity,
            colormap,
            pixels_per_unit,
        } => {
            let mut s = Session::open("field", &common)?;
            if s.out.is_none() {
                return Err(Error::Validation("field needs --out".into()));
            }
            let (config, opts) = (s.run.config, s.run.fem);
            let r = s.timed("fem", || solve_config(&config, &opts))?;
            let spec = PixmapSpec {
                pixels_per_unit,
                colormap: match colormap {
                    Map::Hot => Colormap::Hot,
                    Map::Gray => Colormap::Gray,
                },
                quantity: match quantity {
                    Quantity::Abs => FieldQuantity::Modulus,
                    Quantity::Re => FieldQuantity::Real,
                },
            };
            let text = field_text(&r.field, &s.manifest.run_id);
            s.write("field.txt", text.as_bytes())?;
            let img = field_pixmap(&r.field, &spec)?;
            s.write("field.ppm", &img)?;
            let slit_max = |side| r.field.max_abs_in(slitguide::geometry::Region::Slit(side));
            s.finish(json!({
                "scattering": r.scattering,
                "max_abs": r.field.max_abs(),
                "slit_max_abs": [slit_max(Side::Plus), slit_max(Side::Minus)],
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
