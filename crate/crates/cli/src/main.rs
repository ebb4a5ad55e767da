//! `ldesval` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ldesval::harness::{
    decarbonization_curve, prepare_point, run_sweep, write_curve, SweepOptions, SweepSpec,
};
use ldesval::model::build_model;
use ldesval::solver::{solve, verify_certificate};
use ldesval::system::validate_system;
use ldesval::value::{decompose_value, reconstruct_soc, ValueReport};
use ldesval::SolveOptions;

#[derive(Parser)]
#[command(name = "ldesval", version, about = "Value long-duration storage with linked representative periods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Sweep spec (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the spec's clustering seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Solver feasibility and gap tolerance.
    #[arg(long, default_value_t = 1e-8)]
    solver_tol: f64,
}

#[derive(Args, Clone)]
struct Output {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check the spec, the base system and every grid point without solving.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Solve one grid point and print its value report.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Grid point index.
        #[arg(long, default_value_t = 0)]
        point: usize,
        /// Also write the LP as free MPS.
        #[arg(long)]
        dump_lp: bool,
    },
    /// Run the whole grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
        /// Directory for per-point MPS dumps.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Run the spec's decarbonization curve.
    Curve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Rebuild the full-year state of charge of one grid point.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        point: usize,
    },
}

fn load(common: &Common) -> Result<(SweepSpec, ldesval::EnergySystem)> {
    let mut spec = SweepSpec::load(&common.config).with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    let base = spec.load_base()?;
    let report = validate_system(&base);
    if !report.is_empty() {
        for v in &report.violations {
            log::error!("{v}");
        }
        bail!("base system has {} validation errors", report.violations.len());
    }
    spec.validate(&base)?;
    Ok((spec, base))
}

fn solve_options(common: &Common) -> Result<SolveOptions> {
    if !(common.solver_tol > 0.0 && common.solver_tol < 1.0) {
        bail!("--solver-tol must be in (0, 1), got {}", common.solver_tol);
    }
    Ok(SolveOptions {
        tolerance: common.solver_tol,
        ..Default::default()
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn print_value(v: &ValueReport) {
    println!("total_value    {:.3}", v.total_value);
    println!("energy_value   {:.3}", v.energy_value);
    println!("capacity_value {:.3}", v.capacity_value);
    println!("residual       {:.3}", v.residual);
    if v.degenerate {
        println!("(degenerate dual; value from a perturbed re-solve)");
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { common } => {
            let (spec, base) = load(&common)?;
            let points = spec.points()?;
            for p in &points {
                prepare_point(&base, &spec, p)?;
            }
            println!(
                "{}: {} zones, {} resources, {} hours, {} grid points",
                spec.name,
                base.zones.len(),
                base.resources.len(),
                base.hours,
                points.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            common,
            out_dir,
            point,
            dump_lp,
        } => {
            let (spec, base) = load(&common)?;
            let options = solve_options(&common)?;
            let points = spec.points()?;
            let p = points
                .get(point)
                .with_context(|| format!("grid has {} points", points.len()))?;
            let prepared = prepare_point(&base, &spec, p)?;
            let model = build_model(&prepared.system, &prepared.rps, &prepared.config)?;
            create_dir(&out_dir)?;
            if dump_lp {
                let path = out_dir.join(format!("point_{point:04}.mps"));
                ldesval::lp::export_mps(&model.lp, &path, ldesval::lp::MpsFormat::Free)?;
            }
            let s = solve(&model.lp, &options)?;
            println!("status         {}", s.status.as_str());
            if !s.is_optimal() {
                return Ok(status(false));
            }
            let cert = verify_certificate(&model.lp, &s, 1e-6);
            println!("objective      {:.6}", s.objective / prepared.config.objective_scale);
            println!("hours          {}", prepared.rps.modeled_hours());
            println!("certificate    {cert}");
            if prepared.config.forced_ldes.is_some() {
                let v = decompose_value(&model, &prepared.system, &s, &options)?;
                print_value(&v);
                v.write_csv(&out_dir.join("value.csv"))?;
            }
            Ok(status(true))
        }
        Command::Sweep {
            common,
            output,
            dump_lp,
        } => {
            let (spec, base) = load(&common)?;
            let options = SweepOptions {
                workers: output.workers,
                solve: solve_options(&common)?,
                dump_lp,
                ..Default::default()
            };
            let result = run_sweep(&spec, &base, &output.out_dir, &options)?;
            let optimal = result.rows.iter().filter(|r| r.is_optimal()).count();
            println!(
                "{optimal}/{} points optimal; results in {}",
                result.rows.len(),
                output.out_dir.display()
            );
            for r in result.rows.iter().filter(|r| !r.is_optimal()) {
                log::warn!("point {}: {} {}", r.point, r.status, r.error);
            }
            Ok(status(result.all_optimal()))
        }
        Command::Curve { common, output } => {
            let (spec, base) = load(&common)?;
            let curve = spec.curve.clone().context("spec has no [curve] section")?;
            let options = SweepOptions {
                workers: output.workers,
                solve: solve_options(&common)?,
                ..Default::default()
            };
            let rows = decarbonization_curve(&base, &spec, &curve, &options)?;
            create_dir(&output.out_dir)?;
            let path = output.out_dir.join("curve.csv");
            write_curve(&rows, &path)?;
            let optimal = rows.iter().filter(|r| r.status == "optimal").count();
            println!("{optimal}/{} curve points optimal; written to {}", rows.len(), path.display());
            Ok(status(optimal == rows.len()))
        }
        Command::Audit {
            common,
            out_dir,
            point,
        } => {
            let (spec, base) = load(&common)?;
            let options = solve_options(&common)?;
            let points = spec.points()?;
            let p = points
                .get(point)
                .with_context(|| format!("grid has {} points", points.len()))?;
            if !p.ldes_linking {
                bail!("grid point {point} has linking disabled; nothing to audit");
            }
            let prepared = prepare_point(&base, &spec, p)?;
            let model = build_model(&prepared.system, &prepared.rps, &prepared.config)?;
            let s = solve(&model.lp, &options)?;
            if !s.is_optimal() {
                println!("status {}", s.status.as_str());
                return Ok(status(false));
            }
            let traj = reconstruct_soc(&model, &prepared.system, &s, &spec.ldes)?;
            create_dir(&out_dir)?;
            traj.write_csv(&out_dir.join("soc.csv"))?;
            let log_path = out_dir.join("violations.log");
            let mut log = fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?;
            traj.write_log(&mut log)?;
            println!("energy capacity       {:.3} MWh", traj.capacity);
            println!("hourly violations     {}", traj.violations.len());
            println!("max hourly violation  {:.6}", traj.max_violation());
            println!("start-level violations {}", traj.q_violations());
            println!("cyclicity error       {:.3e}", traj.cyclicity_error());
            Ok(status(true))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
