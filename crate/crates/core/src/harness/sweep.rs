use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;

use super::convergence::{convergence_by_group, ConvergenceRow};
use super::point::{evaluate_point, PointOutcome, SweepRow};
use super::{io_error, HarnessError, SweepSpec};
use crate::lp::{export_mps, MpsFormat};
use crate::solver::SolveOptions;
use crate::system::EnergySystem;

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub solve: SolveOptions,
    /// Writes each point's LP as free MPS under this directory.
    pub dump_lp: Option<PathBuf>,
    /// Relative band for the convergence summary.
    pub band: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            workers: 0,
            solve: SolveOptions::default(),
            dump_lp: None,
            band: 0.10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Wall seconds per point, aligned with `rows`.
    pub wall_seconds: Vec<f64>,
    pub convergence: Vec<ConvergenceRow>,
}

impl SweepResult {
    pub fn all_optimal(&self) -> bool {
        self.rows.iter().all(SweepRow::is_optimal)
    }
}

struct Sinks {
    results: BufWriter<File>,
    timings: BufWriter<File>,
    violations: BufWriter<File>,
    paths: [PathBuf; 3],
}

impl Sinks {
    fn create(out_dir: &Path) -> Result<Sinks, HarnessError> {
        let paths = [
            out_dir.join("results.csv"),
            out_dir.join("timings.csv"),
            out_dir.join("violations.log"),
        ];
        let open = |p: &PathBuf| File::create(p).map(BufWriter::new).map_err(io_error(p));
        let mut sinks = Sinks {
            results: open(&paths[0])?,
            timings: open(&paths[1])?,
            violations: open(&paths[2])?,
            paths,
        };
        let (r, t) = (&mut sinks.results, &mut sinks.timings);
        writeln!(r, "{}", SweepRow::HEADER).map_err(io_error(&sinks.paths[0]))?;
        writeln!(t, "point,hours,wall_seconds").map_err(io_error(&sinks.paths[1]))?;
        sinks.flush()?;
        Ok(sinks)
    }

    fn append(&mut self, outcome: &PointOutcome) -> Result<(), HarnessError> {
        let row = &outcome.row;
        writeln!(self.results, "{}", row.to_csv()).map_err(io_error(&self.paths[0]))?;
        writeln!(self.timings, "{},{},{}", row.point, row.hours, outcome.wall_seconds)
            .map_err(io_error(&self.paths[1]))?;
        for line in &outcome.violations {
            writeln!(self.violations, "{line}").map_err(io_error(&self.paths[2]))?;
        }
        self.flush()
    }

    fn flush(&mut self) -> Result<(), HarnessError> {
        self.results.flush().map_err(io_error(&self.paths[0]))?;
        self.timings.flush().map_err(io_error(&self.paths[1]))?;
        self.violations.flush().map_err(io_error(&self.paths[2]))
    }
}

/// Runs every grid point and writes `results.csv`, `timings.csv`,
/// `violations.log` and `convergence.csv` under `out_dir`.
///
/// Points run in parallel; rows are appended in point order by a single
/// writer and flushed one at a time, so an interrupted sweep leaves a valid
/// prefix and a repeated sweep reproduces `results.csv` byte for byte.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &EnergySystem,
    out_dir: &Path,
    options: &SweepOptions,
) -> Result<SweepResult, HarnessError> {
    spec.validate(base)?;
    let points = spec.points()?;
    std::fs::create_dir_all(out_dir).map_err(io_error(out_dir))?;
    if let Some(dir) = &options.dump_lp {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    let mut sinks = Sinks::create(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| HarnessError::InvalidSpec(format!("worker pool: {e}")))?;
    let keep_lp = options.dump_lp.is_some();

    let (tx, rx) = mpsc::channel::<PointOutcome>();
    let mut rows = Vec::with_capacity(points.len());
    let mut wall_seconds = Vec::with_capacity(points.len());
    std::thread::scope(|scope| -> Result<(), HarnessError> {
        scope.spawn(|| {
            pool.install(|| {
                points.par_iter().for_each_with(tx, |tx, p| {
                    // The receiver only disappears after a write error.
                    let _ = tx.send(evaluate_point(base, spec, p, &options.solve, keep_lp));
                });
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for outcome in rx {
            pending.insert(outcome.row.point, outcome);
            while let Some(outcome) = pending.remove(&next) {
                if let (Some(dir), Some(lp)) = (&options.dump_lp, &outcome.lp) {
                    let path = dir.join(format!("point_{next:04}.mps"));
                    export_mps(lp, &path, MpsFormat::Free)
                        .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
                }
                sinks.append(&outcome)?;
                log::info!(
                    "point {next}: {} hours, {} in {:.2}s",
                    outcome.row.hours,
                    outcome.row.status,
                    outcome.wall_seconds
                );
                wall_seconds.push(outcome.wall_seconds);
                rows.push(outcome.row);
                next += 1;
            }
        }
        Ok(())
    })?;

    let convergence = convergence_by_group(&rows, options.band);
    let path = out_dir.join("convergence.csv");
    let mut f = File::create(&path).map(BufWriter::new).map_err(io_error(&path))?;
    writeln!(f, "{}", ConvergenceRow::HEADER).map_err(io_error(&path))?;
    for c in &convergence {
        writeln!(f, "{}", c.to_csv()).map_err(io_error(&path))?;
    }
    f.flush().map_err(io_error(&path))?;
    Ok(SweepResult {
        rows,
        wall_seconds,
        convergence,
    })
}
