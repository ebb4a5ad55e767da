//! LDES marginal value, its energy/capacity breakdown, and the full-year
//! state-of-charge audit.

mod soc;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::model::BuiltModel;
use crate::solver::{solve, Solution, SolveOptions, SolveStatus, SolverError};
use crate::system::{EnergySystem, ResourceKind};

pub use soc::{reconstruct_soc, SocTrajectory, SocViolation};

#[derive(Debug, Error)]
pub enum ValueError {
    #[error("model has no row '{0}'")]
    MissingRow(String),
    #[error("resource '{0}' has no inter-period state of charge")]
    LinkingNotEnabled(String),
    #[error("solution is not optimal: {}", .0.as_str())]
    NotOptimal(SolveStatus),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Marginal value of the forced resource, $/MW-yr.
#[derive(Debug, Clone)]
pub struct MarginalValue {
    pub total: f64,
    /// The forced row's dual is not unique, so `total` is a finite difference.
    pub degenerate: bool,
    /// Step and solution of the perturbed re-solve, when one was run.
    pub perturbed: Option<(f64, Solution)>,
}

/// Value of the forced resource broken into dispatch and reserve streams,
/// $/MW-yr. `residual` absorbs everything else, so the parts always sum to
/// `total_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueReport {
    pub total_value: f64,
    pub energy_value: f64,
    pub capacity_value: f64,
    pub residual: f64,
    pub degenerate: bool,
}

fn forced(model: &BuiltModel) -> Result<(String, f64, usize), ValueError> {
    let f = model
        .config
        .forced_ldes
        .as_ref()
        .ok_or_else(|| ValueError::MissingRow("forced".into()))?;
    let row = model
        .forced_row
        .ok_or_else(|| ValueError::MissingRow(format!("forced:{}", f.resource)))?;
    Ok((f.resource.clone(), f.capacity, row))
}

fn require_optimal(solution: &Solution) -> Result<(), ValueError> {
    if solution.is_optimal() {
        Ok(())
    } else {
        Err(ValueError::NotOptimal(solution.status))
    }
}

/// Perturbation used for the finite-difference value.
pub fn perturbation(capacity: f64) -> f64 {
    if capacity > 0.0 {
        0.01 * capacity
    } else {
        1.0
    }
}

/// Negated dual of the forced-capacity row, $/MW-yr.
pub fn dual_value(model: &BuiltModel, solution: &Solution) -> Result<f64, ValueError> {
    require_optimal(solution)?;
    let (_, _, row) = forced(model)?;
    Ok(-solution.duals[row] / model.config.objective_scale)
}

/// `(objective(K) - objective(K + δ)) / δ` from a re-solve, $/MW-yr.
pub fn finite_difference_value(
    model: &BuiltModel,
    solution: &Solution,
    options: &SolveOptions,
) -> Result<(f64, f64, Solution), ValueError> {
    require_optimal(solution)?;
    let (_, k, row) = forced(model)?;
    let delta = perturbation(k);
    let mut lp = model.lp.clone();
    lp.set_rhs(row, k + delta);
    let perturbed = solve(&lp, options)?;
    require_optimal(&perturbed)?;
    let value = (solution.objective - perturbed.objective) / (delta * model.config.objective_scale);
    Ok((value, delta, perturbed))
}

/// Marginal value of the forced resource.
///
/// At `K = 0` the capacity column sits on its lower bound, so any nonpositive
/// multiple is a valid dual and the value is taken from a re-solve instead.
pub fn ldes_marginal_value(
    model: &BuiltModel,
    solution: &Solution,
    options: &SolveOptions,
) -> Result<MarginalValue, ValueError> {
    let (_, k, _) = forced(model)?;
    if k > 0.0 {
        return Ok(MarginalValue {
            total: dual_value(model, solution)?,
            degenerate: false,
            perturbed: None,
        });
    }
    let (total, delta, perturbed) = finite_difference_value(model, solution, options)?;
    Ok(MarginalValue {
        total,
        degenerate: true,
        perturbed: Some((delta, perturbed)),
    })
}

/// Marginal value with a two-sided degeneracy screen.
///
/// Besides `K = 0`, the forced row's dual is also non-unique where the value
/// curve has a kink. Re-solving at `K - δ` and `K + δ` exposes the kink as
/// one-sided values that differ by more than `rel_tol`; such points are
/// flagged and valued by the forward difference.
pub fn screened_marginal_value(
    model: &BuiltModel,
    solution: &Solution,
    options: &SolveOptions,
    rel_tol: f64,
) -> Result<MarginalValue, ValueError> {
    let (_, k, row) = forced(model)?;
    if k == 0.0 {
        return ldes_marginal_value(model, solution, options);
    }
    let (right, delta, perturbed) = finite_difference_value(model, solution, options)?;
    let mut lp = model.lp.clone();
    lp.set_rhs(row, k - delta);
    let below = solve(&lp, options)?;
    require_optimal(&below)?;
    let left = (below.objective - solution.objective) / (delta * model.config.objective_scale);
    if (left - right).abs() <= rel_tol * left.abs().max(right.abs()).max(1.0) {
        return Ok(MarginalValue {
            total: dual_value(model, solution)?,
            degenerate: false,
            perturbed: None,
        });
    }
    Ok(MarginalValue {
        total: right,
        degenerate: true,
        perturbed: Some((delta, perturbed)),
    })
}

/// Splits the marginal value into energy arbitrage and reserve contribution.
///
/// Duals already carry the timestep weights, so each stream is the dual-priced
/// dispatch of the forced resource divided by its capacity.
pub fn decompose_value(
    model: &BuiltModel,
    system: &EnergySystem,
    solution: &Solution,
    options: &SolveOptions,
) -> Result<ValueReport, ValueError> {
    let marginal = ldes_marginal_value(model, solution, options)?;
    let (id, k, _) = forced(model)?;
    let (sol, norm) = match &marginal.perturbed {
        Some((delta, s)) => (s, *delta),
        None => (solution, k),
    };
    let (energy_value, capacity_value) = dispatch_streams(model, system, &id, sol);
    let scale = model.config.objective_scale * norm;
    let energy_value = energy_value / scale;
    let capacity_value = capacity_value / scale;
    Ok(ValueReport {
        total_value: marginal.total,
        energy_value,
        capacity_value,
        residual: marginal.total - energy_value - capacity_value,
        degenerate: marginal.degenerate,
    })
}

/// Dual-priced energy and reserve revenue of one storage resource, in
/// objective units.
fn dispatch_streams(model: &BuiltModel, system: &EnergySystem, id: &str, sol: &Solution) -> (f64, f64) {
    let r = system.resource(id).expect("forced resource exists");
    debug_assert_eq!(r.kind, ResourceKind::Storage);
    let col = |family: &str, t: usize| model.var(family, id, t).map_or(0.0, |j| sol.primal[j]);
    let n_t = model.n_timesteps();

    let mut energy = 0.0;
    if let Some(rows) = model.cons.get("balance", &r.zone) {
        for t in 0..n_t {
            energy += sol.duals[rows.at(t)] * (col("dis", t) - col("chg", t));
        }
    }

    let mut capacity = 0.0;
    let region = system
        .crm_regions()
        .into_iter()
        .find(|(_, zones)| zones.iter().any(|&z| system.zones[z].id == r.zone))
        .map(|(name, _)| name);
    if let Some(rows) = region.and_then(|name| model.cons.get("crm", &name)) {
        for t in 0..n_t {
            let net = col("dis", t) + col("vdis", t) - col("vchg", t) - col("chg", t);
            capacity += sol.duals[rows.at(t)] * r.crm_derate * net;
        }
    }
    (energy, capacity)
}

impl ValueReport {
    pub const CSV_HEADER: &'static str = "total_value,energy_value,capacity_value,residual,degenerate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.total_value, self.energy_value, self.capacity_value, self.residual, self.degenerate
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ValueError> {
        write_file(path, |f| {
            writeln!(f, "{}", Self::CSV_HEADER)?;
            writeln!(f, "{}", self.csv_row())
        })
    }
}

pub(crate) fn write_file(
    path: &Path,
    body: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<(), ValueError> {
    let io = |source| ValueError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io)
}
