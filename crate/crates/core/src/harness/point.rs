use std::fmt::Write as _;
use std::time::Instant;

use super::{HarnessError, SweepSpec};
use crate::lp::LinearProgram;
use crate::model::{build_model, BuiltModel, ForcedLdes, ModelConfig};
use crate::solver::{solve, verify_certificate, Solution, SolveOptions};
use crate::system::{aggregate_zones, EmissionsPolicy, EnergySystem};
use crate::tdr::{build_reduction, PeriodPartition, RepresentativePeriodSet};
use crate::value::{decompose_value, reconstruct_soc, ValueReport};

/// One combination of axis values. `None` keeps the base system's value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub n_periods: usize,
    pub period_length: usize,
    pub zone_grouping: String,
    pub ldes_linking: bool,
    pub virtual_discharge: bool,
    /// Index into the spec's cost cases.
    pub cost_case: usize,
    pub duration: Option<f64>,
    pub capacity: Option<f64>,
    pub rte: Option<f64>,
    pub emissions: Option<EmissionsPolicy>,
}

/// System, reduction and model options of one grid point.
#[derive(Debug, Clone)]
pub struct PreparedPoint {
    pub system: EnergySystem,
    pub rps: RepresentativePeriodSet,
    pub config: ModelConfig,
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub n_periods: usize,
    pub period_length: usize,
    /// Operational hours modeled: periods times period length.
    pub hours: usize,
    pub zone_grouping: String,
    pub ldes_linking: bool,
    pub virtual_discharge: bool,
    pub cost_case: String,
    pub duration: Option<f64>,
    pub capacity: Option<f64>,
    pub rte: Option<f64>,
    pub emissions: String,
    /// Solver status, or `error`.
    pub status: String,
    pub objective: Option<f64>,
    pub value: Option<ValueReport>,
    pub certificate_passed: Option<bool>,
    /// Hourly state-of-charge violations in the reconstructed year.
    pub soc_violations: Option<usize>,
    pub max_soc_violation: Option<f64>,
    /// Start-of-period levels outside their bounds.
    pub q_violations: Option<usize>,
    /// Gap between the year-end and year-start levels, MWh.
    pub cyclicity_error: Option<f64>,
    pub error: String,
}

impl SweepRow {
    pub const HEADER: &'static str = "point,n_periods,period_length,hours,zone_grouping,\
ldes_linking,virtual_discharge,cost_case,duration,capacity,rte,emissions,status,objective,\
total_value,energy_value,capacity_value,residual,value_degenerate,certificate,soc_violations,\
max_soc_violation,q_violations,cyclicity_error,error";

    pub fn is_optimal(&self) -> bool {
        self.status == "optimal"
    }

    pub fn total_value(&self) -> Option<f64> {
        self.value.as_ref().map(|v| v.total_value)
    }

    pub fn to_csv(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let keep = |v: &Option<f64>| v.map_or_else(|| "base".to_string(), |x| x.to_string());
        let mut s = String::new();
        let v = self.value.as_ref();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.point,
            self.n_periods,
            self.period_length,
            self.hours,
            self.zone_grouping,
            self.ldes_linking,
            self.virtual_discharge,
            self.cost_case,
            keep(&self.duration),
            opt(&self.capacity),
            keep(&self.rte),
            self.emissions,
            self.status,
            opt(&self.objective),
            opt(&v.map(|v| v.total_value)),
            opt(&v.map(|v| v.energy_value)),
            opt(&v.map(|v| v.capacity_value)),
            opt(&v.map(|v| v.residual)),
            opt(&v.map(|v| v.degenerate)),
            opt(&self.certificate_passed),
            opt(&self.soc_violations),
            opt(&self.max_soc_violation),
            opt(&self.q_violations),
            opt(&self.cyclicity_error),
            self.error.replace([',', '\n', '\r'], ";"),
        )
        .expect("write to string");
        s
    }
}

/// Everything produced by one grid point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub row: SweepRow,
    pub wall_seconds: f64,
    /// Violation lines for `violations.log`.
    pub violations: Vec<String>,
    pub lp: Option<LinearProgram>,
}

/// Applies a grid point to the base system and picks representative periods.
pub fn prepare_point(
    base: &EnergySystem,
    spec: &SweepSpec,
    point: &GridPoint,
) -> Result<PreparedPoint, HarnessError> {
    let grouping = spec.grouping(&point.zone_grouping, base)?;
    let mut system = if point.zone_grouping == "identity" {
        base.clone()
    } else {
        aggregate_zones(base, &grouping).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?
    };
    let case = &spec.grid.cost_cases[point.cost_case];
    for (id, factor) in &case.factors {
        if let Some(r) = system.resource_mut(id) {
            r.fixed_cost *= factor;
            r.energy_cost *= factor;
        }
    }
    let ldes = system
        .resource_mut(&spec.ldes)
        .and_then(|r| r.storage.as_mut())
        .ok_or_else(|| HarnessError::InvalidSpec(format!("no storage resource '{}'", spec.ldes)))?;
    if let Some(d) = point.duration {
        ldes.duration = Some(d);
    }
    if let Some(rte) = point.rte {
        ldes.set_round_trip_efficiency(rte);
    }
    let duration = ldes.duration;
    if let Some(policy) = point.emissions {
        system.emissions_policy = policy;
    }

    let tau = if point.period_length == 0 {
        system.hours
    } else {
        point.period_length
    };
    let partition =
        PeriodPartition::new(system.hours, tau).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
    let k = if point.n_periods == 0 {
        partition.n_input_periods
    } else {
        point.n_periods
    };
    let rps = if k == partition.n_input_periods {
        RepresentativePeriodSet::identity(partition)
    } else {
        build_reduction(&system, tau, k, spec.seed).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?
    };

    let forced_ldes = point.capacity.map(|capacity| ForcedLdes {
        resource: spec.ldes.clone(),
        capacity,
        duration: duration.unwrap_or(200.0),
    });
    let config = ModelConfig {
        ldes_linking: point.ldes_linking,
        virtual_discharge: point.virtual_discharge,
        forced_ldes,
        crm_enabled: spec.model.crm_enabled,
        objective_scale: spec.model.objective_scale,
        emissions: None,
        link_anchor: spec.model.anchor()?,
        formulation: spec.model.storage_formulation()?,
        crm_shortfall_cost: spec.model.crm_shortfall_cost,
    };
    Ok(PreparedPoint { system, rps, config })
}

/// Reduction, build, solve, certificate, value analysis and audit for one
/// grid point. Failures are recorded in the row.
pub fn evaluate_point(
    base: &EnergySystem,
    spec: &SweepSpec,
    point: &GridPoint,
    solve_options: &SolveOptions,
    keep_lp: bool,
) -> PointOutcome {
    let start = Instant::now();
    let mut row = SweepRow {
        point: point.index,
        n_periods: point.n_periods,
        period_length: point.period_length,
        hours: 0,
        zone_grouping: point.zone_grouping.clone(),
        ldes_linking: point.ldes_linking,
        virtual_discharge: point.virtual_discharge,
        cost_case: spec.grid.cost_cases[point.cost_case].name.clone(),
        duration: point.duration,
        capacity: point.capacity,
        rte: point.rte,
        emissions: point.emissions.map_or_else(|| "base".into(), |p| p.to_string()),
        status: "error".into(),
        objective: None,
        value: None,
        certificate_passed: None,
        soc_violations: None,
        max_soc_violation: None,
        q_violations: None,
        cyclicity_error: None,
        error: String::new(),
    };
    let mut violations = Vec::new();
    let mut lp = None;
    if let Err(message) = run(base, spec, point, solve_options, &mut row, &mut violations, keep_lp.then_some(&mut lp)) {
        row.status = "error".into();
        row.error = message;
    }
    PointOutcome {
        row,
        wall_seconds: start.elapsed().as_secs_f64(),
        violations,
        lp,
    }
}

fn run(
    base: &EnergySystem,
    spec: &SweepSpec,
    point: &GridPoint,
    solve_options: &SolveOptions,
    row: &mut SweepRow,
    violations: &mut Vec<String>,
    keep_lp: Option<&mut Option<LinearProgram>>,
) -> Result<(), String> {
    let prepared = prepare_point(base, spec, point).map_err(|e| e.to_string())?;
    let rps = &prepared.rps;
    row.n_periods = rps.len();
    row.period_length = rps.period_length();
    row.hours = rps.modeled_hours();
    let model = build_model(&prepared.system, rps, &prepared.config).map_err(|e| e.to_string())?;
    if let Some(slot) = keep_lp {
        *slot = Some(model.lp.clone());
    }
    let solution = solve(&model.lp, solve_options).map_err(|e| e.to_string())?;
    row.status = solution.status.as_str().to_string();
    if !solution.is_optimal() {
        return Ok(());
    }
    row.objective = Some(solution.objective);
    row.certificate_passed = Some(verify_certificate(&model.lp, &solution, 1e-6).passed);
    if model.config.forced_ldes.is_some() {
        row.value = Some(
            decompose_value(&model, &prepared.system, &solution, solve_options).map_err(|e| e.to_string())?,
        );
    }
    audit(&model, &prepared.system, &solution, &spec.ldes, row, violations)
}

fn audit(
    model: &BuiltModel,
    system: &EnergySystem,
    solution: &Solution,
    ldes: &str,
    row: &mut SweepRow,
    violations: &mut Vec<String>,
) -> Result<(), String> {
    if !model.is_linked(ldes) {
        return Ok(());
    }
    let traj = reconstruct_soc(model, system, solution, ldes).map_err(|e| e.to_string())?;
    row.soc_violations = Some(traj.violations.len());
    row.max_soc_violation = Some(traj.max_violation());
    row.q_violations = Some(traj.q_violations());
    row.cyclicity_error = Some(traj.cyclicity_error());
    let mut log = Vec::new();
    traj.write_log(&mut log).expect("write to memory");
    let point = row.point;
    violations.extend(
        String::from_utf8(log)
            .expect("utf-8 log")
            .lines()
            .map(|l| format!("point={point} {l}")),
    );
    Ok(())
}
