use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use super::point::{prepare_point, GridPoint};
use super::sweep::SweepOptions;
use super::{io_error, HarnessError, SweepSpec};
use crate::model::{build_model, BuiltModel};
use crate::solver::solve;
use crate::system::{EmissionsPolicy, EnergySystem};

/// Carbon price × LDES cost × linking grid for the decarbonization curve.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// $/tCO2. A price of 0 is solved without any emissions policy.
    pub prices: Vec<f64>,
    /// LDES fixed cost levels, $/MW-yr.
    pub ldes_costs: Vec<f64>,
    #[serde(default = "both")]
    pub linking: Vec<bool>,
    #[serde(default)]
    pub n_periods: usize,
    #[serde(default)]
    pub period_length: usize,
    #[serde(default = "yes")]
    pub virtual_discharge: bool,
}

fn both() -> Vec<bool> {
    vec![true, false]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub price: f64,
    pub ldes_cost: f64,
    pub linking: bool,
    pub status: String,
    pub objective: Option<f64>,
    /// Objective minus carbon payments.
    pub system_cost: Option<f64>,
    /// Annual tCO2.
    pub emissions: Option<f64>,
    /// Fraction of the zero-price emissions avoided.
    pub reduction: Option<f64>,
    pub ldes_mw: Option<f64>,
    pub ldes_mwh: Option<f64>,
}

impl CurveRow {
    pub const HEADER: &'static str =
        "price,ldes_cost,linking,status,objective,system_cost,emissions,reduction,ldes_mw,ldes_mwh";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.price,
            self.ldes_cost,
            self.linking,
            self.status,
            opt(self.objective),
            opt(self.system_cost),
            opt(self.emissions),
            opt(self.reduction),
            opt(self.ldes_mw),
            opt(self.ldes_mwh)
        )
    }
}

/// Annual emissions of a dispatch, tCO2.
pub fn annual_emissions(model: &BuiltModel, system: &EnergySystem, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for r in system.resources.iter().filter(|r| r.emissions_rate != 0.0) {
        if let Some(block) = model.vars.get("gen", &r.id) {
            for t in 0..block.len {
                total += model.weights[t] * r.emissions_rate * x[block.at(t)];
            }
        }
    }
    total
}

struct Case {
    price: f64,
    ldes_cost: f64,
    linking: bool,
}

fn solve_case(base: &EnergySystem, spec: &SweepSpec, curve: &CurveSpec, case: &Case, options: &SweepOptions) -> CurveRow {
    let mut row = CurveRow {
        price: case.price,
        ldes_cost: case.ldes_cost,
        linking: case.linking,
        status: "error".into(),
        objective: None,
        system_cost: None,
        emissions: None,
        reduction: None,
        ldes_mw: None,
        ldes_mwh: None,
    };
    let point = GridPoint {
        index: 0,
        n_periods: curve.n_periods,
        period_length: curve.period_length,
        zone_grouping: "identity".into(),
        ldes_linking: case.linking,
        virtual_discharge: curve.virtual_discharge,
        cost_case: 0,
        duration: None,
        capacity: None,
        rte: None,
        emissions: Some(if case.price > 0.0 {
            EmissionsPolicy::Price(case.price)
        } else {
            EmissionsPolicy::None
        }),
    };
    let result = (|| -> Result<(), String> {
        let mut prepared = prepare_point(base, spec, &point).map_err(|e| e.to_string())?;
        if let Some(r) = prepared.system.resource_mut(&spec.ldes) {
            r.fixed_cost = case.ldes_cost;
        }
        let model = build_model(&prepared.system, &prepared.rps, &prepared.config).map_err(|e| e.to_string())?;
        let s = solve(&model.lp, &options.solve).map_err(|e| e.to_string())?;
        row.status = s.status.as_str().into();
        if !s.is_optimal() {
            return Ok(());
        }
        let emissions = annual_emissions(&model, &prepared.system, &s.primal);
        let scale = prepared.config.objective_scale;
        row.objective = Some(s.objective / scale);
        row.system_cost = Some(s.objective / scale - case.price * emissions);
        row.emissions = Some(emissions);
        row.ldes_mw = model.var("cap", &spec.ldes, 0).map(|j| s.primal[j]);
        row.ldes_mwh = model.var("energy", &spec.ldes, 0).map(|j| s.primal[j]);
        Ok(())
    })();
    if result.is_err() {
        row.status = "error".into();
    }
    row
}

/// Solves every (price, LDES cost, linking) combination in that nesting
/// order. Emission reductions are measured against the zero-price solve of
/// the same cost and linking setting, which is added when absent.
pub fn decarbonization_curve(
    base: &EnergySystem,
    spec: &SweepSpec,
    curve: &CurveSpec,
    options: &SweepOptions,
) -> Result<Vec<CurveRow>, HarnessError> {
    if curve.prices.is_empty() || curve.ldes_costs.is_empty() || curve.linking.is_empty() {
        return Err(HarnessError::InvalidSpec("curve axes must be non-empty".into()));
    }
    if let Some(p) = curve.prices.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(HarnessError::InvalidSpec(format!("carbon price {p}")));
    }
    match base.resource(&spec.ldes) {
        Some(r) if r.is_storage() => {}
        _ => return Err(HarnessError::InvalidSpec(format!("no storage resource '{}'", spec.ldes))),
    }
    let mut prices = curve.prices.clone();
    if !prices.contains(&0.0) {
        prices.insert(0, 0.0);
    }
    let mut cases = Vec::new();
    for &price in &prices {
        for &ldes_cost in &curve.ldes_costs {
            for &linking in &curve.linking {
                cases.push(Case {
                    price,
                    ldes_cost,
                    linking,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| HarnessError::InvalidSpec(format!("worker pool: {e}")))?;
    let rows: Vec<CurveRow> =
        pool.install(|| cases.par_iter().map(|c| solve_case(base, spec, curve, c, options)).collect());

    let baseline = |row: &CurveRow| {
        rows.iter()
            .find(|b| b.price == 0.0 && b.ldes_cost == row.ldes_cost && b.linking == row.linking)
            .and_then(|b| b.emissions)
    };
    let mut out: Vec<CurveRow> = rows
        .iter()
        .filter(|r| curve.prices.contains(&r.price))
        .cloned()
        .collect();
    for row in &mut out {
        if let (Some(e), Some(b)) = (row.emissions, baseline(row)) {
            row.reduction = Some(if b > 0.0 { 1.0 - e / b } else { 0.0 });
        }
    }
    Ok(out)
}

pub fn write_curve(rows: &[CurveRow], path: &Path) -> Result<(), HarnessError> {
    let mut f = std::fs::File::create(path).map(std::io::BufWriter::new).map_err(io_error(path))?;
    writeln!(f, "{}", CurveRow::HEADER).map_err(io_error(path))?;
    for r in rows {
        writeln!(f, "{}", r.to_csv()).map_err(io_error(path))?;
    }
    f.flush().map_err(io_error(path))
}
