use std::io::Write;
use std::path::Path;

use super::{write_file, ValueError};
use crate::model::{BuiltModel, StorageFormulation};
use crate::solver::Solution;
use crate::system::EnergySystem;

/// An hour where the reconstructed state of charge leaves `[0, capacity]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocViolation {
    /// Hour of the reconstructed year.
    pub hour: usize,
    pub input_period: usize,
    pub soc: f64,
    /// Distance outside the feasible band, MWh.
    pub amount: f64,
    pub above: bool,
}

/// Full-year state of charge rebuilt from representative-period dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct SocTrajectory {
    pub resource: String,
    /// Energy capacity, MWh.
    pub capacity: f64,
    /// Start-of-period level per input period, chained from the solved changes.
    pub q: Vec<f64>,
    /// Level after the last input period; equals `q[0]` for a cyclic year.
    pub q_end: f64,
    /// Hourly level over `n_input_periods * period_length` hours.
    pub hourly: Vec<f64>,
    pub violations: Vec<SocViolation>,
    pub tolerance: f64,
}

impl SocTrajectory {
    pub fn max_violation(&self) -> f64 {
        self.violations.iter().fold(0.0, |m, v| m.max(v.amount))
    }

    /// Start-of-period levels outside `[0, capacity]` beyond the tolerance.
    pub fn q_violations(&self) -> usize {
        self.q
            .iter()
            .filter(|&&q| q < -self.tolerance || q > self.capacity + self.tolerance)
            .count()
    }

    pub fn cyclicity_error(&self) -> f64 {
        (self.q_end - self.q[0]).abs()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ValueError> {
        let tau = self.hourly.len() / self.q.len().max(1);
        write_file(path, |f| {
            writeln!(f, "hour,input_period,soc")?;
            for (h, s) in self.hourly.iter().enumerate() {
                writeln!(f, "{h},{},{s}", h / tau.max(1))?;
            }
            Ok(())
        })
    }

    /// One line per violation.
    pub fn write_log(&self, w: &mut impl Write) -> std::io::Result<()> {
        for v in &self.violations {
            writeln!(
                w,
                "resource={} hour={} period={} soc={} {}={} amount={}",
                self.resource,
                v.hour,
                v.input_period,
                v.soc,
                if v.above { "capacity" } else { "floor" },
                if v.above { self.capacity } else { 0.0 },
                v.amount
            )?;
        }
        Ok(())
    }
}

/// Rebuilds the hourly state of charge of `resource` across every input
/// period.
///
/// Within input period `n` mapped to slot `m`, the level at hour `h` is the
/// slot's intra-period level plus the gap between `Q_n` and the slot's own
/// start level, decayed by `h + 1` steps of self-discharge.
pub fn reconstruct_soc(
    model: &BuiltModel,
    system: &EnergySystem,
    solution: &Solution,
    resource: &str,
) -> Result<SocTrajectory, ValueError> {
    if !model.is_linked(resource) {
        return Err(ValueError::LinkingNotEnabled(resource.to_string()));
    }
    let r = system
        .resource(resource)
        .ok_or_else(|| ValueError::LinkingNotEnabled(resource.to_string()))?;
    let keep = 1.0 - r.storage.as_ref().map_or(0.0, |p| p.self_discharge);
    let x = &solution.primal;
    let get = |family: &str, k: usize| {
        model
            .var(family, resource, k)
            .map(|j| x[j])
            .ok_or_else(|| ValueError::MissingRow(format!("{family}:{resource}")))
    };
    let rps = &model.rps;
    let tau = rps.period_length();
    let n_n = rps.n_input_periods();
    let slot = rps.slot_mapping();
    let capacity = get("energy", 0)?;
    let tolerance = 1e-6 * capacity.abs().max(1.0);
    let relative = model.config.formulation == StorageFormulation::Decomposed;

    let mut q = Vec::with_capacity(n_n);
    let mut level = get("q", 0)?;
    for &m in &slot {
        q.push(level);
        level += get("dq", m)?;
    }

    let mut hourly = Vec::with_capacity(n_n * tau);
    let mut violations = Vec::new();
    for (n, &m) in slot.iter().enumerate() {
        let start = if relative {
            0.0
        } else {
            get("soc", m * tau + tau - 1)? - get("dq", m)?
        };
        let offset = q[n] - start;
        let mut decay = keep;
        for h in 0..tau {
            let s = get("soc", m * tau + h)? + offset * decay;
            decay *= keep;
            let hour = n * tau + h;
            if s < -tolerance {
                violations.push(SocViolation {
                    hour,
                    input_period: n,
                    soc: s,
                    amount: -s,
                    above: false,
                });
            } else if s > capacity + tolerance {
                violations.push(SocViolation {
                    hour,
                    input_period: n,
                    soc: s,
                    amount: s - capacity,
                    above: true,
                });
            }
            hourly.push(s);
        }
    }
    Ok(SocTrajectory {
        resource: resource.to_string(),
        capacity,
        q,
        q_end: level,
        hourly,
        violations,
        tolerance,
    })
}
