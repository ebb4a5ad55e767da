use std::collections::HashSet;
use std::fmt;

use super::{EnergySystem, ResourceKind};

/// Machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    DuplicateId,
    InvalidId,
    UnknownZone,
    EfficiencyRange,
    SelfDischargeRange,
    DurationRange,
    DerateRange,
    NegativeCost,
    NegativeCapacity,
    CapacityBounds,
    MissingStorageParams,
    SelfLoop,
    LossRange,
    SeriesLength,
    NegativeDemand,
    NonpositivePeak,
    MissingProfile,
    ProfileRange,
    NonFinite,
    MarginRange,
    EmptySystem,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::DuplicateId => "DUPLICATE_ID",
            ViolationCode::InvalidId => "INVALID_ID",
            ViolationCode::UnknownZone => "UNKNOWN_ZONE",
            ViolationCode::EfficiencyRange => "EFFICIENCY_RANGE",
            ViolationCode::SelfDischargeRange => "SELF_DISCHARGE_RANGE",
            ViolationCode::DurationRange => "DURATION_RANGE",
            ViolationCode::DerateRange => "DERATE_RANGE",
            ViolationCode::NegativeCost => "NEGATIVE_COST",
            ViolationCode::NegativeCapacity => "NEGATIVE_CAPACITY",
            ViolationCode::CapacityBounds => "CAPACITY_BOUNDS",
            ViolationCode::MissingStorageParams => "MISSING_STORAGE_PARAMS",
            ViolationCode::SelfLoop => "SELF_LOOP",
            ViolationCode::LossRange => "LOSS_RANGE",
            ViolationCode::SeriesLength => "SERIES_LENGTH",
            ViolationCode::NegativeDemand => "NEGATIVE_DEMAND",
            ViolationCode::NonpositivePeak => "NONPOSITIVE_PEAK",
            ViolationCode::MissingProfile => "MISSING_PROFILE",
            ViolationCode::ProfileRange => "PROFILE_RANGE",
            ViolationCode::NonFinite => "NON_FINITE",
            ViolationCode::MarginRange => "MARGIN_RANGE",
            ViolationCode::EmptySystem => "EMPTY_SYSTEM",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    /// Id of the offending zone, resource, line or series.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.code, self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, code: ViolationCode, subject: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            subject: subject.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Ids end up in LP column names of the form `family:id:index`.
fn id_is_valid(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '+'))
}

/// Checks every structural and numeric invariant of `system`.
pub fn validate_system(system: &EnergySystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    if system.zones.is_empty() || system.hours == 0 {
        report.push(ViolationCode::EmptySystem, "system", "no zones or zero hours");
    }
    if !(system.crm_margin.is_finite() && system.crm_margin >= 0.0) {
        report.push(
            ViolationCode::MarginRange,
            "system",
            format!("crm_margin {} must be finite and >= 0", system.crm_margin),
        );
    }
    if !(system.value_of_lost_load.is_finite() && system.value_of_lost_load > 0.0) {
        report.push(
            ViolationCode::NegativeCost,
            "system",
            "value_of_lost_load must be finite and positive",
        );
    }

    let mut seen = HashSet::new();
    for zone in &system.zones {
        if !seen.insert(zone.id.as_str()) {
            report.push(ViolationCode::DuplicateId, &zone.id, "duplicate zone id");
        }
        if !id_is_valid(&zone.id) {
            report.push(ViolationCode::InvalidId, &zone.id, "ids use [A-Za-z0-9_.+-]");
        }
    }

    if system.demand.len() != system.zones.len() {
        report.push(
            ViolationCode::SeriesLength,
            "demand",
            format!("{} demand series for {} zones", system.demand.len(), system.zones.len()),
        );
    }
    for (zone, series) in system.zones.iter().zip(&system.demand) {
        if series.len() != system.hours {
            report.push(
                ViolationCode::SeriesLength,
                &zone.id,
                format!("demand has {} hours, expected {}", series.len(), system.hours),
            );
        }
        if series.iter().any(|v| !v.is_finite()) {
            report.push(ViolationCode::NonFinite, &zone.id, "non-finite demand");
        } else if series.iter().any(|&v| v < 0.0) {
            report.push(ViolationCode::NegativeDemand, &zone.id, "demand below zero");
        }
        if !(zone.peak_demand > 0.0) {
            report.push(ViolationCode::NonpositivePeak, &zone.id, "peak demand must be > 0");
        }
    }

    let zone_ids: HashSet<&str> = system.zones.iter().map(|z| z.id.as_str()).collect();
    let mut seen = HashSet::new();
    for r in &system.resources {
        let id = r.id.as_str();
        if !seen.insert(id) {
            report.push(ViolationCode::DuplicateId, id, "duplicate resource id");
        }
        if !id_is_valid(id) {
            report.push(ViolationCode::InvalidId, id, "ids use [A-Za-z0-9_.+-]");
        }
        if !zone_ids.contains(r.zone.as_str()) {
            report.push(ViolationCode::UnknownZone, id, format!("zone '{}' not defined", r.zone));
        }
        let costs = [r.fixed_cost, r.variable_cost, r.energy_cost, r.emissions_rate];
        if costs.iter().any(|c| !c.is_finite()) {
            report.push(ViolationCode::NonFinite, id, "non-finite cost or emissions rate");
        } else if costs.iter().any(|&c| c < 0.0) {
            report.push(ViolationCode::NegativeCost, id, "costs and emissions must be >= 0");
        }
        if !(0.0..=1.0).contains(&r.crm_derate) {
            report.push(
                ViolationCode::DerateRange,
                id,
                format!("crm_derate {} outside [0,1]", r.crm_derate),
            );
        }
        if !(r.existing_capacity >= 0.0) || r.max_capacity.is_some_and(|m| !(m >= 0.0)) {
            report.push(ViolationCode::NegativeCapacity, id, "capacities must be >= 0");
        } else if r.max_capacity.is_some_and(|m| m < r.existing_capacity) {
            report.push(ViolationCode::CapacityBounds, id, "max_capacity below existing_capacity");
        }
        match (r.kind, &r.storage) {
            (ResourceKind::Storage, None) => {
                report.push(ViolationCode::MissingStorageParams, id, "storage without parameters")
            }
            (ResourceKind::Storage, Some(s)) => {
                let eff_ok = |e: f64| e > 0.0 && e <= 1.0;
                if !eff_ok(s.charge_efficiency) || !eff_ok(s.discharge_efficiency) {
                    report.push(
                        ViolationCode::EfficiencyRange,
                        id,
                        format!(
                            "efficiencies ({}, {}) must lie in (0,1]",
                            s.charge_efficiency, s.discharge_efficiency
                        ),
                    );
                }
                if !(0.0..1.0).contains(&s.self_discharge) {
                    report.push(
                        ViolationCode::SelfDischargeRange,
                        id,
                        format!("self_discharge {} outside [0,1)", s.self_discharge),
                    );
                }
                if s.duration.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
                    report.push(ViolationCode::DurationRange, id, "duration must be > 0");
                }
            }
            _ => {}
        }
        if r.kind == ResourceKind::Vre {
            match system.vre_profiles.get(id) {
                None => report.push(ViolationCode::MissingProfile, id, "VRE resource has no profile"),
                Some(p) => {
                    if p.len() != system.hours {
                        report.push(
                            ViolationCode::SeriesLength,
                            id,
                            format!("profile has {} hours, expected {}", p.len(), system.hours),
                        );
                    }
                    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        report.push(ViolationCode::ProfileRange, id, "capacity factors outside [0,1]");
                    }
                }
            }
        }
    }

    let mut seen = HashSet::new();
    for line in &system.lines {
        let id = line.id.as_str();
        if !seen.insert(id) {
            report.push(ViolationCode::DuplicateId, id, "duplicate line id");
        }
        if !id_is_valid(id) {
            report.push(ViolationCode::InvalidId, id, "ids use [A-Za-z0-9_.+-]");
        }
        for end in [&line.from_zone, &line.to_zone] {
            if !zone_ids.contains(end.as_str()) {
                report.push(ViolationCode::UnknownZone, id, format!("zone '{end}' not defined"));
            }
        }
        if line.from_zone == line.to_zone {
            report.push(ViolationCode::SelfLoop, id, "line connects a zone to itself");
        }
        if !(line.capacity >= 0.0 && line.capacity.is_finite()) {
            report.push(ViolationCode::NegativeCapacity, id, "line capacity must be >= 0");
        }
        if !(line.expansion_cost >= 0.0) {
            report.push(ViolationCode::NegativeCost, id, "expansion cost must be >= 0");
        }
        if !(0.0..1.0).contains(&line.loss_fraction) {
            report.push(ViolationCode::LossRange, id, "loss_fraction outside [0,1)");
        }
    }
    report
}
