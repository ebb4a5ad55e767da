//! Power-system domain types, ingestion, validation and spatial aggregation.

mod aggregate;
mod io;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate_zones, identity_grouping, AggregateError};
pub use io::{load_system, write_system, SystemError};
pub use validate::{validate_system, ValidationReport, Violation, ViolationCode};

/// Default value of lost load, $/MWh.
pub const DEFAULT_VOLL: f64 = 50_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    /// Peak hourly demand in MW, derived from the demand series.
    pub peak_demand: f64,
    /// Interconnection tag. Zones sharing a tag share one reserve-margin region.
    pub member_of: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Thermal,
    Vre,
    Storage,
}

/// Weather class of a variable renewable resource, used to pick extreme periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VreClass {
    Solar,
    Wind,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Fraction of stored energy lost per timestep.
    #[serde(default)]
    pub self_discharge: f64,
    /// Fixed energy-to-power ratio in hours; `None` lets energy capacity float.
    #[serde(default)]
    pub duration: Option<f64>,
    /// Participates in inter-period state-of-charge linking.
    #[serde(default)]
    pub is_ldes: bool,
    /// Charge and discharge share one power rating.
    #[serde(default = "default_true")]
    pub symmetric: bool,
}

fn default_true() -> bool {
    true
}

impl StorageParams {
    pub fn round_trip_efficiency(&self) -> f64 {
        self.charge_efficiency * self.discharge_efficiency
    }

    /// Sets symmetric charge/discharge efficiencies for a target round trip.
    pub fn set_round_trip_efficiency(&mut self, rte: f64) {
        let leg = rte.sqrt();
        self.charge_efficiency = leg;
        self.discharge_efficiency = leg;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    pub id: String,
    pub zone: String,
    pub kind: ResourceKind,
    /// Annualized fixed cost of power capacity, $/MW-yr.
    pub fixed_cost: f64,
    /// Fuel plus variable O&M, $/MWh.
    pub variable_cost: f64,
    /// Annualized cost of storage energy capacity, $/MWh-yr.
    pub energy_cost: f64,
    /// tCO2/MWh.
    pub emissions_rate: f64,
    pub crm_derate: f64,
    /// MW; `None` is unbounded.
    pub max_capacity: Option<f64>,
    /// MW.
    pub existing_capacity: f64,
    pub vre_class: Option<VreClass>,
    pub storage: Option<StorageParams>,
}

impl Resource {
    pub fn is_storage(&self) -> bool {
        self.kind == ResourceKind::Storage
    }

    pub fn is_ldes(&self) -> bool {
        self.storage.as_ref().is_some_and(|s| s.is_ldes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionLine {
    pub id: String,
    pub from_zone: String,
    pub to_zone: String,
    /// Existing transfer capacity in each direction, MW.
    pub capacity: f64,
    pub expandable: bool,
    /// $/MW-yr of added capacity.
    pub expansion_cost: f64,
    /// Fraction of sent power lost in transit.
    pub loss_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "snake_case")]
pub enum EmissionsPolicy {
    /// Annual cap in tCO2.
    Cap(f64),
    /// $/tCO2 added to dispatch cost.
    Price(f64),
    None,
}

impl std::fmt::Display for EmissionsPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmissionsPolicy::Cap(c) => write!(f, "cap:{c}"),
            EmissionsPolicy::Price(p) => write!(f, "price:{p}"),
            EmissionsPolicy::None => f.write_str("none"),
        }
    }
}

/// A complete single-weather-year system. Immutable once loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySystem {
    pub zones: Vec<Zone>,
    pub resources: Vec<Resource>,
    pub lines: Vec<TransmissionLine>,
    /// Hourly demand per zone (MW), aligned with `zones`.
    pub demand: Vec<Vec<f64>>,
    /// Hourly capacity factors keyed by VRE resource id.
    pub vre_profiles: BTreeMap<String, Vec<f64>>,
    pub hours: usize,
    /// Reserve margin above hourly demand, as a fraction.
    pub crm_margin: f64,
    pub emissions_policy: EmissionsPolicy,
    /// $/MWh charged on unserved energy.
    pub value_of_lost_load: f64,
}

impl EnergySystem {
    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.resources.iter().position(|r| r.id == id)
    }

    pub fn resource(&self, id: &str) -> Option<&Resource> {
        self.resources.iter().find(|r| r.id == id)
    }

    pub fn resource_mut(&mut self, id: &str) -> Option<&mut Resource> {
        self.resources.iter_mut().find(|r| r.id == id)
    }

    pub fn profile(&self, resource_id: &str) -> Option<&[f64]> {
        self.vre_profiles.get(resource_id).map(Vec::as_slice)
    }

    /// System-wide demand summed over zones for one hour.
    pub fn total_demand(&self, hour: usize) -> f64 {
        self.demand.iter().map(|d| d[hour]).sum()
    }

    /// Total annual demand energy, MWh.
    pub fn annual_energy(&self) -> f64 {
        self.demand.iter().flat_map(|d| d.iter()).sum()
    }

    pub fn total_existing_capacity(&self) -> f64 {
        self.resources.iter().map(|r| r.existing_capacity).sum()
    }

    /// Recomputes each zone's peak from its demand series.
    pub fn refresh_peaks(&mut self) {
        for (zone, series) in self.zones.iter_mut().zip(&self.demand) {
            zone.peak_demand = series.iter().copied().fold(0.0, f64::max);
        }
    }

    /// Reserve-margin regions: zones grouped by interconnection tag. Untagged
    /// zones form their own region. Order follows first appearance.
    pub fn crm_regions(&self) -> Vec<(String, Vec<usize>)> {
        let mut regions: Vec<(String, Vec<usize>)> = Vec::new();
        for (i, zone) in self.zones.iter().enumerate() {
            let key = zone.member_of.clone().unwrap_or_else(|| zone.id.clone());
            match regions.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(i),
                None => regions.push((key, vec![i])),
            }
        }
        regions
    }

    /// Truncates every series to the first `hours` hours.
    pub fn truncated(&self, hours: usize) -> EnergySystem {
        let mut out = self.clone();
        let hours = hours.min(self.hours);
        out.hours = hours;
        for d in &mut out.demand {
            d.truncate(hours);
        }
        for p in out.vre_profiles.values_mut() {
            p.truncate(hours);
        }
        out.refresh_peaks();
        out
    }

    /// Multiplies every cost field by `factor`.
    pub fn scale_costs(&mut self, factor: f64) {
        for r in &mut self.resources {
            r.fixed_cost *= factor;
            r.variable_cost *= factor;
            r.energy_cost *= factor;
        }
        for l in &mut self.lines {
            l.expansion_cost *= factor;
        }
        self.value_of_lost_load *= factor;
        if let EmissionsPolicy::Price(p) = &mut self.emissions_policy {
            *p *= factor;
        }
    }
}
