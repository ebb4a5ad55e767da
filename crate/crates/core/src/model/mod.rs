//! Capacity-expansion LP assembly.
//!
//! Columns and rows are registered in named blocks. Every LP name has the
//! form `family:entity` or `family:entity:<k><index>` with `k` one of `t`
//! (modeled timestep), `n` (input period) or `m` (representative slot).
//!
//! Column families: `cap`, `energy`, `gen`, `dis`, `chg`, `soc`, `vdis`,
//! `vchg`, `vsoc`, `dq`, `q`, `flow_fwd`, `flow_bwd`, `line_exp`,
//! `unserved`, `crm_short`.
//!
//! Row families: `balance`, `gen_limit`, `soc_balance`, `soc_cap`,
//! `soc_floor`, `power`, `dis_power`, `chg_power`, `dis_soc`,
//! `vsoc_balance`, `vsoc_sub`, `duration`, `link`, `dq_def`, `sequence`,
//! `q_cap`, `flow_cap_fwd`, `flow_cap_bwd`, `crm`, `emissions`, `forced`.

mod build;
mod registry;

use thiserror::Error;

use crate::lp::{LinearProgram, LpError};
use crate::system::{EmissionsPolicy, EnergySystem};
use crate::tdr::RepresentativePeriodSet;

pub use registry::{Block, IndexKind, NameParts, Registry};

pub type VariableRegistry = Registry;
pub type ConstraintRegistry = Registry;

/// Default penalty per MW of reserve-margin shortfall in one timestep.
pub const DEFAULT_CRM_SHORTFALL_COST: f64 = 1.0e6;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("reduction does not match the system: {0}")]
    InconsistentReduction(String),
    #[error("registry overflow adding {requested} entries to '{family}'")]
    RegistryOverflow { family: String, requested: usize },
    #[error("duplicate registry entry '{0}'")]
    DuplicateEntry(String),
    #[error("period linking needs an input-period mapping: {0}")]
    LinkingWithoutMapping(String),
    #[error("resource '{0}' not found or not a storage resource")]
    MissingResource(String),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Forces a storage resource to exactly `capacity` MW at zero capital cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedLdes {
    pub resource: String,
    /// MW.
    pub capacity: f64,
    /// Hours of storage at full power.
    pub duration: f64,
}

/// Which input periods get the start-of-period state-of-charge anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkAnchor {
    /// Only input periods that are themselves representatives.
    #[default]
    Representatives,
    /// Every input period.
    AllInputPeriods,
}

/// How long-duration storage state of charge is split across periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StorageFormulation {
    /// Intra-period state of charge is the absolute level; the wrap subtracts
    /// the period's net change.
    #[default]
    Improved,
    /// Intra-period state of charge is relative to the period start and the
    /// absolute level is the sum of both parts.
    Decomposed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub ldes_linking: bool,
    pub virtual_discharge: bool,
    pub forced_ldes: Option<ForcedLdes>,
    pub crm_enabled: bool,
    /// Multiplies every objective coefficient.
    pub objective_scale: f64,
    /// Replaces the system's emissions policy when set.
    pub emissions: Option<EmissionsPolicy>,
    pub link_anchor: LinkAnchor,
    pub formulation: StorageFormulation,
    /// $/MW per timestep of unmet reserve margin.
    pub crm_shortfall_cost: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            ldes_linking: true,
            virtual_discharge: true,
            forced_ldes: None,
            crm_enabled: true,
            objective_scale: 1.0,
            emissions: None,
            link_anchor: LinkAnchor::Representatives,
            formulation: StorageFormulation::Improved,
            crm_shortfall_cost: DEFAULT_CRM_SHORTFALL_COST,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let Some(f) = &self.forced_ldes {
            if !(f.capacity >= 0.0 && f.capacity.is_finite()) {
                return Err(ModelError::InvalidConfig(format!("forced capacity {}", f.capacity)));
            }
            if !(f.duration > 0.0 && f.duration.is_finite()) {
                return Err(ModelError::InvalidConfig(format!("forced duration {}", f.duration)));
            }
        }
        if !(self.objective_scale > 0.0 && self.objective_scale.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "objective scale {}",
                self.objective_scale
            )));
        }
        if self.formulation == StorageFormulation::Decomposed
            && self.virtual_discharge
            && self.crm_enabled
        {
            return Err(ModelError::InvalidConfig(
                "virtual discharge needs absolute intra-period state of charge".into(),
            ));
        }
        Ok(())
    }

    pub fn emissions_policy(&self, system: &EnergySystem) -> EmissionsPolicy {
        self.emissions.unwrap_or(system.emissions_policy)
    }

    /// Whether virtual charge, discharge and state of charge are modeled.
    pub fn has_virtual(&self) -> bool {
        self.crm_enabled && self.virtual_discharge
    }
}

/// An assembled LP with its registries and the inputs needed to read it.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub lp: LinearProgram,
    pub vars: VariableRegistry,
    pub cons: ConstraintRegistry,
    pub rps: RepresentativePeriodSet,
    pub config: ModelConfig,
    /// Unscaled objective weight per modeled timestep.
    pub weights: Vec<f64>,
    /// Row fixing the forced resource's capacity.
    pub forced_row: Option<usize>,
}

impl BuiltModel {
    pub fn var(&self, family: &str, entity: &str, k: usize) -> Option<usize> {
        self.vars.index(family, entity, k)
    }

    pub fn row(&self, family: &str, entity: &str, k: usize) -> Option<usize> {
        self.cons.index(family, entity, k)
    }

    pub fn n_timesteps(&self) -> usize {
        self.weights.len()
    }

    /// Whether `resource` carries inter-period state-of-charge variables.
    pub fn is_linked(&self, resource: &str) -> bool {
        self.vars.get("q", resource).is_some()
    }
}

/// Builds the full LP for one scenario.
pub fn build_model(
    system: &EnergySystem,
    rps: &RepresentativePeriodSet,
    config: &ModelConfig,
) -> Result<BuiltModel, ModelError> {
    config.validate()?;
    let p = &rps.partition;
    if p.covered_hours() + p.dropped_hours != system.hours {
        return Err(ModelError::InconsistentReduction(format!(
            "partition covers {} + {} hours, system has {}",
            p.covered_hours(),
            p.dropped_hours,
            system.hours
        )));
    }
    if let Some(f) = &config.forced_ldes {
        if !system.resource(&f.resource).is_some_and(|r| r.is_storage()) {
            return Err(ModelError::MissingResource(f.resource.clone()));
        }
    }
    if config.ldes_linking && rps.mapping.len() != rps.n_input_periods() {
        return Err(ModelError::LinkingWithoutMapping(format!(
            "{} mapping entries for {} input periods",
            rps.mapping.len(),
            rps.n_input_periods()
        )));
    }
    build::Assembly::new(system, rps, config).run()
}

#[cfg(test)]
mod tests;
