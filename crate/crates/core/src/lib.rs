//! Capacity-expansion modeling for long-duration energy storage valuation.
//!
//! The crate builds multi-zone electricity-system linear programs over linked
//! representative periods, solves them with dual extraction, and turns the
//! dual of a forced-capacity constraint into the marginal system value of a
//! long-duration storage resource.
//!
//! The pipeline for one scenario is:
//!
//! 1. [`system::load_system`] (or a [`fixtures`] generator) produces an
//!    immutable [`EnergySystem`].
//! 2. [`tdr::build_reduction`] picks representative periods.
//! 3. [`model::build_model`] assembles the LP.
//! 4. [`solver::solve`] solves it and [`solver::verify_certificate`] checks
//!    the optimality certificate.
//! 5. [`value`] turns duals into a [`ValueReport`] and audits the
//!    reconstructed state of charge.
//!
//! [`harness`] runs grids of such scenarios.

pub mod fixtures;
pub mod harness;
pub mod lp;
pub mod model;
pub mod solver;
pub mod system;
pub mod tdr;
pub mod value;

pub use lp::{LinearProgram, LpBuilder, RowSense};
pub use model::{BuiltModel, ForcedLdes, LinkAnchor, ModelConfig, StorageFormulation};
pub use solver::{CertificateReport, Solution, SolveOptions, SolveStatus};
pub use system::{
    EmissionsPolicy, EnergySystem, Resource, ResourceKind, StorageParams, TransmissionLine,
    VreClass, Zone,
};
pub use tdr::{PeriodPartition, RepresentativePeriodSet};
pub use value::{SocTrajectory, ValueReport};
