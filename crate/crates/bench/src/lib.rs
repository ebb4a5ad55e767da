//! Shared scenarios for the criterion benchmarks.

use ldesval::fixtures::{self, FixtureOptions, LDES_ID};
use ldesval::tdr::build_reduction;
use ldesval::{EnergySystem, ForcedLdes, ModelConfig, RepresentativePeriodSet};

/// A benchmark case: system, reduction and model options.
pub struct Scenario {
    pub name: String,
    pub system: EnergySystem,
    pub rps: RepresentativePeriodSet,
    pub config: ModelConfig,
}

/// The 1-zone fixture over `hours`, reduced to `n_days` linked
/// representative days (all days when `n_days` covers the horizon).
pub fn seasonal(hours: usize, n_days: usize) -> Scenario {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::short(hours));
    let rps = if n_days * 24 >= hours {
        RepresentativePeriodSet::monolithic(hours)
    } else {
        build_reduction(&system, 24, n_days, 0).expect("valid reduction")
    };
    Scenario {
        name: format!("seasonal_{hours}h_{n_days}d"),
        system,
        rps,
        config: ModelConfig {
            forced_ldes: Some(ForcedLdes {
                resource: LDES_ID.into(),
                capacity: 50.0,
                duration: 200.0,
            }),
            ..Default::default()
        },
    }
}
