use log::warn;

use super::PeriodPartition;
use crate::system::{EnergySystem, ResourceKind, VreClass};

/// Indices of the minimum-solar, minimum-wind and maximum-load input periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtremePeriods {
    pub min_solar: Option<usize>,
    pub min_wind: Option<usize>,
    pub max_load: usize,
}

impl ExtremePeriods {
    /// Distinct indices in the order min-solar, min-wind, max-load.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(3);
        for idx in [self.min_solar, self.min_wind, Some(self.max_load)].into_iter().flatten() {
            if !out.contains(&idx) {
                out.push(idx);
            }
        }
        out
    }
}

fn class_sums(system: &EnergySystem, partition: &PeriodPartition, class: VreClass) -> Option<Vec<f64>> {
    let profiles: Vec<&[f64]> = system
        .resources
        .iter()
        .filter(|r| r.kind == ResourceKind::Vre && r.vre_class == Some(class))
        .filter_map(|r| system.profile(&r.id))
        .collect();
    if profiles.is_empty() {
        return None;
    }
    Some(
        (0..partition.n_input_periods)
            .map(|n| {
                partition
                    .hours_of(n)
                    .map(|h| profiles.iter().map(|p| p[h]).sum::<f64>())
                    .sum()
            })
            .collect(),
    )
}

/// First index of the extreme value; ties go to the lowest index.
fn arg_extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[best]) {
            best = i;
        }
    }
    best
}

pub fn select_extreme_periods(system: &EnergySystem, partition: &PeriodPartition) -> ExtremePeriods {
    let min_of = |class: VreClass, label: &str| match class_sums(system, partition, class) {
        Some(sums) => Some(arg_extreme(&sums, |a, b| a < b)),
        None => {
            warn!("no {label} resources; skipping the minimum-{label} extreme period");
            None
        }
    };
    let min_solar = min_of(VreClass::Solar, "solar");
    let min_wind = min_of(VreClass::Wind, "wind");
    let load: Vec<f64> = (0..partition.n_input_periods)
        .map(|n| partition.hours_of(n).map(|h| system.total_demand(h)).sum())
        .collect();
    ExtremePeriods {
        min_solar,
        min_wind,
        max_load: arg_extreme(&load, |a, b| a > b),
    }
}
