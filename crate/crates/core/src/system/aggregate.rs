use std::collections::BTreeMap;

use thiserror::Error;

use super::{EnergySystem, TransmissionLine, Zone};

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("zone '{0}' has no group assignment")]
    UnmappedZone(String),
    #[error("grouping is empty")]
    EmptyGrouping,
}

/// Merges zones into groups.
///
/// Group demand is the hourly sum of member demand. Resources keep their
/// identity and profiles and are reassigned to their group's zone. Lines
/// inside a group disappear; lines between two groups are merged per
/// unordered group pair: capacities add, losses are capacity-weighted, and
/// the merged line is expandable at the cheapest member expansion cost if
/// any member is. Group order follows the first member in zone order.
pub fn aggregate_zones(
    system: &EnergySystem,
    grouping: &BTreeMap<String, String>,
) -> Result<EnergySystem, AggregateError> {
    if grouping.is_empty() {
        return Err(AggregateError::EmptyGrouping);
    }
    let mut groups: Vec<String> = Vec::new();
    let mut group_of_zone: Vec<usize> = Vec::with_capacity(system.zones.len());
    for zone in &system.zones {
        let group = grouping
            .get(&zone.id)
            .ok_or_else(|| AggregateError::UnmappedZone(zone.id.clone()))?;
        let g = match groups.iter().position(|x| x == group) {
            Some(g) => g,
            None => {
                groups.push(group.clone());
                groups.len() - 1
            }
        };
        group_of_zone.push(g);
    }

    let mut demand = vec![vec![0.0; system.hours]; groups.len()];
    let mut tags: Vec<Vec<Option<String>>> = vec![Vec::new(); groups.len()];
    for (z, series) in system.demand.iter().enumerate() {
        let g = group_of_zone[z];
        for (acc, v) in demand[g].iter_mut().zip(series) {
            *acc += v;
        }
        tags[g].push(system.zones[z].member_of.clone());
    }
    let zones: Vec<Zone> = groups
        .iter()
        .zip(tags)
        .map(|(id, members)| {
            let first = members[0].clone();
            let shared = members.iter().all(|t| *t == first);
            Zone {
                id: id.clone(),
                peak_demand: 0.0,
                member_of: if shared { first } else { None },
            }
        })
        .collect();

    let zone_group = |zone_id: &str| -> usize {
        let z = system.zone_index(zone_id).expect("validated system");
        group_of_zone[z]
    };

    let resources = system
        .resources
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.zone = groups[zone_group(&r.zone)].clone();
            r
        })
        .collect();

    // Merge lines per unordered group pair, keyed in first-seen order.
    struct Merged {
        ids: Vec<String>,
        from: usize,
        to: usize,
        capacity: f64,
        weighted_loss: f64,
        loss_sum: f64,
        count: usize,
        expansion: Option<f64>,
    }
    let mut merged: Vec<Merged> = Vec::new();
    for line in &system.lines {
        let (a, b) = (zone_group(&line.from_zone), zone_group(&line.to_zone));
        if a == b {
            continue;
        }
        let entry = merged
            .iter_mut()
            .find(|m| (m.from == a && m.to == b) || (m.from == b && m.to == a));
        let expansion = line.expandable.then_some(line.expansion_cost);
        match entry {
            Some(m) => {
                m.ids.push(line.id.clone());
                m.capacity += line.capacity;
                m.weighted_loss += line.capacity * line.loss_fraction;
                m.loss_sum += line.loss_fraction;
                m.count += 1;
                m.expansion = match (m.expansion, expansion) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                };
            }
            None => merged.push(Merged {
                ids: vec![line.id.clone()],
                from: a,
                to: b,
                capacity: line.capacity,
                weighted_loss: line.capacity * line.loss_fraction,
                loss_sum: line.loss_fraction,
                count: 1,
                expansion,
            }),
        }
    }
    let lines = merged
        .into_iter()
        .map(|m| TransmissionLine {
            id: m.ids.join("+"),
            from_zone: groups[m.from].clone(),
            to_zone: groups[m.to].clone(),
            capacity: m.capacity,
            expandable: m.expansion.is_some(),
            expansion_cost: m.expansion.unwrap_or(0.0),
            loss_fraction: if m.count == 1 {
                m.loss_sum
            } else if m.capacity > 0.0 {
                m.weighted_loss / m.capacity
            } else {
                m.loss_sum / m.count as f64
            },
        })
        .collect();

    let mut out = EnergySystem {
        zones,
        resources,
        lines,
        demand,
        vre_profiles: system.vre_profiles.clone(),
        hours: system.hours,
        crm_margin: system.crm_margin,
        emissions_policy: system.emissions_policy,
        value_of_lost_load: system.value_of_lost_load,
    };
    out.refresh_peaks();
    Ok(out)
}

/// Identity grouping: every zone is its own group.
pub fn identity_grouping(system: &EnergySystem) -> BTreeMap<String, String> {
    system
        .zones
        .iter()
        .map(|z| (z.id.clone(), z.id.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, FixtureOptions};
    use proptest::prelude::*;

    fn three() -> EnergySystem {
        fixtures::three_zone(&FixtureOptions::short(24 * 14))
    }

    #[test]
    fn identity_grouping_is_a_no_op() {
        let system = three();
        let out = aggregate_zones(&system, &identity_grouping(&system)).unwrap();
        assert_eq!(out, system);
    }

    #[test]
    fn unmapped_zone_is_reported() {
        let system = three();
        let mut grouping = identity_grouping(&system);
        grouping.remove("west");
        assert_eq!(
            aggregate_zones(&system, &grouping),
            Err(AggregateError::UnmappedZone("west".into()))
        );
    }

    #[test]
    fn collapse_to_one_zone_conserves_energy_and_capacity() {
        let system = three();
        let grouping = system.zones.iter().map(|z| (z.id.clone(), "all".to_string())).collect();
        let out = aggregate_zones(&system, &grouping).unwrap();
        assert_eq!(out.zones.len(), 1);
        assert!(out.lines.is_empty());
        let rel = (out.annual_energy() - system.annual_energy()).abs() / system.annual_energy();
        assert!(rel < 1e-12);
        assert_eq!(out.total_existing_capacity(), system.total_existing_capacity());
        assert!(out.resources.iter().all(|r| r.zone == "all"));
    }

    #[test]
    fn one_intra_and_one_inter_group_line() {
        // east+central share a group: the east-central line is internal; the two
        // lines touching west merge into one.
        let system = three();
        let grouping: BTreeMap<String, String> = [
            ("east", "ec"),
            ("central", "ec"),
            ("west", "west"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        let out = aggregate_zones(&system, &grouping).unwrap();
        assert_eq!(out.lines.len(), 1);
        let merged = &out.lines[0];
        let members: Vec<&TransmissionLine> = system
            .lines
            .iter()
            .filter(|l| l.from_zone == "west" || l.to_zone == "west")
            .collect();
        let cap: f64 = members.iter().map(|l| l.capacity).sum();
        let loss: f64 = members.iter().map(|l| l.capacity * l.loss_fraction).sum::<f64>() / cap;
        assert_eq!(merged.capacity, cap);
        assert!((merged.loss_fraction - loss).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn aggregation_conserves_and_is_idempotent(assign in proptest::collection::vec(0usize..3, 3)) {
            let system = three();
            let grouping: BTreeMap<String, String> = system
                .zones
                .iter()
                .zip(&assign)
                .map(|(z, g)| (z.id.clone(), format!("g{g}")))
                .collect();
            let out = aggregate_zones(&system, &grouping).unwrap();
            let rel = (out.annual_energy() - system.annual_energy()).abs() / system.annual_energy();
            prop_assert!(rel < 1e-12);
            prop_assert_eq!(out.total_existing_capacity(), system.total_existing_capacity());
            prop_assert_eq!(out.resources.len(), system.resources.len());
            let again = aggregate_zones(&out, &identity_grouping(&out)).unwrap();
            prop_assert_eq!(again, out);
        }
    }
}
