use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PeriodPartition, ReductionError, RepresentativePeriodSet};
use crate::system::EnergySystem;

const MAX_ITERATIONS: usize = 300;
const CENTROID_TOLERANCE: f64 = 1e-6;

/// One feature vector per input period: every demand series followed by every
/// VRE profile, each min-max normalized over the whole year, concatenated
/// hour by hour.
pub fn period_features(
    system: &EnergySystem,
    partition: &PeriodPartition,
) -> Result<Vec<Vec<f64>>, ReductionError> {
    let series: Vec<&[f64]> = system
        .demand
        .iter()
        .map(Vec::as_slice)
        .chain(system.vre_profiles.values().map(Vec::as_slice))
        .filter(|s| !s.is_empty())
        .collect();
    if series.is_empty() {
        return Err(ReductionError::EmptySystemSeries);
    }
    let scaled: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            s.iter()
                .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
                .collect()
        })
        .collect();
    Ok((0..partition.n_input_periods)
        .map(|n| {
            scaled
                .iter()
                .flat_map(|s| s[partition.hours_of(n)].iter().copied())
                .collect()
        })
        .collect())
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding of the free centroids, given the pinned ones.
fn seed_centroids(
    features: &[Vec<f64>],
    pinned: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = pinned.iter().map(|&p| features[p].clone()).collect();
    let mut chosen: Vec<bool> = vec![false; features.len()];
    for &p in pinned {
        chosen[p] = true;
    }
    while centroids.len() < k {
        let weights: Vec<f64> = features
            .iter()
            .enumerate()
            .map(|(i, x)| {
                if chosen[i] {
                    0.0
                } else if centroids.is_empty() {
                    1.0
                } else {
                    nearest(x, &centroids).1
                }
            })
            .collect();
        let pick = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(rng),
            // Every remaining point coincides with a centroid.
            Err(_) => {
                let free: Vec<usize> = (0..features.len()).filter(|&i| !chosen[i]).collect();
                free[rng.gen_range(0..free.len())]
            }
        };
        chosen[pick] = true;
        centroids.push(features[pick].clone());
    }
    centroids
}

/// Clusters input periods into `k` groups. `forced` periods are pinned
/// centroids that always represent their own cluster; the remaining clusters
/// come from seeded k-means and are represented by their medoid.
pub fn cluster_periods(
    system: &EnergySystem,
    partition: &PeriodPartition,
    k: usize,
    forced: &[usize],
    seed: u64,
) -> Result<RepresentativePeriodSet, ReductionError> {
    let n = partition.n_input_periods;
    if k > n || k == 0 {
        return Err(ReductionError::KTooLarge { k, available: n });
    }
    let mut pinned: Vec<usize> = Vec::new();
    for &f in forced {
        if f >= n {
            return Err(ReductionError::ForcedOutOfRange(f));
        }
        if !pinned.contains(&f) {
            pinned.push(f);
        }
    }
    if k < pinned.len() {
        return Err(ReductionError::KTooSmall {
            k,
            forced: pinned.len(),
        });
    }
    let features = period_features(system, partition)?;
    if k == n {
        let flags = (0..n).map(|p| pinned.contains(&p)).collect();
        return Ok(RepresentativePeriodSet::new(
            *partition,
            (0..n).collect(),
            (0..n).collect(),
            flags,
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(&features, &pinned, k, &mut rng);
    let n_pinned = pinned.len();
    let mut pinned_cluster = vec![None; n];
    for (c, &p) in pinned.iter().enumerate() {
        pinned_cluster[p] = Some(c);
    }
    let assign = |centroids: &[Vec<f64>]| -> Vec<usize> {
        (0..n)
            .map(|i| pinned_cluster[i].unwrap_or_else(|| nearest(&features[i], centroids).0))
            .collect()
    };

    let mut labels = assign(&centroids);
    for _ in 0..MAX_ITERATIONS {
        repair_empty(&features, &centroids, &mut labels, &pinned_cluster, k);
        let mut moved: f64 = 0.0;
        for c in n_pinned..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            let dim = features[0].len();
            let mut mean = vec![0.0; dim];
            for &i in &members {
                for (m, x) in mean.iter_mut().zip(&features[i]) {
                    *m += x;
                }
            }
            let count = members.len() as f64;
            mean.iter_mut().for_each(|m| *m /= count);
            moved = moved.max(dist2(&mean, &centroids[c]).sqrt());
            centroids[c] = mean;
        }
        labels = assign(&centroids);
        if moved < CENTROID_TOLERANCE {
            break;
        }
    }
    repair_empty(&features, &centroids, &mut labels, &pinned_cluster, k);

    // Representative of each cluster: the pinned period, or the medoid.
    let mut rep_of_cluster = vec![0; k];
    for (c, &p) in pinned.iter().enumerate() {
        rep_of_cluster[c] = p;
    }
    for (c, rep) in rep_of_cluster.iter_mut().enumerate().skip(n_pinned) {
        let mut best = (usize::MAX, f64::INFINITY);
        for i in (0..n).filter(|&i| labels[i] == c) {
            let d = dist2(&features[i], &centroids[c]);
            if d < best.1 {
                best = (i, d);
            }
        }
        *rep = best.0;
    }
    let mapping: Vec<usize> = labels.iter().map(|&c| rep_of_cluster[c]).collect();
    let mut representatives = rep_of_cluster.clone();
    representatives.sort_unstable();
    let flags = representatives.iter().map(|r| pinned.contains(r)).collect();
    Ok(RepresentativePeriodSet::new(*partition, representatives, mapping, flags))
}

/// Gives every empty free cluster the free point farthest from its centroid,
/// taken from a cluster with more than one member.
fn repair_empty(
    features: &[Vec<f64>],
    centroids: &[Vec<f64>],
    labels: &mut [usize],
    pinned_cluster: &[Option<usize>],
    k: usize,
) {
    let n_pinned = pinned_cluster.iter().flatten().count();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = (n_pinned..k).find(|&c| sizes[c] == 0) else {
            return;
        };
        let mut best = (usize::MAX, -1.0);
        for i in 0..labels.len() {
            if pinned_cluster[i].is_some() || sizes[labels[i]] < 2 {
                continue;
            }
            let d = dist2(&features[i], &centroids[labels[i]]);
            if d > best.1 {
                best = (i, d);
            }
        }
        labels[best.0] = empty;
    }
}

/// Mean squared feature distance between each input period and its
/// representative.
pub fn reconstruction_error(
    system: &EnergySystem,
    rps: &RepresentativePeriodSet,
) -> Result<f64, ReductionError> {
    let features = period_features(system, &rps.partition)?;
    let total: f64 = rps
        .mapping
        .iter()
        .enumerate()
        .map(|(n, &rep)| dist2(&features[n], &features[rep]))
        .sum();
    Ok(total / rps.mapping.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, FixtureOptions};
    use crate::tdr::build_reduction;
    use proptest::prelude::*;

    /// A year of `days` days cycling through four distinct day shapes.
    fn four_day_types(days: usize) -> EnergySystem {
        let mut system = fixtures::flat_thermal(24 * days, 100.0);
        let shapes = [
            |h: usize| 100.0 + h as f64,
            |h: usize| 300.0 - 5.0 * h as f64,
            |h: usize| if h < 12 { 50.0 } else { 250.0 },
            |_h: usize| 400.0,
        ];
        for d in 0..days {
            // Irregular order so the types are not periodic in the index.
            let t = (d * d + d / 3) % 4;
            for h in 0..24 {
                system.demand[0][d * 24 + h] = shapes[t](h);
            }
        }
        system.refresh_peaks();
        system
    }

    #[test]
    fn separable_day_types_are_recovered() {
        let system = four_day_types(40);
        let partition = PeriodPartition::new(system.hours, 24).unwrap();
        for seed in 0..5 {
            let rps = cluster_periods(&system, &partition, 4, &[], seed).unwrap();
            assert_eq!(rps.len(), 4);
            assert_eq!(reconstruction_error(&system, &rps).unwrap(), 0.0);
            // Exhaustive check: every period's representative is an identical day.
            for n in 0..partition.n_input_periods {
                let rep = rps.mapping[n];
                assert_eq!(
                    &system.demand[0][n * 24..n * 24 + 24],
                    &system.demand[0][rep * 24..rep * 24 + 24]
                );
            }
        }
    }

    #[test]
    fn forced_period_is_kept() {
        let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 60));
        let partition = PeriodPartition::new(system.hours, 24).unwrap();
        let rps = cluster_periods(&system, &partition, 5, &[7], 11).unwrap();
        let slot = rps.representatives.iter().position(|&r| r == 7).unwrap();
        assert!(rps.extreme_flags[slot]);
        assert!(rps.weights[slot] >= 1);
        assert_eq!(rps.len(), 5);
    }

    #[test]
    fn k_equal_n_is_identity() {
        let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 20));
        let partition = PeriodPartition::new(system.hours, 24).unwrap();
        let rps = cluster_periods(&system, &partition, 20, &[3], 0).unwrap();
        assert_eq!(rps.mapping, (0..20).collect::<Vec<_>>());
        assert!(rps.weights.iter().all(|&w| w == 1));
    }

    #[test]
    fn argument_errors() {
        let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 10));
        let partition = PeriodPartition::new(system.hours, 24).unwrap();
        assert_eq!(
            cluster_periods(&system, &partition, 11, &[], 0),
            Err(ReductionError::KTooLarge { k: 11, available: 10 })
        );
        assert_eq!(
            cluster_periods(&system, &partition, 1, &[1, 2], 0),
            Err(ReductionError::KTooSmall { k: 1, forced: 2 })
        );
        let mut empty = system.clone();
        empty.demand.clear();
        empty.vre_profiles.clear();
        assert_eq!(
            cluster_periods(&empty, &partition, 3, &[], 0),
            Err(ReductionError::EmptySystemSeries)
        );
    }

    #[test]
    fn error_decreases_with_k_on_average() {
        for system in [
            fixtures::seasonal_one_zone(&FixtureOptions::default()),
            fixtures::three_zone(&FixtureOptions::default()),
        ] {
            let mut previous = f64::INFINITY;
            for k in [4, 8, 16, 32, 64] {
                let mean: f64 = (0..10)
                    .map(|seed| {
                        let rps = build_reduction(&system, 24, k, seed).unwrap();
                        reconstruction_error(&system, &rps).unwrap()
                    })
                    .sum::<f64>()
                    / 10.0;
                assert!(mean <= previous, "k = {k}: {mean} > {previous}");
                previous = mean;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn reduction_invariants_hold(k in 3usize..30, seed in any::<u64>(), weekly in any::<bool>()) {
            let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 70));
            let tau = if weekly { 168 } else { 24 };
            let partition = PeriodPartition::new(system.hours, tau).unwrap();
            let k = k.min(partition.n_input_periods);
            let rps = build_reduction(&system, tau, k, seed).unwrap();
            rps.check_invariants();
            prop_assert_eq!(rps.len(), k);
            let mut sorted = rps.representatives.clone();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), k);
        }
    }
}
