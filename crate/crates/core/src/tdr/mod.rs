//! Time-domain reduction: partition the year into input periods, inject the
//! extreme periods, cluster the rest with k-means, and map every input period
//! to a representative.

mod extremes;
mod io;
mod kmeans;

use thiserror::Error;

use crate::system::EnergySystem;

pub use extremes::{select_extreme_periods, ExtremePeriods};
pub use io::{read_reduction, write_reduction};
pub use kmeans::{cluster_periods, period_features, reconstruction_error};

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("k = {k} exceeds the {available} available input periods")]
    KTooLarge { k: usize, available: usize },
    #[error("k = {k} is smaller than the {forced} forced periods")]
    KTooSmall { k: usize, forced: usize },
    #[error("system has no demand or profile series to cluster")]
    EmptySystemSeries,
    #[error("period length {period_length} does not fit in {hours} hours")]
    BadPeriodLength { period_length: usize, hours: usize },
    #[error("forced period {0} is out of range")]
    ForcedOutOfRange(usize),
    #[error("malformed reduction file {file}, line {line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Consecutive, equal-length input periods covering the year. Trailing hours
/// that do not fill a whole period are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodPartition {
    pub period_length: usize,
    pub n_input_periods: usize,
    pub dropped_hours: usize,
}

impl PeriodPartition {
    pub fn new(hours: usize, period_length: usize) -> Result<Self, ReductionError> {
        if period_length == 0 || period_length > hours {
            return Err(ReductionError::BadPeriodLength {
                period_length,
                hours,
            });
        }
        let n = hours / period_length;
        Ok(PeriodPartition {
            period_length,
            n_input_periods: n,
            dropped_hours: hours - n * period_length,
        })
    }

    pub fn covered_hours(&self) -> usize {
        self.n_input_periods * self.period_length
    }

    /// Factor restoring annual magnitudes after dropping trailing hours.
    pub fn annualization(&self) -> f64 {
        let covered = self.covered_hours();
        (covered + self.dropped_hours) as f64 / covered as f64
    }

    pub fn hours_of(&self, period: usize) -> std::ops::Range<usize> {
        period * self.period_length..(period + 1) * self.period_length
    }
}

/// Representative periods plus the input-period mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativePeriodSet {
    pub partition: PeriodPartition,
    /// Input-period index of each representative, in slot order.
    pub representatives: Vec<usize>,
    /// For every input period, the input-period index of its representative.
    pub mapping: Vec<usize>,
    /// Number of input periods each representative stands for.
    pub weights: Vec<usize>,
    /// Whether each representative was injected as an extreme period.
    pub extreme_flags: Vec<bool>,
}

impl RepresentativePeriodSet {
    /// Builds a set and asserts its structural invariants.
    pub fn new(
        partition: PeriodPartition,
        representatives: Vec<usize>,
        mapping: Vec<usize>,
        extreme_flags: Vec<bool>,
    ) -> Self {
        let mut weights = vec![0; representatives.len()];
        for &rep in &mapping {
            let slot = representatives
                .iter()
                .position(|&r| r == rep)
                .expect("mapping target must be a representative");
            weights[slot] += 1;
        }
        let set = RepresentativePeriodSet {
            partition,
            representatives,
            mapping,
            weights,
            extreme_flags,
        };
        set.check_invariants();
        set
    }

    /// One period spanning every hour; the unreduced year.
    pub fn monolithic(hours: usize) -> Self {
        let partition = PeriodPartition::new(hours, hours).expect("hours > 0");
        RepresentativePeriodSet::new(partition, vec![0], vec![0], vec![false])
    }

    /// Every input period represents itself.
    pub fn identity(partition: PeriodPartition) -> Self {
        let n = partition.n_input_periods;
        RepresentativePeriodSet::new(partition, (0..n).collect(), (0..n).collect(), vec![false; n])
    }

    pub fn check_invariants(&self) {
        let n = self.partition.n_input_periods;
        assert_eq!(self.mapping.len(), n, "mapping must cover every input period");
        assert_eq!(self.weights.len(), self.representatives.len());
        assert_eq!(self.extreme_flags.len(), self.representatives.len());
        for &rep in &self.representatives {
            assert!(rep < n, "representative out of range");
            assert_eq!(self.mapping[rep], rep, "representative {rep} must map to itself");
        }
        assert_eq!(self.weights.iter().sum::<usize>(), n);
        assert!(self.weights.iter().all(|&w| w > 0));
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn period_length(&self) -> usize {
        self.partition.period_length
    }

    pub fn n_input_periods(&self) -> usize {
        self.partition.n_input_periods
    }

    /// Number of modeled timesteps: representatives × period length.
    pub fn modeled_hours(&self) -> usize {
        self.len() * self.period_length()
    }

    pub fn is_monolithic(&self) -> bool {
        self.partition.n_input_periods == 1
    }

    /// Slot (position in `representatives`) of the representative of `period`.
    pub fn slot_of_period(&self, period: usize) -> usize {
        let rep = self.mapping[period];
        self.representatives
            .iter()
            .position(|&r| r == rep)
            .expect("checked invariant")
    }

    /// Slot per input period, i.e. f(n) expressed as a slot index.
    pub fn slot_mapping(&self) -> Vec<usize> {
        (0..self.n_input_periods()).map(|n| self.slot_of_period(n)).collect()
    }

    /// Source hour in the original series for modeled timestep `t`.
    pub fn source_hour(&self, t: usize) -> usize {
        let tau = self.period_length();
        self.representatives[t / tau] * tau + t % tau
    }

    /// Objective weight of modeled timestep `t`, including the annualization
    /// of dropped trailing hours.
    pub fn timestep_weight(&self, t: usize) -> f64 {
        self.weights[t / self.period_length()] as f64 * self.partition.annualization()
    }
}

/// Partition, extreme injection and clustering in one call.
///
/// `period_length == hours` (or a single resulting input period) produces the
/// monolithic set.
pub fn build_reduction(
    system: &EnergySystem,
    period_length: usize,
    n_periods: usize,
    seed: u64,
) -> Result<RepresentativePeriodSet, ReductionError> {
    let partition = PeriodPartition::new(system.hours, period_length)?;
    if partition.n_input_periods == 1 {
        if n_periods != 1 {
            return Err(ReductionError::KTooLarge {
                k: n_periods,
                available: 1,
            });
        }
        return Ok(RepresentativePeriodSet::new(partition, vec![0], vec![0], vec![false]));
    }
    if n_periods > partition.n_input_periods || n_periods == 0 {
        return Err(ReductionError::KTooLarge {
            k: n_periods,
            available: partition.n_input_periods,
        });
    }
    let mut forced = select_extreme_periods(system, &partition).indices();
    forced.truncate(n_periods);
    cluster_periods(system, &partition, n_periods, &forced, seed)
}
