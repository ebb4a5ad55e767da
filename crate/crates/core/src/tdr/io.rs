use std::fs;
use std::path::Path;

use super::{PeriodPartition, ReductionError, RepresentativePeriodSet};

const REPRESENTATIVES: &str = "representatives.csv";
const MAPPING: &str = "mapping.csv";

fn io_err(e: impl std::fmt::Display) -> ReductionError {
    ReductionError::Io(e.to_string())
}

/// Writes `representatives.csv` and `mapping.csv` into `dir`.
pub fn write_reduction(rps: &RepresentativePeriodSet, dir: &Path) -> Result<(), ReductionError> {
    fs::create_dir_all(dir).map_err(io_err)?;
    let tau = rps.period_length();
    let mut w = csv::Writer::from_path(dir.join(REPRESENTATIVES)).map_err(io_err)?;
    w.write_record(["slot", "period", "weight", "extreme", "first_hour", "last_hour"])
        .map_err(io_err)?;
    for (slot, &period) in rps.representatives.iter().enumerate() {
        w.write_record([
            slot.to_string(),
            period.to_string(),
            rps.weights[slot].to_string(),
            (rps.extreme_flags[slot] as u8).to_string(),
            (period * tau).to_string(),
            (period * tau + tau - 1).to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let mut w = csv::Writer::from_path(dir.join(MAPPING)).map_err(io_err)?;
    w.write_record(["input_period", "representative"]).map_err(io_err)?;
    for (n, &rep) in rps.mapping.iter().enumerate() {
        w.write_record([n.to_string(), rep.to_string()]).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn parse_field(
    record: &csv::StringRecord,
    idx: usize,
    file: &str,
    line: usize,
) -> Result<usize, ReductionError> {
    record
        .get(idx)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| ReductionError::Malformed {
            file: file.into(),
            line,
            message: format!("column {idx} is missing or not a non-negative integer"),
        })
}

/// Reads a pair written by [`write_reduction`] for a system of `hours` hours.
pub fn read_reduction(dir: &Path, hours: usize) -> Result<RepresentativePeriodSet, ReductionError> {
    let mut reps = Vec::new();
    let mut flags = Vec::new();
    let mut tau = None;
    let mut r = csv::Reader::from_path(dir.join(REPRESENTATIVES)).map_err(io_err)?;
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(io_err)?;
        let period = parse_field(&record, 1, REPRESENTATIVES, line)?;
        flags.push(parse_field(&record, 3, REPRESENTATIVES, line)? == 1);
        let first = parse_field(&record, 4, REPRESENTATIVES, line)?;
        let last = parse_field(&record, 5, REPRESENTATIVES, line)?;
        tau = Some(last + 1 - first);
        reps.push(period);
    }
    let tau = tau.ok_or_else(|| ReductionError::Malformed {
        file: REPRESENTATIVES.into(),
        line: 1,
        message: "no representatives".into(),
    })?;
    let partition = PeriodPartition::new(hours, tau)?;

    let mut mapping = Vec::new();
    let mut r = csv::Reader::from_path(dir.join(MAPPING)).map_err(io_err)?;
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(io_err)?;
        let rep = parse_field(&record, 1, MAPPING, i + 2)?;
        if !reps.contains(&rep) {
            return Err(ReductionError::Malformed {
                file: MAPPING.into(),
                line: i + 2,
                message: format!("period {rep} is not a representative"),
            });
        }
        mapping.push(rep);
    }
    if mapping.len() != partition.n_input_periods {
        return Err(ReductionError::Malformed {
            file: MAPPING.into(),
            line: mapping.len() + 1,
            message: format!(
                "expected {} input periods, found {}",
                partition.n_input_periods,
                mapping.len()
            ),
        });
    }
    Ok(RepresentativePeriodSet::new(partition, reps, mapping, flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, FixtureOptions};
    use crate::tdr::build_reduction;

    #[test]
    fn round_trip() {
        let system = fixtures::seasonal_one_zone(&FixtureOptions::default());
        let rps = build_reduction(&system, 168, 9, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_reduction(&rps, dir.path()).unwrap();
        assert_eq!(read_reduction(dir.path(), system.hours).unwrap(), rps);
    }

    #[test]
    fn truncated_mapping_is_rejected() {
        let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 20));
        let rps = build_reduction(&system, 24, 4, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_reduction(&rps, dir.path()).unwrap();
        let path = dir.path().join(MAPPING);
        let text = fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(10).collect();
        fs::write(&path, cut.join("\n")).unwrap();
        assert!(matches!(
            read_reduction(dir.path(), system.hours),
            Err(ReductionError::Malformed { .. })
        ));
    }
}
