//! Scenario config (TOML) and hourly series (CSV) ingestion.
//!
//! Units throughout the config: MW for power, MWh for energy, $/MW-yr for
//! fixed costs, $/MWh for variable costs, $/MWh-yr for storage energy
//! capacity, tCO2/MWh for emission rates.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    validate_system, EmissionsPolicy, EnergySystem, Resource, ResourceKind, StorageParams,
    TransmissionLine, VreClass, Zone, DEFAULT_VOLL,
};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: field '{field}': {message}")]
    ParseError {
        file: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
    #[error("series '{series}' has {got} rows, expected {expected}")]
    LengthMismatch {
        series: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid system:\n{0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemConfig {
    hours: usize,
    #[serde(default)]
    crm_margin: f64,
    #[serde(default = "default_voll")]
    value_of_lost_load: f64,
    #[serde(default = "default_policy")]
    emissions: EmissionsPolicy,
    series: SeriesConfig,
    zones: Vec<ZoneConfig>,
    #[serde(default)]
    resources: Vec<ResourceConfig>,
    #[serde(default)]
    lines: Vec<LineConfig>,
}

fn default_voll() -> f64 {
    DEFAULT_VOLL
}

fn default_policy() -> EmissionsPolicy {
    EmissionsPolicy::None
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesConfig {
    demand: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vre: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneConfig {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    member_of: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceConfig {
    id: String,
    zone: String,
    kind: ResourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vre_class: Option<VreClass>,
    fixed_cost: f64,
    #[serde(default)]
    variable_cost: f64,
    #[serde(default)]
    energy_cost: f64,
    #[serde(default)]
    emissions_rate: f64,
    crm_derate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_capacity: Option<f64>,
    #[serde(default)]
    existing_capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    storage: Option<StorageParams>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineConfig {
    id: String,
    from_zone: String,
    to_zone: String,
    capacity: f64,
    #[serde(default)]
    expandable: bool,
    #[serde(default)]
    expansion_cost: f64,
    #[serde(default)]
    loss_fraction: f64,
}

/// Loads a scenario config and its CSV series, then validates the result.
///
/// Series paths in the config are resolved against `data_dir`.
pub fn load_system(config_path: &Path, data_dir: &Path) -> Result<EnergySystem, SystemError> {
    let text = read_file(config_path)?;
    let config: SystemConfig = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
            .unwrap_or(0);
        SystemError::ParseError {
            file: config_path.to_path_buf(),
            line,
            field: "config".into(),
            message: e.message().to_string(),
        }
    })?;

    let zone_ids: Vec<String> = config.zones.iter().map(|z| z.id.clone()).collect();
    let demand_path = data_dir.join(&config.series.demand);
    let mut demand_cols = read_series(&demand_path, config.hours, &zone_ids)?;
    let demand: Vec<Vec<f64>> = zone_ids
        .iter()
        .map(|id| demand_cols.remove(id).unwrap_or_default())
        .collect();

    let vre_ids: Vec<String> = config
        .resources
        .iter()
        .filter(|r| r.kind == ResourceKind::Vre)
        .map(|r| r.id.clone())
        .collect();
    let vre_profiles = match (&config.series.vre, vre_ids.is_empty()) {
        (Some(file), _) => read_series(&data_dir.join(file), config.hours, &vre_ids)?,
        (None, true) => BTreeMap::new(),
        (None, false) => {
            return Err(SystemError::ParseError {
                file: config_path.to_path_buf(),
                line: 0,
                field: "series.vre".into(),
                message: "VRE resources declared but no vre series file given".into(),
            })
        }
    };

    let mut system = EnergySystem {
        zones: config
            .zones
            .into_iter()
            .map(|z| Zone {
                id: z.id,
                peak_demand: 0.0,
                member_of: z.member_of,
            })
            .collect(),
        resources: config
            .resources
            .into_iter()
            .map(|r| Resource {
                id: r.id,
                zone: r.zone,
                kind: r.kind,
                fixed_cost: r.fixed_cost,
                variable_cost: r.variable_cost,
                energy_cost: r.energy_cost,
                emissions_rate: r.emissions_rate,
                crm_derate: r.crm_derate,
                max_capacity: r.max_capacity,
                existing_capacity: r.existing_capacity,
                vre_class: r.vre_class,
                storage: r.storage,
            })
            .collect(),
        lines: config
            .lines
            .into_iter()
            .map(|l| TransmissionLine {
                id: l.id,
                from_zone: l.from_zone,
                to_zone: l.to_zone,
                capacity: l.capacity,
                expandable: l.expandable,
                expansion_cost: l.expansion_cost,
                loss_fraction: l.loss_fraction,
            })
            .collect(),
        demand,
        vre_profiles,
        hours: config.hours,
        crm_margin: config.crm_margin,
        emissions_policy: config.emissions,
        value_of_lost_load: config.value_of_lost_load,
    };
    system.refresh_peaks();

    let report = validate_system(&system);
    if !report.is_empty() {
        return Err(SystemError::InvariantViolation(report.to_string()));
    }
    Ok(system)
}

fn read_file(path: &Path) -> Result<String, SystemError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SystemError::MissingFile(path.to_path_buf()),
        _ => SystemError::Io(e),
    })
}

/// Reads an hourly CSV whose first column is the hour index and returns the
/// requested columns.
fn read_series(
    path: &Path,
    hours: usize,
    wanted: &[String],
) -> Result<BTreeMap<String, Vec<f64>>, SystemError> {
    let text = read_file(path)?;
    let parse_err = |line: usize, field: &str, message: String| SystemError::ParseError {
        file: path.to_path_buf(),
        line,
        field: field.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, "header", e.to_string()))?
        .clone();
    let mut columns = Vec::with_capacity(wanted.len());
    for id in wanted {
        let col = headers
            .iter()
            .position(|h| h.trim() == id)
            .filter(|&c| c > 0)
            .ok_or_else(|| parse_err(1, id, "column not found".into()))?;
        columns.push((id.clone(), col, Vec::with_capacity(hours)));
    }

    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(line, "row", e.to_string()))?;
        let hour: usize = record
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| parse_err(line, "hour", "hour index is not an integer".into()))?;
        if hour != rows {
            return Err(parse_err(line, "hour", format!("expected hour {rows}, found {hour}")));
        }
        for (id, col, values) in &mut columns {
            let raw = record.get(*col).unwrap_or("").trim();
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, id, format!("'{raw}' is not a number")))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != hours {
        let series = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Err(SystemError::LengthMismatch {
            series,
            expected: hours,
            got: rows,
        });
    }
    Ok(columns.into_iter().map(|(id, _, v)| (id, v)).collect())
}

/// Writes `system` as `<name>.toml` plus `<name>_demand.csv` and (if any VRE)
/// `<name>_vre.csv` under `dir`. Returns the config path.
pub fn write_system(system: &EnergySystem, dir: &Path, name: &str) -> Result<PathBuf, SystemError> {
    fs::create_dir_all(dir)?;
    let demand_file = format!("{name}_demand.csv");
    let vre_file = format!("{name}_vre.csv");
    let has_vre = !system.vre_profiles.is_empty();

    let config = SystemConfig {
        hours: system.hours,
        crm_margin: system.crm_margin,
        value_of_lost_load: system.value_of_lost_load,
        emissions: system.emissions_policy,
        series: SeriesConfig {
            demand: demand_file.clone(),
            vre: has_vre.then(|| vre_file.clone()),
        },
        zones: system
            .zones
            .iter()
            .map(|z| ZoneConfig {
                id: z.id.clone(),
                member_of: z.member_of.clone(),
            })
            .collect(),
        resources: system
            .resources
            .iter()
            .map(|r| ResourceConfig {
                id: r.id.clone(),
                zone: r.zone.clone(),
                kind: r.kind,
                vre_class: r.vre_class,
                fixed_cost: r.fixed_cost,
                variable_cost: r.variable_cost,
                energy_cost: r.energy_cost,
                emissions_rate: r.emissions_rate,
                crm_derate: r.crm_derate,
                max_capacity: r.max_capacity,
                existing_capacity: r.existing_capacity,
                storage: r.storage.clone(),
            })
            .collect(),
        lines: system
            .lines
            .iter()
            .map(|l| LineConfig {
                id: l.id.clone(),
                from_zone: l.from_zone.clone(),
                to_zone: l.to_zone.clone(),
                capacity: l.capacity,
                expandable: l.expandable,
                expansion_cost: l.expansion_cost,
                loss_fraction: l.loss_fraction,
            })
            .collect(),
    };
    let text = toml::to_string(&config).map_err(|e| SystemError::ParseError {
        file: dir.join(format!("{name}.toml")),
        line: 0,
        field: "config".into(),
        message: e.to_string(),
    })?;
    let config_path = dir.join(format!("{name}.toml"));
    fs::write(&config_path, text)?;

    let zone_cols: Vec<(&str, &[f64])> = system
        .zones
        .iter()
        .zip(&system.demand)
        .map(|(z, d)| (z.id.as_str(), d.as_slice()))
        .collect();
    write_series(&dir.join(&demand_file), system.hours, &zone_cols)?;
    if has_vre {
        let vre_cols: Vec<(&str, &[f64])> = system
            .vre_profiles
            .iter()
            .map(|(id, p)| (id.as_str(), p.as_slice()))
            .collect();
        write_series(&dir.join(&vre_file), system.hours, &vre_cols)?;
    }
    Ok(config_path)
}

fn write_series(path: &Path, hours: usize, cols: &[(&str, &[f64])]) -> Result<(), SystemError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    write!(out, "hour")?;
    for (id, _) in cols {
        write!(out, ",{id}")?;
    }
    writeln!(out)?;
    for h in 0..hours {
        write!(out, "{h}")?;
        for (_, values) in cols {
            write!(out, ",{}", values[h])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn flat_one_zone_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let system = fixtures::flat_thermal(8760, 100.0);
        let config = write_system(&system, dir.path(), "flat").unwrap();
        let loaded = load_system(&config, dir.path()).unwrap();
        assert_eq!(loaded.hours, 8760);
        assert_eq!(loaded.zones[0].peak_demand, 100.0);
        assert_eq!(loaded, system);
    }

    #[test]
    fn short_demand_file_is_a_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let system = fixtures::flat_thermal(8760, 100.0);
        let config = write_system(&system, dir.path(), "flat").unwrap();
        let csv_path = dir.path().join("flat_demand.csv");
        let text = fs::read_to_string(&csv_path).unwrap();
        let truncated: Vec<&str> = text.lines().take(8760).collect(); // header + 8759 rows
        fs::write(&csv_path, truncated.join("\n") + "\n").unwrap();
        match load_system(&config, dir.path()) {
            Err(SystemError::LengthMismatch { expected, got, .. }) => {
                assert_eq!((expected, got), (8760, 8759));
            }
            other => panic!("expected LengthMismatch, got {other:?}"),
        }
    }

    #[test]
    fn missing_and_malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_system(&dir.path().join("nope.toml"), dir.path()),
            Err(SystemError::MissingFile(_))
        ));

        let system = fixtures::flat_thermal(24, 100.0);
        let config = write_system(&system, dir.path(), "flat").unwrap();
        let csv_path = dir.path().join("flat_demand.csv");
        let text = fs::read_to_string(&csv_path).unwrap().replace("\n5,100\n", "\n5,abc\n");
        fs::write(&csv_path, text).unwrap();
        match load_system(&config, dir.path()) {
            Err(SystemError::ParseError { line, field, .. }) => {
                assert_eq!(line, 7);
                assert_eq!(field, "z1");
            }
            other => panic!("expected ParseError, got {other:?}"),
        }

        fs::write(&config, "hours = 'x'\n").unwrap();
        assert!(matches!(
            load_system(&config, dir.path()),
            Err(SystemError::ParseError { line: 1, .. })
        ));
    }

    #[test]
    fn three_zone_fixture_counts() {
        let dir = tempfile::tempdir().unwrap();
        let system = fixtures::three_zone(&fixtures::FixtureOptions::default());
        let config = write_system(&system, dir.path(), "three").unwrap();
        let loaded = load_system(&config, dir.path()).unwrap();
        assert_eq!(loaded.zones.len(), 3);
        assert_eq!(loaded.resources.len(), 9);
        assert_eq!(loaded.lines.len(), 3);
        assert_eq!(loaded, system);
    }
}
