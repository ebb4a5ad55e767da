//! Sweep engine: grid specification, parallel execution, result tables,
//! convergence summaries and the decarbonization curve.

mod convergence;
mod curve;
mod point;
mod sweep;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::fixtures::{self, Backstop, FixtureOptions, LDES_ID};
use crate::model::{LinkAnchor, StorageFormulation, DEFAULT_CRM_SHORTFALL_COST};
use crate::system::{identity_grouping, load_system, EmissionsPolicy, EnergySystem, SystemError};

pub use convergence::{convergence_index, convergence_report, spearman, ConvergenceRow};
pub use curve::{annual_emissions, decarbonization_curve, write_curve, CurveRow, CurveSpec};
pub use point::{evaluate_point, prepare_point, GridPoint, PointOutcome, PreparedPoint, SweepRow};
pub use sweep::{run_sweep, SweepOptions, SweepResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("no reference row: {0}")]
    MissingReference(String),
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Where the base system comes from: a shipped generator or a scenario file.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    /// `seasonal_one_zone`, `three_zone`, `flat_thermal` or `daily_peak`.
    pub fixture: Option<String>,
    pub hours: Option<usize>,
    /// Weather seed of the generator.
    pub weather_seed: Option<u64>,
    /// `with_ct` or `firm_only`.
    pub backstop: Option<String>,
    pub crm_margin: Option<f64>,
    pub emissions: Option<String>,
    /// Scenario TOML; relative paths are resolved against the spec file.
    pub config: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
}

/// Named multiplier set applied to resource fixed costs.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CostCase {
    pub name: String,
    #[serde(default)]
    pub factors: BTreeMap<String, f64>,
}

impl CostCase {
    pub fn base() -> Self {
        CostCase {
            name: "base".into(),
            factors: BTreeMap::new(),
        }
    }
}

/// Grid axes. Empty value lists for `duration`, `capacity`, `rte` and
/// `emissions` keep the base system's values; every other axis must be
/// non-empty.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Representative periods per point; 0 keeps every input period.
    #[serde(default = "zero_list")]
    pub n_periods: Vec<usize>,
    /// Hours per period; 0 means one period spanning the whole horizon.
    #[serde(default = "zero_list")]
    pub period_length: Vec<usize>,
    #[serde(default = "identity_list")]
    pub zone_grouping: Vec<String>,
    #[serde(default = "true_list")]
    pub ldes_linking: Vec<bool>,
    #[serde(default = "true_list")]
    pub virtual_discharge: Vec<bool>,
    #[serde(default = "base_case")]
    pub cost_cases: Vec<CostCase>,
    #[serde(default)]
    pub duration: Vec<f64>,
    /// Forced LDES capacity, MW. Empty leaves the capacity to the optimizer
    /// and skips value analysis.
    #[serde(default)]
    pub capacity: Vec<f64>,
    #[serde(default)]
    pub rte: Vec<f64>,
    /// `none`, `cap:<tCO2>` or `price:<$/tCO2>`.
    #[serde(default)]
    pub emissions: Vec<String>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_periods: zero_list(),
            period_length: zero_list(),
            zone_grouping: identity_list(),
            ldes_linking: true_list(),
            virtual_discharge: true_list(),
            cost_cases: base_case(),
            duration: Vec::new(),
            capacity: Vec::new(),
            rte: Vec::new(),
            emissions: Vec::new(),
        }
    }
}

fn zero_list() -> Vec<usize> {
    vec![0]
}

fn identity_list() -> Vec<String> {
    vec!["identity".into()]
}

fn true_list() -> Vec<bool> {
    vec![true]
}

fn base_case() -> Vec<CostCase> {
    vec![CostCase::base()]
}

/// Model options shared by every grid point.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub crm_enabled: bool,
    pub objective_scale: f64,
    /// `representatives` or `all_input_periods`.
    pub link_anchor: String,
    /// `improved` or `decomposed`.
    pub formulation: String,
    pub crm_shortfall_cost: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            crm_enabled: true,
            objective_scale: 1.0,
            link_anchor: "representatives".into(),
            formulation: "improved".into(),
            crm_shortfall_cost: DEFAULT_CRM_SHORTFALL_COST,
        }
    }
}

impl ModelSpec {
    pub fn anchor(&self) -> Result<LinkAnchor, HarnessError> {
        match self.link_anchor.as_str() {
            "representatives" => Ok(LinkAnchor::Representatives),
            "all_input_periods" => Ok(LinkAnchor::AllInputPeriods),
            other => Err(HarnessError::InvalidSpec(format!("link_anchor '{other}'"))),
        }
    }

    pub fn storage_formulation(&self) -> Result<StorageFormulation, HarnessError> {
        match self.formulation.as_str() {
            "improved" => Ok(StorageFormulation::Improved),
            "decomposed" => Ok(StorageFormulation::Decomposed),
            other => Err(HarnessError::InvalidSpec(format!("formulation '{other}'"))),
        }
    }
}

/// A sweep: base scenario, grid axes and fixed model options.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_name")]
    pub name: String,
    /// Clustering seed shared by every grid point.
    #[serde(default)]
    pub seed: u64,
    pub base: BaseSpec,
    /// Id of the long-duration storage resource under study.
    #[serde(default = "default_ldes")]
    pub ldes: String,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub model: ModelSpec,
    /// Zone id → group id maps, referenced by name from `grid.zone_grouping`.
    #[serde(default)]
    pub groupings: BTreeMap<String, BTreeMap<String, String>>,
    pub curve: Option<CurveSpec>,
    /// Directory the spec was read from; anchors relative paths.
    #[serde(skip)]
    pub root: PathBuf,
}

fn default_name() -> String {
    "sweep".into()
}

fn default_ldes() -> String {
    LDES_ID.into()
}

/// Parses `none`, `cap:<value>` or `price:<value>`.
pub fn parse_emissions(text: &str) -> Result<EmissionsPolicy, HarnessError> {
    let bad = || HarnessError::InvalidSpec(format!("emissions policy '{text}'"));
    if text == "none" {
        return Ok(EmissionsPolicy::None);
    }
    let (kind, value) = text.split_once(':').ok_or_else(bad)?;
    let value: f64 = value.trim().parse().map_err(|_| bad())?;
    if !(value >= 0.0) {
        return Err(bad());
    }
    match kind.trim() {
        "cap" => Ok(EmissionsPolicy::Cap(value)),
        "price" if value.is_finite() => Ok(EmissionsPolicy::Price(value)),
        _ => Err(bad()),
    }
}

impl SweepSpec {
    pub fn from_toml(text: &str, root: &Path) -> Result<SweepSpec, HarnessError> {
        let mut spec: SweepSpec =
            toml::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        spec.root = root.to_path_buf();
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<SweepSpec, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        SweepSpec::from_toml(&text, &root)
    }

    /// A sweep over a generated fixture.
    pub fn for_fixture(fixture: &str, hours: usize) -> SweepSpec {
        SweepSpec {
            name: default_name(),
            seed: 0,
            base: BaseSpec {
                fixture: Some(fixture.into()),
                hours: Some(hours),
                weather_seed: None,
                backstop: None,
                crm_margin: None,
                emissions: None,
                config: None,
                data_dir: None,
            },
            ldes: default_ldes(),
            grid: GridSpec::default(),
            model: ModelSpec::default(),
            groupings: BTreeMap::new(),
            curve: None,
            root: PathBuf::new(),
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    /// Builds the base system.
    pub fn load_base(&self) -> Result<EnergySystem, HarnessError> {
        let b = &self.base;
        let mut system = match (&b.fixture, &b.config) {
            (Some(name), None) => {
                let mut opts = FixtureOptions::default();
                if let Some(h) = b.hours {
                    opts.hours = h;
                }
                if let Some(s) = b.weather_seed {
                    opts.seed = s;
                }
                opts.backstop = match b.backstop.as_deref() {
                    None | Some("with_ct") => Backstop::WithCt,
                    Some("firm_only") => Backstop::FirmOnly,
                    Some(other) => {
                        return Err(HarnessError::InvalidSpec(format!("backstop '{other}'")))
                    }
                };
                if let Some(m) = b.crm_margin {
                    opts.crm_margin = m;
                }
                if let Some(e) = &b.emissions {
                    opts.emissions = parse_emissions(e)?;
                }
                match name.as_str() {
                    "seasonal_one_zone" => fixtures::seasonal_one_zone(&opts),
                    "three_zone" => fixtures::three_zone(&opts),
                    "flat_thermal" => fixtures::flat_thermal(opts.hours, 1000.0),
                    "daily_peak" => fixtures::daily_peak(opts.hours),
                    other => return Err(HarnessError::InvalidSpec(format!("fixture '{other}'"))),
                }
            }
            (None, Some(config)) => {
                let config = self.resolve(config);
                let data = match &b.data_dir {
                    Some(d) => self.resolve(d),
                    None => config.parent().map(Path::to_path_buf).unwrap_or_default(),
                };
                let mut system = load_system(&config, &data)?;
                if let Some(h) = b.hours {
                    system = system.truncated(h);
                }
                if let Some(m) = b.crm_margin {
                    system.crm_margin = m;
                }
                if let Some(e) = &b.emissions {
                    system.emissions_policy = parse_emissions(e)?;
                }
                system
            }
            _ => {
                return Err(HarnessError::InvalidSpec(
                    "base needs exactly one of 'fixture' or 'config'".into(),
                ))
            }
        };
        system.refresh_peaks();
        Ok(system)
    }

    /// Zone grouping by name; `identity` and `single` are built in.
    pub fn grouping(
        &self,
        name: &str,
        system: &EnergySystem,
    ) -> Result<BTreeMap<String, String>, HarnessError> {
        match name {
            "identity" => Ok(identity_grouping(system)),
            "single" => Ok(system
                .zones
                .iter()
                .map(|z| (z.id.clone(), "all".to_string()))
                .collect()),
            other => self
                .groupings
                .get(other)
                .cloned()
                .ok_or_else(|| HarnessError::InvalidSpec(format!("unknown zone grouping '{other}'"))),
        }
    }

    /// Checks every axis against the base system.
    pub fn validate(&self, system: &EnergySystem) -> Result<(), HarnessError> {
        let g = &self.grid;
        let invalid = |m: String| Err(HarnessError::InvalidSpec(m));
        let axes = [
            ("n_periods", g.n_periods.len()),
            ("period_length", g.period_length.len()),
            ("zone_grouping", g.zone_grouping.len()),
            ("ldes_linking", g.ldes_linking.len()),
            ("virtual_discharge", g.virtual_discharge.len()),
            ("cost_cases", g.cost_cases.len()),
        ];
        for (axis, len) in axes {
            if len == 0 {
                return invalid(format!("axis '{axis}' is empty"));
            }
        }
        match system.resource(&self.ldes) {
            Some(r) if r.is_storage() => {}
            _ => return invalid(format!("ldes resource '{}' is not a storage resource", self.ldes)),
        }
        for &tau in &g.period_length {
            if tau > system.hours {
                return invalid(format!("period_length {tau} exceeds {} hours", system.hours));
            }
            let n_input = if tau == 0 { 1 } else { system.hours / tau };
            for &k in &g.n_periods {
                if k > n_input {
                    return invalid(format!(
                        "n_periods {k} exceeds the {n_input} input periods of length {tau}"
                    ));
                }
            }
        }
        for name in &g.zone_grouping {
            let grouping = self.grouping(name, system)?;
            if let Some(z) = system.zones.iter().find(|z| !grouping.contains_key(&z.id)) {
                return invalid(format!("grouping '{name}' does not assign zone '{}'", z.id));
            }
        }
        for case in &g.cost_cases {
            for (id, f) in &case.factors {
                if system.resource(id).is_none() {
                    return invalid(format!("cost case '{}': unknown resource '{id}'", case.name));
                }
                if !(*f >= 0.0 && f.is_finite()) {
                    return invalid(format!("cost case '{}': factor {f}", case.name));
                }
            }
        }
        if let Some(d) = g.duration.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return invalid(format!("duration {d}"));
        }
        if let Some(k) = g.capacity.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
            return invalid(format!("capacity {k}"));
        }
        if let Some(r) = g.rte.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return invalid(format!("rte {r}"));
        }
        for e in &g.emissions {
            parse_emissions(e)?;
        }
        self.model.anchor()?;
        self.model.storage_formulation()?;
        Ok(())
    }

    /// Every grid point in a fixed nesting order.
    pub fn points(&self) -> Result<Vec<GridPoint>, HarnessError> {
        let g = &self.grid;
        fn keep<T: Clone>(values: &[T]) -> Vec<Option<T>> {
            if values.is_empty() {
                vec![None]
            } else {
                values.iter().cloned().map(Some).collect()
            }
        }
        let emissions = g
            .emissions
            .iter()
            .map(|e| parse_emissions(e))
            .collect::<Result<Vec<_>, _>>()?;
        let mut points = Vec::new();
        for grouping in &g.zone_grouping {
            for (case, _) in g.cost_cases.iter().enumerate() {
                for duration in keep(&g.duration) {
                    for rte in keep(&g.rte) {
                        for policy in keep(&emissions) {
                            for capacity in keep(&g.capacity) {
                                for &linking in &g.ldes_linking {
                                    for &virtual_discharge in &g.virtual_discharge {
                                        for &tau in &g.period_length {
                                            for &k in &g.n_periods {
                                                points.push(GridPoint {
                                                    index: points.len(),
                                                    n_periods: k,
                                                    period_length: tau,
                                                    zone_grouping: grouping.clone(),
                                                    ldes_linking: linking,
                                                    virtual_discharge,
                                                    cost_case: case,
                                                    duration,
                                                    capacity,
                                                    rte,
                                                    emissions: policy,
                                                });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(points)
    }
}
