//! Deterministic synthetic systems used by tests, benchmarks and the CLI.
//!
//! The weather year is synthetic: demand follows a summer-peaking seasonal
//! sinusoid with a daily shape and autocorrelated noise; solar follows the
//! sun with day-to-day cloudiness; wind follows a persistent multi-day
//! weather regime that is stronger in winter. Wind lulls lasting several
//! days and the summer demand peak are what give long-duration storage its
//! value.
//!
//! Cost assumptions (annualized, $/MW-yr unless noted):
//!
//! | resource | kind    | fixed   | variable $/MWh | CRM derate |
//! |----------|---------|---------|----------------|------------|
//! | solar    | VRE     | 55 000  | 0              | 0.8        |
//! | wind     | VRE     | 95 000  | 0              | 0.8        |
//! | ct       | thermal | 75 000  | 160            | 0.95       |
//! | nuclear  | thermal | 550 000 | 8              | 0.95       |
//! | gas      | thermal | 95 000  | 30 (0.37 t/MWh)| 0.95       |
//! | battery  | storage | 95 000  | 0 (4 h, 85 %)  | 0.8        |
//! | ldes     | storage | 200 000 | 0 (200 h, 42 %)| 0.8        |
//!
//! `ct` is the cheap-capacity, expensive-energy zero-carbon backstop;
//! `nuclear` is the expensive-capacity, cheap-energy firm resource.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::system::{
    EmissionsPolicy, EnergySystem, Resource, ResourceKind, StorageParams, TransmissionLine,
    VreClass, Zone, DEFAULT_VOLL,
};

/// Id of the long-duration storage resource in every shipped fixture.
pub const LDES_ID: &str = "ldes";

/// Which zero-carbon firm resources are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backstop {
    /// Both the zero-carbon CT and nuclear are buildable.
    WithCt,
    /// Only the high-capital firm resource: CT and gas capped at zero.
    FirmOnly,
}

#[derive(Debug, Clone)]
pub struct FixtureOptions {
    pub hours: usize,
    pub seed: u64,
    pub backstop: Backstop,
    pub crm_margin: f64,
    pub emissions: EmissionsPolicy,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            hours: 8760,
            seed: 7,
            backstop: Backstop::WithCt,
            crm_margin: 0.15,
            emissions: EmissionsPolicy::Cap(0.0),
        }
    }
}

impl FixtureOptions {
    /// Default options with a shorter horizon.
    pub fn short(hours: usize) -> Self {
        FixtureOptions {
            hours,
            ..Default::default()
        }
    }
}

/// One zone, one thermal resource, flat demand. No reserve margin, no policy.
pub fn flat_thermal(hours: usize, demand_mw: f64) -> EnergySystem {
    let mut system = EnergySystem {
        zones: vec![Zone {
            id: "z1".into(),
            peak_demand: 0.0,
            member_of: None,
        }],
        resources: vec![thermal("gas", "z1", 100_000.0, 30.0, 0.37)],
        lines: Vec::new(),
        demand: vec![vec![demand_mw; hours]],
        vre_profiles: BTreeMap::new(),
        hours,
        crm_margin: 0.0,
        emissions_policy: EmissionsPolicy::None,
        value_of_lost_load: DEFAULT_VOLL,
    };
    system.refresh_peaks();
    system
}

/// Reserve-margin toy: every day carries flat demand with a single evening
/// peak that sets the margin requirement, served by the zero-carbon CT and
/// the long-duration storage device.
pub fn daily_peak(hours: usize) -> EnergySystem {
    let demand = (0..hours).map(|h| if h % 24 == 18 { 200.0 } else { 100.0 }).collect();
    let mut system = EnergySystem {
        zones: vec![Zone {
            id: "z1".into(),
            peak_demand: 0.0,
            member_of: None,
        }],
        resources: vec![thermal("ct", "z1", 75_000.0, 160.0, 0.0), ldes_resource("z1")],
        lines: Vec::new(),
        demand: vec![demand],
        vre_profiles: BTreeMap::new(),
        hours,
        crm_margin: 0.15,
        emissions_policy: EmissionsPolicy::None,
        value_of_lost_load: DEFAULT_VOLL,
    };
    system.refresh_peaks();
    system
}

/// Per-zone weather. `phase` shifts weather regimes between zones so that
/// profiles are correlated but not identical.
struct Weather {
    demand: Vec<f64>,
    solar: Vec<f64>,
    wind: Vec<f64>,
}

fn weather(hours: usize, seed: u64, zone: u64, peak_scale: f64) -> Weather {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(zone));
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let days = hours.div_ceil(24) + 1;

    // Daily latent processes.
    let mut cloud = Vec::with_capacity(days);
    let mut regime = Vec::with_capacity(days);
    let mut temp = Vec::with_capacity(days);
    let (mut c, mut w, mut t) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..days {
        c = 0.5 * c + 0.9 * unit.sample(&mut rng);
        w = 0.85 * w + 0.55 * unit.sample(&mut rng);
        t = 0.7 * t + 0.7 * unit.sample(&mut rng);
        cloud.push(c);
        regime.push(w);
        temp.push(t);
    }

    let mut demand = Vec::with_capacity(hours);
    let mut solar = Vec::with_capacity(hours);
    let mut wind = Vec::with_capacity(hours);
    let mut hourly_noise = 0.0f64;
    for h in 0..hours {
        let d = h / 24;
        let hod = (h % 24) as f64;
        let doy = d as f64;
        let frac = (hod + 0.5) / 24.0;

        let season = 1.0 + 0.20 * (2.0 * PI * (doy - 200.0) / 365.0).cos();
        let daily = 1.0 + 0.12 * (2.0 * PI * (hod - 9.0) / 24.0).sin();
        hourly_noise = 0.9 * hourly_noise + 0.01 * unit.sample(&mut rng);
        let load = peak_scale * 0.8 * season * daily * (1.0 + 0.04 * temp[d] + hourly_noise);
        demand.push(round6(load.max(0.0)));

        let clear = if (6.0..=18.0).contains(&hod) {
            (PI * (hod - 6.0) / 12.0).sin()
        } else {
            0.0
        };
        let solar_season = 0.62 + 0.3 * (2.0 * PI * (doy - 172.0) / 365.0).cos();
        let clearness = (0.78 + 0.2 * cloud[d]).clamp(0.12, 1.0);
        solar.push(round6((0.95 * clear * solar_season * clearness).clamp(0.0, 1.0)));

        // Interpolate the daily regime so lulls ramp in and out.
        let latent = regime[d] * (1.0 - frac) + regime[d + 1] * frac;
        let wind_season = 0.36 + 0.12 * (2.0 * PI * (doy - 15.0) / 365.0).cos();
        let diurnal = 0.04 * (2.0 * PI * (hod - 2.0) / 24.0).cos();
        wind.push(round6((wind_season + 0.22 * latent + diurnal).clamp(0.0, 1.0)));
    }
    Weather {
        demand,
        solar,
        wind,
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn thermal(id: &str, zone: &str, fixed: f64, variable: f64, emissions: f64) -> Resource {
    Resource {
        id: id.into(),
        zone: zone.into(),
        kind: ResourceKind::Thermal,
        fixed_cost: fixed,
        variable_cost: variable,
        energy_cost: 0.0,
        emissions_rate: emissions,
        crm_derate: 0.95,
        max_capacity: None,
        existing_capacity: 0.0,
        vre_class: None,
        storage: None,
    }
}

fn vre(id: &str, zone: &str, fixed: f64, class: VreClass) -> Resource {
    Resource {
        id: id.into(),
        zone: zone.into(),
        kind: ResourceKind::Vre,
        fixed_cost: fixed,
        variable_cost: 0.0,
        energy_cost: 0.0,
        emissions_rate: 0.0,
        crm_derate: 0.8,
        max_capacity: None,
        existing_capacity: 0.0,
        vre_class: Some(class),
        storage: None,
    }
}

fn storage(id: &str, zone: &str, fixed: f64, duration: f64, rte: f64, is_ldes: bool) -> Resource {
    let mut params = StorageParams {
        charge_efficiency: 1.0,
        discharge_efficiency: 1.0,
        self_discharge: 0.0,
        duration: Some(duration),
        is_ldes,
        symmetric: true,
    };
    params.set_round_trip_efficiency(rte);
    Resource {
        id: id.into(),
        zone: zone.into(),
        kind: ResourceKind::Storage,
        fixed_cost: fixed,
        variable_cost: 0.0,
        energy_cost: 0.0,
        emissions_rate: 0.0,
        crm_derate: 0.8,
        max_capacity: None,
        existing_capacity: 0.0,
        vre_class: None,
        storage: Some(params),
    }
}

/// Standard long-duration device: 200 h, 42 % round trip.
pub fn ldes_resource(zone: &str) -> Resource {
    storage(LDES_ID, zone, 200_000.0, 200.0, 0.42, true)
}

fn apply_backstop(resources: &mut [Resource], backstop: Backstop) {
    if backstop == Backstop::FirmOnly {
        for r in resources.iter_mut().filter(|r| r.id.starts_with("ct") || r.id.starts_with("gas")) {
            r.max_capacity = Some(0.0);
        }
    }
}

/// The 1-zone seasonal fixture: 7 resources, peak demand around 1.2 GW.
pub fn seasonal_one_zone(opts: &FixtureOptions) -> EnergySystem {
    let w = weather(opts.hours, opts.seed, 0, 1000.0);
    let zone = "z1";
    let mut resources = vec![
        vre("solar", zone, 55_000.0, VreClass::Solar),
        vre("wind", zone, 95_000.0, VreClass::Wind),
        thermal("ct", zone, 75_000.0, 160.0, 0.0),
        thermal("nuclear", zone, 550_000.0, 8.0, 0.0),
        thermal("gas", zone, 95_000.0, 30.0, 0.37),
        storage("battery", zone, 95_000.0, 4.0, 0.85, false),
        ldes_resource(zone),
    ];
    apply_backstop(&mut resources, opts.backstop);
    let mut vre_profiles = BTreeMap::new();
    vre_profiles.insert("solar".to_string(), w.solar);
    vre_profiles.insert("wind".to_string(), w.wind);
    let mut system = EnergySystem {
        zones: vec![Zone {
            id: zone.into(),
            peak_demand: 0.0,
            member_of: None,
        }],
        resources,
        lines: Vec::new(),
        demand: vec![w.demand],
        vre_profiles,
        hours: opts.hours,
        crm_margin: opts.crm_margin,
        emissions_policy: opts.emissions,
        value_of_lost_load: DEFAULT_VOLL,
    };
    system.refresh_peaks();
    system
}

/// The 3-zone fixture: zones east, central, west; 9 resources; 3 lines.
///
/// | zone    | resources                  | tag     |
/// |---------|----------------------------|---------|
/// | east    | solar_e, ct_e, ldes        | eastern |
/// | central | wind_c, nuclear_c, battery | eastern |
/// | west    | solar_w, wind_w, gas_w     | western |
///
/// Lines: east-central (expandable), central-west, east-west.
pub fn three_zone(opts: &FixtureOptions) -> EnergySystem {
    let zones = [("east", "eastern", 600.0), ("central", "eastern", 400.0), ("west", "western", 500.0)];
    let weathers: Vec<Weather> = zones
        .iter()
        .enumerate()
        .map(|(i, (_, _, scale))| weather(opts.hours, opts.seed, i as u64 + 1, *scale))
        .collect();
    let mut resources = vec![
        vre("solar_e", "east", 55_000.0, VreClass::Solar),
        thermal("ct_e", "east", 75_000.0, 160.0, 0.0),
        ldes_resource("east"),
        vre("wind_c", "central", 95_000.0, VreClass::Wind),
        thermal("nuclear_c", "central", 550_000.0, 8.0, 0.0),
        storage("battery", "central", 95_000.0, 4.0, 0.85, false),
        vre("solar_w", "west", 58_000.0, VreClass::Solar),
        vre("wind_w", "west", 90_000.0, VreClass::Wind),
        thermal("gas_w", "west", 95_000.0, 30.0, 0.37),
    ];
    apply_backstop(&mut resources, opts.backstop);
    let mut vre_profiles = BTreeMap::new();
    vre_profiles.insert("solar_e".to_string(), weathers[0].solar.clone());
    vre_profiles.insert("wind_c".to_string(), weathers[1].wind.clone());
    vre_profiles.insert("solar_w".to_string(), weathers[2].solar.clone());
    vre_profiles.insert("wind_w".to_string(), weathers[2].wind.clone());
    let line = |id: &str, from: &str, to: &str, cap: f64, expandable: bool, loss: f64| TransmissionLine {
        id: id.into(),
        from_zone: from.into(),
        to_zone: to.into(),
        capacity: cap,
        expandable,
        expansion_cost: if expandable { 40_000.0 } else { 0.0 },
        loss_fraction: loss,
    };
    let mut system = EnergySystem {
        zones: zones
            .iter()
            .map(|(id, tag, _)| Zone {
                id: (*id).into(),
                peak_demand: 0.0,
                member_of: Some((*tag).into()),
            })
            .collect(),
        resources,
        lines: vec![
            line("east_central", "east", "central", 200.0, true, 0.02),
            line("central_west", "central", "west", 150.0, false, 0.03),
            line("east_west", "east", "west", 100.0, false, 0.04),
        ],
        demand: weathers.into_iter().map(|w| w.demand).collect(),
        vre_profiles,
        hours: opts.hours,
        crm_margin: opts.crm_margin,
        emissions_policy: opts.emissions,
        value_of_lost_load: DEFAULT_VOLL,
    };
    system.refresh_peaks();
    system
}
