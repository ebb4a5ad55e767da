use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{self, FixtureOptions, LDES_ID};
use crate::lp::RowSense;
use crate::solver::{solve, verify_certificate, Solution, SolveOptions};
use crate::system::{Resource, ResourceKind, StorageParams, VreClass, DEFAULT_VOLL};
use crate::tdr::{build_reduction, PeriodPartition, RepresentativePeriodSet};

fn solved(model: &BuiltModel) -> Solution {
    let s = solve(&model.lp, &SolveOptions::default()).unwrap();
    assert!(s.is_optimal(), "{:?}", s.status);
    let report = verify_certificate(&model.lp, &s, 1e-6);
    assert!(report.passed, "{report}");
    s
}

fn value(model: &BuiltModel, s: &Solution, family: &str, entity: &str, k: usize) -> f64 {
    s.primal[model.var(family, entity, k).unwrap()]
}

fn no_crm() -> ModelConfig {
    ModelConfig {
        crm_enabled: false,
        ..Default::default()
    }
}

fn storage_resource(id: &str, eta_c: f64, eta_d: f64, loss: f64, power: f64) -> Resource {
    Resource {
        id: id.into(),
        zone: "z1".into(),
        kind: ResourceKind::Storage,
        fixed_cost: 0.0,
        variable_cost: 0.0,
        energy_cost: 0.0,
        emissions_rate: 0.0,
        crm_derate: 0.8,
        max_capacity: Some(power),
        existing_capacity: power,
        vre_class: None,
        storage: Some(StorageParams {
            charge_efficiency: eta_c,
            discharge_efficiency: eta_d,
            self_discharge: loss,
            duration: None,
            is_ldes: false,
            symmetric: true,
        }),
    }
}

/// Free energy is available only in hour 0; demand only in hour 1.
fn two_hour_toy(eta_c: f64, eta_d: f64, demand: f64) -> EnergySystem {
    let mut system = fixtures::flat_thermal(2, 0.0);
    system.resources.clear();
    system.resources.push(Resource {
        id: "sun".into(),
        zone: "z1".into(),
        kind: ResourceKind::Vre,
        fixed_cost: 0.0,
        variable_cost: 0.0,
        energy_cost: 0.0,
        emissions_rate: 0.0,
        crm_derate: 0.0,
        max_capacity: Some(1000.0),
        existing_capacity: 1000.0,
        vre_class: Some(VreClass::Solar),
        storage: None,
    });
    system.vre_profiles.insert("sun".into(), vec![1.0, 0.0]);
    system.resources.push(storage_resource("store", eta_c, eta_d, 0.0, 10.0));
    system.demand = vec![vec![0.0, demand]];
    system.refresh_peaks();
    system
}

#[test]
fn flat_thermal_closed_form() {
    let hours = 720;
    let system = fixtures::flat_thermal(hours, 100.0);
    let rps = RepresentativePeriodSet::monolithic(hours);
    let model = build_model(&system, &rps, &ModelConfig::default()).unwrap();
    let s = solved(&model);
    let cap = value(&model, &s, "cap", "gas", 0);
    assert!((cap - 100.0 / 0.95).abs() < 1e-5, "{cap}");
    let expected = 100_000.0 * 100.0 / 0.95 + 30.0 * 100.0 * hours as f64;
    assert!((s.objective - expected).abs() / expected < 1e-8, "{} vs {expected}", s.objective);
}

#[test]
fn charge_then_discharge_hand_arithmetic() {
    // Charging 10 MWh at 0.8 stores 8 MWh; discharging at 0.9 delivers 7.2.
    let system = two_hour_toy(0.8, 0.9, 10.0);
    let model = build_model(&system, &RepresentativePeriodSet::monolithic(2), &no_crm()).unwrap();
    let s = solved(&model);
    assert!((value(&model, &s, "dis", "store", 1) - 7.2).abs() < 1e-6);
    assert!((value(&model, &s, "unserved", "z1", 1) - 2.8).abs() < 1e-6);
    let stored = value(&model, &s, "soc", "store", 0) - value(&model, &s, "soc", "store", 1);
    assert!((stored - 8.0).abs() < 1e-6, "{stored}");
    let expected = DEFAULT_VOLL * 2.8;
    assert!((s.objective - expected).abs() < 1e-4 * expected);
}

#[test]
fn soc_rows_decay_and_lossless_charge() {
    let mut system = two_hour_toy(1.0, 1.0, 0.0);
    system.resources[1] = storage_resource("store", 1.0, 1.0, 0.1, 10.0);
    let system = system.truncated(2);
    let model = build_model(&system, &RepresentativePeriodSet::monolithic(2), &no_crm()).unwrap();
    let row = model.row("soc_balance", "store", 1).unwrap();
    let mut x = vec![0.0; model.lp.n_cols()];
    // Decay only: Γ1 = 0.9 Γ0.
    x[model.var("soc", "store", 0).unwrap()] = 50.0;
    x[model.var("soc", "store", 1).unwrap()] = 45.0;
    assert!(model.lp.row_activity(&x)[row].abs() < 1e-12);

    let mut system = two_hour_toy(1.0, 1.0, 0.0);
    system.resources[1] = storage_resource("store", 1.0, 1.0, 0.0, 10.0);
    let model = build_model(&system, &RepresentativePeriodSet::monolithic(2), &no_crm()).unwrap();
    let row = model.row("soc_balance", "store", 1).unwrap();
    let mut x = vec![0.0; model.lp.n_cols()];
    x[model.var("soc", "store", 0).unwrap()] = 5.0;
    x[model.var("chg", "store", 1).unwrap()] = 10.0;
    x[model.var("soc", "store", 1).unwrap()] = 15.0;
    assert!(model.lp.row_activity(&x)[row].abs() < 1e-12);
}

#[test]
fn zero_forced_capacity_adds_one_row() {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 8));
    let rps = build_reduction(&system, 24, 4, 1).unwrap();
    let base = build_model(&system, &rps, &ModelConfig::default()).unwrap();
    let forced = ModelConfig {
        forced_ldes: Some(ForcedLdes {
            resource: LDES_ID.into(),
            capacity: 0.0,
            duration: 200.0,
        }),
        ..Default::default()
    };
    let with = build_model(&system, &rps, &forced).unwrap();
    assert_eq!(with.lp.n_cols(), base.lp.n_cols());
    assert_eq!(with.lp.n_rows(), base.lp.n_rows() + 1);
    assert_eq!(with.lp.nnz(), base.lp.nnz() + 1);
    let row = with.forced_row.unwrap();
    assert_eq!(with.lp.rhs[row], 0.0);
    assert_eq!(with.lp.senses[row], RowSense::Eq);
    assert_eq!(with.lp.row_names[row], "forced:ldes");
}

#[test]
fn inter_period_row_counts() {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 12));
    let rps = build_reduction(&system, 24, 4, 3).unwrap();
    let n = rps.n_input_periods();
    let count = |model: &BuiltModel, family: &str| {
        model.cons.get(family, LDES_ID).map_or(0, |b| b.len)
    };
    let literal = ModelConfig {
        link_anchor: LinkAnchor::AllInputPeriods,
        ..Default::default()
    };
    let model = build_model(&system, &rps, &literal).unwrap();
    assert_eq!(
        count(&model, "link") + count(&model, "sequence") + count(&model, "q_cap"),
        3 * n
    );
    let model = build_model(&system, &rps, &ModelConfig::default()).unwrap();
    assert_eq!(count(&model, "link"), rps.len());
    assert_eq!(count(&model, "sequence"), n);
    assert_eq!(count(&model, "q_cap"), n);
    // The battery is not long-duration and is never linked.
    assert!(model.vars.get("q", "battery").is_none());
}

#[test]
fn unlinked_build_has_no_inter_period_columns() {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 6));
    let rps = build_reduction(&system, 24, 3, 0).unwrap();
    let config = ModelConfig {
        ldes_linking: false,
        ..Default::default()
    };
    let model = build_model(&system, &rps, &config).unwrap();
    assert_eq!(model.vars.family("q").count(), 0);
    assert_eq!(model.vars.family("dq").count(), 0);
    assert_eq!(model.cons.family("sequence").count(), 0);
    assert!(model.forced_row.is_none());
}

#[test]
fn registries_cover_every_index() {
    let system = fixtures::three_zone(&FixtureOptions::short(24 * 6));
    let rps = build_reduction(&system, 24, 4, 0).unwrap();
    let model = build_model(&system, &rps, &ModelConfig::default()).unwrap();
    assert_eq!(model.vars.len(), model.lp.n_cols());
    assert_eq!(model.cons.len(), model.lp.n_rows());
    for j in 0..model.lp.n_cols() {
        assert_eq!(model.vars.resolve(&model.lp.col_names[j]), Some(j));
    }
    for i in 0..model.lp.n_rows() {
        assert_eq!(model.cons.resolve(&model.lp.row_names[i]), Some(i));
    }
}

#[test]
fn monolithic_linking_is_vacuous() {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 14));
    let rps = RepresentativePeriodSet::monolithic(system.hours);
    let linked = build_model(&system, &rps, &ModelConfig::default()).unwrap();
    let unlinked = build_model(
        &system,
        &rps,
        &ModelConfig {
            ldes_linking: false,
            ..Default::default()
        },
    )
    .unwrap();
    let a = solved(&linked);
    let b = solved(&unlinked);
    assert!((a.objective - b.objective).abs() <= 1e-8 * b.objective.abs());
    assert!(value(&linked, &a, "dq", LDES_ID, 0).abs() < 1e-6);
}

#[test]
fn identical_periods_force_zero_change() {
    // Every day is the same, and all map to day 0.
    let mut system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 5));
    for h in 0..system.hours {
        let src = h % 24;
        system.demand[0][h] = system.demand[0][src];
        for p in system.vre_profiles.values_mut() {
            p[h] = p[src];
        }
    }
    let partition = PeriodPartition::new(system.hours, 24).unwrap();
    let rps = RepresentativePeriodSet::new(partition, vec![0], vec![0; 5], vec![false]);
    let model = build_model(&system, &rps, &ModelConfig::default()).unwrap();
    let s = solved(&model);
    assert!(value(&model, &s, "dq", LDES_ID, 0).abs() < 1e-6);
}

#[test]
fn emissions_cap_cases() {
    let hours = 48;
    let mut system = fixtures::flat_thermal(hours, 100.0);
    let energy = 100.0 * hours as f64;

    system.emissions_policy = EmissionsPolicy::Cap(f64::INFINITY);
    let rps = RepresentativePeriodSet::monolithic(hours);
    let model = build_model(&system, &rps, &no_crm()).unwrap();
    let s = solved(&model);
    assert_eq!(s.duals[model.row("emissions", "system", 0).unwrap()], 0.0);

    system.emissions_policy = EmissionsPolicy::Cap(0.0);
    let model = build_model(&system, &rps, &no_crm()).unwrap();
    let s = solved(&model);
    let expected = DEFAULT_VOLL * energy;
    assert!((s.objective - expected).abs() < 1e-6 * expected);
}

#[test]
fn carbon_price_closed_form() {
    let hours = 48;
    let mut system = fixtures::flat_thermal(hours, 100.0);
    let rps = RepresentativePeriodSet::monolithic(hours);
    let base = solved(&build_model(&system, &rps, &ModelConfig::default()).unwrap()).objective;
    system.emissions_policy = EmissionsPolicy::Price(200.0);
    let priced = solved(&build_model(&system, &rps, &ModelConfig::default()).unwrap()).objective;
    let expected = 200.0 * 0.37 * 100.0 * hours as f64;
    assert!(((priced - base) - expected).abs() < 1e-6 * priced);
}

#[test]
fn emissions_cap_ladder_is_monotone() {
    let mut system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 6));
    let rps = RepresentativePeriodSet::monolithic(system.hours);
    let mut last = f64::INFINITY;
    for cap in [0.0, 2_000.0, 8_000.0, 30_000.0, f64::INFINITY] {
        system.emissions_policy = EmissionsPolicy::Cap(cap);
        let obj = solved(&build_model(&system, &rps, &ModelConfig::default()).unwrap()).objective;
        assert!(obj <= last * (1.0 + 1e-7), "cap {cap}: {obj} > {last}");
        last = obj;
    }
}

#[test]
fn forced_capacity_fixes_energy() {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 6));
    let rps = RepresentativePeriodSet::monolithic(system.hours);
    let config = ModelConfig {
        forced_ldes: Some(ForcedLdes {
            resource: LDES_ID.into(),
            capacity: 1.0,
            duration: 200.0,
        }),
        ..Default::default()
    };
    let model = build_model(&system, &rps, &config).unwrap();
    let s = solved(&model);
    assert!((value(&model, &s, "cap", LDES_ID, 0) - 1.0).abs() < 1e-7);
    assert!((value(&model, &s, "energy", LDES_ID, 0) - 200.0).abs() < 1e-5);
}

#[test]
fn forced_capacity_is_worthless_with_cheap_firm_power() {
    let hours = 48;
    let mut system = fixtures::flat_thermal(hours, 100.0);
    system.resources.push(fixtures::ldes_resource("z1"));
    let rps = RepresentativePeriodSet::monolithic(hours);
    let at = |k: f64| {
        let config = ModelConfig {
            forced_ldes: Some(ForcedLdes {
                resource: LDES_ID.into(),
                capacity: k,
                duration: 200.0,
            }),
            crm_enabled: false,
            ..Default::default()
        };
        let model = build_model(&system, &rps, &config).unwrap();
        let s = solved(&model);
        (s.objective, s.duals[model.forced_row.unwrap()])
    };
    let (obj0, dual0) = at(0.0);
    let (obj1, _) = at(1.0);
    assert!((obj0 - obj1).abs() < 1e-6 * obj0);
    // Capacity below zero is infeasible, so any nonpositive dual is valid here.
    assert!(dual0 <= 1e-6, "{dual0}");
}

#[test]
fn configuration_errors() {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::short(48));
    let rps = RepresentativePeriodSet::monolithic(48);
    let missing = ModelConfig {
        forced_ldes: Some(ForcedLdes {
            resource: "nope".into(),
            capacity: 1.0,
            duration: 200.0,
        }),
        ..Default::default()
    };
    assert_eq!(
        build_model(&system, &rps, &missing).unwrap_err(),
        ModelError::MissingResource("nope".into())
    );
    let conflict = ModelConfig {
        formulation: StorageFormulation::Decomposed,
        ..Default::default()
    };
    assert!(matches!(build_model(&system, &rps, &conflict), Err(ModelError::InvalidConfig(_))));
    let wrong = RepresentativePeriodSet::monolithic(24);
    assert!(matches!(
        build_model(&system, &wrong, &ModelConfig::default()),
        Err(ModelError::InconsistentReduction(_))
    ));
}

#[test]
fn aggregated_system_builds() {
    let system = fixtures::three_zone(&FixtureOptions::short(24 * 4));
    let grouping: BTreeMap<String, String> = system
        .zones
        .iter()
        .map(|z| (z.id.clone(), "all".to_string()))
        .collect();
    let one = crate::system::aggregate_zones(&system, &grouping).unwrap();
    let rps = RepresentativePeriodSet::monolithic(one.hours);
    let model = build_model(&one, &rps, &ModelConfig::default()).unwrap();
    assert_eq!(model.vars.family("flow_fwd").count(), 0);
    solved(&model);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn cost_scaling_scales_objective(factor in 0.01f64..100.0) {
        let system = fixtures::seasonal_one_zone(&FixtureOptions::short(24 * 4));
        let rps = build_reduction(&system, 24, 2, 0).unwrap();
        let base_model = build_model(&system, &rps, &ModelConfig::default()).unwrap();
        let base = solved(&base_model);
        let mut scaled_system = system.clone();
        scaled_system.scale_costs(factor);
        let config = ModelConfig {
            crm_shortfall_cost: DEFAULT_CRM_SHORTFALL_COST * factor,
            ..Default::default()
        };
        let scaled_model = build_model(&scaled_system, &rps, &config).unwrap();
        let scaled = solved(&scaled_model);
        prop_assert!((scaled.objective - factor * base.objective).abs() <= 1e-6 * scaled.objective.abs());
        for r in &system.resources {
            let a = value(&base_model, &base, "cap", &r.id, 0);
            let b = value(&scaled_model, &scaled, "cap", &r.id, 0);
            prop_assert!((a - b).abs() <= 1e-3 * (1.0 + a.abs()), "{}: {} vs {}", r.id, a, b);
        }
    }
}

#[test]
fn virtual_discharge_replaces_peak_capacity() {
    // Identical days: one representative day stands for the year.
    let system = fixtures::daily_peak(8760);
    let partition = PeriodPartition::new(8760, 24).unwrap();
    let rps = RepresentativePeriodSet::new(partition, vec![0], vec![0; 365], vec![false]);
    let energy = 365.0 * (23.0 * 100.0 + 200.0) * 160.0;
    for k in [20.0, 50.0] {
        let config = |virtual_discharge| ModelConfig {
            virtual_discharge,
            forced_ldes: Some(ForcedLdes {
                resource: LDES_ID.into(),
                capacity: k,
                duration: 200.0,
            }),
            ..Default::default()
        };
        let on = solved(&build_model(&system, &rps, &config(true)).unwrap()).objective;
        let off = solved(&build_model(&system, &rps, &config(false)).unwrap()).objective;
        // Reserved storage energy covers 0.8 K of the 230 MW requirement;
        // physically discharging for it costs more than CT capacity.
        let expect_on = energy + 75_000.0 * (230.0 - 0.8 * k) / 0.95;
        let expect_off = energy + 75_000.0 * 230.0 / 0.95;
        assert!((on - expect_on).abs() < 1e-6 * expect_on, "K {k}: {on} vs {expect_on}");
        assert!((off - expect_off).abs() < 1e-6 * expect_off, "K {k}: {off} vs {expect_off}");
    }
}
