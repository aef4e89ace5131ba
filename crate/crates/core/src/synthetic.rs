//! Synthetic hourly traces and a small test system, for examples, the
//! sample configuration and tests. Nothing here is calibrated to real data.

use std::f64::consts::PI;
use std::io::Write;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::model::{
    HydrogenPortfolio, Horizon, LoadModel, Resource, StorageUnit, SystemResources, UnlimitedUnit, VariableUnit,
};
use crate::scenario::{TraceStore, LOAD_COLUMN};

pub const WIND_COLUMN: &str = "wind_cf";
pub const SOLAR_COLUMN: &str = "solar_cf";

/// Hourly load shape (peak 1), wind and solar capacity factors for `days`
/// days of a warm season.
pub fn synthetic_traces(days: usize, seed: u64) -> TraceStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let steps = days * 24;
    let mut load = Vec::with_capacity(steps);
    let mut wind = Vec::with_capacity(steps);
    let mut solar = Vec::with_capacity(steps);
    let mut heat = 0.0;
    let mut w = 0.0;
    for d in 0..days {
        heat = 0.8 * heat + 0.6 * noise.sample(&mut rng);
        let weekend = d % 7 >= 5;
        let clear = rng.gen_range(0.35..1.0);
        let day_level = 0.80 + 0.05 * heat - if weekend { 0.06 } else { 0.0 };
        for h in 0..24 {
            let hour = h as f64;
            let evening = (-(hour - 17.0).powi(2) / 18.0).exp();
            let night = 0.5 * (1.0 + (2.0 * PI * (hour - 4.0) / 24.0 - PI / 2.0).sin());
            load.push(day_level * (0.72 + 0.2 * evening + 0.08 * night) + 0.01 * noise.sample(&mut rng));
            w = 0.93 * w + 0.37 * noise.sample(&mut rng);
            let diurnal = 0.1 * (2.0 * PI * (hour - 3.0) / 24.0).cos();
            wind.push(1.0 / (1.0 + (-(w - 0.6 + diurnal)).exp()) * 0.9);
            let sun = if (6.0..=19.0).contains(&hour) {
                (PI * (hour - 6.0) / 13.0).sin().max(0.0)
            } else {
                0.0
            };
            solar.push((sun * clear * 0.85).clamp(0.0, 1.0));
        }
    }
    let peak = load.iter().cloned().fold(f64::MIN, f64::max);
    load.iter_mut().for_each(|v| *v = (*v / peak).max(0.0));
    let mut store = TraceStore::for_step_hours(1.0);
    store.insert(LOAD_COLUMN, load).expect("finite");
    store.insert(WIND_COLUMN, wind).expect("finite");
    store.insert(SOLAR_COLUMN, solar).expect("finite");
    store
}

/// Writes traces in the CSV layout read by [`TraceStore::from_csv_reader`].
/// Load is written in MW at `peak_mw`.
pub fn write_trace_csv<W: Write>(w: W, traces: &TraceStore, peak_mw: f64) -> Result<()> {
    let load = traces.require(LOAD_COLUMN)?;
    let wind = traces.require(WIND_COLUMN)?;
    let solar = traces.require(SOLAR_COLUMN)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["timestamp", LOAD_COLUMN, WIND_COLUMN, SOLAR_COLUMN])?;
    let start = NaiveDate::from_ymd_opt(2023, 6, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    for t in 0..load.len() {
        let ts = start + Duration::hours(t as i64);
        out.write_record([
            ts.format("%Y-%m-%dT%H:%M").to_string(),
            format!("{:.4}", load[t] * peak_mw),
            format!("{:.5}", wind[t]),
            format!("{:.5}", solar[t]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// A scaled-down test fleet: 65 MW peak, eight 8 MW units with 5% forced
/// outage rate, 30 MW wind, 10 MW solar, 70 MWh of storage.
pub fn small_system(steps: usize) -> (SystemResources, LoadModel) {
    let mut res = SystemResources::empty(Horizon::hourly(steps));
    for k in 0..8 {
        res.unlimited.push(UnlimitedUnit {
            id: format!("gen{k}"),
            capacity_mw: 8.0,
            efor: 0.05,
            mean_repair_hours: 24.0,
        });
    }
    res.variable.push(VariableUnit {
        id: "wind".into(),
        capacity_mw: 30.0,
        trace_id: WIND_COLUMN.into(),
    });
    res.variable.push(VariableUnit {
        id: "solar".into(),
        capacity_mw: 10.0,
        trace_id: SOLAR_COLUMN.into(),
    });
    res.storage.push(StorageUnit {
        id: "battery".into(),
        p_charge_max_mw: 17.5,
        p_discharge_max_mw: 17.5,
        e_min_mwh: 0.0,
        e_max_mwh: 70.0,
        eta_charge: 0.9,
        initial_soc_mwh: 35.0,
    });
    let load = LoadModel {
        peak_mw: 65.0,
        load_trace_id: LOAD_COLUMN.into(),
    };
    (res, load)
}

/// Colocated hydrogen facility at one tenth of the reference size: 1 MW of
/// wind, a 0.8 MW electrolyzer with 50% demand response, and enough stored
/// hydrogen for 0.5 MWh of fuel-cell output.
pub fn small_portfolio() -> HydrogenPortfolio {
    HydrogenPortfolio {
        id: "h2-facility".into(),
        wind_capacity_mw: 1.0,
        wind_trace_id: Some(WIND_COLUMN.into()),
        ely_nominal_mw: 0.8,
        ely_dr_fraction: 0.5,
        ely_eff_mwh_h2_per_mwh_e: 0.7,
        fc_max_mw: 0.5,
        fc_eff_mwh_e_per_mwh_h2: 0.5,
        tank_max_mwh_h2: 1.0,
        tank_initial_mwh_h2: 1.0,
        allow_tank_recharge: false,
        ely_sales_floor_mw: None,
    }
}

/// Five storage classes that never merge, for solver timing.
pub fn distinct_storage_classes() -> Vec<StorageUnit> {
    (0..5)
        .map(|k| StorageUnit {
            id: format!("store{k}"),
            p_charge_max_mw: 4.0 + k as f64,
            p_discharge_max_mw: 4.0 + k as f64,
            e_min_mwh: 0.0,
            e_max_mwh: (4.0 + k as f64) * (1.0 + k as f64),
            eta_charge: 0.8 + 0.04 * k as f64,
            initial_soc_mwh: 0.5 * (4.0 + k as f64) * (1.0 + k as f64),
        })
        .collect()
}

pub fn portfolio_resource() -> Resource {
    Resource::Colocated(small_portfolio())
}
