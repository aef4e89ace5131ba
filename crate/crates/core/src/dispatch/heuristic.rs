//! Chronological priority dispatch without look-ahead, the rule-based
//! baseline the optimal dispatcher is compared against.

use serde::{Deserialize, Serialize};

use crate::colocated::{fc_available, recharge_headroom, tank_next, ColDecision};
use crate::error::Result;
use crate::model::SystemResources;
use crate::scenario::Scenario;

use super::{ColTrajectory, DispatchResult, Dispatcher, Metrics, Prepared, StorageClass, StorageTrajectory};

/// Order in which storage classes are called on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageOrder {
    EfficiencyDesc,
    DurationDesc,
    DurationAsc,
    AsListed,
}

impl StorageOrder {
    fn sort(self, classes: &[StorageClass]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..classes.len()).collect();
        let key = |k: usize| match self {
            StorageOrder::EfficiencyDesc => -classes[k].unit.eta_charge,
            StorageOrder::DurationDesc => -classes[k].unit.duration_hours(),
            StorageOrder::DurationAsc => classes[k].unit.duration_hours(),
            StorageOrder::AsListed => k as f64,
        };
        idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        idx
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityConfig {
    #[serde(default = "default_charge_order")]
    pub charge_order: StorageOrder,
    #[serde(default = "default_discharge_order")]
    pub discharge_order: StorageOrder,
    /// Refill hydrogen tanks from surplus where the portfolio allows it.
    #[serde(default = "default_true")]
    pub recharge_tanks: bool,
}

fn default_charge_order() -> StorageOrder {
    StorageOrder::EfficiencyDesc
}

fn default_discharge_order() -> StorageOrder {
    StorageOrder::DurationDesc
}

fn default_true() -> bool {
    true
}

impl Default for PriorityConfig {
    fn default() -> Self {
        Self {
            charge_order: default_charge_order(),
            discharge_order: default_discharge_order(),
            recharge_tanks: true,
        }
    }
}

/// Single forward pass. Colocated wind is counted as supply before the
/// surplus/shortage branch; in a surplus storage charges in priority order,
/// tanks refill if allowed, and the rest is spilled or curtailed. In a
/// shortage storage discharges in priority order, then flexible demand,
/// electrolyzer demand response and fuel cells cover what remains.
pub fn dispatch_heuristic(
    resources: &SystemResources,
    scenario: &Scenario,
    load: &[f64],
    rules: &PriorityConfig,
) -> Result<DispatchResult> {
    let prep = Prepared::new(resources, scenario, load)?;
    let h = prep.step_hours;
    let steps = prep.steps;
    let charge_order = rules.charge_order.sort(&prep.classes);
    let discharge_order = rules.discharge_order.sort(&prep.classes);

    let mut storage: Vec<StorageTrajectory> = prep
        .classes
        .iter()
        .map(|c| StorageTrajectory {
            members: c.members.clone(),
            eta_charge: c.unit.eta_charge,
            charge_mw: vec![0.0; steps],
            discharge_mw: vec![0.0; steps],
            soc_mwh: {
                let mut v = vec![0.0; steps + 1];
                v[0] = c.initial_mwh;
                v
            },
        })
        .collect();
    let mut colocated: Vec<ColTrajectory> = prep
        .portfolios
        .iter()
        .map(|p| ColTrajectory {
            id: p.id.clone(),
            decisions: Vec::with_capacity(steps),
            tank_final_mwh_h2: p.tank_initial_mwh_h2,
        })
        .collect();
    let mut flex_red = vec![0.0; steps];
    let mut unserved = vec![0.0; steps];
    let mut curtail = vec![0.0; steps];

    for t in 0..steps {
        let mut soc: Vec<f64> = storage.iter().map(|s| s.soc_mwh[t]).collect();
        let mut decisions: Vec<ColDecision> = prep
            .portfolios
            .iter()
            .enumerate()
            .map(|(r, _)| ColDecision {
                ely_draw_mw: prep.col_baseline[r][t],
                tank_mwh_h2: colocated[r].tank_final_mwh_h2,
                wind_to_grid_mw: prep.col_wind[r][t].max(0.0),
                ..ColDecision::default()
            })
            .collect();
        let wind: f64 = decisions.iter().map(|d| d.wind_to_grid_mw).sum();
        let net = prep.shortfall[t] - wind;

        if net <= 0.0 {
            let mut surplus = -net;
            for &k in &charge_order {
                let u = &prep.classes[k].unit;
                let room = ((u.e_max_mwh - soc[k]) / (u.eta_charge * h)).max(0.0);
                let c = u.p_charge_max_mw.min(room).min(surplus);
                storage[k].charge_mw[t] = c;
                soc[k] += u.eta_charge * c * h;
                surplus -= c;
            }
            if rules.recharge_tanks {
                for (p, d) in prep.portfolios.iter().zip(decisions.iter_mut()) {
                    let room = ((p.tank_max_mwh_h2 - d.tank_mwh_h2) / (p.ely_eff_mwh_h2_per_mwh_e * h)).max(0.0);
                    d.ely_to_tank_mw = recharge_headroom(p, d.ely_draw_mw).min(room);
                }
            }
            for d in decisions.iter_mut() {
                let s = d.wind_to_grid_mw.min(surplus);
                d.wind_to_grid_mw -= s;
                d.wind_spill_mw = s;
                surplus -= s;
            }
            curtail[t] = surplus.max(0.0);
        } else {
            let mut remaining = net;
            for &k in &discharge_order {
                let u = &prep.classes[k].unit;
                let avail = ((soc[k] - u.e_min_mwh) / h).max(0.0);
                let d = u.p_discharge_max_mw.min(avail).min(remaining);
                storage[k].discharge_mw[t] = d;
                soc[k] -= d * h;
                remaining -= d;
            }
            let f = prep.flex_cap[t].min(remaining).max(0.0);
            flex_red[t] = f;
            remaining -= f;
            for (p, d) in prep.portfolios.iter().zip(decisions.iter_mut()) {
                let r = p.dr_cap_mw().min(remaining).max(0.0);
                d.ely_draw_mw -= r;
                remaining -= r;
            }
            for (p, d) in prep.portfolios.iter().zip(decisions.iter_mut()) {
                let fc = fc_available(p, d.tank_mwh_h2, h).min(remaining).max(0.0);
                d.fc_out_mw = fc;
                remaining -= fc;
            }
            unserved[t] = remaining.max(0.0);
        }

        for (k, s) in storage.iter_mut().enumerate() {
            let u = &prep.classes[k].unit;
            s.soc_mwh[t + 1] = soc[k].clamp(u.e_min_mwh, u.e_max_mwh);
        }
        for ((p, d), traj) in prep.portfolios.iter().zip(decisions).zip(colocated.iter_mut()) {
            traj.tank_final_mwh_h2 = tank_next(p, &d, h).clamp(0.0, p.tank_max_mwh_h2);
            traj.decisions.push(d);
        }
    }

    let mut result = DispatchResult {
        scenario_id: scenario.scenario_id,
        dispatcher: Dispatcher::Heuristic,
        step_hours: h,
        load_mw: prep.load.clone(),
        shortfall_mw: prep.shortfall.clone(),
        flex_consumption_mw: (0..steps).map(|t| prep.flex_baseline[t] - flex_red[t]).collect(),
        flex_reduction_mw: flex_red,
        storage,
        colocated,
        curtailment_mw: curtail,
        metrics: Metrics::from_unserved(&unserved, h),
        unserved_mw: unserved,
        solve: None,
    };
    result.settle_balance(&prep);
    Ok(result)
}
