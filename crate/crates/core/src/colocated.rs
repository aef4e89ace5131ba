//! Colocated hydrogen portfolio: wind behind the meter, an electrolyzer that
//! can shed part of its draw during shortages, a hydrogen tank and a fuel
//! cell. Supplies the linear constraint rows used by the optimal dispatcher
//! and the output/consumption maps used by both dispatchers.

use serde::{Deserialize, Serialize};

use crate::lp::LinearProgram;
use crate::model::HydrogenPortfolio;

/// Operating point of one portfolio in one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ColDecision {
    pub ely_draw_mw: f64,
    /// Part of the electrolyzer draw whose hydrogen goes into the tank
    /// rather than to sales.
    pub ely_to_tank_mw: f64,
    pub fc_out_mw: f64,
    /// Inventory at the start of the step.
    pub tank_mwh_h2: f64,
    pub wind_to_grid_mw: f64,
    pub wind_spill_mw: f64,
}

/// Power the portfolio delivers to the system.
pub fn col_generation(d: &ColDecision) -> f64 {
    d.wind_to_grid_mw + d.fc_out_mw
}

/// Power the portfolio draws from the system.
pub fn col_consumption(d: &ColDecision) -> f64 {
    d.ely_draw_mw
}

/// Tank inventory after one step.
pub fn tank_next(p: &HydrogenPortfolio, d: &ColDecision, step_hours: f64) -> f64 {
    d.tank_mwh_h2 + p.ely_eff_mwh_h2_per_mwh_e * d.ely_to_tank_mw * step_hours
        - d.fc_out_mw / p.fc_eff_mwh_e_per_mwh_h2 * step_hours
}

/// Largest fuel-cell output the tank and power rating allow this step.
pub fn fc_available(p: &HydrogenPortfolio, tank_mwh_h2: f64, step_hours: f64) -> f64 {
    p.fc_max_mw
        .min((tank_mwh_h2 * p.fc_eff_mwh_e_per_mwh_h2 / step_hours).max(0.0))
}

/// Electrolyzer draw that may be routed to the tank at a given draw.
pub fn recharge_headroom(p: &HydrogenPortfolio, draw_mw: f64) -> f64 {
    if p.allow_tank_recharge {
        (draw_mw - p.sales_floor_mw()).max(0.0)
    } else {
        0.0
    }
}

/// Splits a shortage-gated reduction budget across flexible demand (first)
/// and the portfolios' electrolyzers in order. The total never exceeds the
/// positive part of the shortfall.
pub fn gated_reductions(shortfall_mw: f64, flex_cap_mw: f64, dr_caps_mw: &[f64]) -> (f64, Vec<f64>) {
    let mut budget = shortfall_mw.max(0.0);
    let flex = flex_cap_mw.max(0.0).min(budget);
    budget -= flex;
    let col = dr_caps_mw
        .iter()
        .map(|&cap| {
            let r = cap.max(0.0).min(budget);
            budget -= r;
            r
        })
        .collect();
    (flex, col)
}

/// Where the tank level at the start of a step comes from.
#[derive(Clone, Copy, Debug)]
pub enum TankLevel {
    Initial(f64),
    Var(usize),
}

/// LP columns of one portfolio in one step.
#[derive(Clone, Copy, Debug)]
pub struct ColVars {
    pub fc: usize,
    pub tank_next: usize,
    pub to_tank: Option<usize>,
    /// Part of the gated demand response given back, present only when the
    /// tank may recharge and a reduction applies.
    pub restored: Option<usize>,
    pub wind_to_grid: usize,
    pub spill: usize,
}

/// Adds one step of the portfolio to `lp`: bounded columns, the wind split
/// equation and the tank balance. The electrolyzer draws
/// `baseline_mw - reduction_mw`, where `reduction_mw` is the gated demand
/// response. With tank recharge enabled the program may restore part of
/// that reduction to gain recharge headroom; the restored amount is an
/// extra draw on the grid.
pub fn col_constraints(
    lp: &mut LinearProgram,
    p: &HydrogenPortfolio,
    t: usize,
    wind_mw: f64,
    baseline_mw: f64,
    reduction_mw: f64,
    tank: TankLevel,
    step_hours: f64,
) -> ColVars {
    let draw_mw = baseline_mw - reduction_mw;
    let fc = lp.add_named_var(format!("fc_{}_{t}", p.id), 0.0, p.fc_max_mw, 0.0);
    let tank_next = lp.add_named_var(format!("tank_{}_{}", p.id, t + 1), 0.0, p.tank_max_mwh_h2, 0.0);
    let headroom = recharge_headroom(p, draw_mw);
    let to_tank = p
        .allow_tank_recharge
        .then(|| lp.add_named_var(format!("h2in_{}_{t}", p.id), 0.0, recharge_headroom(p, baseline_mw), 0.0));
    let restored = match to_tank {
        Some(h) if reduction_mw > 0.0 => {
            let u = lp.add_named_var(format!("undr_{}_{t}", p.id), 0.0, reduction_mw, 0.0);
            lp.add_le(vec![(h, 1.0), (u, -1.0)], headroom);
            Some(u)
        }
        _ => None,
    };
    let wind = wind_mw.max(0.0);
    let wind_to_grid = lp.add_named_var(format!("wtg_{}_{t}", p.id), 0.0, wind, 0.0);
    let spill = lp.add_named_var(format!("spill_{}_{t}", p.id), 0.0, wind, 0.0);

    let mut row = vec![
        (tank_next, 1.0),
        (fc, step_hours / p.fc_eff_mwh_e_per_mwh_h2),
    ];
    if let Some(h) = to_tank {
        row.push((h, -p.ely_eff_mwh_h2_per_mwh_e * step_hours));
    }
    let rhs = match tank {
        TankLevel::Initial(v) => v,
        TankLevel::Var(j) => {
            row.push((j, -1.0));
            0.0
        }
    };
    lp.add_eq(row, rhs);
    lp.add_eq(vec![(wind_to_grid, 1.0), (spill, 1.0)], wind);
    ColVars {
        fc,
        tank_next,
        to_tank,
        restored,
        wind_to_grid,
        spill,
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::model::HydrogenPortfolio;

    pub fn portfolio() -> HydrogenPortfolio {
        HydrogenPortfolio {
            id: "h2".into(),
            wind_capacity_mw: 10.0,
            wind_trace_id: Some("wind".into()),
            ely_nominal_mw: 8.0,
            ely_dr_fraction: 0.5,
            ely_eff_mwh_h2_per_mwh_e: 0.7,
            fc_max_mw: 5.0,
            fc_eff_mwh_e_per_mwh_h2: 0.5,
            tank_max_mwh_h2: 10.0,
            tank_initial_mwh_h2: 10.0,
            allow_tank_recharge: false,
            ely_sales_floor_mw: None,
        }
    }
}
